"""Shared constructions for the test suite.

Random generators are built from known Jordan parts, so every decomposition
test has an exact answer to compare against.
"""

import numpy as np
import pytest

from flagflow import AlgElem, FlowSpec

ACCEPTANCE_LINES: list[str] = []


def _spaced(count, rng, gap=0.3, spread=2.5):
    while True:
        v = np.sort(rng.uniform(-spread, spread, size=count))
        if count < 2 or np.min(np.diff(v)) >= gap:
            return rng.permutation(v)


def _ortho(n, rng):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def well_conditioned(n, rng, max_cond=8.0):
    while True:
        P = _ortho(n, rng) @ (np.eye(n) + 0.25 * rng.normal(size=(n, n)))
        if np.linalg.cond(P) < max_cond:
            return P


def random_jordan(n, rng, orthogonal=False):
    """Return ``(X, E, H, N)`` with pairwise commuting parts and ``X`` traceless.

    Real groups carry strictly upper nilpotent parts; complex pairs
    ``a +- i b`` (``0.3 < b < pi``) use ``a I + b (I x J)`` with ``T x I``.
    """
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    blocks = []
    left = n
    while left:
        if left >= 2 and rng.random() < 0.3:
            k = 2 if left >= 4 and rng.random() < 0.3 else 1
            blocks.append(("c", k))
            left -= 2 * k
        else:
            m = int(rng.integers(1, min(3, left) + 1))
            blocks.append(("r", m))
            left -= m
    reals = _spaced(len(blocks), rng)
    E, H, N = (np.zeros((n, n)) for _ in range(3))
    pos = 0
    for (kind, k), a in zip(blocks, reals):
        if kind == "r":
            sl = slice(pos, pos + k)
            H[sl, sl] = a * np.eye(k)
            if rng.random() < 0.6:
                N[sl, sl] = np.triu(rng.normal(size=(k, k)), 1)
            pos += k
        else:
            size = 2 * k
            sl = slice(pos, pos + size)
            b = rng.uniform(0.3, 3.0)
            H[sl, sl] = a * np.eye(size)
            E[sl, sl] = b * np.kron(np.eye(k), J)
            N[sl, sl] = np.kron(np.triu(rng.normal(size=(k, k)), 1), np.eye(2))
            pos += size
    H -= np.trace(H) / n * np.eye(n)
    P = _ortho(n, rng) if orthogonal else well_conditioned(n, rng)
    Pi = np.linalg.inv(P)
    E, H, N = (P @ M @ Pi for M in (E, H, N))
    return E + H + N, E, H, N


def random_hyperbolic(n, rng, multiplicities=None, orthogonal=False):
    """Real-diagonalizable traceless ``H`` with eigenvalue gaps at least 0.3."""
    if multiplicities is None:
        multiplicities = [1] * n
    vals = np.sort(_spaced(len(multiplicities), rng))[::-1]
    d = np.repeat(vals, multiplicities)
    d = d - d.mean()
    P = _ortho(n, rng) if orthogonal else well_conditioned(n, rng)
    return P @ np.diag(d) @ np.linalg.inv(P)


def random_multiplicities(n, rng):
    out, left = [], n
    while left:
        m = int(rng.integers(1, left + 1))
        out.append(m)
        left -= m
    if len(out) == 1 and n > 1:
        return [n - 1, 1]
    return out


def plane_generator():
    """``H = diag(-1, -1, 2)`` plus ``N = E_12`` on ``sl(3)``."""
    return AlgElem([np.array([[-1.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]])])


def torus_generator():
    return AlgElem([np.diag([-1.0, 1.0]), np.array([[0.0, 1.0], [0.0, 0.0]])])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def plane_flow():
    return FlowSpec.continuous(plane_generator())


@pytest.fixture
def torus_flow():
    return FlowSpec.continuous(torus_generator())


@pytest.fixture
def acceptance_report():
    def record(name, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance checks")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
