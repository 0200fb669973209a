"""Minimal Morse components of a hyperbolic flow on a flag manifold.

Components of the fixed-point set of ``exp(tH)`` on ``F_Theta`` are indexed
by dimension profiles: per factor, a nonnegative integer matrix ``D`` whose
entry ``D[j, i]`` counts how many dimensions of flag step ``i`` lie in the
eigenspace of the ``j``-th largest eigenvalue of ``H``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import InconsistentProfile, NotOnComponent, SpecMismatch
from .flag_geometry import Flag, FlagType, act, flag_from_basis, induced_vector
from .lie_core import AlgElem, Chamber, FactorChamber, GroupElem, random_orthogonal

EPS_FIX = 1e-7
EPS_RANK = 1e-7


@dataclass(frozen=True)
class DimensionProfile:
    """Per factor, rows = eigenvalue groups (decreasing), columns = flag steps."""

    matrices: tuple[tuple[tuple[int, ...], ...], ...]

    def __post_init__(self):
        mats = tuple(tuple(tuple(int(v) for v in row) for row in m) for m in self.matrices)
        for m in mats:
            if any(v < 0 for row in m for v in row):
                raise InconsistentProfile("profile entries must be nonnegative")
            if len({len(row) for row in m}) > 1:
                raise InconsistentProfile("ragged profile matrix")
        object.__setattr__(self, "matrices", mats)

    def arrays(self) -> list[np.ndarray]:
        return [np.array(m, dtype=int) for m in self.matrices]

    @property
    def label(self) -> str:
        return "|".join(";".join(",".join(str(v) for v in row) for row in m) for m in self.matrices)

    @property
    def dim_fix(self) -> int:
        total = 0
        for D in self.arrays():
            for row in D:
                total += sum(row[i] * row[k] for i in range(len(row)) for k in range(i + 1, len(row)))
        return int(total)

    @property
    def dim_vplus(self) -> int:
        return _cross_count(self, upper=True)

    @property
    def dim_vminus(self) -> int:
        return _cross_count(self, upper=False)

    @property
    def dim_total(self) -> int:
        total = 0
        for D in self.arrays():
            c = D.sum(axis=0)
            total += sum(c[i] * c[k] for i in range(len(c)) for k in range(i))
        return int(total)


def _cross_count(p: DimensionProfile, upper: bool) -> int:
    """``sum D[j,i] D[j',i']`` over ``i > i'`` with ``j < j'`` (upper) or ``j > j'``."""
    total = 0
    for D in p.arrays():
        s, k = D.shape
        for j, jj in itertools.product(range(s), repeat=2):
            if (j < jj) if upper else (j > jj):
                for i in range(k):
                    total += D[j, i] * D[jj, :i].sum()
    return int(total)


def conley_shift(p: DimensionProfile) -> int:
    """Rank ``n_w`` of the unstable bundle, the degree shift of the Conley index."""
    return p.dim_vplus


def factor_structure(p: DimensionProfile) -> tuple[tuple[tuple[int, tuple[int, ...]], ...], ...]:
    """Induced flag type on each eigenvalue group: ``(multiplicity, dims)``.

    The component is the product over factors and groups of the real flag
    manifolds of these types.
    """
    out = []
    for D in p.arrays():
        groups = []
        for row in D:
            sums = np.cumsum([v for v in row if v > 0])
            groups.append((int(row.sum()), tuple(int(v) for v in sums[:-1])))
        out.append(tuple(groups))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class MorseComponent:
    profile: DimensionProfile
    base_point: Flag
    dim_fix: int
    dim_vplus: int
    dim_vminus: int
    factor_structure: tuple

    @property
    def is_attractor(self) -> bool:
        return self.dim_vplus == 0

    @property
    def is_repeller(self) -> bool:
        return self.dim_vminus == 0

    @property
    def label(self) -> str:
        return self.profile.label


def _tables(rows: tuple[int, ...], cols: tuple[int, ...]) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All nonnegative integer matrices with the given row and column sums."""
    if not rows:
        if all(c == 0 for c in cols):
            yield ()
        return
    for first in _compositions(rows[0], cols):
        rest = tuple(c - f for c, f in zip(cols, first))
        for tail in _tables(rows[1:], rest):
            yield (first,) + tail


def _compositions(total: int, caps: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
    if not caps:
        if total == 0:
            yield ()
        return
    for v in range(min(total, caps[0]), -1, -1):
        for tail in _compositions(total - v, caps[1:]):
            yield (v,) + tail


def _check_compatible(c: Chamber, t: FlagType):
    if c.spec.factors != t.sizes:
        raise SpecMismatch(f"chamber over {c.spec.factors}, flag type over {t.sizes}")


def profiles(c: Chamber, t: FlagType) -> list[DimensionProfile]:
    _check_compatible(c, t)
    per_factor = [list(_tables(f.multiplicities, t.steps(i))) for i, f in enumerate(c.factors)]
    return [DimensionProfile(combo) for combo in itertools.product(*per_factor)]


def _validate_profile(p: DimensionProfile, c: Chamber, t: FlagType):
    _check_compatible(c, t)
    if len(p.matrices) != len(c):
        raise InconsistentProfile("profile has the wrong number of factors")
    for i, (D, f) in enumerate(zip(p.arrays(), c.factors)):
        if D.shape != (len(f.multiplicities), len(t.steps(i))):
            raise InconsistentProfile(f"profile block {i} has shape {D.shape}")
        if tuple(D.sum(axis=1)) != f.multiplicities or tuple(D.sum(axis=0)) != t.steps(i):
            raise InconsistentProfile(f"profile block {i} has wrong row or column sums")


def base_point(p: DimensionProfile, c: Chamber, t: FlagType) -> Flag:
    """Coordinate flag of the component built from eigenbasis columns.

    Step ``i`` receives ``D[j, i]`` columns of group ``j``; columns of a
    group are consumed left to right across the steps.
    """
    _validate_profile(p, c, t)
    frames = []
    for D, f in zip(p.arrays(), c.factors):
        cursor = [f.group_slice(j).start for j in range(D.shape[0])]
        order = []
        for i in range(D.shape[1]):
            for j in range(D.shape[0]):
                order.extend(range(cursor[j], cursor[j] + D[j, i]))
                cursor[j] += D[j, i]
        frames.append(f.V[:, order])
    return flag_from_basis(frames, t)


def enumerate_components(c: Chamber, t: FlagType) -> list[MorseComponent]:
    """One component per dimension profile compatible with ``c`` and ``t``."""
    out = []
    for p in profiles(c, t):
        out.append(
            MorseComponent(
                profile=p,
                base_point=base_point(p, c, t),
                dim_fix=p.dim_fix,
                dim_vplus=p.dim_vplus,
                dim_vminus=p.dim_vminus,
                factor_structure=factor_structure(p),
            )
        )
    return out


def to_adapted(x: Flag, c: Chamber) -> Flag:
    return act(c.conjugator.inv(), x)


def classify_flag(x: Flag, c: Chamber, tol: float = EPS_FIX) -> DimensionProfile | None:
    """Profile of the component containing ``x``, or ``None`` if ``x`` is not fixed.

    Works in adapted coordinates: every subspace must be invariant under the
    diagonal ``H``, and the intersection dimensions with the eigenspaces are
    counted through principal angles (cosine above ``1 - tol``).
    """
    _check_compatible(c, x.flag_type)
    xa = to_adapted(x, c)
    t = x.flag_type
    mats = []
    for fi, (f, q) in enumerate(zip(c.factors, xa.frames)):
        lam = f.diagonal
        scale = max(1.0, np.max(np.abs(lam)))
        groups = f.groups
        s = len(f.multiplicities)
        dims = t.dims[fi]
        inter = np.zeros((s, len(dims) + 2), dtype=int)
        for i, d in enumerate(dims, start=1):
            U = q[:, :d]
            HU = lam[:, None] * U
            resid = HU - U @ (U.T @ HU)
            if np.linalg.norm(resid, 2) > tol * scale:
                return None
            for j in range(s):
                cosines = np.linalg.svd(U[groups == j, :], compute_uv=False)
                inter[j, i] = int(np.sum(cosines > 1.0 - tol))
            if inter[:, i].sum() != d:
                return None
        inter[:, -1] = f.multiplicities
        D = np.diff(inter, axis=1)
        if np.any(D < 0) or tuple(D.sum(axis=0)) != t.steps(fi):
            return None
        mats.append(D)
    return DimensionProfile(tuple(tuple(tuple(r) for r in D) for D in mats))


# ---------------------------------------------------------------------------
# Normal fibers
# ---------------------------------------------------------------------------


def _adapted_frame(q: np.ndarray, D: np.ndarray, f: FactorChamber, t: FlagType, fi: int):
    """Orthonormal frame of an ``H``-fixed flag (adapted coordinates) with
    every column inside one eigenspace; returns the frame and the step and
    group label of each column."""
    n = f.n
    groups = f.groups
    bounds = np.cumsum((0,) + t.steps(fi))
    F = np.zeros((n, n))
    step_of = np.zeros(n, dtype=int)
    group_of = np.zeros(n, dtype=int)
    col = 0
    per_group_cols: dict[int, list[int]] = {}
    for i in range(D.shape[1]):
        W = q[:, bounds[i]:bounds[i + 1]]
        for j in range(D.shape[0]):
            k = D[j, i]
            if k == 0:
                continue
            Wj = np.where((groups == j)[:, None], W, 0.0)
            U, _, _ = np.linalg.svd(Wj, full_matrices=False)
            F[:, col:col + k] = np.where((groups == j)[:, None], U[:, :k], 0.0)
            step_of[col:col + k] = i
            group_of[col:col + k] = j
            per_group_cols.setdefault(j, []).extend(range(col, col + k))
            col += k
    for j, cols in per_group_cols.items():
        Qj, R = np.linalg.qr(F[:, cols])
        F[:, cols] = Qj * np.sign(np.diag(R))
    return F, step_of, group_of


def _frame_pairs(step_of, group_of, kind: str):
    n = len(step_of)
    for a in range(n):
        for b in range(n):
            if step_of[a] <= step_of[b]:
                continue
            ga, gb = group_of[a], group_of[b]
            if (kind == "+" and ga < gb) or (kind == "-" and ga > gb) or (kind == "0" and ga == gb):
                yield a, b


def _fiber(x: Flag, p: DimensionProfile, c: Chamber, kind: str) -> list[AlgElem]:
    found = classify_flag(x, c)
    if found != p:
        raise NotOnComponent(f"flag has profile {found.label if found else None}, expected {p.label}")
    xa = to_adapted(x, c)
    spec = c.spec
    basis = []
    for fi, (f, q, D) in enumerate(zip(c.factors, xa.frames, p.arrays())):
        F, step_of, group_of = _adapted_frame(q, D, f, x.flag_type, fi)
        for a, b in _frame_pairs(step_of, group_of, kind):
            blocks = [np.zeros((n, n)) for n in spec.factors]
            blocks[fi] = f.V @ np.outer(F[:, a], F[:, b]) @ f.V_inv
            basis.append(AlgElem(blocks, check=False))
    return basis


def normal_fiber(x: Flag, p: DimensionProfile, c: Chamber, sign: int) -> list[AlgElem]:
    """Basis of ``l^+_x`` (``sign=+1``) or ``l^-_x`` (``sign=-1``).

    In adapted coordinates the basis is Cartan-orthonormal and consists of
    ``F E_ab F^T`` for an eigenspace-adapted orthonormal frame ``F`` of ``x``,
    over index pairs lying in ``n^pm_H`` and in the complement of the isotropy
    algebra.  Raises :class:`NotOnComponent` if ``x`` does not have profile ``p``.
    """
    return _fiber(x, p, c, "+" if sign > 0 else "-")


def fix_tangent_basis(x: Flag, p: DimensionProfile, c: Chamber) -> list[AlgElem]:
    """Elements of the centralizer of ``H`` whose induced vectors span ``T_x fix``."""
    return _fiber(x, p, c, "0")


@dataclass(frozen=True)
class WhitneyReport:
    ok: bool
    dim_total: int
    rank_fix: int
    rank_plus: int
    rank_minus: int
    sigma_min: float


def _centralizer_basis(c: Chamber) -> list[AlgElem]:
    spec = c.spec
    out = []
    for fi, f in enumerate(c.factors):
        g = f.groups
        for a in range(f.n):
            for b in range(f.n):
                if g[a] != g[b]:
                    continue
                if a != b or (a + 1 < f.n and g[a + 1] == g[a]):
                    blocks = [np.zeros((n, n)) for n in spec.factors]
                    if a != b:
                        blocks[fi][a, b] = 1.0
                    else:
                        blocks[fi][a, a], blocks[fi][a + 1, a + 1] = 1.0, -1.0
                    out.append(AlgElem(blocks, check=False))
    return out


def _coords(basis: list[AlgElem], x: Flag, dim: int) -> np.ndarray:
    if not basis:
        return np.zeros((dim, 0))
    return np.column_stack([induced_vector(Y, x).coordinates() for Y in basis])


def whitney_check(x: Flag, p: DimensionProfile, c: Chamber, tol: float = EPS_RANK) -> WhitneyReport:
    """Check that ``T fix + V^+ + V^-`` is the whole tangent space at ``x``.

    The tangent space of the component is taken independently of the fibers,
    as the range of the induced vectors of the whole centralizer of ``H``.
    Everything is evaluated in adapted coordinates.
    """
    plus = normal_fiber(x, p, c, +1)
    minus = normal_fiber(x, p, c, -1)
    xa = to_adapted(x, c)
    ca = c.adapted()
    dim = x.flag_type.dim

    T = _coords(_centralizer_basis(ca), xa, dim)
    if T.shape[1]:
        U, s, _ = np.linalg.svd(T, full_matrices=False)
        rank_fix = int(np.sum(s > tol * max(1.0, s[0])))
        T = U[:, :rank_fix]
    else:
        rank_fix = 0
    A = _coords([c.to_adapted(Y) for Y in plus], xa, dim)
    B = _coords([c.to_adapted(Y) for Y in minus], xa, dim)

    def rank(M):
        return int(np.sum(np.linalg.svd(M, compute_uv=False) > tol)) if M.shape[1] else 0

    full = np.hstack([T, A, B])
    if dim == 0:
        return WhitneyReport(True, 0, 0, 0, 0, float("inf"))
    sigma_min = float(np.linalg.svd(full, compute_uv=False).min()) if full.shape[1] else 0.0
    ok = full.shape[1] == dim and sigma_min > tol
    return WhitneyReport(ok, dim, rank_fix, rank(A), rank(B), sigma_min)


def sample_point(p: DimensionProfile, c: Chamber, t: FlagType, rng: np.random.Generator) -> Flag:
    """Random point of the component: a random element of ``K_H`` applied to the base point."""
    blocks = []
    for f in c.factors:
        k = np.zeros((f.n, f.n))
        for j, m in enumerate(f.multiplicities):
            sl = f.group_slice(j)
            k[sl, sl] = random_orthogonal(m, rng)
        blocks.append(f.V @ k @ f.V_inv)
    return act(GroupElem(blocks, check=False), base_point(p, c, t))
