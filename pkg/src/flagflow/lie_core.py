"""Matrix-level Lie theory for finite products of sl(n, R).

Elements of the Lie algebra and of the group are carried as one real square
matrix per factor.  The module provides the additive and multiplicative
Jordan decompositions, normalization of a hyperbolic element into the closed
positive Weyl chamber, the Cartan inner product and the eigenspaces of
``ad(H)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.cluster.hierarchy import linkage, to_tree
from scipy.spatial.distance import pdist

from .errors import (
    ClusterAmbiguity,
    NonSquareInput,
    NoPositiveRoot,
    NotHyperbolic,
    SpecMismatch,
)

EPS_NUM = 1e-9
EPS_CLUSTER = 1e-8

_MACHEPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# Containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SemisimpleSpec:
    """Sizes ``[n_1, ..., n_p]`` of the ``SL(n_i, R)`` factors."""

    factors: tuple[int, ...]

    def __post_init__(self):
        factors = tuple(int(n) for n in self.factors)
        if not factors:
            raise ValueError("a semisimple spec needs at least one factor")
        if any(n < 2 for n in factors):
            raise ValueError(f"every factor must have size >= 2, got {factors}")
        object.__setattr__(self, "factors", factors)

    @property
    def dim(self) -> int:
        return sum(n * n - 1 for n in self.factors)

    def __len__(self):
        return len(self.factors)


def _freeze_blocks(blocks) -> tuple[np.ndarray, ...]:
    if isinstance(blocks, np.ndarray) and blocks.ndim == 2:
        blocks = [blocks]
    out = []
    for b in blocks:
        a = np.array(b, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise NonSquareInput(f"expected a square matrix, got shape {a.shape}")
        a.setflags(write=False)
        out.append(a)
    if not out:
        raise NonSquareInput("an element needs at least one block")
    return tuple(out)


class _BlockElement:
    __slots__ = ("blocks",)
    # numpy scalars must defer to our __rmul__ instead of broadcasting
    __array_ufunc__ = None

    def __init__(self, blocks, *, check: bool = True):
        object.__setattr__(self, "blocks", _freeze_blocks(blocks))
        if check:
            self._validate()

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def _validate(self):
        pass

    @property
    def spec(self) -> SemisimpleSpec:
        return SemisimpleSpec(tuple(b.shape[0] for b in self.blocks))

    def __len__(self):
        return len(self.blocks)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.blocks)

    def __getitem__(self, i) -> np.ndarray:
        return self.blocks[i]

    def _same_spec(self, other):
        if self.spec != other.spec:
            raise SpecMismatch(f"{self.spec.factors} vs {other.spec.factors}")

    def allclose(self, other, atol: float = EPS_NUM) -> bool:
        self._same_spec(other)
        return all(np.allclose(a, b, rtol=0.0, atol=atol) for a, b in zip(self, other))

    def distance(self, other) -> float:
        """Frobenius distance summed over factors."""
        self._same_spec(other)
        return float(np.sqrt(sum(np.sum((a - b) ** 2) for a, b in zip(self, other))))

    def __repr__(self):
        inner = ", ".join(np.array2string(b, precision=4, suppress_small=True) for b in self)
        return f"{type(self).__name__}({inner})"


class AlgElem(_BlockElement):
    """Element of ``sl(n_1) x ... x sl(n_p)``: one traceless block per factor."""

    __slots__ = ()

    def _validate(self):
        for b in self.blocks:
            n = b.shape[0]
            if abs(np.trace(b)) > EPS_NUM * n * max(1.0, np.linalg.norm(b)):
                raise ValueError(f"block is not traceless (trace = {np.trace(b):.3e})")

    @classmethod
    def zeros(cls, spec: SemisimpleSpec) -> "AlgElem":
        return cls([np.zeros((n, n)) for n in spec.factors], check=False)

    @classmethod
    def elementary(cls, spec: SemisimpleSpec, factor: int, a: int, b: int) -> "AlgElem":
        """``E_ab`` (``a != b``) placed in one factor, zero elsewhere."""
        if a == b:
            raise ValueError("diagonal elementary matrices are not traceless")
        blocks = [np.zeros((n, n)) for n in spec.factors]
        blocks[factor][a, b] = 1.0
        return cls(blocks, check=False)

    def __add__(self, other: "AlgElem") -> "AlgElem":
        self._same_spec(other)
        return AlgElem([a + b for a, b in zip(self, other)], check=False)

    def __sub__(self, other: "AlgElem") -> "AlgElem":
        self._same_spec(other)
        return AlgElem([a - b for a, b in zip(self, other)], check=False)

    def __neg__(self) -> "AlgElem":
        return AlgElem([-a for a in self], check=False)

    def __mul__(self, c: float) -> "AlgElem":
        return AlgElem([c * a for a in self], check=False)

    __rmul__ = __mul__

    def bracket(self, other: "AlgElem") -> "AlgElem":
        self._same_spec(other)
        return AlgElem([a @ b - b @ a for a, b in zip(self, other)], check=False)

    def norm(self) -> float:
        return float(np.sqrt(cartan_inner(self, self)))

    def transpose(self) -> "AlgElem":
        return AlgElem([a.T for a in self], check=False)

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self])


class GroupElem(_BlockElement):
    """Element of ``SL(n_1) x ... x SL(n_p)``.

    ``check=False`` skips the unimodularity test; it is used for very
    ill-conditioned flow maps whose determinant cannot be evaluated reliably.
    """

    __slots__ = ()

    def _validate(self):
        for b in self.blocks:
            sign, logdet = np.linalg.slogdet(b)
            cond = np.linalg.cond(b)
            if sign <= 0 or not np.isfinite(cond) or abs(logdet) > 1e-8 * max(1.0, cond):
                raise ValueError(f"block is not unimodular (det = {sign * np.exp(logdet):.6g})")

    @classmethod
    def identity(cls, spec: SemisimpleSpec) -> "GroupElem":
        return cls([np.eye(n) for n in spec.factors], check=False)

    @classmethod
    def exp(cls, X: AlgElem, t: float = 1.0) -> "GroupElem":
        return cls([sla.expm(t * a) for a in X], check=False)

    def __matmul__(self, other: "GroupElem") -> "GroupElem":
        self._same_spec(other)
        return GroupElem([a @ b for a, b in zip(self, other)], check=False)

    def inv(self) -> "GroupElem":
        return GroupElem([np.linalg.inv(a) for a in self], check=False)

    def power(self, k: int) -> "GroupElem":
        return GroupElem([np.linalg.matrix_power(a, int(k)) for a in self], check=False)

    def ad(self, X: AlgElem) -> AlgElem:
        """Adjoint action ``g X g^{-1}``."""
        self._same_spec(X)
        return AlgElem([np.linalg.solve(a.T, (a @ x).T).T for a, x in zip(self, X)], check=False)


def cartan_inner(X: AlgElem, Y: AlgElem) -> float:
    """``<X, Y> = sum_i trace(X_i Y_i^T)``; invariant under orthogonal conjugation."""
    if X.spec != Y.spec:
        raise SpecMismatch(f"{X.spec.factors} vs {Y.spec.factors}")
    return float(sum(np.sum(a * b) for a, b in zip(X, Y)))


# ---------------------------------------------------------------------------
# Spectral clustering shared by the Jordan decompositions
# ---------------------------------------------------------------------------


def _cluster_radius(k: int, scale: float, tol: float) -> float:
    # A defective cluster of size k splits by roughly eps**(1/k) under rounding.
    return max(tol, 8.0 * _MACHEPS ** (1.0 / k)) * scale


def _cluster_eigenvalues(z: np.ndarray, scale: float, tol: float) -> list[np.ndarray]:
    """Top-down split of the single-linkage tree with a size-dependent diameter bound."""
    n = len(z)
    if n == 1:
        return [np.array([0])]
    pts = np.column_stack([z.real, z.imag])
    root = to_tree(linkage(pdist(pts), method="single"))

    members = []

    def visit(node):
        leaves = node.pre_order()
        diam = np.max(np.abs(z[leaves][:, None] - z[leaves][None, :]))
        if node.is_leaf() or diam <= _cluster_radius(len(leaves), scale, tol):
            members.append(leaves)
        else:
            visit(node.get_left())
            visit(node.get_right())

    visit(root)
    clusters = [np.array(sorted(m)) for m in members]
    clusters.sort(key=lambda idx: idx[0])

    for a in range(len(clusters)):
        for b in range(a + 1, len(clusters)):
            gap = np.min(np.abs(z[clusters[a]][:, None] - z[clusters[b]][None, :]))
            size = max(len(clusters[a]), len(clusters[b]))
            if gap <= 4.0 * _cluster_radius(size, scale, tol):
                raise ClusterAmbiguity(
                    f"eigenvalue clusters separated by {gap:.3e}, too close to split reliably"
                )
    return clusters


def _conjugate_closed_centers(z, clusters, scale, tol) -> np.ndarray:
    centers = np.array([z[idx].mean() for idx in clusters], dtype=complex)
    sizes = [len(idx) for idx in clusters]
    paired = [False] * len(clusters)
    for i, c in enumerate(centers):
        if paired[i]:
            continue
        r = _cluster_radius(sizes[i], scale, tol)
        if abs(c.imag) <= r:
            centers[i] = c.real
            paired[i] = True
            continue
        partner = None
        for j in range(len(clusters)):
            if j != i and not paired[j] and sizes[j] == sizes[i] and abs(centers[j] - np.conj(c)) <= r:
                partner = j
                break
        if partner is None:
            raise ClusterAmbiguity(f"eigenvalue cluster at {c:.6g} has no conjugate partner")
        centers[partner] = np.conj(c)
        paired[i] = paired[partner] = True
    return centers


def _spectral_split(A: np.ndarray, tol: float):
    """Generalized eigenspaces of a real matrix, one per eigenvalue cluster.

    Returns ``(B, values)`` where the columns of ``B`` are grouped bases of the
    generalized eigenspaces (from reordered complex Schur forms) and
    ``values[k]`` is the cluster center attached to column ``k``.
    """
    scale = max(1.0, np.linalg.norm(A, 2))
    z = np.linalg.eigvals(A)
    clusters = _cluster_eigenvalues(z, scale, tol)
    centers = _conjugate_closed_centers(z, clusters, scale, tol)

    Ac = A.astype(complex)
    cols, values = [], []
    for k, (idx, c) in enumerate(zip(clusters, centers)):
        others = np.concatenate([clusters[j] for j in range(len(clusters)) if j != k] or [np.array([], int)])
        reach = np.max(np.abs(z[idx] - c))
        radius = 0.5 * np.min(np.abs(z[others] - c)) if len(others) else np.inf
        if reach >= radius:
            raise ClusterAmbiguity("eigenvalue clusters overlap")
        _, Z, sdim = sla.schur(Ac, output="complex", sort=lambda w, c=c, r=radius: abs(w - c) < r)
        if sdim != len(idx):
            raise ClusterAmbiguity(f"Schur reordering selected {sdim} eigenvalues, expected {len(idx)}")
        cols.append(Z[:, :sdim])
        values.extend([c] * sdim)
    return np.hstack(cols), np.array(values)


def _assemble(B: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Real matrix ``B diag(values) B^{-1}``; imaginary residue is rounding."""
    M = np.linalg.solve(B.T, (B * values).T).T
    if np.linalg.norm(M.imag) > 1e-6 * max(1.0, np.linalg.norm(M.real)):
        raise ClusterAmbiguity("spectral projectors are not conjugation-symmetric")
    return np.ascontiguousarray(M.real)


def _remove_trace(M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    return M - np.trace(M) / n * np.eye(n)


# ---------------------------------------------------------------------------
# Jordan decompositions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdditiveJordan:
    """``X = E + H + N`` with commuting elliptic, hyperbolic and nilpotent parts."""

    E: AlgElem
    H: AlgElem
    N: AlgElem

    @property
    def semisimple(self) -> AlgElem:
        return self.E + self.H

    def reconstruct(self) -> AlgElem:
        return self.E + self.H + self.N


@dataclass(frozen=True)
class MultiplicativeJordan:
    """``g = e h u`` with ``h = exp(H)``, ``u = exp(N)``; all factors commute."""

    e: GroupElem
    h: GroupElem
    u: GroupElem
    H: AlgElem
    N: AlgElem

    def reconstruct(self) -> GroupElem:
        return self.e @ self.h @ self.u


def _check_nilpotent(N: np.ndarray, scale: float, what: str):
    n = N.shape[0]
    if np.linalg.norm(np.linalg.matrix_power(N, n)) > 1e-6 * max(1.0, scale) ** n:
        raise ClusterAmbiguity(f"{what} part is not nilpotent at the chosen clustering")


def _additive_block(X: np.ndarray, tol: float):
    B, values = _spectral_split(X, tol)
    H = _remove_trace(_assemble(B, values.real.astype(complex)))
    E = _remove_trace(_assemble(B, 1j * values.imag))
    N = X - H - E
    scale = max(1.0, np.linalg.norm(X))
    _check_nilpotent(N, scale, "nilpotent")
    if np.linalg.norm(H @ N - N @ H) > 1e-6 * scale**2:
        raise ClusterAmbiguity("hyperbolic and nilpotent parts do not commute")
    return E, H, N


def additive_jordan(X: AlgElem, tol: float = EPS_CLUSTER) -> AdditiveJordan:
    """Additive Jordan decomposition of ``X``, factor by factor.

    Eigenvalues are clustered (``tol`` relative to ``||X||``, widened for
    defective clusters), the semisimple part is assembled from the spectral
    projectors and split into real part ``H`` and imaginary part ``E``;
    ``N = X - E - H``.
    """
    parts = [_additive_block(np.asarray(b), tol) for b in X]
    E, H, N = (AlgElem([p[i] for p in parts], check=False) for i in range(3))
    return AdditiveJordan(E=E, H=H, N=N)


def _log_unipotent(u: np.ndarray) -> np.ndarray:
    n = u.shape[0]
    M = u - np.eye(n)
    out = np.zeros_like(M)
    P = np.eye(n)
    for k in range(1, n):
        P = P @ M
        out += (-1) ** (k + 1) * P / k
    return out


def _multiplicative_block(g: np.ndarray, tol: float):
    B, values = _spectral_split(g, tol)
    if np.any(np.abs(values) == 0.0):
        raise ClusterAmbiguity("singular group element")
    mod = np.abs(values)
    s = _assemble(B, values)
    e = _assemble(B, values / mod)
    h = _assemble(B, mod.astype(complex))
    H = _remove_trace(_assemble(B, np.log(mod).astype(complex)))
    u = np.linalg.solve(s, g)
    n = g.shape[0]
    _check_nilpotent(u - np.eye(n), 1.0, "unipotent")
    N = _remove_trace(_log_unipotent(u))
    return e, h, u, H, N


def multiplicative_jordan(g: GroupElem, tol: float = EPS_CLUSTER) -> MultiplicativeJordan:
    """Multiplicative Jordan decomposition ``g = e h u``, factor by factor."""
    parts = [_multiplicative_block(np.asarray(b), tol) for b in g]
    e, h, u = (GroupElem([p[i] for p in parts], check=False) for i in range(3))
    H, N = (AlgElem([p[i] for p in parts], check=False) for i in (3, 4))
    return MultiplicativeJordan(e=e, h=h, u=u, H=H, N=N)


# ---------------------------------------------------------------------------
# Weyl chamber normalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FactorChamber:
    """Sorted spectrum of the hyperbolic element in one factor.

    ``V`` is unimodular with ``V^{-1} H V = diag(diagonal)``; its columns are
    grouped by eigenvalue, largest eigenvalue first.
    """

    eigenvalues: tuple[float, ...]
    multiplicities: tuple[int, ...]
    V: np.ndarray

    @property
    def n(self) -> int:
        return self.V.shape[0]

    @property
    def groups(self) -> np.ndarray:
        """Eigenvalue-group index of each adapted coordinate."""
        return np.repeat(np.arange(len(self.multiplicities)), self.multiplicities)

    @property
    def diagonal(self) -> np.ndarray:
        return np.repeat(np.array(self.eigenvalues), self.multiplicities)

    def group_slice(self, j: int) -> slice:
        start = sum(self.multiplicities[:j])
        return slice(start, start + self.multiplicities[j])

    @property
    def V_inv(self) -> np.ndarray:
        return np.linalg.inv(self.V)


@dataclass(frozen=True, eq=False)
class Chamber:
    factors: tuple[FactorChamber, ...]

    @property
    def spec(self) -> SemisimpleSpec:
        return SemisimpleSpec(tuple(f.n for f in self.factors))

    def __iter__(self):
        return iter(self.factors)

    def __len__(self):
        return len(self.factors)

    def __getitem__(self, i) -> FactorChamber:
        return self.factors[i]

    @property
    def conjugator(self) -> GroupElem:
        return GroupElem([f.V for f in self.factors], check=False)

    @property
    def is_orthogonal(self) -> bool:
        return all(np.allclose(f.V.T @ f.V, np.eye(f.n), atol=1e-10) for f in self.factors)

    def hyperbolic(self) -> AlgElem:
        return AlgElem([f.V @ np.diag(f.diagonal) @ f.V_inv for f in self.factors], check=False)

    def adapted(self) -> "Chamber":
        """The same chamber expressed in coordinates where ``H`` is diagonal."""
        return Chamber(
            tuple(FactorChamber(f.eigenvalues, f.multiplicities, np.eye(f.n)) for f in self.factors)
        )

    def to_adapted(self, X: AlgElem) -> AlgElem:
        return self.conjugator.inv().ad(X)

    def from_adapted(self, X: AlgElem) -> AlgElem:
        return self.conjugator.ad(X)


def _canonical_group_basis(null: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of a subspace given by any basis.

    Pivot rows are chosen by pivoted QR on the transposed basis and sorted,
    the basis is put in column echelon form on those rows, then
    orthonormalized with positive diagonal.  Coordinate subspaces give back
    coordinate vectors in increasing index order.
    """
    m = null.shape[1]
    _, _, piv = sla.qr(null.T, mode="economic", pivoting=True)
    rows = np.sort(piv[:m])
    C = null @ np.linalg.inv(null[rows, :])
    Q, R = np.linalg.qr(C)
    return Q * np.sign(np.diag(R))


def _chamber_block(H: np.ndarray, tol: float) -> FactorChamber:
    n = H.shape[0]
    scale = max(1.0, np.linalg.norm(H, 2))
    z = np.linalg.eigvals(H)
    if np.max(np.abs(z.imag)) > 1e3 * tol * scale:
        raise NotHyperbolic(f"complex eigenvalues {z[np.abs(z.imag) > 1e3 * tol * scale]}")
    lam = np.sort(z.real)[::-1]
    splits = np.nonzero(lam[:-1] - lam[1:] > tol * scale)[0] + 1
    groups = np.split(lam, splits)
    values = [float(g.mean()) for g in groups]
    mults = [len(g) for g in groups]

    cols = []
    null_tol = 1e-7 * scale
    for lam_j, m in zip(values, mults):
        _, sv, vt = np.linalg.svd(H - lam_j * np.eye(n))
        if sv[n - m] > null_tol or (m < n and sv[n - m - 1] <= null_tol):
            raise NotHyperbolic(f"eigenvalue {lam_j:.6g} is defective")
        cols.append(_canonical_group_basis(vt[n - m:].T))
    V = np.hstack(cols)
    det = np.linalg.det(V)
    if abs(det) < 1e-12:
        raise NotHyperbolic("eigenvectors do not span")
    if det < 0:
        V[:, -1] *= -1.0
        det = -det
    V = V / det ** (1.0 / n)
    V.setflags(write=False)
    return FactorChamber(tuple(values), tuple(mults), V)


def chamber_normalize(H: AlgElem, tol: float = EPS_CLUSTER) -> Chamber:
    """Conjugate a hyperbolic element into the closed positive Weyl chamber.

    Raises :class:`NotHyperbolic` on complex or defective spectrum.
    """
    return Chamber(tuple(_chamber_block(np.asarray(b), tol) for b in H))


def mu_gap(c: Chamber) -> float:
    """Smallest positive root value ``min{alpha(H) : alpha(H) > 0}``."""
    gaps = [
        min(a - b for a, b in zip(f.eigenvalues[:-1], f.eigenvalues[1:]))
        for f in c.factors
        if len(f.eigenvalues) >= 2
    ]
    if not gaps:
        raise NoPositiveRoot("H vanishes in every factor")
    return float(min(gaps))


def root_pairs(f: FactorChamber, sign: int) -> list[tuple[int, int]]:
    """Adapted index pairs ``(a, b)`` with ``sign * (lambda_a - lambda_b) > 0``."""
    g = f.groups
    n = f.n
    if sign > 0:
        return [(a, b) for a in range(n) for b in range(n) if g[a] < g[b]]
    return [(a, b) for a in range(n) for b in range(n) if g[a] > g[b]]


def ad_eigenspaces(c: Chamber, sign: int) -> list[AlgElem]:
    """Basis of ``n^+_H`` (``sign=+1``) or ``n^-_H`` (``sign=-1``).

    Elementary matrices of the adapted coordinates, conjugated back by ``V``.
    """
    spec = c.spec
    basis = []
    for i, f in enumerate(c.factors):
        V, Vi = f.V, f.V_inv
        for a, b in root_pairs(f, sign):
            blocks = [np.zeros((n, n)) for n in spec.factors]
            blocks[i] = np.outer(V[:, a], Vi[b, :])
            basis.append(AlgElem(blocks, check=False))
    return basis


def block_diagonal_part(c: Chamber, Y: AlgElem) -> AlgElem:
    """Projection of an adapted-coordinate element onto the centralizer of ``H``."""
    out = []
    for f, y in zip(c.factors, Y):
        g = f.groups
        out.append(np.where(g[:, None] == g[None, :], y, 0.0))
    return AlgElem(out, check=False)


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of ``SO(n)``."""
    if n == 1:
        return np.ones((1, 1))
    from scipy.stats import special_ortho_group

    return special_ortho_group.rvs(n, random_state=rng)
