"""Points of real flag manifolds, the group action, and tangent vectors.

A flag is stored as one orthonormal frame per factor: the first ``d_i``
columns span the ``i``-th subspace.  Tangent vectors keep both a Lie-algebra
representative ``Y`` (with ``v = Y . x``) and the reduced strictly
block-lower coordinate ``Z`` in the frame of the base point; the metric is
the Cartan norm of ``Z``, which is invariant under orthogonal translations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import SingularBasis, SpecMismatch
from .lie_core import AlgElem, GroupElem, SemisimpleSpec

FLAG_EQ_TOL = 1e-8


@dataclass(frozen=True)
class FlagType:
    """Dimensions ``d_1 < ... < d_k < n`` of the nested subspaces, per factor."""

    sizes: tuple[int, ...]
    dims: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        dims = tuple(tuple(int(d) for d in ds) for ds in self.dims)
        if len(sizes) != len(dims):
            raise SpecMismatch("one dimension list per factor is required")
        for n, ds in zip(sizes, dims):
            if any(b <= a for a, b in zip(ds[:-1], ds[1:])):
                raise ValueError(f"flag dimensions must increase strictly, got {ds}")
            if ds and (ds[0] < 1 or ds[-1] >= n):
                raise ValueError(f"flag dimensions must lie in [1, {n - 1}], got {ds}")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def full(cls, spec: SemisimpleSpec) -> "FlagType":
        return cls(spec.factors, tuple(tuple(range(1, n)) for n in spec.factors))

    @property
    def spec(self) -> SemisimpleSpec:
        return SemisimpleSpec(self.sizes)

    def steps(self, factor: int) -> tuple[int, ...]:
        """Step sizes ``c_1, ..., c_{k+1}`` including the complement step."""
        bounds = (0,) + self.dims[factor] + (self.sizes[factor],)
        return tuple(b - a for a, b in zip(bounds[:-1], bounds[1:]))

    def step_index(self, factor: int) -> np.ndarray:
        """Step number of each frame column."""
        return np.repeat(np.arange(len(self.dims[factor]) + 1), self.steps(factor))

    def lower_mask(self, factor: int) -> np.ndarray:
        """Support of the reduced (strictly block-lower) tangent coordinates."""
        s = self.step_index(factor)
        return s[:, None] > s[None, :]

    @property
    def dim(self) -> int:
        total = 0
        for f in range(len(self.sizes)):
            c = self.steps(f)
            total += sum(c[i] * c[j] for i in range(len(c)) for j in range(i))
        return total


def _canonical_block(P: np.ndarray, rank: int) -> np.ndarray:
    """Orthonormal basis of ``range(P)`` determined by the projector alone."""
    _, _, piv = sla.qr(P, mode="economic", pivoting=True)
    C = P[:, np.sort(piv[:rank])]
    Q, R = np.linalg.qr(C)
    return Q * np.sign(np.diag(R))


def _canonical_frame(M: np.ndarray, dims: tuple[int, ...]) -> np.ndarray:
    n = M.shape[0]
    if not dims:
        return np.eye(n)
    top = dims[-1]
    Q0, R = np.linalg.qr(M[:, :top], mode="complete")
    r = np.abs(np.diag(R))
    if np.min(r) <= 1e-13 * max(np.max(r), 1e-300):
        raise SingularBasis("the spanning columns are linearly dependent")
    bounds = (0,) + dims + (n,)
    cols = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        W = Q0[:, a:b]
        cols.append(_canonical_block(W @ W.T, b - a))
    return np.hstack(cols)


class Flag:
    """A point of ``F_Theta``: one orthonormal frame per factor."""

    __slots__ = ("flag_type", "frames")

    def __init__(self, flag_type: FlagType, frames):
        frames = tuple(np.array(q, dtype=float) for q in frames)
        for q in frames:
            q.setflags(write=False)
        object.__setattr__(self, "flag_type", flag_type)
        object.__setattr__(self, "frames", frames)

    def __setattr__(self, name, value):
        raise AttributeError("Flag is immutable")

    @classmethod
    def base(cls, flag_type: FlagType) -> "Flag":
        """The base point ``b_Theta`` spanned by coordinate vectors."""
        return cls(flag_type, [np.eye(n) for n in flag_type.sizes])

    def subspace(self, factor: int, i: int) -> np.ndarray:
        """Orthonormal basis of the ``i``-th subspace (``i`` counted from 1)."""
        d = self.flag_type.dims[factor][i - 1]
        return self.frames[factor][:, :d]

    def projectors(self) -> list[list[np.ndarray]]:
        """Orthogonal projectors onto each subspace, per factor."""
        out = []
        for q, ds in zip(self.frames, self.flag_type.dims):
            out.append([q[:, :d] @ q[:, :d].T for d in ds])
        return out

    def distance(self, other: "Flag") -> float:
        """Largest operator-norm difference between corresponding projectors."""
        if self.flag_type != other.flag_type:
            raise SpecMismatch("flags of different types")
        worst = 0.0
        for ps, qs in zip(self.projectors(), other.projectors()):
            for p, q in zip(ps, qs):
                worst = max(worst, np.linalg.norm(p - q, 2))
        return worst

    def isclose(self, other: "Flag", tol: float = FLAG_EQ_TOL) -> bool:
        return self.distance(other) <= tol

    def __repr__(self):
        return f"Flag(dims={self.flag_type.dims}, frames={[np.round(q, 4).tolist() for q in self.frames]})"


def flag_from_basis(M, flag_type: FlagType) -> Flag:
    """Flag whose ``i``-th subspace is spanned by the first ``d_i`` columns of ``M``."""
    if isinstance(M, np.ndarray) and M.ndim == 2:
        M = [M]
    M = [np.asarray(m, dtype=float) for m in M]
    if tuple(m.shape[0] for m in M) != flag_type.sizes:
        raise SpecMismatch("basis sizes do not match the flag type")
    return Flag(flag_type, [_canonical_frame(m, ds) for m, ds in zip(M, flag_type.dims)])


def act(g: GroupElem, x: Flag) -> Flag:
    """Left translation ``g . x``."""
    if g.spec.factors != x.flag_type.sizes:
        raise SpecMismatch("group element and flag live over different specs")
    return flag_from_basis([a @ q for a, q in zip(g, x.frames)], x.flag_type)


def _reduce(Y: AlgElem, x: Flag) -> tuple[np.ndarray, ...]:
    out = []
    for f, (y, q) in enumerate(zip(Y, x.frames)):
        z = q.T @ y @ q
        out.append(np.where(x.flag_type.lower_mask(f), z, 0.0))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class TangentVec:
    """Tangent vector ``v = rep . base`` together with its reduced coordinate."""

    base: Flag
    rep: AlgElem
    reduced: tuple[np.ndarray, ...]

    def coordinates(self) -> np.ndarray:
        """Reduced form restricted to its support, flattened."""
        t = self.base.flag_type
        return np.concatenate([z[t.lower_mask(f)] for f, z in enumerate(self.reduced)])

    def projector_derivatives(self) -> list[list[np.ndarray]]:
        """Velocity of every step projector along a curve with this tangent."""
        t = self.base.flag_type
        out = []
        for f, (z, q) in enumerate(zip(self.reduced, self.base.frames)):
            n = q.shape[0]
            rows = []
            for d in t.dims[f]:
                p0 = np.zeros((n, n))
                p0[:d, :d] = np.eye(d)
                dp = (np.eye(n) - p0) @ z @ p0
                rows.append(q @ (dp + dp.T) @ q.T)
            out.append(rows)
        return out


def induced_vector(X: AlgElem, x: Flag) -> TangentVec:
    """The tangent vector ``X . x = d/dt exp(tX) x`` at ``t = 0``."""
    if X.spec.factors != x.flag_type.sizes:
        raise SpecMismatch("algebra element and flag live over different specs")
    return TangentVec(x, X, _reduce(X, x))


def tangent_norm(v: TangentVec) -> float:
    return float(np.sqrt(sum(np.sum(z * z) for z in v.reduced)))


def tangent_inner(v: TangentVec, w: TangentVec) -> float:
    if not v.base.isclose(w.base):
        raise ValueError("tangent vectors at different base points")
    return float(sum(np.sum(a * b) for a, b in zip(v.reduced, w.reduced)))


def pushforward(g: GroupElem, v: TangentVec) -> TangentVec:
    """Differential of the translation by ``g``: ``g(Y . x) = Ad(g)Y . gx``."""
    base = act(g, v.base)
    rep = g.ad(v.rep)
    return TangentVec(base, rep, _reduce(rep, base))


def step_projector_velocity(X: AlgElem, x: Flag) -> list[list[np.ndarray]]:
    """Analytic ``(I - P) X P + P X^T (I - P)`` for each step projector."""
    out = []
    for y, ps in zip(X, x.projectors()):
        n = y.shape[0]
        out.append([(np.eye(n) - p) @ y @ p + p @ y.T @ (np.eye(n) - p) for p in ps])
    return out
