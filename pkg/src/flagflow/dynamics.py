"""Translation flows on flag manifolds and empirical normal hyperbolicity.

A :class:`FlowSpec` bundles the generator with its Jordan data and chamber.
Decay along the normal fibers is measured in adapted coordinates, where the
hyperbolic part is diagonal and acts on a Lie-algebra representative by
entrywise scaling; the remaining elliptic-unipotent factor commutes with it
and grows at most polynomially.  This keeps ``|g^t v|`` accurate far below
the rounding level of the matrix ``g^t`` itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import EmptyFiber
from .flag_geometry import Flag, TangentVec, act, induced_vector, pushforward, tangent_norm
from .lie_core import (
    EPS_CLUSTER,
    AlgElem,
    AdditiveJordan,
    Chamber,
    GroupElem,
    MultiplicativeJordan,
    additive_jordan,
    block_diagonal_part,
    chamber_normalize,
    mu_gap,
    multiplicative_jordan,
)
from .morse import EPS_FIX, DimensionProfile, MorseComponent, classify_flag, normal_fiber, sample_point

EPS_LIMIT = 1e-4
DEFAULT_HORIZON = {"continuous": 10.0, "discrete": 20}
DEFAULT_GRID = 50


@dataclass(frozen=True, eq=False)
class FlowSpec:
    """A continuous flow ``exp(tX)`` or the iterates of ``g``, with Jordan data.

    ``neutral`` is the commuting elliptic-unipotent factor in adapted
    coordinates, projected onto the centralizer of ``H``: the generator
    ``E + N`` (continuous) or the group element ``e u`` (discrete).
    ``commutation_defect`` records the norm removed by that projection.
    """

    mode: str
    generator: AlgElem | GroupElem
    jordan: AdditiveJordan | MultiplicativeJordan
    chamber: Chamber
    neutral: tuple[np.ndarray, ...] = field(repr=False)
    commutation_defect: float = 0.0

    @classmethod
    def continuous(cls, X: AlgElem, tol: float = EPS_CLUSTER) -> "FlowSpec":
        J = additive_jordan(X, tol)
        c = chamber_normalize(J.H, tol)
        R = c.to_adapted(J.E + J.N)
        Rb = block_diagonal_part(c, R)
        return cls("continuous", X, J, c, tuple(Rb.blocks), R.distance(Rb))

    @classmethod
    def discrete(cls, g: GroupElem, tol: float = EPS_CLUSTER) -> "FlowSpec":
        J = multiplicative_jordan(g, tol)
        c = chamber_normalize(J.H, tol)
        Vinv = c.conjugator.inv()
        r = (Vinv @ (J.e @ J.u) @ c.conjugator).blocks
        rb = []
        defect = 0.0
        for f, m in zip(c.factors, r):
            gr = f.groups
            mb = np.where(gr[:, None] == gr[None, :], m, 0.0)
            defect = max(defect, float(np.linalg.norm(m - mb)))
            rb.append(mb)
        return cls("discrete", g, J, c, tuple(rb), defect)

    @property
    def spec(self):
        return self.generator.spec

    @property
    def H(self) -> AlgElem:
        return self.jordan.H

    @property
    def N(self) -> AlgElem:
        return self.jordan.N

    @property
    def mu(self) -> float:
        return mu_gap(self.chamber)


def flow_map(fs: FlowSpec, t: float) -> GroupElem:
    """The group element ``g^t`` (may be badly conditioned for large ``|t|``)."""
    if fs.mode == "continuous":
        return GroupElem.exp(fs.generator, t)
    return fs.generator.power(_as_int(t))


def _as_int(t) -> int:
    if float(t) != int(round(float(t))):
        raise ValueError(f"discrete flows need integer times, got {t}")
    return int(round(float(t)))


def flow(fs: FlowSpec, t: float, x: Flag) -> Flag:
    """``g^t . x``, renormalizing the frame after every unit-size substep."""
    if fs.mode == "continuous":
        scale = max(np.linalg.norm(b, 2) for b in fs.generator)
        steps = max(1, math.ceil(abs(t) * scale))
        g = GroupElem.exp(fs.generator, t / steps)
    else:
        k = _as_int(t)
        steps = abs(k)
        g = fs.generator if k >= 0 else fs.generator.inv()
    for _ in range(steps):
        x = act(g, x)
    return x


def trajectory(fs: FlowSpec, x: Flag, times) -> list[Flag]:
    """Points ``g^t x`` for increasing nonnegative ``times``."""
    out, cur, prev = [], x, 0.0
    for t in times:
        cur = flow(fs, t - prev, cur)
        prev = t
        out.append(cur)
    return out


def _neutral_map(fs: FlowSpec, t: float) -> GroupElem:
    if fs.mode == "continuous":
        return GroupElem([sla.expm(t * r) for r in fs.neutral], check=False)
    return GroupElem([np.linalg.matrix_power(r, _as_int(t)) for r in fs.neutral], check=False)


def _hyperbolic_rates(fs: FlowSpec) -> list[np.ndarray]:
    return [f.diagonal[:, None] - f.diagonal[None, :] for f in fs.chamber.factors]


def evolve_adapted(fs: FlowSpec, t: float, v: TangentVec) -> TangentVec:
    """``g^t v`` for ``v`` based on a fixed component, in adapted coordinates.

    ``g^t = r^t h^t`` with ``h^t`` fixing the base point, so the new
    representative is ``Ad(r^t)`` of the entrywise-scaled old one.
    """
    if fs.mode == "discrete":
        _as_int(t)
    scaled = AlgElem([y * np.exp(t * rate) for y, rate in zip(v.rep, _hyperbolic_rates(fs))], check=False)
    return pushforward(_neutral_map(fs, t), induced_vector(scaled, v.base))


@dataclass(frozen=True)
class DecaySample:
    times: np.ndarray
    log_norms: np.ndarray
    slope: float
    intercept: float
    final_slope: float
    residual: float
    bridge_slack: float
    passed: bool

    @property
    def lambda_emp(self) -> float:
        return -self.slope


@dataclass(frozen=True)
class DecayReport:
    mu: float
    eps_slope: float
    sign: int
    profile: DimensionProfile
    samples: list[DecaySample]

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.samples)

    @property
    def worst_final_slope(self) -> float:
        return max(s.final_slope for s in self.samples)


def _time_grid(fs: FlowSpec, horizon, grid: int) -> np.ndarray:
    if fs.mode == "discrete":
        T = _as_int(horizon)
        return np.unique(np.round(np.geomspace(1, T, grid)).astype(int)).astype(float)
    return np.geomspace(horizon / 100.0, horizon, grid)


def decay_verify(
    fs: FlowSpec,
    comp: MorseComponent,
    sign: int,
    samples: int = 8,
    horizon: float | None = None,
    grid: int = DEFAULT_GRID,
    rng: np.random.Generator | None = None,
    eps_slope: float | None = None,
    time_scale: float = 1.0,
) -> DecayReport:
    """Sample the decay of ``|g^t v|`` on the stable (``sign=-1``, forward
    time) or unstable (``sign=+1``, backward time) fiber of a component.

    A sample passes when ``log(|g^T v| / |v|) / T <= -mu + eps_slope`` at the
    horizon ``T``.  Slopes and intercepts of a least-squares fit of the
    log-norms are reported as ``-lambda`` and ``log c``.  ``time_scale``
    converts flow steps into physical time (the period of a monodromy).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    profile = comp.profile
    ca = fs.chamber.adapted()
    mu = fs.mu / time_scale
    eps = 0.1 * mu if eps_slope is None else eps_slope
    horizon = DEFAULT_HORIZON[fs.mode] if horizon is None else horizon
    steps = _time_grid(fs, horizon, grid)
    times = steps * time_scale
    direction = -1.0 if sign > 0 else 1.0
    flag_type = comp.base_point.flag_type

    out = []
    for _ in range(samples):
        x = sample_point(profile, ca, flag_type, rng)
        basis = normal_fiber(x, profile, ca, sign)
        if not basis:
            raise EmptyFiber(f"component {profile.label} has no {'unstable' if sign > 0 else 'stable'} directions")
        coef = rng.normal(size=len(basis))
        coef /= np.linalg.norm(coef)
        Y = sum((a * B for a, B in zip(coef[1:], basis[1:])), coef[0] * basis[0])
        v = induced_vector(Y, x)
        n0 = tangent_norm(v)
        logs, slack = [], np.inf
        for s in steps:
            w = evolve_adapted(fs, direction * s, v)
            nv = tangent_norm(w)
            logs.append(math.log(nv / n0))
            slack = min(slack, (w.rep.norm() - nv) / max(nv, 1e-300))
        logs = np.array(logs)
        slope, intercept = np.polyfit(times, logs, 1)
        resid = float(np.max(np.abs(logs - (slope * times + intercept))))
        final = float(logs[-1] / times[-1])
        out.append(
            DecaySample(times, logs, float(slope), float(intercept), final, resid, float(slack), final <= -mu + eps)
        )
    return DecayReport(mu, eps, sign, profile, out)


def fiber_invariance_residual(
    fs: FlowSpec,
    comp: MorseComponent,
    times=None,
    samples: int = 3,
    rng: np.random.Generator | None = None,
) -> float:
    """Largest relative distance of a pushed-forward fiber vector from the
    fiber at the image point, over both signs, sampled points and ``times``."""
    rng = np.random.default_rng(0) if rng is None else rng
    if times is None:
        times = (1, 2) if fs.mode == "discrete" else (1.0, 2.5)
    ca = fs.chamber.adapted()
    t = comp.base_point.flag_type
    worst = 0.0
    for _ in range(samples):
        x = sample_point(comp.profile, ca, t, rng)
        for sign in (+1, -1):
            basis = normal_fiber(x, comp.profile, ca, sign)
            if not basis:
                continue
            for tau in times:
                moved = [evolve_adapted(fs, tau, induced_vector(Y, x)) for Y in basis]
                y = moved[0].base
                target = normal_fiber(y, comp.profile, ca, sign)
                B = np.column_stack([induced_vector(Z, y).coordinates() for Z in target])
                A = np.column_stack([w.coordinates() for w in moved])
                A = A / np.linalg.norm(A, axis=0)
                coef, *_ = np.linalg.lstsq(B, A, rcond=None)
                worst = max(worst, float(np.linalg.norm(A - B @ coef, 2)))
    return worst


def fiber_invariance_check(fs: FlowSpec, comp: MorseComponent, tol: float = 1e-9, **kw) -> bool:
    """Whether ``g^t`` maps the fibers ``V^pm`` over the component into themselves."""
    return fiber_invariance_residual(fs, comp, **kw) <= tol


def classify_limit(fs: FlowSpec, x: Flag, horizon: float, tol: float = EPS_LIMIT) -> DimensionProfile | None:
    """Profile of the component approached by ``g^t x`` at ``t = horizon``, or ``None``."""
    return classify_flag(flow(fs, horizon, x), fs.chamber, tol)


def unipotent_fixed(fs: FlowSpec, x: Flag, tol: float = EPS_FIX) -> bool:
    """Whether every subspace of ``x`` is invariant under the nilpotent part."""
    for n_blk, q, ds in zip(fs.N, x.frames, x.flag_type.dims):
        scale = max(1.0, np.linalg.norm(n_blk, 2))
        for d in ds:
            U = q[:, :d]
            NU = n_blk @ U
            if np.linalg.norm(NU - U @ (U.T @ NU), 2) > tol * scale:
                return False
    return True
