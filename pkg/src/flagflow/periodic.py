"""Linear equations ``g'(t) = X(t) g(t)`` with periodic coefficients.

The Morse components of the associated skew flow on ``S^1 x F_Theta`` are
circles of fibers; each fiber is a component of the discrete flow generated
by the monodromy (the fundamental solution after one period).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import DecayReport, FlowSpec, decay_verify
from .errors import StepTooCoarse
from .flag_geometry import FlagType
from .lie_core import (
    EPS_CLUSTER,
    AlgElem,
    Chamber,
    GroupElem,
    MultiplicativeJordan,
    SemisimpleSpec,
)
from .morse import MorseComponent, enumerate_components

DEFAULT_STEPS = 1000
RICHARDSON_TOL = 1e-6
DET_TOL = 1e-8


@dataclass(frozen=True)
class TrigTerm:
    """``cos(2 pi k t / T) * cos_part + sin(2 pi k t / T) * sin_part``."""

    harmonic: int
    cos_part: AlgElem
    sin_part: AlgElem


@dataclass(frozen=True)
class PeriodicSpec:
    period: float
    terms: tuple[TrigTerm, ...]

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("the period must be positive")
        if not self.terms:
            raise ValueError("at least one trigonometric term is required")
        specs = {t.cos_part.spec for t in self.terms} | {t.sin_part.spec for t in self.terms}
        if len(specs) != 1:
            raise ValueError("all coefficient blocks must share one spec")
        if any(t.harmonic < 0 for t in self.terms):
            raise ValueError("harmonics must be nonnegative integers")

    @property
    def spec(self) -> SemisimpleSpec:
        return self.terms[0].cos_part.spec

    @classmethod
    def constant(cls, X: AlgElem, period: float = 1.0) -> "PeriodicSpec":
        return cls(period, (TrigTerm(0, X, AlgElem.zeros(X.spec)),))

    @classmethod
    def from_function(cls, fn, period: float, max_harmonic: int, spec: SemisimpleSpec) -> "PeriodicSpec":
        """Exact coefficient table of a trigonometric polynomial given as a callable.

        ``fn(t)`` returns an :class:`AlgElem`; sampling at ``2 * max_harmonic + 1``
        equispaced points recovers the coefficients exactly (discrete Fourier
        transform).
        """
        m = 2 * max_harmonic + 1
        ts = period * np.arange(m) / m
        samples = [fn(t) for t in ts]
        terms = []
        for k in range(max_harmonic + 1):
            w = 2 * np.pi * k * ts / period
            cos_blocks, sin_blocks = [], []
            for b in range(len(spec)):
                stack = np.stack([s[b] for s in samples])
                a = 2.0 / m * np.tensordot(np.cos(w), stack, axes=1)
                s_ = 2.0 / m * np.tensordot(np.sin(w), stack, axes=1)
                if k == 0:
                    a = a / 2.0
                cos_blocks.append(a)
                sin_blocks.append(s_)
            terms.append(TrigTerm(k, AlgElem(cos_blocks, check=False), AlgElem(sin_blocks, check=False)))
        return cls(period, tuple(terms))

    def coefficient(self, t: float) -> list[np.ndarray]:
        out = [np.zeros((n, n)) for n in self.spec.factors]
        for term in self.terms:
            w = 2 * np.pi * term.harmonic * t / self.period
            for b in range(len(out)):
                out[b] += np.cos(w) * term.cos_part[b] + np.sin(w) * term.sin_part[b]
        return out

    def __call__(self, t: float) -> AlgElem:
        return AlgElem(self.coefficient(t), check=False)


def fundamental_solution(ps: PeriodicSpec, t_end: float, steps: int) -> list[list[np.ndarray]]:
    """Classical RK4 for ``g' = X(t) g``, ``g(0) = I``; returns every grid value."""
    h = t_end / steps
    g = [np.eye(n) for n in ps.spec.factors]
    out = [[b.copy() for b in g]]
    for k in range(steps):
        t = k * h
        X1, X2, X4 = ps.coefficient(t), ps.coefficient(t + h / 2), ps.coefficient(t + h)
        new = []
        for b in range(len(g)):
            k1 = X1[b] @ g[b]
            k2 = X2[b] @ (g[b] + h / 2 * k1)
            k3 = X2[b] @ (g[b] + h / 2 * k2)
            k4 = X4[b] @ (g[b] + h * k3)
            new.append(g[b] + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
        g = new
        out.append([b.copy() for b in g])
    return out


@dataclass(frozen=True, eq=False)
class MonodromyResult:
    M: GroupElem
    flow: FlowSpec
    richardson_error: float
    det_drift: float

    @property
    def jordan(self) -> MultiplicativeJordan:
        return self.flow.jordan

    @property
    def chamber(self) -> Chamber:
        return self.flow.chamber


def monodromy(ps: PeriodicSpec, steps: int = DEFAULT_STEPS, tol: float = EPS_CLUSTER) -> MonodromyResult:
    """Fundamental solution after one period, with its Jordan data.

    Raises :class:`StepTooCoarse` when doubling the step count moves the
    result by more than ``1e-6`` or the determinant drifts by more than ``1e-8``.
    """
    if steps < 100:
        raise StepTooCoarse(f"at least 100 steps per period are required, got {steps}")
    coarse = fundamental_solution(ps, ps.period, steps)
    fine = fundamental_solution(ps, ps.period, 2 * steps)
    M = fine[-1]
    err = max(float(np.max(np.abs(a - b))) for a, b in zip(coarse[-1], M))
    drift = max(abs(np.linalg.det(b) - 1.0) for snap in fine for b in snap)
    if err > RICHARDSON_TOL:
        raise StepTooCoarse(f"halving the step changed the monodromy by {err:.3e}")
    if drift > DET_TOL:
        raise StepTooCoarse(f"determinant drifted by {drift:.3e}")
    g = GroupElem(M)
    return MonodromyResult(g, FlowSpec.discrete(g, tol), err, float(drift))


@dataclass(frozen=True, eq=False)
class PeriodicComponent:
    """A fiber of the circle bundle ``S^1 x F_Theta(H, w)`` of Morse sets."""

    component: MorseComponent
    period: float

    @property
    def label(self) -> str:
        return self.component.label

    @property
    def circle_dim(self) -> int:
        return self.component.dim_fix + 1


def periodic_components(
    ps: PeriodicSpec, flag_type: FlagType, steps: int = DEFAULT_STEPS, result: MonodromyResult | None = None
) -> list[PeriodicComponent]:
    res = monodromy(ps, steps) if result is None else result
    return [PeriodicComponent(c, ps.period) for c in enumerate_components(res.chamber, flag_type)]


def periodic_decay_verify(
    ps: PeriodicSpec,
    comp: PeriodicComponent | MorseComponent,
    sign: int,
    samples: int = 8,
    periods: int | None = None,
    steps: int = DEFAULT_STEPS,
    result: MonodromyResult | None = None,
    rng: np.random.Generator | None = None,
) -> DecayReport:
    """Decay on the fibers of a periodic component, sampled at whole periods.

    Rates are per unit time: the monodromy's root gap is divided by the period.
    """
    res = monodromy(ps, steps) if result is None else result
    mc = comp.component if isinstance(comp, PeriodicComponent) else comp
    if periods is None:
        periods = max(2, int(np.ceil(10.0 / ps.period)))
    return decay_verify(
        res.flow, mc, sign, samples=samples, horizon=periods, rng=rng, time_scale=ps.period
    )
