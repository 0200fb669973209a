"""Problem configuration files (JSON) for the command line."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError
from .flag_geometry import FlagType
from .lie_core import AlgElem, GroupElem, SemisimpleSpec, random_orthogonal
from .periodic import PeriodicSpec, TrigTerm

MODES = ("continuous", "discrete", "periodic")

DEFAULT_TOLERANCES = {
    "num": 1e-9,
    "cluster": 1e-8,
    "fix": 1e-7,
    "limit": 1e-4,
}


@dataclass(frozen=True)
class PortraitOptions:
    starts: int = 8
    horizon: float = 6.0
    points: int = 40
    locus_points: int = 48
    limit_horizon: float = 30.0


@dataclass(frozen=True)
class ProblemConfig:
    spec: SemisimpleSpec
    mode: str
    flag_type: FlagType
    generator: AlgElem | GroupElem | None = None
    periodic: PeriodicSpec | None = None
    periodic_steps: int = 1000
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    horizon: float | None = None
    samples: int = 8
    grid: int = 50
    seed: int = 0
    portrait: PortraitOptions = PortraitOptions()

    def with_tolerance(self, tol: float | None) -> "ProblemConfig":
        cfg = self
        if tol is not None:
            if not tol > 0:
                raise ConfigError("--tol must be positive")
            cfg = replace(cfg, tolerances={**cfg.tolerances, "num": float(tol)})
        return cfg


def _blocks(raw, spec: SemisimpleSpec, what: str) -> list[np.ndarray]:
    if not isinstance(raw, list) or len(raw) != len(spec):
        raise ConfigError(f"{what}: expected one matrix per factor ({len(spec)})")
    out = []
    for n, b in zip(spec.factors, raw):
        a = np.asarray(b, dtype=float)
        if a.shape != (n, n):
            raise ConfigError(f"{what}: expected a {n}x{n} block, got shape {a.shape}")
        out.append(a)
    return out


def random_generator(spec: SemisimpleSpec, rng: np.random.Generator) -> AlgElem:
    """Seeded sample ``P (D + N) P^{-1}``: a repeated eigenvalue carrying a
    nilpotent block, well-separated spectrum, mildly non-orthogonal ``P``."""
    blocks = []
    for n in spec.factors:
        top = int(rng.integers(1, n)) if n > 2 else 1
        mult = [top] + [1] * (n - top)
        vals = np.cumsum(rng.uniform(0.6, 1.4, size=len(mult)))[::-1]
        diag = np.repeat(vals, mult)
        diag -= diag.mean()
        T = np.diag(diag)
        T[:top, :top] += np.triu(rng.normal(size=(top, top)), 1)
        P = random_orthogonal(n, rng) @ (np.eye(n) + 0.2 * rng.normal(size=(n, n)))
        blocks.append(P @ T @ np.linalg.inv(P))
    return AlgElem(blocks, check=False)


def _flag_type(raw, spec: SemisimpleSpec) -> FlagType:
    if raw == "full":
        return FlagType.full(spec)
    if not isinstance(raw, list) or len(raw) != len(spec):
        raise ConfigError("flag_type: expected 'full' or one list of dimensions per factor")
    try:
        return FlagType(spec.factors, tuple(tuple(d) for d in raw))
    except ValueError as exc:
        raise ConfigError(f"flag_type: {exc}") from exc


def _periodic(raw: dict, spec: SemisimpleSpec) -> tuple[PeriodicSpec, int]:
    try:
        period = float(raw["period"])
        terms = []
        for term in raw["terms"]:
            cos = _blocks(term.get("cos", [np.zeros((n, n)).tolist() for n in spec.factors]), spec, "cos")
            sin = _blocks(term.get("sin", [np.zeros((n, n)).tolist() for n in spec.factors]), spec, "sin")
            terms.append(TrigTerm(int(term["harmonic"]), AlgElem(cos), AlgElem(sin)))
        return PeriodicSpec(period, tuple(terms)), int(raw.get("steps", 1000))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"periodic: malformed table ({exc})") from exc
    except ValueError as exc:
        raise ConfigError(f"periodic: {exc}") from exc


def parse_config(data: dict[str, Any], seed: int | None = None) -> ProblemConfig:
    """Validate a configuration mapping; ``seed`` overrides the configured seed."""
    try:
        spec = SemisimpleSpec(tuple(data["factors"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"factors: {exc}") from exc
    mode = data.get("mode", "continuous")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    tolerances = dict(DEFAULT_TOLERANCES)
    for k, v in data.get("tolerances", {}).items():
        if k not in tolerances or not float(v) > 0:
            raise ConfigError(f"tolerances: bad entry {k}={v}")
        tolerances[k] = float(v)
    seed = int(data.get("seed", 0)) if seed is None else int(seed)

    generator = periodic = None
    steps = 1000
    if mode == "periodic":
        if "periodic" not in data:
            raise ConfigError("periodic mode needs a 'periodic' table")
        periodic, steps = _periodic(data["periodic"], spec)
    else:
        raw = data.get("generator")
        if raw is None:
            raise ConfigError("a 'generator' is required")
        try:
            if raw == "random":
                X = random_generator(spec, np.random.default_rng(seed))
                generator = X if mode == "continuous" else GroupElem.exp(X)
            elif mode == "continuous":
                generator = AlgElem(_blocks(raw, spec, "generator"))
            else:
                generator = GroupElem(_blocks(raw, spec, "generator"))
        except ValueError as exc:
            raise ConfigError(f"generator: {exc}") from exc

    try:
        portrait = PortraitOptions(**data.get("portrait", {}))
    except TypeError as exc:
        raise ConfigError(f"portrait: {exc}") from exc
    horizon = data.get("horizon")
    return ProblemConfig(
        spec=spec,
        mode=mode,
        flag_type=_flag_type(data.get("flag_type", "full"), spec),
        generator=generator,
        periodic=periodic,
        periodic_steps=steps,
        tolerances=tolerances,
        horizon=None if horizon is None else float(horizon),
        samples=int(data.get("samples", 8)),
        grid=int(data.get("grid", 50)),
        seed=seed,
        portrait=portrait,
    )


def load_config(path: str | Path, seed: int | None = None) -> ProblemConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("the configuration must be a JSON object")
    return parse_config(data, seed)
