"""Command line: ``flagflow <command> config.json [--out DIR] [--seed N] [--tol EPS]``.

Every command writes CSV tables (header row) and a JSON summary with sorted
keys into ``--out`` (default: the current directory).  Exit codes: 0 success,
2 input or numerical precondition failure, 3 failed verification.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import ProblemConfig, load_config
from .dynamics import FlowSpec, decay_verify, fiber_invariance_residual
from .errors import (
    ClusterAmbiguity,
    ConfigError,
    DimensionTooLarge,
    EmptyFiber,
    NoPositiveRoot,
    NotHyperbolic,
    StepTooCoarse,
)
from .lie_core import AdditiveJordan, mu_gap
from .morse import MorseComponent, enumerate_components
from .periodic import monodromy
from .portrait import build_portrait

COMMANDS = ("decompose", "components", "decay", "portrait", "periodic")
PRECONDITION = (ClusterAmbiguity, NotHyperbolic, ConfigError, StepTooCoarse, DimensionTooLarge, NoPositiveRoot)


def _clean(v: float) -> float:
    v = float(v)
    return 0.0 if abs(v) < 1e-14 else v


def _mat(a) -> list:
    return [[_clean(v) for v in row] for row in np.asarray(a)]


def _blocks(elem) -> list:
    return [_mat(b) for b in elem]


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(_clean(v)) if isinstance(v, float) else v for v in r])


def _flow(cfg: ProblemConfig) -> FlowSpec:
    tol = cfg.tolerances["cluster"]
    if cfg.mode == "continuous":
        return FlowSpec.continuous(cfg.generator, tol)
    if cfg.mode == "discrete":
        return FlowSpec.discrete(cfg.generator, tol)
    return monodromy(cfg.periodic, cfg.periodic_steps, tol).flow


def _mu_or_none(fs: FlowSpec, notes: list[str]) -> float | None:
    try:
        return fs.mu
    except NoPositiveRoot as exc:
        notes.append(f"NoPositiveRoot: {exc}")
        print(f"flagflow: warning: NoPositiveRoot: {exc}", file=sys.stderr)
        return None


def _decomposition(fs: FlowSpec) -> dict:
    J = fs.jordan
    if isinstance(J, AdditiveJordan):
        parts = {"E": _blocks(J.E), "H": _blocks(J.H), "N": _blocks(J.N)}
        recon = J.reconstruct().distance(fs.generator)
        comm = max(J.E.bracket(J.H).norm(), J.E.bracket(J.N).norm(), J.H.bracket(J.N).norm())
    else:
        parts = {k: _blocks(getattr(J, k)) for k in ("e", "h", "u", "H", "N")}
        recon = J.reconstruct().distance(fs.generator)
        comm = 0.0
        for a, b in ((J.e, J.h), (J.e, J.u), (J.h, J.u)):
            comm = max(comm, (a @ b).distance(b @ a))
    chamber = [
        {
            "eigenvalues": [_clean(v) for v in f.eigenvalues],
            "multiplicities": list(f.multiplicities),
            "V": _mat(f.V),
        }
        for f in fs.chamber.factors
    ]
    return {
        "jordan": parts,
        "chamber": chamber,
        "checks": {"reconstruction": _clean(recon), "commutators": _clean(comm)},
    }


def _structure_text(comp: MorseComponent) -> str:
    names = []
    for groups in comp.factor_structure:
        for m, dims in groups:
            if dims:
                names.append(f"F_{m}({','.join(str(d) for d in dims)})")
    return " x ".join(names) if names else "pt"


def _component_rows(comps: list[MorseComponent]) -> list[list]:
    return [
        [
            i,
            c.label,
            int(c.dim_fix),
            int(c.dim_vplus),
            int(c.dim_vminus),
            _structure_text(c),
            int(c.is_attractor),
            int(c.is_repeller),
        ]
        for i, c in enumerate(comps)
    ]


COMPONENT_HEADER = ["index", "profile", "dim_fix", "n_w", "dim_vminus", "structure", "attractor", "repeller"]


def _component_summary(comps: list[MorseComponent]) -> list[dict]:
    return [
        {
            "profile": c.label,
            "dim_fix": int(c.dim_fix),
            "n_w": int(c.dim_vplus),
            "dim_vminus": int(c.dim_vminus),
            "structure": _structure_text(c),
            "attractor": c.is_attractor,
            "repeller": c.is_repeller,
        }
        for c in comps
    ]


def _decay_tables(fs: FlowSpec, comps, cfg: ProblemConfig, time_scale: float = 1.0, horizon=None):
    rng = np.random.default_rng(cfg.seed)
    rows, reports = [], []
    passed = True
    for comp in comps:
        for sign in (-1, +1):
            try:
                rep = decay_verify(
                    fs,
                    comp,
                    sign,
                    samples=cfg.samples,
                    horizon=horizon if horizon is not None else cfg.horizon,
                    grid=cfg.grid,
                    rng=rng,
                    time_scale=time_scale,
                )
            except EmptyFiber:
                continue
            for k, s in enumerate(rep.samples):
                for t, v in zip(s.times, s.log_norms):
                    rows.append([comp.label, sign, k, float(t), float(v)])
            passed &= rep.passed
            reports.append(
                {
                    "profile": comp.label,
                    "sign": sign,
                    "mu": _clean(rep.mu),
                    "eps_slope": _clean(rep.eps_slope),
                    "lambda_emp": [_clean(s.lambda_emp) for s in rep.samples],
                    "log_c": [_clean(s.intercept) for s in rep.samples],
                    "final_slope": [_clean(s.final_slope) for s in rep.samples],
                    "fit_residual": [_clean(s.residual) for s in rep.samples],
                    "worst_final_slope": _clean(rep.worst_final_slope),
                    "passed": bool(rep.passed),
                }
            )
    return rows, reports, passed


DECAY_HEADER = ["profile", "sign", "sample", "t", "log_norm"]


def cmd_decompose(cfg: ProblemConfig, out: Path) -> int:
    fs = _flow(cfg)
    notes: list[str] = []
    mu = _mu_or_none(fs, notes)
    summary = {"command": "decompose", "mode": cfg.mode, "factors": list(cfg.spec.factors), "mu": mu}
    summary.update(_decomposition(fs))
    summary["warnings"] = notes
    ok = max(summary["checks"].values()) <= max(cfg.tolerances["num"], 1e-9) * max(1.0, max(float(np.linalg.norm(b)) for b in fs.generator))
    summary["passed"] = bool(ok)
    _write_json(out / "decompose.json", summary)
    return 0 if ok else 3


def cmd_components(cfg: ProblemConfig, out: Path) -> int:
    fs = _flow(cfg)
    comps = enumerate_components(fs.chamber, cfg.flag_type)
    _write_csv(out / "components.csv", COMPONENT_HEADER, _component_rows(comps))
    notes: list[str] = []
    summary = {
        "command": "components",
        "count": len(comps),
        "mu": _mu_or_none(fs, notes),
        "components": _component_summary(comps),
        "warnings": notes,
    }
    _write_json(out / "components.json", summary)
    return 0


def cmd_decay(cfg: ProblemConfig, out: Path) -> int:
    fs = _flow(cfg)
    mu_gap(fs.chamber)
    comps = enumerate_components(fs.chamber, cfg.flag_type)
    rows, reports, passed = _decay_tables(fs, comps, cfg)
    invariance = max(
        fiber_invariance_residual(fs, c, rng=np.random.default_rng(cfg.seed)) for c in comps
    )
    inv_ok = invariance <= 1e3 * cfg.tolerances["num"]
    _write_csv(out / "decay.csv", DECAY_HEADER, rows)
    summary = {
        "command": "decay",
        "mu": _clean(fs.mu),
        "reports": reports,
        "fiber_invariance": _clean(invariance),
        "passed": bool(passed and inv_ok),
    }
    _write_json(out / "decay.json", summary)
    return 0 if summary["passed"] else 3


def cmd_portrait(cfg: ProblemConfig, out: Path) -> int:
    fs = _flow(cfg)
    opts = cfg.portrait
    data = build_portrait(
        fs,
        cfg.flag_type,
        starts=opts.starts,
        horizon=opts.horizon,
        points=opts.points,
        locus_points=opts.locus_points,
        limit_horizon=opts.limit_horizon,
        rng=np.random.default_rng(cfg.seed),
        limit_tol=cfg.tolerances["limit"],
        fix_tol=cfg.tolerances["fix"],
    )
    _write_csv(
        out / "portrait.csv",
        ["kind", "id", "label", "t", "c1", "c2"],
        ([r.kind, r.id, r.label, r.t, r.c1, r.c2] for r in data.records),
    )
    counts: dict[str, int] = {}
    labels: dict[str, int] = {}
    for r in data.records:
        counts[r.kind] = counts.get(r.kind, 0) + 1
        if r.kind == "trajectory" and r.t == 0.0:
            labels[r.label] = labels.get(r.label, 0) + 1
    recurrent: dict[str, int] = {}
    for r in data.records:
        if r.kind == "recurrent":
            recurrent[r.label] = recurrent.get(r.label, 0) + 1
    summary = {
        "command": "portrait",
        "chart": data.chart,
        "components": data.components,
        "record_counts": counts,
        "trajectory_limits": labels,
        "recurrent_points": recurrent,
    }
    _write_json(out / "portrait.json", summary)
    return 0


def cmd_periodic(cfg: ProblemConfig, out: Path) -> int:
    if cfg.mode != "periodic":
        raise ConfigError("the periodic command needs mode 'periodic'")
    ps = cfg.periodic
    res = monodromy(ps, cfg.periodic_steps, cfg.tolerances["cluster"])
    fs = res.flow
    comps = enumerate_components(fs.chamber, cfg.flag_type)
    _write_csv(out / "periodic_components.csv", COMPONENT_HEADER, _component_rows(comps))
    notes: list[str] = []
    mu = _mu_or_none(fs, notes)
    reports, passed = [], True
    if mu is not None:
        periods = max(2, int(np.ceil((cfg.horizon or 10.0) / ps.period)))
        rows, reports, passed = _decay_tables(fs, comps, cfg, time_scale=ps.period, horizon=periods)
        _write_csv(out / "periodic_decay.csv", DECAY_HEADER, rows)
    summary = {
        "command": "periodic",
        "period": ps.period,
        "monodromy": _blocks(res.M),
        "richardson_error": _clean(res.richardson_error),
        "det_drift": _clean(res.det_drift),
        "mu_per_time": None if mu is None else _clean(mu / ps.period),
        "components": _component_summary(comps),
        "decay": reports,
        "warnings": notes,
        "passed": bool(passed),
    }
    summary.update(_decomposition(fs))
    _write_json(out / "periodic.json", summary)
    return 0 if passed else 3


HANDLERS = {
    "decompose": cmd_decompose,
    "components": cmd_components,
    "decay": cmd_decay,
    "portrait": cmd_portrait,
    "periodic": cmd_periodic,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flagflow", description="Morse decompositions of flows on real flag manifolds.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("config", help="JSON configuration file")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--seed", type=int, default=None, help="override the configured seed")
    p.add_argument("--tol", type=float, default=None, help="override the numerical tolerance")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed).with_tolerance(args.tol)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        code = HANDLERS[args.command](cfg, out)
    except PRECONDITION as exc:
        print(f"flagflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if code == 3:
        print(f"flagflow: {args.command}: verification failed", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
