"""Phase-portrait samples on low-dimensional flag manifolds, in chart coordinates.

Charts: a point of RP^1 is the angle of its line in ``[0, pi)``; a point of
RP^2 (a line, or the normal line of a plane) is the unit vector ``v`` with
``v_3 >= 0`` drawn in the upper-hemisphere polar chart, i.e. the disk point
``(theta / (pi/2)) * (cos phi, sin phi)`` with ``theta`` the angle from
``e_3`` and ``phi`` the azimuth.  Products concatenate the factor charts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .dynamics import EPS_LIMIT, FlowSpec, classify_limit, trajectory, unipotent_fixed
from .errors import DimensionTooLarge
from .flag_geometry import Flag, FlagType, flag_from_basis
from .morse import EPS_FIX, MorseComponent, enumerate_components, sample_point


@dataclass(frozen=True)
class PortraitRecord:
    kind: str  # trajectory | locus | recurrent
    id: int
    label: str
    t: float
    c1: float
    c2: float


@dataclass(frozen=True)
class PortraitData:
    chart: str
    records: list[PortraitRecord]
    components: list[str]


def _chart_kind(n: int, dims: tuple[int, ...]) -> str:
    if not dims:
        return "point"
    if n == 2:
        return "RP1"
    if n == 3 and len(dims) == 1:
        return "RP2"
    raise DimensionTooLarge(f"no chart for flags of type {dims} in dimension {n}")


def chart_id(t: FlagType) -> str:
    kinds = [_chart_kind(n, ds) for n, ds in zip(t.sizes, t.dims)]
    live = [k for k in kinds if k != "point"]
    total = sum(1 if k == "RP1" else 2 for k in live)
    if total > 2:
        raise DimensionTooLarge(f"flag manifold of dimension {t.dim} has no planar chart")
    return "x".join(live) if live else "point"


def _line(q: np.ndarray, dims: tuple[int, ...]) -> np.ndarray:
    v = q[:, 0] if dims[0] == 1 else q[:, -1]
    return v / np.linalg.norm(v)


def chart_coords(x: Flag) -> tuple[float, float]:
    out: list[float] = []
    for q, n, ds in zip(x.frames, x.flag_type.sizes, x.flag_type.dims):
        kind = _chart_kind(n, ds)
        if kind == "point":
            continue
        v = _line(q, ds)
        if kind == "RP1":
            out.append(float(np.mod(np.arctan2(v[1], v[0]), np.pi)))
        else:
            if v[2] < 0:
                v = -v
            theta = np.arccos(np.clip(v[2], -1.0, 1.0))
            r = theta / (np.pi / 2)
            phi = np.arctan2(v[1], v[0]) if r > 0 else 0.0
            out.extend([float(r * np.cos(phi)), float(r * np.sin(phi))])
    out.extend([0.0] * (2 - len(out)))
    return out[0], out[1]


def _start_lines(kind: str, k: int) -> list[np.ndarray]:
    if kind == "RP1":
        angles = (np.arange(k) + 0.5) * np.pi / k
        return [np.array([np.cos(a), np.sin(a)]) for a in angles]
    g = (np.arange(k) + 0.5) / k * 2.0 - 1.0
    out = []
    for a, b in itertools.product(g, g):
        r = np.hypot(a, b)
        if r >= 1.0:
            continue
        theta, phi = r * np.pi / 2, np.arctan2(b, a)
        out.append(np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]))
    return out


def _flag_with_line(v: np.ndarray, n: int, dims: tuple[int, ...]) -> np.ndarray:
    """Frame whose first subspace is ``v`` (lines) or ``v^perp`` (planes)."""
    M = np.column_stack([v, np.eye(n)])
    Q, _ = np.linalg.qr(M)
    Q = Q[:, :n]
    if dims[0] == 1:
        return Q
    return np.column_stack([Q[:, 1:], Q[:, :1]])


def grid_starts(t: FlagType, k: int) -> list[Flag]:
    """Deterministic grid of initial flags, ``k`` per chart axis."""
    per_factor = []
    for n, ds in zip(t.sizes, t.dims):
        kind = _chart_kind(n, ds)
        if kind == "point":
            per_factor.append([np.eye(n)])
        else:
            per_factor.append([_flag_with_line(v, n, ds) for v in _start_lines(kind, k)])
    return [flag_from_basis(list(frames), t) for frames in itertools.product(*per_factor)]


def recurrent_points(fs: FlowSpec, comp: MorseComponent, count: int = 24, tol: float = EPS_FIX) -> list[Flag]:
    """Points of the component fixed by the unipotent part.

    Inside a line-valued factor the line sits in one eigenspace ``E`` of
    ``H``, and the fixed lines are the lines of ``ker N|_E`` (sampled along a
    circle when that kernel is a plane).  Plane-valued factors are handled
    through their normal lines with ``H^T`` and ``N^T``.
    """
    t = comp.base_point.flag_type
    options = []
    for fc, n_blk, ds, D in zip(fs.chamber.factors, fs.N, t.dims, comp.profile.arrays()):
        if not ds:
            options.append([np.eye(fc.n)])
            continue
        if ds[0] == 1:
            basis, nil, col = fc.V, n_blk, 0
        else:
            basis, nil, col = fc.V_inv.T, n_blk.T, 1
        j = int(np.flatnonzero(D[:, col])[0])
        Vj = basis[:, fc.group_slice(j)]
        A = np.linalg.lstsq(Vj, nil @ Vj, rcond=None)[0]
        _, s, Wt = np.linalg.svd(A)
        scale = max(1.0, np.linalg.norm(n_blk, 2))
        rank = int(np.sum(s > 1e-9 * scale))
        K = Vj @ Wt[rank:].T
        if K.shape[1] == 1:
            lines = [K[:, 0]]
        else:
            Qk, _ = np.linalg.qr(K)
            ang = np.arange(count) * np.pi / count
            lines = [np.cos(a) * Qk[:, 0] + np.sin(a) * Qk[:, 1] for a in ang]
        options.append([_flag_with_line(v / np.linalg.norm(v), fc.n, ds) for v in lines])
    pts = [flag_from_basis(list(fr), t) for fr in itertools.product(*options)]
    return [x for x in pts if unipotent_fixed(fs, x, tol)]


def _locus(comp: MorseComponent, fs: FlowSpec, count: int, rng) -> list[Flag]:
    if comp.dim_fix == 0:
        return [comp.base_point]
    pts = [sample_point(comp.profile, fs.chamber, comp.base_point.flag_type, rng) for _ in range(count)]
    return sorted(pts, key=chart_coords)


def build_portrait(
    fs: FlowSpec,
    flag_type: FlagType,
    starts: int = 8,
    horizon: float = 6.0,
    points: int = 40,
    locus_points: int = 48,
    limit_horizon: float = 30.0,
    rng: np.random.Generator | None = None,
    limit_tol: float = EPS_LIMIT,
    fix_tol: float = EPS_FIX,
) -> PortraitData:
    rng = np.random.default_rng(0) if rng is None else rng
    chart = chart_id(flag_type)
    comps = enumerate_components(fs.chamber, flag_type)
    records: list[PortraitRecord] = []

    if fs.mode == "continuous":
        times = np.linspace(0.0, horizon, points)
    else:
        times = np.arange(0, int(horizon) + 1, dtype=float)
    for i, x0 in enumerate(grid_starts(flag_type, starts)):
        lim = classify_limit(fs, x0, limit_horizon, limit_tol)
        label = lim.label if lim is not None else "unresolved"
        pts = trajectory(fs, x0, times)
        for t, x in zip(times, pts):
            records.append(PortraitRecord("trajectory", i, label, float(t), *chart_coords(x)))

    for i, comp in enumerate(comps):
        for x in _locus(comp, fs, locus_points, rng):
            records.append(PortraitRecord("locus", i, comp.label, 0.0, *chart_coords(x)))
        for x in recurrent_points(fs, comp, tol=fix_tol):
            records.append(PortraitRecord("recurrent", i, comp.label, 0.0, *chart_coords(x)))
    return PortraitData(chart, records, [c.label for c in comps])
