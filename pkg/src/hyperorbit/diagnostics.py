"""Measurable versions of the escape, action and direction estimates, plus the
continuation sweep R -> infinity that strings them together.

The constants in those estimates are only known to exist, so everything here
measures quantities, fits functional forms and checks trends; no specific
constant value is ever asserted.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import nnls

from .functional import eval_g
from .loop import SymmetricLoop, write_loop_csv
from .minimize import CollisionAbort, SolverConfig, minimize_constrained
from .potential import PotentialSpec, eval_potential, potential_from_mapping, two_sided_bounds
from .rescale import OrbitSegment, RescaleError, reconstruct_orbit, shift_by_tstar, write_segment
from .seed import SeedError, default_eta, qa_exponent, solve_seed

__all__ = [
    "angular_defect",
    "RadiusVerdict",
    "radius_bounds_sweep",
    "escape_margins",
    "action_bound",
    "tail_direction_error",
    "DirectionReport",
    "direction_convergence",
    "SweepConfig",
    "SweepEntry",
    "ContinuationRecord",
    "LocalLimitReport",
    "continuation_sweep",
    "jsonable",
]

log = logging.getLogger(__name__)
SCHEMA = 1


def jsonable(obj):
    """Plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


# ---------------------------------------------------------------- geometry


def angular_defect(segment) -> tuple[np.ndarray, np.ndarray]:
    """A = sqrt(|u|^2 |u'|^2 - (u, u')^2) and omega = A / (|u| |u'|).

    A is summed from the 2x2 minors of (u, u') so no cancellation occurs.
    Nodes with zero position or velocity get omega = nan.
    """
    u = np.asarray(segment.positions, dtype=float)
    v = np.asarray(segment.velocities, dtype=float)
    N = u.shape[1]
    a2 = np.zeros(u.shape[0])
    for i in range(N):
        for j in range(i + 1, N):
            a2 += (u[:, i] * v[:, j] - u[:, j] * v[:, i]) ** 2
    A = np.sqrt(a2)
    denom = np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        omega = np.where(denom > 0, A / np.where(denom > 0, denom, 1.0), np.nan)
    return A, np.minimum(omega, 1.0)


@dataclass
class RadiusVerdict:
    M_emp: float
    m_emp: float
    ratio: float
    loglog_slope: float
    drift_per_doubling: float
    monotone: bool
    verdict: str


def _pairs(records):
    out = []
    for r in records:
        if isinstance(r, dict):
            out.append((float(r["R"]), float(r["min_radius"])))
        elif isinstance(r, (tuple, list)):
            out.append((float(r[0]), float(r[1])))
        else:
            out.append((float(r.R), float(r.min_radius)))
    return sorted(out)


def radius_bounds_sweep(records, max_ratio: float = 10.0, max_drift: float = 0.1) -> RadiusVerdict:
    """Band and drift of the minimum radius along an R ladder.

    FAIL when max/min of the minimum radii reaches ``max_ratio`` or when the
    series is monotone with a log-log slope worth more than ``max_drift`` per
    doubling of R.
    """
    pairs = _pairs(records)
    if len(pairs) < 4:
        raise ValueError("insufficient entries: need at least 4")
    R = np.array([p[0] for p in pairs])
    m = np.array([p[1] for p in pairs])
    if R[-1] / R[0] < 16.0:
        raise ValueError("insufficient entries: R must span at least a factor 16")
    M_emp, m_emp = float(m.max()), float(m.min())
    slope = float(np.polyfit(np.log2(R), np.log2(m), 1)[0])
    drift = 2.0**slope - 1.0
    d = np.diff(m)
    monotone = bool(np.all(d > 0) or np.all(d < 0))
    ok = M_emp / m_emp < max_ratio and not (monotone and abs(drift) > max_drift)
    return RadiusVerdict(M_emp, m_emp, M_emp / m_emp, slope, drift, monotone, "PASS" if ok else "FAIL")


def _crossings(times, radii, level):
    inside = np.flatnonzero(radii <= level)
    if inside.size == 0:
        raise ValueError(f"threshold {level} never crossed")
    i, j = int(inside[0]), int(inside[-1])

    def interp(a, b):
        ra, rb = radii[a], radii[b]
        if ra == rb:
            return float(times[a])
        w = (ra - level) / (ra - rb)
        return float(times[a] + w * (times[b] - times[a]))

    t_minus = float(times[0]) if i == 0 else interp(i - 1, i)
    t_plus = float(times[-1]) if j == len(radii) - 1 else interp(j + 1, j)
    return t_minus, t_plus


def escape_margins(segment: OrbitSegment, L_threshold: float) -> tuple[float, float]:
    """(t_minus, t_plus): first and last times with |u| <= L, in the unshifted clock."""
    base = segment.times + segment.tstar_shift
    return _crossings(base, segment.radii, L_threshold)


def action_bound(segment: OrbitSegment, spec: PotentialSpec, H: float) -> tuple[float, int]:
    """int sqrt(H - V(u)) |u'| dt as an arc-length trapezoid sum.

    Returns the integral and the number of nodes where H - V < 0 was clipped.
    """
    u = segment.positions
    gap = H - eval_potential(spec, u)
    clipped = int(np.sum(gap < 0))
    s = np.sqrt(np.maximum(gap, 0.0))
    ds = np.linalg.norm(np.diff(u, axis=0), axis=1)
    return float(np.sum(0.5 * (s[1:] + s[:-1]) * ds)), clipped


def tail_direction_error(positions, e, start: int = 0, r_floor: float = 0.0) -> float:
    """sup over nodes from ``start`` with |u| >= r_floor of |u/|u| - e|."""
    u = np.asarray(positions)[start:]
    r = np.linalg.norm(u, axis=1)
    keep = r >= r_floor
    if not np.any(keep):
        return float("nan")
    return float(np.max(np.linalg.norm(u[keep] / r[keep, None] - np.asarray(e)[None, :], axis=1)))


# ---------------------------------------------------------------- direction


@dataclass
class EscapeCheck:
    eta: float
    found: bool
    t0: float = float("nan")
    radius_t0: float = float("nan")
    omega_stays_below: bool = False
    omega_max_after: float = float("nan")
    radial_speed_ok: bool = False
    radial_floor_ok: bool = False
    drift: float = float("nan")
    tail_error: float = float("nan")
    message: str = ""


@dataclass
class DirectionReport:
    R: list
    checks: list  # per segment, list of EscapeCheck
    tail_errors: list
    c1: list
    c2: list
    tail_decreasing: bool
    omega_ok: bool
    constants_stable: bool
    verdict: str

    def as_dict(self) -> dict:
        return jsonable(asdict(self))


def _escape_check(seg: OrbitSegment, spec, H, e, eta, L_eta, r_floor, omega, tol=1e-9) -> EscapeCheck:
    u, v, t = seg.positions, seg.velocities, seg.times
    r = seg.radii
    radial = np.sum(u * v, axis=1)
    cand = np.flatnonzero((t >= 0) & (r >= L_eta) & (radial > 0) & (omega < eta))
    if cand.size == 0:
        return EscapeCheck(eta, False, message="escape conditions unmet")
    j = int(cand[0])
    tail = slice(j, None)
    om = omega[tail]
    speed = np.linalg.norm(v[tail], axis=1)
    rdot = radial[tail] / r[tail]
    th0 = u[j] / r[j]
    keep = r[tail] >= r_floor
    dirs = u[tail][keep] / r[tail][keep, None]
    drift = float(np.max(np.linalg.norm(dirs - th0, axis=1))) if dirs.size else float("nan")
    return EscapeCheck(
        eta=eta,
        found=True,
        t0=float(t[j]),
        radius_t0=float(r[j]),
        omega_stays_below=bool(np.all(om < eta)),
        omega_max_after=float(np.nanmax(om)) if np.any(np.isfinite(om)) else float("nan"),
        radial_speed_ok=bool(np.all(rdot >= math.sqrt(1 - eta * eta) * speed - tol)),
        radial_floor_ok=bool(np.all(rdot >= math.sqrt(2 * (1 - eta * eta) * H) - tol)),
        drift=drift,
        tail_error=tail_direction_error(u, e, j, r_floor),
    )


def _stable(values, tol=0.5) -> bool:
    vals = np.array([v for v in values if np.isfinite(v)])
    if vals.size < 2:
        return False
    med = np.median(vals)
    return bool(med > 0 and np.all(np.abs(vals - med) <= tol * med))


def direction_convergence(segments: Sequence[OrbitSegment], spec: PotentialSpec, H: float, e, eta_grid=(0.1, 0.2, 0.3, 0.4), L_eta: Optional[float] = None, r_floor: Optional[float] = None) -> DirectionReport:
    """Escape-cone checks on t*-shifted segments ordered by increasing R.

    For each eta the first node t0 >= 0 with |u| >= L_eta, (u, u') > 0 and
    omega < eta is located; afterwards omega must stay below eta.  The drift of
    the direction after t0 is fitted per segment as c1 eta + c2 |u(t0)|^-beta
    over the etas below 1/2 (nonnegative least squares).
    """
    if not spec.has_decay:
        raise ValueError("direction convergence needs the decay parameters (beta, m0, r0)")
    etas = [float(x) for x in eta_grid]
    if not etas or any(not 0 < x < 1 for x in etas):
        raise ValueError("every eta must lie in (0, 1)")
    beta = float(spec.beta)
    L_eta = float(spec.r0) if L_eta is None else float(L_eta)
    r_floor = float(spec.r0) if r_floor is None else float(r_floor)
    e = np.asarray(e, dtype=float)
    checks, tails, c1s, c2s = [], [], [], []
    for seg in segments:
        _, omega = angular_defect(seg)
        row = [_escape_check(seg, spec, H, e, eta, L_eta, r_floor, omega) for eta in etas]
        checks.append(row)
        found = [c for c in row if c.found]
        tails.append(max((c.tail_error for c in found), default=float("nan")))
        fit = [c for c in found if c.eta < 0.5 and np.isfinite(c.drift)]
        if len(fit) >= 2:
            A = np.array([[c.eta, c.radius_t0 ** (-beta)] for c in fit])
            coef, _ = nnls(A, np.array([c.drift for c in fit]))
            c1s.append(float(coef[0]))
            c2s.append(float(coef[1]))
        else:
            c1s.append(float("nan"))
            c2s.append(float("nan"))
    t = np.array(tails)
    decreasing = bool(t.size >= 2 and np.all(np.isfinite(t)) and np.all(np.diff(t) < 0))
    omega_ok = all(c.found and c.omega_stays_below for row in checks for c in row)
    stable = _stable(c1s) and _stable(c2s)
    ok = decreasing and omega_ok and stable
    return DirectionReport(
        R=[float(s.endpoint_radius) for s in segments],
        checks=checks,
        tail_errors=tails,
        c1=c1s,
        c2=c2s,
        tail_decreasing=decreasing,
        omega_ok=omega_ok,
        constants_stable=stable,
        verdict="PASS" if ok else "FAIL",
    )


# ---------------------------------------------------------------- sweep


@dataclass
class SweepConfig:
    n: int = 512
    solver: SolverConfig = field(default_factory=SolverConfig)
    window: float = 5.0
    seed_bracket: tuple = (1e-3, 1e3)
    M_threshold: Optional[float] = None  # None -> M_emp
    L_threshold: Optional[float] = None  # None -> sqrt(M_emp * R_0)
    eta_grid: tuple = (0.1, 0.2, 0.3, 0.4)
    jobs: int = 1
    warm_start: bool = False
    out_dir: Optional[str] = None


@dataclass
class SweepEntry:
    R: float
    status: str = "ok"
    error: str = ""
    T: float = float("nan")
    tstar: float = float("nan")
    min_radius: float = float("nan")
    min_radius_time: float = float("nan")
    action: float = float("nan")
    action_clipped_nodes: int = 0
    t_minus: float = float("nan")
    t_plus: float = float("nan")
    escape_margin: float = float("nan")
    entry_margin: float = float("nan")
    direction_error: float = float("nan")
    omega_max_after_escape: float = float("nan")
    max_speed: float = float("nan")
    energy_residual: float = float("nan")
    edge_radii: list = field(default_factory=list)
    window_edge_radii: list = field(default_factory=list)
    F_value: float = float("nan")
    kkt_residual: float = float("nan")
    constraint_residual: float = float("nan")
    multiplier: float = float("nan")
    solver_status: str = ""
    collision_floor_active: bool = False
    period_sign_anomaly: bool = False
    warm_start_fallback: bool = False


@dataclass
class LocalLimitReport:
    window: float
    pairs: list
    distances: list
    decreasing: bool
    halving: bool
    edge_radius_min: float
    edge_ok: bool


@dataclass
class ContinuationRecord:
    H: float
    spec: dict
    direction: list
    n: int
    entries: list
    M_emp: float = float("nan")
    m_emp: float = float("nan")
    L_threshold: float = float("nan")
    summary: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return jsonable({"schema": SCHEMA, **asdict(self)})

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def _warm_loop(prev: SymmetricLoop, R: float, spec, H, n):
    """Previous minimizer with its ends pushed radially out to R, relanded on g = H.

    The landing bisects on the amplitude of a sin^p bump along the seed's
    transverse direction, so the shape near the origin is kept.
    """
    p = qa_exponent(spec.alpha)
    s_old = np.linspace(0.0, 0.5, prev.n + 1)
    s = np.arange(n + 1) / (2 * n)
    nodes = np.column_stack([np.interp(s, s_old, prev.half_nodes[:, i]) for i in range(prev.dimension)])
    e = prev.direction
    nodes = nodes + (R - prev.endpoint_radius) * (np.cos(2 * np.pi * s) ** p)[:, None] * e[None, :]
    eta = default_eta(e)
    bump = (np.sin(2 * np.pi * s) ** p)[:, None] * eta[None, :]

    def loop_at(a):
        q = nodes + a * bump
        return SymmetricLoop(q, R, e).with_interior(q[1:-1])

    def h(a):
        try:
            return eval_g(loop_at(a), spec) - H
        except ValueError:
            return float("nan")

    lo, hi = 0.0, 1.0
    f_lo = h(lo)
    if not np.isfinite(f_lo):
        raise SeedError("warm start hits the origin")
    if f_lo < 0:
        raise SeedError("warm start already below the constraint level")
    f_hi = h(hi)
    k = 0
    while not f_hi < 0:
        hi *= 2.0
        f_hi = h(hi)
        k += 1
        if k > 60:
            raise SeedError("warm start: no bracket")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = h(mid)
        if abs(fm) < 1e-10 * H:
            return loop_at(mid)
        if fm > 0:
            lo = mid
        else:
            hi = mid
    raise SeedError("warm start bisection stalled")


def _solve_stage(spec, H, e, R, cfg: SweepConfig, warm=None):
    """Seed, minimize and reconstruct one R; errors are returned, not raised."""
    entry = SweepEntry(R=float(R))
    loop = None
    try:
        seed = None
        if warm is not None:
            try:
                seed = _warm_loop(warm, R, spec, H, cfg.n)
            except SeedError:
                entry.warm_start_fallback = True
        if seed is None:
            seed = solve_seed(R, e, H, spec, cfg.n, cfg.seed_bracket)
        loop, rep = minimize_constrained(seed, spec, H, cfg.solver)
        entry.solver_status = rep.status
    except CollisionAbort as exc:
        loop, rep = exc.loop, exc.report
        entry.status, entry.error, entry.solver_status = "error", str(exc), rep.status
    except (SeedError, ValueError) as exc:
        entry.status, entry.error = "error", str(exc)
        return entry, None, None
    entry.F_value = rep.F_value
    entry.kkt_residual = rep.kkt_residual
    entry.constraint_residual = rep.constraint_residual
    entry.multiplier = rep.multiplier
    entry.collision_floor_active = rep.floor_active
    entry.min_radius = rep.min_radius
    if entry.status != "ok":
        return entry, loop, None
    try:
        seg = reconstruct_orbit(loop, spec, H)
    except RescaleError as exc:
        entry.status, entry.error = "error", str(exc)
        return entry, loop, None
    entry.T = seg.period
    entry.period_sign_anomaly = seg.period_sign_anomaly
    return entry, loop, seg


def _worker(args):
    spec_map, H, e, R, cfg = args
    spec = potential_from_mapping(spec_map)
    entry, loop, seg = _solve_stage(spec, H, np.asarray(e), R, cfg)
    return entry, loop, seg


def _window_distance(a: OrbitSegment, b: OrbitSegment, W: float, samples: int = 2001):
    lo = max(-W, a.times[0], b.times[0])
    hi = min(W, a.times[-1], b.times[-1])
    if not hi > lo:
        return float("nan"), (lo, hi)
    t = np.linspace(lo, hi, samples)
    ua = np.column_stack([np.interp(t, a.times, a.positions[:, i]) for i in range(a.positions.shape[1])])
    ub = np.column_stack([np.interp(t, b.times, b.positions[:, i]) for i in range(b.positions.shape[1])])
    return float(np.max(np.linalg.norm(ua - ub, axis=1))), (float(lo), float(hi))


def _radius_at(seg: OrbitSegment, t: float) -> float:
    t = min(max(t, seg.times[0]), seg.times[-1])
    return float(math.hypot(*[np.interp(t, seg.times, seg.positions[:, i]) for i in range(seg.positions.shape[1])]))


def continuation_sweep(spec: PotentialSpec, H: float, e, R_schedule, config: Optional[SweepConfig] = None):
    """Run seed -> minimize -> rescale -> shift for each R and measure the estimates.

    Returns ``(record, local_limit_report, direction_report_or_None)``.  Stage
    errors are recorded per R and the sweep goes on.
    """
    cfg = config or SweepConfig()
    Rs = [float(r) for r in R_schedule]
    if len(Rs) < 4:
        raise ValueError("R_schedule needs at least 4 entries")
    if any(b <= a for a, b in zip(Rs, Rs[1:])):
        raise ValueError("R_schedule must be strictly increasing")
    e = np.asarray(e, dtype=float)
    if not H > 0:
        raise ValueError("energy H must be positive")

    results = []
    if cfg.warm_start:
        prev = None
        for R in Rs:
            entry, loop, seg = _solve_stage(spec, H, e, R, cfg, warm=prev)
            prev = loop if entry.status == "ok" else None
            results.append((entry, loop, seg))
    elif cfg.jobs > 1:
        args = [(spec.as_dict(), H, e.tolist(), R, cfg) for R in Rs]
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_worker, args))
    else:
        results = [_solve_stage(spec, H, e, R, cfg) for R in Rs]

    entries = [r[0] for r in results]
    ok = [i for i, r in enumerate(results) if r[2] is not None]
    record = ContinuationRecord(H=H, spec=spec.as_dict(), direction=e.tolist(), n=cfg.n, entries=entries)
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for entry, loop, _ in results:
            if loop is not None:
                write_loop_csv(loop, out / f"R{entry.R:g}_loop.csv")

    mins = [entries[i].min_radius for i in ok]
    if not mins:
        record.summary = {"verdict": "FAIL", "reason": "no successful R"}
        return record, None, None
    M_emp = float(np.max(mins)) if cfg.M_threshold is None else float(cfg.M_threshold)
    record.M_emp, record.m_emp = float(np.max(mins)), float(np.min(mins))
    L = math.sqrt(record.M_emp * Rs[ok[0]]) if cfg.L_threshold is None else float(cfg.L_threshold)
    record.L_threshold = L

    segments = {}
    for i in ok:
        entry, seg = results[i][0], results[i][2]
        try:
            seg = shift_by_tstar(seg, M_emp)
        except RescaleError as exc:
            entry.status, entry.error = "error", str(exc)
            continue
        segments[i] = seg
        r = seg.radii
        j = int(np.argmin(r))
        entry.tstar = seg.tstar_shift
        entry.min_radius_time = float(seg.times[j])
        entry.action, entry.action_clipped_nodes = action_bound(seg, spec, H)
        try:
            entry.t_minus, entry.t_plus = escape_margins(seg, L)
            entry.escape_margin = 0.5 * seg.period - entry.t_plus
            entry.entry_margin = entry.t_minus + 0.5 * seg.period
        except ValueError as exc:
            entry.error = str(exc)
        entry.max_speed = float(np.max(np.linalg.norm(seg.velocities, axis=1)))
        entry.energy_residual = seg.max_interior_energy_residual
        entry.edge_radii = [float(r[0]), float(r[-1])]
        entry.window_edge_radii = [_radius_at(seg, -cfg.window), _radius_at(seg, cfg.window)]
        entry.direction_error = tail_direction_error(seg.positions[seg.times >= 0], e)
        if cfg.out_dir:
            write_segment(seg, Path(cfg.out_dir) / f"R{entry.R:g}_orbit.csv", Path(cfg.out_dir) / f"R{entry.R:g}_orbit.json")

    order = sorted(segments)
    segs = [segments[i] for i in order]
    pairs, dists = [], []
    for a, b in zip(order, order[1:]):
        d, _ = _window_distance(segments[a], segments[b], cfg.window)
        pairs.append([Rs[a], Rs[b]])
        dists.append(d)
    dd = np.array(dists)
    decreasing = bool(dd.size >= 2 and np.all(np.isfinite(dd)) and np.all(np.diff(dd) < 0))
    halving = bool(dd.size >= 2 and np.isfinite(dd[0]) and np.isfinite(dd[-1]) and dd[-1] < 0.5 * dd[0])
    edge = min(segs[-1].radii[0], segs[-1].radii[-1]) if segs else float("nan")
    local = LocalLimitReport(cfg.window, pairs, dists, decreasing, halving, float(edge), bool(edge > 10 * record.M_emp))

    direction = None
    if spec.has_decay and segs:
        direction = direction_convergence(segs, spec, H, e, cfg.eta_grid)
        for i, row in zip(order, direction.checks):
            found = [c for c in row if c.found]
            entries[i].omega_max_after_escape = max((c.omega_max_after for c in found), default=float("nan"))
            entries[i].direction_error = direction.tail_errors[order.index(i)]

    record.summary = _summarize(record, local, spec, H, [entries[i] for i in order])
    return record, local, direction


def _summarize(record: ContinuationRecord, local: LocalLimitReport, spec, H, good) -> dict:
    out = {"successful": len(good), "requested": len(record.entries)}
    if len(good) < 4:
        out["verdict"] = "FAIL"
        out["reason"] = "fewer than 4 successful entries"
        return out
    try:
        rv = radius_bounds_sweep(good)
        out["radius"] = asdict(rv)
        radius_ok = rv.verdict == "PASS"
    except ValueError as exc:
        out["radius"] = {"verdict": "FAIL", "error": str(exc)}
        radius_ok = False
    R = np.array([g.R for g in good])
    margins = np.array([g.escape_margin for g in good])
    finite = np.all(np.isfinite(margins))
    margin_ok = bool(finite and np.all(np.diff(margins) > 0) and margins[-1] > 2 * margins[0] > 0)
    out["margins"] = {"values": margins.tolist(), "increasing": margin_ok}
    if finite and np.all(margins > 0):
        out["margins"]["loglog_slope"] = float(np.polyfit(np.log(R), np.log(margins), 1)[0])
        C1, C2 = two_sided_bounds(spec, 360)
        m = record.m_emp
        D = 0.5 * min(1.0, H * m**spec.alpha / C2)
        gap = H - D * C2 / m**spec.alpha
        out["margins"]["slope_bound"] = math.sqrt(gap) / (math.sqrt(2.0) * H) if gap > 0 else float("nan")
        out["margins"]["fitted_slope"] = float(np.polyfit(R - record.L_threshold, margins, 1)[0])
    actions = np.array([g.action for g in good])
    slope, icpt = np.polyfit(R, actions, 1)
    lo, hi = 0.9 * math.sqrt(2 * H), 1.05 * 2 * math.sqrt(H)
    action_ok = bool(lo <= slope <= hi)
    out["action"] = {"slope": float(slope), "intercept": float(icpt), "band": [lo, hi], "ok": action_ok}
    out["local_limit"] = asdict(local)
    speeds = max(g.max_speed for g in good)
    out["speed_cap"] = {"max_speed": speeds, "ok": bool(speeds <= math.sqrt(2 * H) + 1e-6)}
    out["floor_active"] = any(g.collision_floor_active for g in good)
    out["period_sign_anomaly"] = any(g.period_sign_anomaly for g in good)
    cauchy_ok = local.decreasing and local.halving
    out["checks"] = {
        "radius_band": radius_ok,
        "escape_margin": margin_ok,
        "action_slope": action_ok,
        "cauchy": cauchy_ok,
        "edge_radii": local.edge_ok,
    }
    out["verdict"] = "PASS" if all(out["checks"].values()) else "FAIL"
    return out
