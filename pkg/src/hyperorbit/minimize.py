"""Constrained minimizer: Dirichlet energy on {g = H} over symmetric loops.

On the constraint set F = alpha H / (2 (2 - alpha)) * int|q'|^2, so minimizing F
there is minimizing the Dirichlet energy.  The outer loop is an augmented
Lagrangian on the scaled problem

    minimize  D(q) / D_seed   subject to  c(q) = (g(q) - H) / H = 0,

each subproblem solved by limited-memory BFGS with backtracking.  Trial points
that put any node below ``collision_floor`` are rejected inside the line
search.  A Newton step on the KKT system (exact sparse Hessian) finishes the
solve once the augmented Lagrangian has found the basin.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .functional import eval_F, eval_g, grad_dirichlet, grad_g
from .loop import SymmetricLoop, dirichlet_energy, full_trace
from .potential import PotentialSpec, eval_gradient, eval_hessian

__all__ = [
    "SolverConfig",
    "SolveReport",
    "CollisionAbort",
    "minimize_constrained",
    "kkt_report",
    "full_space_residual",
]

log = logging.getLogger(__name__)


class CollisionAbort(RuntimeError):
    """A line search could not make progress without crossing the collision floor."""

    def __init__(self, message: str, loop: SymmetricLoop, report: "SolveReport"):
        super().__init__(message)
        self.loop = loop
        self.report = report


@dataclass
class SolverConfig:
    tol_kkt: float = 1e-8
    tol_constraint: float = 1e-9
    max_outer: int = 50
    max_inner: int = 2000
    penalty_init: float = 10.0
    penalty_growth: float = 5.0
    collision_floor: Optional[float] = None  # None -> floor_factor * R
    floor_factor: float = 1e-6
    ls_shrink: float = 0.5
    ls_sufficient_decrease: float = 1e-4
    lbfgs_memory: int = 10
    max_newton: int = 40
    polish: bool = True

    def __post_init__(self):
        for name in ("tol_kkt", "tol_constraint", "penalty_init", "floor_factor", "ls_sufficient_decrease"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.penalty_growth > 1:
            raise ValueError("penalty_growth must exceed 1")
        if not 0 < self.ls_shrink < 1:
            raise ValueError("ls_shrink must lie in (0, 1)")
        if self.collision_floor is not None and not self.collision_floor > 0:
            raise ValueError("collision_floor must be positive")

    def floor_for(self, R: float) -> float:
        return self.collision_floor if self.collision_floor is not None else self.floor_factor * R


@dataclass
class SolveReport:
    converged: bool
    status: str
    message: str
    outer_iterations: int
    inner_iterations: int
    newton_iterations: int
    F_trajectory: list = field(default_factory=list)
    merit_trajectory: list = field(default_factory=list)  # (before, after) per outer iteration
    F_value: float = float("nan")
    dirichlet: float = float("nan")
    g_value: float = float("nan")
    constraint_residual: float = float("nan")  # |g - H| / H
    kkt_residual: float = float("nan")
    multiplier: float = float("nan")
    min_radius: float = float("nan")
    min_radius_iterates: float = float("nan")
    collision_floor: float = float("nan")
    floor_hits: int = 0
    floor_active: bool = False

    def as_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def kkt_report(loop: SymmetricLoop, spec: PotentialSpec, H: float) -> tuple[float, float]:
    """Least-squares multiplier for grad D + lam grad g = 0 and the residual norm."""
    gd = grad_dirichlet(loop)
    gg = grad_g(loop, spec)
    denom = float(np.dot(gg, gg))
    lam = -float(np.dot(gd, gg)) / denom if denom > 0 else 0.0
    return lam, float(np.linalg.norm(gd + lam * gg))


def full_space_residual(loop: SymmetricLoop, spec: PotentialSpec, H: float, multiplier: float) -> float:
    """Stationarity residual of the unreduced problem.

    The loop is expanded to all 2n nodes of the periodic trace; only the values
    fixed by the boundary data (s = 0 and s = 1/2) are held, and no symmetry is
    imposed on the variations.
    """
    tr = full_trace(loop)[:-1]  # periodic, 2n nodes
    m = tr.shape[0]
    dt = loop.dt
    lap = 2.0 * tr - np.roll(tr, 1, axis=0) - np.roll(tr, -1, axis=0)
    gD = 2.0 / dt * lap
    gI = dt * eval_gradient(spec, tr)
    gG = (1.0 - 0.5 * spec.alpha) * gI
    res = gD + multiplier * gG
    free = np.ones(m, dtype=bool)
    free[0] = free[loop.n] = False
    return float(np.linalg.norm(res[free]))


class _Problem:
    """Scaled objective/constraint in the flattened interior coordinates."""

    def __init__(self, seed: SymmetricLoop, spec: PotentialSpec, H: float, floor: float):
        self.template = seed
        self.spec = spec
        self.H = H
        self.floor = floor
        self.N = seed.dimension
        self.dscale = dirichlet_energy(seed)

    def loop(self, x) -> SymmetricLoop:
        return self.template.with_interior(x)

    def min_radius(self, x) -> float:
        return float(np.min(np.linalg.norm(x.reshape(-1, self.N), axis=1)))

    def feasible(self, x) -> bool:
        return self.min_radius(x) >= self.floor

    def d(self, x):
        lp = self.loop(x)
        return dirichlet_energy(lp) / self.dscale, grad_dirichlet(lp) / self.dscale

    def c(self, x):
        lp = self.loop(x)
        return (eval_g(lp, self.spec) - self.H) / self.H, grad_g(lp, self.spec) / self.H

    def precondition(self, v):
        """Apply the inverse of the (scaled) Dirichlet Hessian."""
        m = self.template.n - 1
        ab = np.empty((3, m))
        ab[0], ab[1], ab[2] = -1.0, 2.0, -1.0
        k = 4.0 / self.template.dt / self.dscale
        return (sla.solve_banded((1, 1), ab, v.reshape(m, self.N)) / k).ravel()

    def hessians(self, x):
        lp = self.loop(x)
        m = lp.n - 1
        lap = sp.diags([-np.ones(m - 1), 2.0 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1])
        hd = sp.kron(lap, sp.identity(self.N)) * (4.0 / lp.dt / self.dscale)
        blocks = eval_hessian(self.spec, lp.interior)
        if not self.spec.profile.even:  # pragma: no cover - shipped profiles are even
            blocks = 0.5 * (blocks + eval_hessian(self.spec, -lp.interior))
        hc = sp.block_diag(list(blocks)) * ((1.0 - 0.5 * self.spec.alpha) * 2.0 * lp.dt / self.H)
        return hd.tocsr(), hc.tocsr()


def _lbfgs(fg, x0, feasible, tol, max_iter, memory, shrink, c1, precond=None):
    """Minimize fg (value, gradient) from x0; returns (x, f, g, iterations, floor_hits, status).

    ``precond`` applies a fixed SPD approximation of the inverse Hessian used as
    the initial matrix of the two-loop recursion.  Five accepted steps in a row
    that gain nothing above rounding end the run with status "stalled".
    """
    precond = precond or (lambda v: v)
    x = x0.copy()
    f, g = fg(x)
    S, Y = deque(maxlen=memory), deque(maxlen=memory)
    hits = 0
    status = "max_iter"
    it = 0
    flat = 0  # consecutive steps whose decrease is lost in rounding
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) <= tol:
            status = "converged"
            it -= 1
            break
        q = g.copy()
        alphas = []
        for s, y in reversed(list(zip(S, Y))):
            rho = 1.0 / np.dot(y, s)
            a = rho * np.dot(s, q)
            alphas.append((rho, a, s, y))
            q -= a * y
        q = precond(q)
        if S:
            q *= np.dot(S[-1], Y[-1]) / np.dot(Y[-1], precond(Y[-1]))
        for rho, a, s, y in reversed(alphas):
            b = rho * np.dot(y, q)
            q += (a - b) * s
        p = -q
        slope = float(np.dot(g, p))
        if slope >= 0:
            S.clear()
            Y.clear()
            p = -precond(g)
            slope = float(np.dot(g, p))
        step = 1.0
        accepted = False
        floor_blocked = False
        while step > 1e-20:
            xt = x + step * p
            if not feasible(xt):
                hits += 1
                floor_blocked = True
                step *= shrink
                continue
            ft, gt = fg(xt)
            if np.isfinite(ft) and ft <= f + c1 * step * slope:
                accepted = True
                break
            step *= shrink
        if not accepted:
            if S:
                S.clear()
                Y.clear()
                continue
            status = "floor_blocked" if floor_blocked else "line_search_failed"
            break
        s_vec, y_vec = xt - x, gt - g
        if np.dot(s_vec, y_vec) > 1e-12 * np.linalg.norm(s_vec) * np.linalg.norm(y_vec):
            S.append(s_vec)
            Y.append(y_vec)
        flat = flat + 1 if f - ft <= 1e-15 * abs(f) else 0
        x, f, g = xt, ft, gt
        if flat >= 5:
            status = "stalled"
            break
    return x, f, g, it, hits, status


def _newton_kkt(prob: _Problem, x, lam, cfg: SolverConfig, H: float, report: SolveReport):
    """Levenberg-damped Newton on the bordered KKT system; lam is the scaled multiplier.

    A step is taken only if it stays above the floor and shrinks the residual
    norm; otherwise the damping grows tenfold.  Damping keeps the iteration
    usable when the Lagrangian Hessian has a nearly flat direction, which
    happens when a node passes close to the origin.
    """

    def residual(xv, lv):
        _, gd = prob.d(xv)
        c, gc = prob.c(xv)
        return np.concatenate([gd + lv * gc, [c]])

    r = residual(x, lam)
    mu = 1e-8
    for _ in range(cfg.max_newton):
        lp = prob.loop(x)
        _, kkt = kkt_report(lp, prob.spec, H)
        cres = abs(eval_g(lp, prob.spec) - H) / H
        if kkt < 0.1 * cfg.tol_kkt and cres < 0.1 * cfg.tol_constraint:
            break
        hd, hc = prob.hessians(x)
        _, gc = prob.c(x)
        hl = hd + lam * hc
        eye = sp.identity(hl.shape[0], format="csr") * float(hl.diagonal().max())
        col = sp.csr_matrix(gc[:, None])
        r0 = np.linalg.norm(r)
        accepted = False
        while mu < 1.0:
            K = sp.bmat([[hl + mu * eye, col], [col.T, None]], format="csc")
            delta = spla.spsolve(K, -r)
            if np.all(np.isfinite(delta)):
                xt, lt = x + delta[:-1], lam + delta[-1]
                if prob.feasible(xt):
                    rt = residual(xt, lt)
                    if np.linalg.norm(rt) < r0:
                        accepted = True
                        break
                else:
                    report.floor_hits += 1
            mu *= 10.0
        if not accepted:
            break
        x, lam, r = xt, lt, rt
        mu = max(mu * 0.01, 1e-14)
        report.newton_iterations += 1
        report.min_radius_iterates = min(report.min_radius_iterates, prob.min_radius(x))
    return x, lam


def minimize_constrained(seed: SymmetricLoop, spec: PotentialSpec, H: float, config: SolverConfig | None = None):
    """Minimize the Dirichlet energy of ``seed``'s interior nodes subject to g = H.

    Returns ``(loop, report)``.  A run that exhausts its iteration budget comes
    back with ``converged=False`` and the best iterate; a run blocked by the
    collision floor raises :class:`CollisionAbort` carrying both.
    """
    cfg = config or SolverConfig()
    g0 = eval_g(seed, spec)
    if abs(g0 - H) >= 1e-6 * H:
        raise ValueError(f"seed is off the constraint: |g - H| / H = {abs(g0 - H) / H:.3e}")
    floor = cfg.floor_for(seed.endpoint_radius)
    prob = _Problem(seed, spec, H, floor)
    x = seed.interior.ravel().copy()
    if not prob.feasible(x):
        raise ValueError("seed violates the collision floor")

    report = SolveReport(
        converged=False,
        status="running",
        message="",
        outer_iterations=0,
        inner_iterations=0,
        newton_iterations=0,
        collision_floor=floor,
        min_radius_iterates=prob.min_radius(x),
    )
    report.F_trajectory.append(eval_F(seed, spec, H))

    lam, rho = 0.0, cfg.penalty_init
    inner_tol = 1e-3
    c_prev = abs(prob.c(x)[0])

    def merit(xv):
        d, gd = prob.d(xv)
        c, gc = prob.c(xv)
        return d + lam * c + 0.5 * rho * c * c, gd + (lam + rho * c) * gc

    for outer in range(1, cfg.max_outer + 1):
        before = merit(x)[0]
        x_new, after, _, its, hits, status = _lbfgs(
            merit, x, prob.feasible, inner_tol, cfg.max_inner, cfg.lbfgs_memory,
            cfg.ls_shrink, cfg.ls_sufficient_decrease, prob.precondition,
        )
        report.inner_iterations += its
        report.floor_hits += hits
        report.outer_iterations = outer
        pinned = status not in ("converged", "stalled") and prob.min_radius(x_new) < 2.0 * floor
        if status == "floor_blocked" or pinned:
            x = x_new
            report.status = "collision_abort"
            report.message = "line search blocked by the collision floor"
            _finish(report, prob, x, spec, H)
            raise CollisionAbort(report.message, prob.loop(x), report)
        x = x_new
        report.merit_trajectory.append((before, after))
        report.min_radius_iterates = min(report.min_radius_iterates, prob.min_radius(x))
        report.F_trajectory.append(eval_F(prob.loop(x), spec, H))
        c = prob.c(x)[0]
        lam += rho * c
        if abs(c) > 0.25 * c_prev:
            rho *= cfg.penalty_growth
        c_prev = abs(c)
        inner_tol = max(0.1 * inner_tol, 1e-9)
        lp = prob.loop(x)
        _, kkt = kkt_report(lp, spec, H)
        log.debug("outer %d: c=%.3e kkt=%.3e rho=%.1e inner=%d (%s)", outer, c, kkt, rho, its, status)
        if abs(c) < cfg.tol_constraint and kkt < cfg.tol_kkt:
            break
        if cfg.polish and abs(c) < 1e-6 and inner_tol <= 1e-7:
            break

    if cfg.polish:
        x, lam = _newton_kkt(prob, x, lam, cfg, H, report)
        report.F_trajectory.append(eval_F(prob.loop(x), spec, H))

    _finish(report, prob, x, spec, H)
    ok = report.constraint_residual < cfg.tol_constraint and report.kkt_residual < cfg.tol_kkt
    report.converged = bool(ok)
    report.status = "converged" if ok else "max_iterations"
    report.message = "" if ok else "tolerances not reached within the iteration budget"
    return prob.loop(x), report


def _finish(report: SolveReport, prob: _Problem, x, spec: PotentialSpec, H: float) -> None:
    lp = prob.loop(x)
    lam, kkt = kkt_report(lp, spec, H)
    report.F_value = eval_F(lp, spec, H)
    report.dirichlet = dirichlet_energy(lp)
    report.g_value = eval_g(lp, spec)
    report.constraint_residual = abs(report.g_value - H) / H
    report.kkt_residual = kkt
    report.multiplier = lam
    report.min_radius = lp.min_radius()
    report.min_radius_iterates = min(report.min_radius_iterates, report.min_radius)
    report.floor_active = bool(report.min_radius < 2.0 * prob.floor)
