"""Feasible starting loops: the q_a family landed on g = H by bisection in a."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .functional import eval_g
from .loop import SymmetricLoop, make_loop, trapezoid_weights
from .potential import PotentialSpec, two_sided_bounds

__all__ = [
    "SeedError",
    "SeedSolution",
    "qa_exponent",
    "default_eta",
    "build_qa",
    "find_seed_amplitude",
    "solve_seed",
    "seed_bound_check",
]

MAX_DOUBLINGS = 60
MAX_BISECTIONS = 200
SEED_RTOL = 1e-10


class SeedError(ValueError):
    pass


def qa_exponent(alpha: float) -> int:
    """Odd exponent 2*floor(2/alpha) + 1."""
    if not 0.0 < alpha < 2.0:
        raise SeedError(f"alpha must lie in (0, 2), got {alpha}")
    return 2 * math.floor(2.0 / alpha) + 1


def default_eta(e) -> np.ndarray:
    """First standard basis vector made orthogonal to e (Gram-Schmidt)."""
    e = np.asarray(e, dtype=float)
    for i in range(e.size):
        b = np.zeros_like(e)
        b[i] = 1.0
        v = b - np.dot(b, e) * e
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            return v / nv
    raise SeedError("could not build a direction orthogonal to e")


def build_qa(R: float, e, eta, a: float, alpha: float, n: int) -> SymmetricLoop:
    """Sample ``R e cos^p(2 pi t) + a eta sin^p(2 pi t)`` on [0, 1/2]."""
    e = np.asarray(e, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if not a > 0:
        raise SeedError("amplitude a must be positive")
    if abs(np.linalg.norm(eta) - 1.0) > 1e-12:
        raise SeedError("eta must be a unit vector")
    if abs(np.dot(e, eta)) > 1e-12:
        raise SeedError("e and eta must be orthogonal")
    p = qa_exponent(alpha)
    s = np.arange(n + 1) / (2 * n)
    c = np.cos(2 * np.pi * s) ** p
    sn = np.sin(2 * np.pi * s) ** p
    nodes = R * c[:, None] * e[None, :] + a * sn[:, None] * eta[None, :]
    return make_loop(e.size, n, R, e, nodes[1:-1])


@dataclass
class SeedSolution:
    amplitude: float
    g_value: float
    bracket: tuple[float, float]
    iterations: int
    trace: list[tuple[float, float]] = field(default_factory=list)
    loop: SymmetricLoop | None = None


def find_seed_amplitude(R, e, H, spec: PotentialSpec, n, bracket=(1e-3, 1e3), eta=None) -> SeedSolution:
    """Bisection for g(q_a) = H after geometric bracket expansion.

    ``trace`` records every (a, g) evaluated while expanding the bracket; the
    expansion itself relies on g -> +inf as a -> 0 and g -> 0 as a -> inf.
    """
    if not H > 0:
        raise SeedError("energy H must be positive")
    eta = default_eta(e) if eta is None else np.asarray(eta, dtype=float)

    def g_of(a):
        return eval_g(build_qa(R, e, eta, a, spec.alpha, n), spec)

    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise SeedError("bracket must satisfy 0 < a_lo < a_hi")
    trace = []
    g_lo, g_hi = g_of(lo), g_of(hi)
    trace += [(lo, g_lo), (hi, g_hi)]
    k = 0
    while g_lo <= H:
        k += 1
        if k > MAX_DOUBLINGS:
            raise SeedError("no bracket: g(q_a) never exceeds H as a shrinks")
        lo /= 2.0
        g_lo = g_of(lo)
        trace.append((lo, g_lo))
    k = 0
    while g_hi >= H:
        k += 1
        if k > MAX_DOUBLINGS:
            raise SeedError("no bracket: g(q_a) never drops below H as a grows")
        hi *= 2.0
        g_hi = g_of(hi)
        trace.append((hi, g_hi))

    a_lo, a_hi = lo, hi
    a, g = lo, g_lo
    for it in range(1, MAX_BISECTIONS + 1):
        a = 0.5 * (a_lo + a_hi)
        g = g_of(a)
        if abs(g - H) < SEED_RTOL * H:
            break
        if g > H:
            a_lo = a
        else:
            a_hi = a
        if a_hi - a_lo <= 4 * np.finfo(float).eps * a_hi:
            break
    else:
        it = MAX_BISECTIONS
    if abs(g - H) >= SEED_RTOL * H:
        raise SeedError(f"bisection stalled with |g - H| = {abs(g - H):.3e}")
    return SeedSolution(a, g, (lo, hi), it, trace, build_qa(R, e, eta, a, spec.alpha, n))


def solve_seed(R, e, H, spec: PotentialSpec, n, bracket=(1e-3, 1e3), eta=None) -> SymmetricLoop:
    return find_seed_amplitude(R, e, H, spec, n, bracket, eta).loop


def seed_bound_check(loop: SymmetricLoop, spec: PotentialSpec, sphere_samples: int = 360):
    """(lower, g, upper) of the C1/C2 sandwich on g(q_a)."""
    C1, C2 = two_sided_bounds(spec, sphere_samples)
    w = trapezoid_weights(loop.n)
    r = np.linalg.norm(loop.half_nodes, axis=1)
    inv = 2.0 * loop.dt * float(np.dot(w, r ** (-spec.alpha)))
    k = (2.0 - spec.alpha) / 2.0
    return C1 * k * inv, eval_g(loop, spec), C2 * k * inv

