"""Independent checks on trajectories: Stormer-Verlet integration, ODE and
energy residuals, and two closed-form orbits (repulsive Kepler hyperbola and
the strong-force circle) used as oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .potential import PotentialSpec, eval_gradient, eval_potential, power_profile

__all__ = [
    "DivergenceError",
    "NearCollisionError",
    "KeplerHyperbola",
    "kepler_radius",
    "kepler_spec",
    "circular_oracle",
    "circle_orbit",
    "Trajectory",
    "verlet_integrate",
    "ode_residual",
    "energy_residual",
]


class DivergenceError(ValueError):
    pass


class NearCollisionError(RuntimeError):
    pass


@dataclass(frozen=True)
class KeplerHyperbola:
    """Repulsive Kepler orbit with potential energy delta/r for a particle of mass m."""

    mass: float
    delta: float
    angular_momentum: float
    energy: float

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative (repulsive)")
        if not self.angular_momentum > 0:
            raise ValueError("angular momentum must be positive")
        if not self.energy > 0:
            raise ValueError("energy must be positive for a scattering orbit")

    @property
    def lenz_magnitude(self) -> float:
        m, L = self.mass, self.angular_momentum
        return math.sqrt(2.0 * m * L * L * self.energy + (m * self.delta) ** 2)

    @property
    def zeta_inf(self) -> float:
        return math.acos(self.mass * self.delta / self.lenz_magnitude)

    @property
    def periapsis(self) -> float:
        return self.angular_momentum**2 / (self.lenz_magnitude - self.mass * self.delta)

    def periapsis_state(self):
        """Position and velocity at closest approach, periapsis on the +x axis."""
        rp = self.periapsis
        return np.array([rp, 0.0]), np.array([0.0, self.angular_momentum / (self.mass * rp)])


def kepler_radius(h: KeplerHyperbola, zeta: float) -> float:
    den = h.lenz_magnitude * math.cos(zeta) - h.mass * h.delta
    if not abs(zeta) < h.zeta_inf or den <= 0:
        raise DivergenceError(f"angle {zeta} is at or beyond the asymptote {h.zeta_inf}")
    return h.angular_momentum**2 / den


def kepler_spec(h: KeplerHyperbola) -> PotentialSpec:
    """Potential per unit mass, delta / (m |x|), in the plane."""
    return PotentialSpec(alpha=1.0, dimension=2, profile=power_profile(1.0), coupling=h.delta / h.mass)


def circular_oracle(alpha: float, H: float) -> tuple[float, float]:
    """Radius and angular frequency of the circle solving x'' = grad(|x|^-alpha) at energy H."""
    if not alpha > 2:
        raise ValueError(f"circular oracle requires alpha>2 (got alpha={alpha})")
    if not H > 0:
        raise ValueError("circular oracle requires H > 0")
    r = ((alpha - 2.0) / (2.0 * H)) ** (1.0 / alpha)
    return r, math.sqrt(alpha * r ** (-(alpha + 2.0)))


def circle_orbit(alpha: float, H: float, times, dimension: int = 2):
    """Positions, velocities, accelerations of the oracle circle at ``times``."""
    r, w = circular_oracle(alpha, H)
    t = np.asarray(times, dtype=float)
    c, s = np.cos(w * t), np.sin(w * t)
    pos = np.zeros((t.size, dimension))
    vel = np.zeros_like(pos)
    pos[:, 0], pos[:, 1] = r * c, r * s
    vel[:, 0], vel[:, 1] = -r * w * s, r * w * c
    return pos, vel, -(w * w) * pos


@dataclass
class Trajectory:
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    energies: Optional[np.ndarray]
    status: str
    steps: int
    min_step: float

    @property
    def energy_drift(self) -> float:
        if self.energies is None:
            return float("nan")
        return float(np.max(np.abs(self.energies - self.energies[0])))


Accel = Callable[[np.ndarray], np.ndarray]


def _acceleration(potential) -> tuple[Accel, Optional[Callable[[np.ndarray], float]]]:
    if potential is None:
        return (lambda x: np.zeros_like(x)), (lambda x: 0.0)
    if isinstance(potential, PotentialSpec):
        spec = potential
        if spec.profile.isotropic:
            k = spec.coupling * spec.profile.coefficient * spec.alpha
            p = -spec.alpha - 2.0

            def acc(x):
                return (k * math.sqrt(float(np.dot(x, x))) ** p) * x
        else:
            def acc(x):
                return -eval_gradient(spec, x)

        return acc, (lambda x: eval_potential(spec, x))
    if callable(potential):
        return potential, None
    raise TypeError("potential must be a PotentialSpec, a callable acceleration, or None")


def verlet_integrate(
    potential: Union[PotentialSpec, Accel, None],
    x0,
    v0,
    t_span,
    dt: float,
    dt_min: Optional[float] = None,
    max_steps: int = 10_000_000,
    stop_radius: Optional[float] = None,
    record_every: int = 1,
) -> Trajectory:
    """Kick-drift-kick Stormer-Verlet for x'' = -grad V(x).

    Within ten steps' travel of the origin the step is halved until the
    proximity test passes; below ``dt_min`` the run aborts.  ``potential`` is a
    spec (either sign of coupling), an acceleration callable, or None for a
    free particle.
    """
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    t0, t1 = map(float, t_span)
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    if potential is not None and not np.linalg.norm(x) > 0:
        raise ValueError("initial position must be away from the origin")
    dt_min = dt * 2.0**-20 if dt_min is None else dt_min
    acc, pot = _acceleration(potential)
    a = acc(x)
    t = t0
    ts, xs, vs = [t], [x.copy()], [v.copy()]
    steps, min_step = 0, dt
    status = "t_end"
    singular = potential is not None
    while t < t1:
        if steps >= max_steps:
            status = "budget"
            break
        h = min(dt, t1 - t)
        if singular:
            r, sp = math.sqrt(float(np.dot(x, x))), math.sqrt(float(np.dot(v, v)))
            while r < 10.0 * h * sp:
                h *= 0.5
                if h < dt_min:
                    raise NearCollisionError(f"near-collision at t={t:.6g}, |x|={r:.3e}")
        v_half = v + 0.5 * h * a
        x = x + h * v_half
        a = acc(x)
        v = v_half + 0.5 * h * a
        t += h
        steps += 1
        min_step = min(min_step, h)
        done = stop_radius is not None and np.dot(x, x) >= stop_radius * stop_radius
        if steps % record_every == 0 or done or t >= t1:
            ts.append(t)
            xs.append(x.copy())
            vs.append(v.copy())
        if done:
            status = "stop_radius"
            break
    pos, vel = np.array(xs), np.array(vs)
    energies = None
    if pot is not None:
        energies = 0.5 * np.sum(vel * vel, axis=1) + np.array([pot(p) for p in pos])
    return Trajectory(np.array(ts), pos, vel, energies, status, steps, min_step)


def ode_residual(segment, spec: PotentialSpec) -> float:
    """max_j |second difference / dt^2 + grad V(u_j)| / max_j |grad V(u_j)| over interior nodes.

    ``segment`` needs uniformly spaced ``times`` and ``positions``.
    """
    u = np.asarray(segment.positions)
    if u.shape[0] < 3:
        raise ValueError("need at least 3 nodes")
    dt = float(segment.times[1] - segment.times[0])
    acc = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (dt * dt)
    grad = eval_gradient(spec, u[1:-1])
    scale = float(np.max(np.linalg.norm(grad, axis=1)))
    return float(np.max(np.linalg.norm(acc + grad, axis=1)) / scale)


def energy_residual(segment, spec: PotentialSpec, H: float) -> float:
    u, v = np.asarray(segment.positions), np.asarray(segment.velocities)
    e = 0.5 * np.sum(v * v, axis=1) + eval_potential(spec, u) - H
    return float(np.max(np.abs(e)))
