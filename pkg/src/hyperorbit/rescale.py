"""From the unit-interval minimizer to a trajectory in physical time.

The period comes from the stationarity of f under reparametrization,

    T^2 = (1/2) int|q'|^2 / int (H - V(q)),

and the orbit is u(t) = q((t + T/2) / T) on [-T/2, T/2].  On the constraint
set the denominator equals -alpha H / (2 - alpha), which is negative for every
alpha in (0, 2).  The default policy takes its magnitude and raises the
``period_sign_anomaly`` flag; ``strict=True`` refuses instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .loop import SymmetricLoop, dirichlet_energy, full_trace, integral_of_potential
from .potential import PotentialSpec, eval_potential

__all__ = [
    "RescaleError",
    "OrbitSegment",
    "period_denominator",
    "compute_period",
    "reconstruct_orbit",
    "shift_by_tstar",
    "first_crossing",
    "kinetic_integral",
    "write_segment",
]


class RescaleError(ValueError):
    pass


@dataclass
class OrbitSegment:
    period: float
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    energy_H: float
    endpoint_radius: float
    tstar_shift: float = 0.0
    period_sign_anomaly: bool = False
    energy_residuals: np.ndarray = field(default=None, repr=False)

    @property
    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.positions, axis=1)

    @property
    def max_interior_energy_residual(self) -> float:
        return float(np.max(np.abs(self.energy_residuals[1:-1])))

    def metadata(self) -> dict:
        return {
            "T": float(self.period),
            "R": float(self.endpoint_radius),
            "H": float(self.energy_H),
            "tstar": float(self.tstar_shift),
            "nodes": int(self.times.size),
            "period_sign_anomaly": bool(self.period_sign_anomaly),
            "max_interior_energy_residual": self.max_interior_energy_residual,
        }


def period_denominator(loop: SymmetricLoop, spec: PotentialSpec, H: float) -> float:
    """int_0^1 (H - V(q))."""
    return H - integral_of_potential(loop, spec)


def compute_period(loop: SymmetricLoop, spec: PotentialSpec, H: float, strict: bool = False) -> float:
    den = period_denominator(loop, spec, H)
    if den == 0.0 or not np.isfinite(den):
        raise RescaleError(f"rescale impossible: int(H - V) = {den}")
    if den < 0 and strict:
        raise RescaleError(f"rescale impossible: int(H - V) = {den:.6g} < 0")
    return float(np.sqrt(0.5 * dirichlet_energy(loop) / abs(den)))


def _energy(positions, velocities, spec, H):
    return 0.5 * np.sum(velocities * velocities, axis=1) + eval_potential(spec, positions) - H


def reconstruct_orbit(loop: SymmetricLoop, spec: PotentialSpec, H: float, strict: bool = False) -> OrbitSegment:
    """Sample u on the 2n + 1 nodes of [-T/2, T/2].

    Node velocities are central differences of the periodic trace divided by T.
    """
    T = compute_period(loop, spec, H, strict=strict)
    anomaly = period_denominator(loop, spec, H) < 0
    pos = full_trace(loop)
    m = pos.shape[0] - 1  # 2n intervals
    ds = 1.0 / m
    periodic = pos[:-1]
    vel = (np.roll(periodic, -1, axis=0) - np.roll(periodic, 1, axis=0)) / (2.0 * ds * T)
    vel = np.vstack([vel, vel[:1]])
    times = -0.5 * T + np.arange(m + 1) * (T / m)
    return OrbitSegment(
        period=T,
        times=times,
        positions=pos,
        velocities=vel,
        energy_H=H,
        endpoint_radius=loop.endpoint_radius,
        period_sign_anomaly=bool(anomaly),
        energy_residuals=_energy(pos, vel, spec, H),
    )


def kinetic_integral(segment: OrbitSegment) -> float:
    """int |u'|^2 dt with the per-interval (forward difference) velocities."""
    d = np.diff(segment.positions, axis=0)
    dt = np.diff(segment.times)
    return float(np.sum(np.sum(d * d, axis=1) / dt))


def first_crossing(times, radii, level: float) -> float:
    """Earliest t with |u(t)| = level, linear in between nodes; ``level`` is inclusive."""
    idx = np.flatnonzero(radii <= level)
    if idx.size == 0:
        raise RescaleError(f"threshold {level} never attained (min radius {radii.min():.6g})")
    j = int(idx[0])
    if j == 0 or radii[j] == level:
        return float(times[j])
    r0, r1 = radii[j - 1], radii[j]
    w = (r0 - level) / (r0 - r1)
    return float(times[j - 1] + w * (times[j] - times[j - 1]))


def shift_by_tstar(segment: OrbitSegment, M_threshold: float) -> OrbitSegment:
    """Translate time so the first crossing of |u| = M_threshold sits at t = 0."""
    r = segment.radii
    if not r.min() <= M_threshold <= segment.endpoint_radius * (1 + 1e-12):
        raise RescaleError(
            f"threshold never attained: need min|u| = {r.min():.6g} <= M <= R = {segment.endpoint_radius}"
        )
    # times are already shifted by any earlier tstar; undo that first
    base = segment.times + segment.tstar_shift
    tstar = first_crossing(base, r, M_threshold)
    return replace(segment, times=base - tstar, tstar_shift=tstar)


def write_segment(segment: OrbitSegment, csv_path, json_path=None) -> None:
    """CSV rows (t, x_1..x_N, v_1..v_N, energy_residual) plus a JSON sidecar."""
    N = segment.positions.shape[1]
    cols = ["t"] + [f"x{i + 1}" for i in range(N)] + [f"v{i + 1}" for i in range(N)] + ["energy_residual"]
    data = np.column_stack([segment.times, segment.positions, segment.velocities, segment.energy_residuals])
    np.savetxt(csv_path, data, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump(segment.metadata(), fh, indent=2, sort_keys=True)
            fh.write("\n")
