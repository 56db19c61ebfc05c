"""Antisymmetric fixed-endpoint loops stored on the half interval.

Only q on [0, 1/2] is kept; the second half is ``q(t + 1/2) = -q(t)``, so the
symmetry cannot be broken by any operation.  Nodes are uniform with
``dt = 1 / (2 n)`` and the pinned values are ``q_0 = R e`` and ``q_n = -R e``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .potential import PotentialSpec, eval_potential

__all__ = [
    "LoopError",
    "SymmetricLoop",
    "make_loop",
    "full_trace",
    "dirichlet_energy",
    "integral_of_potential",
    "trapezoid_weights",
    "write_loop_csv",
    "read_loop_csv",
    "DEFAULT_NODES",
]

DEFAULT_NODES = 512
UNIT_TOL = 1e-12


class LoopError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SymmetricLoop:
    half_nodes: np.ndarray
    endpoint_radius: float
    direction: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.half_nodes, dtype=float)
        nodes.setflags(write=False)
        e = np.array(self.direction, dtype=float)
        e.setflags(write=False)
        object.__setattr__(self, "half_nodes", nodes)
        object.__setattr__(self, "direction", e)
        object.__setattr__(self, "endpoint_radius", float(self.endpoint_radius))

    @classmethod
    def unchecked(cls, half_nodes, endpoint_radius, direction) -> "SymmetricLoop":
        """Build without invariant checks (test fixtures such as constant loops)."""
        return cls(half_nodes, endpoint_radius, direction)

    @property
    def n(self) -> int:
        return self.half_nodes.shape[0] - 1

    @property
    def dimension(self) -> int:
        return self.half_nodes.shape[1]

    @property
    def dt(self) -> float:
        return 1.0 / (2 * self.n)

    @property
    def interior(self) -> np.ndarray:
        return self.half_nodes[1:-1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.dt

    def min_radius(self) -> float:
        return float(np.min(np.linalg.norm(self.half_nodes, axis=1)))

    def with_interior(self, interior) -> "SymmetricLoop":
        """Copy with new interior nodes; endpoints stay pinned."""
        interior = np.asarray(interior, dtype=float).reshape(self.n - 1, self.dimension)
        nodes = np.vstack([self.half_nodes[:1], interior, self.half_nodes[-1:]])
        return SymmetricLoop(nodes, self.endpoint_radius, self.direction)


def _check_direction(e: np.ndarray) -> None:
    if abs(np.linalg.norm(e) - 1.0) > UNIT_TOL:
        raise LoopError(f"direction not unit: |e| = {np.linalg.norm(e)}")


def make_loop(N: int, n: int, R: float, e, interior_points) -> SymmetricLoop:
    """Validated loop from its n-1 interior half-interval nodes."""
    if n < 8 or n % 2:
        raise LoopError(f"n must be even and >= 8, got {n}")
    if not R > 0:
        raise LoopError(f"endpoint radius must be positive, got {R}")
    e = np.asarray(e, dtype=float)
    if e.shape != (N,):
        raise LoopError(f"direction must have {N} components")
    _check_direction(e)
    interior = np.asarray(interior_points, dtype=float)
    if interior.shape != (n - 1, N):
        raise LoopError(f"expected interior of shape {(n - 1, N)}, got {interior.shape}")
    if np.any(np.linalg.norm(interior, axis=1) == 0.0):
        raise LoopError("collision node: an interior node sits at the origin")
    nodes = np.vstack([R * e, interior, -R * e])
    return SymmetricLoop(nodes, R, e)


def validate_loop(loop: SymmetricLoop) -> None:
    e, R = loop.direction, loop.endpoint_radius
    _check_direction(e)
    if not (np.array_equal(loop.half_nodes[0], R * e) and np.array_equal(loop.half_nodes[-1], -R * e)):
        raise LoopError("endpoint mismatch: q_0 must be R e and q_n must be -R e")
    if np.any(np.linalg.norm(loop.interior, axis=1) == 0.0):
        raise LoopError("collision node: an interior node sits at the origin")


def full_trace(loop: SymmetricLoop) -> np.ndarray:
    """The 2n+1 samples of the full loop on [0, 1]."""
    q = loop.half_nodes
    return np.vstack([q, -q[1:]])


def trapezoid_weights(n: int) -> np.ndarray:
    w = np.ones(n + 1)
    w[0] = w[-1] = 0.5
    return w


def dirichlet_energy(loop: SymmetricLoop) -> float:
    """Discrete ``int_0^1 |q'|^2``: forward differences, twice the half sum."""
    d = np.diff(loop.half_nodes, axis=0)
    return 2.0 * float(np.sum(d * d)) / loop.dt


def integral_of_potential(loop: SymmetricLoop, spec: PotentialSpec) -> float:
    """Trapezoid rule for ``int_0^1 V(q)`` over the full loop."""
    w = trapezoid_weights(loop.n)
    v = eval_potential(spec, loop.half_nodes)
    if spec.profile.even:
        return 2.0 * loop.dt * float(np.dot(w, v))
    return loop.dt * float(np.dot(w, v + eval_potential(spec, -loop.half_nodes)))


def write_loop_csv(loop: SymmetricLoop, path) -> None:
    e = " ".join(repr(float(c)) for c in loop.direction)
    header = f"R={loop.endpoint_radius!r}\ne={e}\nn={loop.n}\nN={loop.dimension}\n"
    header += ",".join(["t"] + [f"x{i + 1}" for i in range(loop.dimension)])
    data = np.column_stack([loop.times, loop.half_nodes])
    np.savetxt(path, data, delimiter=",", header=header, fmt="%.17g")


def read_loop_csv(path) -> SymmetricLoop:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if "=" in body:
                k, v = body.split("=", 1)
                meta[k.strip()] = v.strip()
    try:
        R = float(meta["R"])
        e = np.array([float(c) for c in meta["e"].split()])
        n, N = int(meta["n"]), int(meta["N"])
    except KeyError as exc:
        raise LoopError(f"loop CSV header lacks {exc}") from exc
    data = np.loadtxt(Path(path), delimiter=",", ndmin=2)
    if data.shape != (n + 1, N + 1):
        raise LoopError(f"loop CSV body has shape {data.shape}, expected {(n + 1, N + 1)}")
    loop = SymmetricLoop(data[:, 1:], R, e)
    validate_loop(loop)
    return loop
