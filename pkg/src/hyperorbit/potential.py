"""Repulsive (-alpha)-homogeneous potentials and hypothesis checks.

A potential is ``V(x) = coupling * P(x/|x|) * |x|**(-alpha)`` where ``P`` is a
positive profile on the unit sphere.  ``coupling`` is +1 for every solve target;
negative couplings exist only so the attractive closed-form oracles in
:mod:`hyperorbit.dynamics` can reuse the same evaluators.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "SingularityError",
    "ConfigError",
    "Profile",
    "power_profile",
    "anisotropic_profile",
    "PotentialSpec",
    "HypothesisResult",
    "HypothesisReport",
    "eval_potential",
    "eval_gradient",
    "eval_hessian",
    "check_hypotheses",
    "two_sided_bounds",
    "manifold_condition",
    "derived_limit_values",
    "sphere_points",
    "load_potential_config",
    "potential_from_mapping",
]

H_GRAD = 1e-6
H_HESS = 1e-4


class SingularityError(ValueError):
    """Raised when a potential is evaluated at the origin."""


class ConfigError(ValueError):
    """Raised for unreadable or incomplete potential configuration."""


@dataclass(frozen=True)
class Profile:
    """Angular factor of a homogeneous potential.

    ``value`` maps unit vectors of shape (k, N) to (k,).  ``gradient`` (optional)
    returns the ambient gradient of ``value`` at those unit vectors; only its
    tangential part is used.  ``isotropic`` marks constant profiles, whose
    potential Hessian is taken in closed form.
    """

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    even: bool = True
    coefficient: float = 1.0
    params: dict = field(default_factory=dict)
    isotropic: bool = False


def power_profile(coefficient: float = 1.0) -> Profile:
    c = float(coefficient)
    return Profile(
        name="power",
        value=lambda th: np.full(th.shape[0], c),
        gradient=lambda th: np.zeros_like(th),
        even=True,
        coefficient=c,
        isotropic=True,
    )


def anisotropic_profile(coefficient: float = 1.0, strength: float = 0.1, axis: int = 0) -> Profile:
    """``c * (1 + strength * theta[axis]**2)``: even, positive, C1 != C2."""
    c, k = float(coefficient), float(strength)
    if k <= -1.0:
        raise ConfigError("anisotropy strength must exceed -1 to keep the profile positive")

    def value(th):
        return c * (1.0 + k * th[:, axis] ** 2)

    def gradient(th):
        g = np.zeros_like(th)
        g[:, axis] = 2.0 * c * k * th[:, axis]
        return g

    return Profile(
        name="anisotropic",
        value=value,
        gradient=gradient,
        even=True,
        coefficient=c,
        params={"strength": k, "axis": axis},
    )


@dataclass(frozen=True)
class PotentialSpec:
    alpha: float
    dimension: int
    profile: Profile = field(default_factory=power_profile)
    coupling: float = 1.0
    beta: Optional[float] = None
    m0: Optional[float] = None
    r0: Optional[float] = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.dimension}")
        if self.coupling == 0:
            raise ValueError("coupling must be nonzero")

    @property
    def repulsive(self) -> bool:
        return self.coupling > 0

    @property
    def has_decay(self) -> bool:
        return None not in (self.beta, self.m0, self.r0)

    def signed(self, coupling: float) -> "PotentialSpec":
        return PotentialSpec(self.alpha, self.dimension, self.profile, coupling, self.beta, self.m0, self.r0)

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "dimension": self.dimension,
            "profile": self.profile.name,
            "coefficient": self.profile.coefficient,
            "coupling": self.coupling,
            **{k: v for k, v in self.profile.params.items()},
            "beta": self.beta,
            "m0": self.m0,
            "r0": self.r0,
        }


def _as_points(spec: PotentialSpec, x) -> tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != spec.dimension:
        raise ValueError(f"points must have {spec.dimension} components, got shape {pts.shape}")
    return pts, single


def _radii(pts: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(pts, axis=-1)
    if np.any(r == 0.0):
        raise SingularityError("potential is singular at the origin")
    return r


def eval_potential(spec: PotentialSpec, x):
    """V at a point (N,) or a batch (k, N)."""
    pts, single = _as_points(spec, x)
    r = _radii(pts)
    v = spec.coupling * spec.profile.value(pts / r[:, None]) * r ** (-spec.alpha)
    return float(v[0]) if single else v


def _fd_gradient(spec: PotentialSpec, pts: np.ndarray, rel_step: float) -> np.ndarray:
    r = _radii(pts)
    grad = np.empty_like(pts)
    for i in range(spec.dimension):
        h = rel_step * r
        step = np.zeros_like(pts)
        step[:, i] = h
        grad[:, i] = (eval_potential(spec, pts + step) - eval_potential(spec, pts - step)) / (2.0 * h)
    return grad


def eval_gradient(spec: PotentialSpec, x):
    """Gradient of V; analytic when the profile supplies one, else central differences."""
    pts, single = _as_points(spec, x)
    r = _radii(pts)
    if spec.profile.gradient is None:
        grad = _fd_gradient(spec, pts, H_GRAD)
    else:
        th = pts / r[:, None]
        p = spec.profile.value(th)
        dp = spec.profile.gradient(th)
        tangential = dp - np.sum(dp * th, axis=1)[:, None] * th
        scale = spec.coupling * r ** (-spec.alpha - 1.0)
        grad = scale[:, None] * (tangential - spec.alpha * p[:, None] * th)
    return grad[0] if single else grad


def eval_hessian(spec: PotentialSpec, x):
    """Hessian of V, shape (N, N) or (k, N, N).

    Exact for isotropic profiles; otherwise central differences of the gradient
    (step 1e-4 |x|) with one Richardson extrapolation.
    """
    pts, single = _as_points(spec, x)
    r = _radii(pts)
    n = spec.dimension
    if spec.profile.isotropic:
        a = spec.alpha
        th = pts / r[:, None]
        c = spec.coupling * spec.profile.coefficient * a * r ** (-a - 2.0)
        hess = c[:, None, None] * ((a + 2.0) * th[:, :, None] * th[:, None, :] - np.eye(n)[None])
    else:
        def central(h):
            out = np.empty((pts.shape[0], n, n))
            for i in range(n):
                step = np.zeros_like(pts)
                step[:, i] = h
                out[:, :, i] = (eval_gradient(spec, pts + step) - eval_gradient(spec, pts - step)) / (2.0 * h[:, None])
            return out

        h = H_HESS * r
        hess = (4.0 * central(h / 2.0) - central(h)) / 3.0
        hess = 0.5 * (hess + np.swapaxes(hess, 1, 2))
    return hess[0] if single else hess


def manifold_condition(spec: PotentialSpec, x):
    """``3 (x, grad V) + (x, Hess V x)``; equals alpha (alpha - 2) V for homogeneous V."""
    pts, single = _as_points(spec, x)
    grad = eval_gradient(spec, pts)
    hess = eval_hessian(spec, pts)
    val = 3.0 * np.sum(pts * grad, axis=1) + np.einsum("ki,kij,kj->k", pts, hess, pts)
    return float(val[0]) if single else val


def sphere_points(dimension: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy points on S^{N-1}.

    In the plane these are equally spaced angles starting on the first axis; in
    higher dimension the signed coordinate axes come first, then scrambled
    Halton points pushed through the Gaussian quantile and normalised.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if dimension == 2:
        ang = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    axes = np.vstack([np.eye(dimension), -np.eye(dimension)])
    if count <= len(axes):
        return axes[:count]
    sampler = qmc.Halton(d=dimension, scramble=True, seed=seed)
    u = sampler.random(count - len(axes))
    u = np.clip(u, 1e-12, 1 - 1e-12)
    from scipy.special import ndtri

    g = ndtri(u)
    g /= np.linalg.norm(g, axis=1)[:, None]
    return np.vstack([axes, g])


def two_sided_bounds(spec: PotentialSpec, sphere_samples: int) -> tuple[float, float]:
    """(C1, C2): min and max of V on the sampled unit sphere."""
    if sphere_samples < spec.dimension:
        raise ValueError("sphere_samples must be at least the dimension")
    v = eval_potential(spec, sphere_points(spec.dimension, sphere_samples))
    return float(np.min(v)), float(np.max(v))


def derived_limit_values(spec: PotentialSpec, small: float = 1e-3, large: float = 1e3) -> tuple[float, float]:
    """``(x, grad V) + 2 V`` at |x| = small and |x| = large along the first axis."""
    out = []
    for rad in (small, large):
        x = np.zeros(spec.dimension)
        x[0] = rad
        out.append(float(np.dot(x, eval_gradient(spec, x)) + 2.0 * eval_potential(spec, x)))
    return out[0], out[1]


@dataclass
class HypothesisResult:
    name: str
    passed: bool
    worst_residual: float
    witness: Optional[list] = None
    message: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "worst_residual": self.worst_residual,
            "witness": self.witness,
            "message": self.message,
        }


@dataclass
class HypothesisReport:
    results: list[HypothesisResult]
    C1: float
    C2: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, name: str) -> HypothesisResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def names(self) -> list[str]:
        return [r.name for r in self.results]

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "C1": self.C1,
            "C2": self.C2,
            "hypotheses": [r.as_dict() for r in self.results],
        }


def _worst(residuals: np.ndarray, pts: np.ndarray) -> tuple[float, list]:
    i = int(np.argmax(residuals))
    return float(residuals[i]), pts[i].tolist()


def check_hypotheses(spec: PotentialSpec, sample_count: int = 64, tol: float = 1e-9) -> HypothesisReport:
    """Sample shells |x| in {0.1, 1, 10, r0} and report each hypothesis.

    Failures are data: every entry carries its worst residual and witness point.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    dirs = sphere_points(spec.dimension, max(sample_count, spec.dimension))
    shells = sorted({0.1, 1.0, 10.0} | ({float(spec.r0)} if spec.r0 else set()))
    pts = np.vstack([s * dirs for s in shells])
    v = eval_potential(spec, pts)
    grad = eval_gradient(spec, pts)
    r = np.linalg.norm(pts, axis=1)
    a = spec.alpha
    results = []

    in_range = 0.0 < a < 2.0
    euler = np.abs(np.sum(pts * grad, axis=1) + a * v) / np.abs(v)
    res, wit = _worst(euler, pts)
    sign_ok = bool(np.all(v > 0))
    msg = []
    if not in_range:
        msg.append(f"(V1) range violated: alpha={a} not in (0, 2)")
    if not sign_ok:
        msg.append("(V1) sign violated: V must be positive")
    if res >= tol:
        msg.append("(V1) Euler relation violated")
    results.append(HypothesisResult("V1", in_range and sign_ok and res < tol, res, wit, "; ".join(msg)))

    even = np.abs(eval_potential(spec, -pts) - v) / np.abs(v)
    res, wit = _worst(even, pts)
    results.append(HypothesisResult("B1", res < tol, res, wit, "" if res < tol else "(B1) evenness violated"))

    C1, C2 = two_sided_bounds(spec, max(sample_count, spec.dimension))
    lo = C1 * r ** (-a)
    hi = C2 * r ** (-a)
    viol = np.maximum(lo - v, v - hi) / np.abs(v)
    res, wit = _worst(viol, pts)
    ok = res < tol and C1 > 0
    results.append(HypothesisResult("bounds", ok, max(res, 0.0), wit, "" if ok else "two-sided bound violated"))

    cond = manifold_condition(spec, pts)
    expected = a * (a - 2.0) * v
    dev = np.abs(cond - expected) / np.abs(expected) if a != 2.0 else np.abs(cond)
    res, wit = _worst(dev, pts)
    nondeg = bool(np.all(cond != 0.0))
    ok = nondeg and res < 1e-8
    results.append(HypothesisResult("manifold", ok, res, wit, "" if ok else "manifold non-degeneracy failed"))

    if spec.has_decay:
        b, m0, r0 = float(spec.beta), float(spec.m0), float(spec.r0)
        far = np.vstack([s * dirs for s in (r0, 10.0 * r0, 100.0 * r0)])
        lhs = np.linalg.norm(far, axis=1) ** (b + 1.0) * np.linalg.norm(eval_gradient(spec, far), axis=1)
        excess = (lhs - m0) / m0
        res, wit = _worst(excess, far)
        params_ok = m0 > 0 and r0 >= 1.0
        ok = params_ok and res <= 1e-12
        msg = "" if ok else ("(V2) parameters need M0>0, r0>=1" if not params_ok else "(V2) decay bound violated")
        results.append(HypothesisResult("V2", ok, max(res, 0.0), wit, msg))
        # the direction estimate needs the open range beta > 1
        results.append(
            HypothesisResult("V2-range", b > 1.0, max(1.0 - b, 0.0), None, "" if b > 1.0 else "(V2) range violated: need beta>1")
        )

    return HypothesisReport(results, C1, C2)


def potential_from_mapping(cfg: dict) -> PotentialSpec:
    for key in ("alpha", "dimension", "profile"):
        if key not in cfg:
            raise ConfigError(f"missing required key '{key}'")
    coeff = float(cfg.get("coefficient", 1.0))
    kind = cfg["profile"]
    if kind == "power":
        prof = power_profile(coeff)
    elif kind == "anisotropic":
        prof = anisotropic_profile(coeff, float(cfg.get("strength", 0.1)), int(cfg.get("axis", 0)))
    else:
        raise ConfigError(f"unknown profile '{kind}' (expected 'power' or 'anisotropic')")
    try:
        return PotentialSpec(
            alpha=float(cfg["alpha"]),
            dimension=int(cfg["dimension"]),
            profile=prof,
            coupling=float(cfg.get("coupling", 1.0)),
            beta=None if cfg.get("beta") is None else float(cfg["beta"]),
            m0=None if cfg.get("m0") is None else float(cfg["m0"]),
            r0=None if cfg.get("r0") is None else float(cfg["r0"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config_mapping(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc


def load_potential_config(path) -> PotentialSpec:
    """Read a flat ``key = value`` file (TOML syntax) into a PotentialSpec."""
    return potential_from_mapping(load_config_mapping(path))

