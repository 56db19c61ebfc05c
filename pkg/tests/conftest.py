import numpy as np
import pytest

from hyperorbit.diagnostics import SweepConfig, continuation_sweep
from hyperorbit.minimize import minimize_constrained
from hyperorbit.potential import PotentialSpec, anisotropic_profile, power_profile
from hyperorbit.seed import solve_seed

E2 = np.array([1.0, 0.0])
LADDER = [4.0, 8.0, 16.0, 32.0, 64.0]

# criterion number -> (verdict, detail); filled by test_acceptance
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        verdict, detail = ACCEPTANCE_LINES[k]
        terminalreporter.write_line(f"criterion {k:2d}: {verdict}  {detail}")


def power(alpha, N=2, **kw):
    return PotentialSpec(alpha=alpha, dimension=N, profile=power_profile(1.0), **kw)


@pytest.fixture(scope="session")
def spec1():
    return power(1.0)


@pytest.fixture(scope="session")
def aniso():
    return PotentialSpec(alpha=1.0, dimension=2, profile=anisotropic_profile(1.0, 0.1, 0))


@pytest.fixture(scope="session")
def solved16(spec1):
    """Seed and minimizer for alpha=1, H=1, R=16, n=512."""
    seed = solve_seed(16.0, E2, 1.0, spec1, 512)
    loop, report = minimize_constrained(seed, spec1, 1.0)
    return seed, loop, report


@pytest.fixture(scope="session")
def solved4(spec1):
    seed = solve_seed(4.0, E2, 1.0, spec1, 256)
    loop, report = minimize_constrained(seed, spec1, 1.0)
    return seed, loop, report


@pytest.fixture(scope="session")
def sweep_alpha1(spec1):
    return continuation_sweep(spec1, 1.0, E2, LADDER, SweepConfig())


@pytest.fixture(scope="session")
def spec15():
    # |x|^(beta+1) |grad V| = 1.5 for V = |x|^-1.5, so M0 = 1.5 is tight
    return power(1.5, beta=1.5, m0=1.5, r0=1.0)


@pytest.fixture(scope="session")
def sweep_alpha15(spec15):
    return continuation_sweep(spec15, 1.0, E2, LADDER, SweepConfig())
