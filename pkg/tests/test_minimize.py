import json

import numpy as np
import pytest

from hyperorbit.functional import eval_F, eval_g
from hyperorbit.minimize import (
    CollisionAbort,
    SolverConfig,
    full_space_residual,
    kkt_report,
    minimize_constrained,
)
from hyperorbit.seed import solve_seed

from .conftest import E2, power

TOL = SolverConfig().tol_kkt


def test_converged_minimizer_example(solved4, spec1):
    seed, loop, rep = solved4
    assert rep.converged and rep.status == "converged"
    assert 0 < loop.min_radius() < 4.0
    assert eval_F(loop, spec1, 1.0) <= eval_F(seed, spec1, 1.0)
    assert kkt_report(loop, spec1, 1.0)[1] < TOL
    assert abs(eval_g(loop, spec1) - 1.0) < 1e-9
    assert rep.F_value > 0 and rep.dirichlet > 0


def test_kkt_residual_of_seed_is_large(solved4, spec1):
    seed = solved4[0]
    assert kkt_report(seed, spec1, 1.0)[1] > 10 * TOL


def test_refinement_consistency(spec1):
    F = []
    for n in (256, 512):
        loop, rep = minimize_constrained(solve_seed(4.0, E2, 1.0, spec1, n), spec1, 1.0)
        assert rep.converged
        F.append(rep.F_value)
    assert abs(F[0] - F[1]) / F[1] < 0.01


def test_reflection_symmetry(solved4, spec1):
    loop = solved4[1]
    mirrored = loop.with_interior(loop.interior * np.array([1.0, -1.0]))
    assert eval_F(mirrored, spec1, 1.0) == pytest.approx(eval_F(loop, spec1, 1.0), abs=1e-10)


def test_merit_decreases_within_each_outer_iteration(solved16):
    rep = solved16[2]
    assert rep.merit_trajectory
    for before, after in rep.merit_trajectory:
        assert after <= before


def test_no_collision_certificate(solved16):
    rep = solved16[2]
    assert rep.min_radius_iterates >= rep.collision_floor
    assert not rep.floor_active


def test_multiplier_sign_regression(solved16):
    # empirical: the multiplier of grad D + lam grad g = 0 comes out positive
    assert solved16[2].multiplier > 0


def test_symmetric_criticality(solved16, spec1):
    loop, rep = solved16[1], solved16[2]
    assert full_space_residual(loop, spec1, 1.0, rep.multiplier) < 10 * TOL


def test_report_json(solved4):
    data = json.loads(solved4[2].to_json())
    for key in ("F_trajectory", "kkt_residual", "multiplier", "min_radius", "outer_iterations"):
        assert key in data


def test_iteration_budget_returns_best_so_far(spec1):
    seed = solve_seed(8.0, E2, 1.0, spec1, 128)
    loop, rep = minimize_constrained(seed, spec1, 1.0, SolverConfig(max_outer=1, max_inner=3, polish=False))
    assert not rep.converged and rep.status == "max_iterations"
    assert rep.F_value <= eval_F(seed, spec1, 1.0) * (1 + 1e-6)


def test_collision_abort(spec1):
    seed = solve_seed(16.0, E2, 1.0, spec1, 256)
    with pytest.raises(CollisionAbort) as info:
        minimize_constrained(seed, spec1, 1.0, SolverConfig(collision_floor=0.01))
    rep = info.value.report
    assert rep.status == "collision_abort"
    assert info.value.loop.min_radius() >= 0.01


def test_seed_must_be_on_constraint(spec1):
    seed = solve_seed(4.0, E2, 1.0, spec1, 64)
    with pytest.raises(ValueError, match="off the constraint"):
        minimize_constrained(seed, spec1, 2.0)


@pytest.mark.parametrize("kw", [{"tol_kkt": 0.0}, {"penalty_growth": 1.0}, {"ls_shrink": 1.5}, {"collision_floor": -1.0}])
def test_config_invariants(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_anisotropic_profile_converges(aniso):
    seed = solve_seed(4.0, E2, 1.0, aniso, 128)
    loop, rep = minimize_constrained(seed, aniso, 1.0)
    assert rep.converged
    assert rep.F_value <= eval_F(seed, aniso, 1.0)


def test_three_dimensions():
    spec = power(1.2, N=3)
    e = np.array([0.0, 0.0, 1.0])
    seed = solve_seed(4.0, e, 0.5, spec, 128)
    loop, rep = minimize_constrained(seed, spec, 0.5)
    assert rep.converged
    np.testing.assert_array_equal(loop.half_nodes[0], 4.0 * e)
