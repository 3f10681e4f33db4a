import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensegrity_arm.equilibrium import (
    ManipulatorState,
    balance_weight_partials,
    balance_weights,
    chain_torques,
    energy_curve,
    external_torque_me,
    find_equilibria,
    force_deflection_sweep,
    manifold_energy,
    recover_wrench,
    solve_loaded_configuration,
    total_energy,
    wrench_closed_form,
    wrench_linear_solve,
)
from tensegrity_arm.errors import DomainError, InfeasibleError, SingularConfigurationError
from tensegrity_arm.kinematics import JointConfig, forward_kinematics, jacobian
from tensegrity_arm.numerics import finite_difference, local_extrema
from tensegrity_arm.segment import SegmentControls, SegmentGeometry
from tests.oracles import chain_corner_energy, rel_err

HOME = (5.5, 0.0)
small = st.floats(-1.2, 1.2)


def test_straight_energy_closed_form():
    for a, b, k, l0 in [(0.75, 1.0, 1.0, 1.0), (0.5, 2.0, 3.0, 1.7), (1.1, 1.0, 0.2, 0.3)]:
        g = SegmentGeometry.symmetric(a, b, k)
        e = total_energy(ManipulatorState(g, l0, JointConfig(0, 0, 0)))
        # at q = 0 each spring spans 2b
        assert e == pytest.approx(3 * k * (2 * b - l0) ** 2, rel=1e-14)


@given(small, small, small, st.floats(0.3, 1.6), st.floats(0.1, 5.0))
@settings(max_examples=100, deadline=None)
def test_energy_linear_in_k(q1, q2, q3, l0, k):
    g1 = SegmentGeometry.symmetric(0.75, 1.0, 1.0)
    gk = SegmentGeometry.symmetric(0.75, 1.0, k)
    e1 = total_energy(ManipulatorState(g1, l0, JointConfig(q1, q2, q3)))
    ek = total_energy(ManipulatorState(gk, l0, JointConfig(q1, q2, q3)))
    assert ek == pytest.approx(k * e1, rel=1e-12, abs=1e-15)


@given(small, small, small, st.lists(st.floats(0.3, 1.8), min_size=6, max_size=6))
@settings(max_examples=100, deadline=None)
def test_energy_matches_corner_oracle(q1, q2, q3, springs):
    g = SegmentGeometry.symmetric(0.75, 1.0, 1.3)
    ctl = [SegmentControls(springs[2 * i], springs[2 * i + 1]) for i in range(3)]
    e = total_energy(ManipulatorState(g, ctl, JointConfig(q1, q2, q3)))
    pairs = [(springs[2 * i], springs[2 * i + 1]) for i in range(3)]
    assert e == pytest.approx(chain_corner_energy(0.75, 1.0, 1.3, pairs, (q1, q2, q3)), rel=1e-12, abs=1e-14)


def test_state_rejects_bad_controls(geom):
    with pytest.raises(DomainError):
        ManipulatorState(geom, 3.0, JointConfig(0, 0, 0))
    with pytest.raises((ValueError, TypeError)):
        ManipulatorState(geom, [1.0, 1.0], JointConfig(0, 0, 0))


@given(small, small, small)
@settings(max_examples=100, deadline=None)
def test_balance_weight_partials_match_fd(q1, q2, q3):
    q = np.array([q1, q2, q3])
    fd = finite_difference(balance_weights, q)
    # row j of the partials is the derivative in q_j, so compare with the transpose
    assert rel_err(balance_weight_partials(q), fd.T) <= 1e-7


def test_energy_curve_mirror(geom, unit_controls):
    grid = np.linspace(-1.5, 1.5, 61)
    up = energy_curve(geom, unit_controls, (5.0, 0.4), 1, grid)
    down = energy_curve(geom, unit_controls, (5.0, -0.4), -1, -grid)
    for s, m in zip(up, down):
        assert s.feasible == m.feasible
        if s.feasible:
            assert m.energy == pytest.approx(s.energy, abs=1e-12)
            assert m.q2 == pytest.approx(-s.q2, abs=1e-12)
            assert m.q3 == pytest.approx(-s.q3, abs=1e-12)


def test_energy_curve_out_of_reach(geom, unit_controls):
    curve = energy_curve(geom, unit_controls, (7.0, 0.0), 1, np.linspace(-1, 1, 11))
    assert len(curve) == 11
    assert not any(s.feasible for s in curve)
    assert all(math.isnan(s.energy) for s in curve)


def test_energy_curve_home_has_feasible_window(geom, unit_controls):
    curve = energy_curve(geom, unit_controls, HOME, 1)
    flags = [s.feasible for s in curve]
    assert any(flags) and not all(flags)
    for s in curve:
        if s.feasible:
            p = forward_kinematics((s.q1, s.q2, s.q3), 1.0)
            assert math.hypot(p.x - 5.5, p.y) <= 1e-9


def test_equilibria_match_grid_minima(geom, unit_controls):
    grid = np.linspace(-geom.q_max, geom.q_max, 20001)
    for branch in (1, -1):
        eqs = find_equilibria(geom, unit_controls, HOME, branch)
        curve = energy_curve(geom, unit_controls, HOME, branch, grid)
        mins, maxs = local_extrema([s.energy for s in curve])
        stable = sorted(p.q.q1 for p in eqs if p.stable)
        unstable = sorted(p.q.q1 for p in eqs if not p.stable)
        assert len(stable) == len(mins) and len(unstable) == len(maxs)
        for q1, i in zip(stable, mins):
            assert abs(q1 - grid[i]) <= 2 * (grid[1] - grid[0])
        for q1, i in zip(unstable, maxs):
            assert abs(q1 - grid[i]) <= 2 * (grid[1] - grid[0])


def test_equilibria_home_stable_shape(geom, unit_controls):
    eqs = find_equilibria(geom, unit_controls, HOME, 1)
    stable = [p for p in eqs if p.stable]
    assert len(stable) == 1
    q = stable[0].q.as_array()
    np.testing.assert_allclose(q, [-0.4882, 0.6290, 0.5768], atol=5e-4)
    assert stable[0].energy == pytest.approx(3.0687, abs=5e-4)
    mirrored = [p for p in find_equilibria(geom, unit_controls, HOME, -1) if p.stable]
    np.testing.assert_allclose(mirrored[0].q.as_array(), -q, atol=1e-9)


def test_equilibria_are_force_free_in_moment(geom, unit_controls):
    for p in find_equilibria(geom, unit_controls, HOME, 1):
        me = external_torque_me(geom, unit_controls, HOME, 1, p.q.q1)
        assert abs(me) < 1e-9


def test_straight_target_single_point(geom):
    stable = find_equilibria(geom, 1.2, (6.0, 0.0), 1)
    unstable = find_equilibria(geom, 0.6, (6.0, 0.0), 1)
    assert len(stable) == 1 and len(unstable) == 1
    assert stable[0].stable and not unstable[0].stable
    assert stable[0].q.as_array().tolist() == [0.0, 0.0, 0.0]


def test_moment_residual_sign_follows_energy_slope(geom, unit_controls):
    for q1 in np.linspace(-0.6, 0.4, 11):
        me = external_torque_me(geom, unit_controls, HOME, 1, q1)
        if me is None:
            continue
        de = finite_difference(lambda t: manifold_energy(geom, unit_controls, HOME, 1, t), float(q1))
        if abs(de) > 1e-6:
            assert math.copysign(1, me) == -math.copysign(1, de)


def test_moment_residual_none_when_infeasible(geom, unit_controls):
    assert external_torque_me(geom, unit_controls, (7.0, 0.0), 1, 0.0) is None


@given(st.floats(-1.0, 1.0), st.floats(0.1, 1.2), st.floats(-1.2, 1.2), st.floats(0.5, 1.5))
@settings(max_examples=100, deadline=None)
def test_wrench_closed_form_equals_linear_solve(q1, q2, q3, l0):
    g = SegmentGeometry.symmetric(0.75, 1.0, 1.0)
    closed = wrench_closed_form(g, l0, (q1, q2, q3))
    linear = wrench_linear_solve(g, l0, (q1, q2, q3))
    assert rel_err(closed, linear, floor=1e-3) <= 1e-9
    # it really balances the joint torques
    j = jacobian((q1, q2, q3), 1.0).matrix
    res = chain_torques(g, l0, (q1, q2, q3)) + j.T @ closed
    assert np.max(np.abs(res)) <= 1e-11


def test_wrench_singular_when_q2_zero(geom):
    with pytest.raises(SingularConfigurationError):
        wrench_closed_form(geom, 1.0, (0.3, 0.0, 0.2))
    with pytest.raises(SingularConfigurationError):
        recover_wrench(geom, 1.0, (0.3, 0.0, 0.2))


def test_wrench_vanishes_at_unloaded_equilibrium(geom):
    # mean-split controls make a bent shape load free
    from tensegrity_arm.stiffness import unloading_controls

    q = (-0.3, 0.5, 0.4)
    ctl = unloading_controls(geom, 1.0, q)
    w = recover_wrench(geom, ctl, q)
    assert np.max(np.abs(w.as_array())) <= 1e-12


def test_loaded_roundtrip_at_stable_equilibrium(geom, unit_controls):
    eq = [p for p in find_equilibria(geom, unit_controls, HOME, 1) if p.stable][0]
    guess = eq.q.as_array() + np.array([0.02, -0.02, 0.01])
    sol = solve_loaded_configuration(geom, unit_controls, HOME, 1, guess)
    np.testing.assert_allclose(sol.point.q.as_array(), eq.q.as_array(), atol=1e-8)
    assert sol.point.stable
    assert abs(sol.wrench.me) <= 1e-9
    assert sol.residual <= 1e-10


def test_loaded_rejects_infeasible_guess(geom, unit_controls):
    with pytest.raises(InfeasibleError):
        solve_loaded_configuration(geom, unit_controls, HOME, 1, (3.0, 0.0, 0.0))


def test_sweep_empty_grid(geom, unit_controls):
    res = force_deflection_sweep(geom, unit_controls, (6.0, 0.0), "x", [])
    assert res.records == [] and math.isnan(res.intercept)


def test_sweep_rejects_bad_direction(geom, unit_controls):
    with pytest.raises(ValueError):
        force_deflection_sweep(geom, 0.6, (6.0, 0.0), "z", [0.01])


def test_sweep_straight_start_u_shape(geom):
    grid = np.linspace(1e-3, 1e-2, 10)
    res = force_deflection_sweep(geom, 0.6, (6.0, 0.0), "x", grid)
    assert all(r.converged for r in res.records)
    for r in res.records:
        assert r.q1 < 0 < r.q2 and r.q3 > 0
        assert not r.jump_flag
    assert res.intercept == pytest.approx(0.25896, rel=1e-2)


def test_sweep_branch_mirror(geom):
    grid = np.linspace(2e-3, 2e-2, 5)
    up = force_deflection_sweep(geom, 0.6, (6.0, 0.0), "x", grid, branch=1)
    down = force_deflection_sweep(geom, 0.6, (6.0, 0.0), "x", grid, branch=-1)
    for u, d in zip(up.records, down.records):
        assert d.fx == pytest.approx(u.fx, rel=1e-9)
        assert d.q2 == pytest.approx(-u.q2, abs=1e-9)


def test_sweep_grid_refinement_consistent(geom):
    coarse = np.linspace(0.01, 0.05, 5)
    fine = np.linspace(0.01, 0.05, 9)
    a = force_deflection_sweep(geom, 0.6, (6.0, 0.0), "x", coarse)
    b = force_deflection_sweep(geom, 0.6, (6.0, 0.0), "x", fine)
    fine_by_d = {round(r.deflection, 12): r.fx for r in b.records}
    for r in a.records:
        assert r.fx == pytest.approx(fine_by_d[round(r.deflection, 12)], rel=1e-8)


def test_sweep_from_home_unloaded_starts_at_zero_force(geom, unit_controls):
    grid = np.linspace(0.0, 0.1, 11)
    res = force_deflection_sweep(geom, unit_controls, HOME, "x", grid, unload_start=True)
    first = res.records[0]
    assert first.converged
    assert abs(first.fx) <= 1e-10 and abs(first.fy) <= 1e-10
    assert abs(res.intercept) <= 0.01
    assert res.controls != tuple([unit_controls] * 3)


def test_sweep_from_home_without_unloading_has_offset(geom, unit_controls):
    res = force_deflection_sweep(geom, unit_controls, HOME, "x", [0.0])
    r = res.records[0]
    assert r.converged
    # holding a bent shape at a shortened tip needs a reaction force
    assert abs(r.fx) > 0.1
    assert abs(r.me) <= 1e-12
