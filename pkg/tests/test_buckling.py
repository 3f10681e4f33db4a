import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensegrity_arm.buckling import (
    classify_shape,
    constraint_residuals,
    critical_force,
    deflection_coefficient,
    linearized_coefficients,
    linearized_force,
    shape_force,
)
from tensegrity_arm.equilibrium import chain_energy, chain_torques
from tensegrity_arm.errors import DomainError
from tensegrity_arm.kinematics import JointConfig, forward_kinematics, jacobian
from tensegrity_arm.segment import SegmentControls, SegmentGeometry, is_straight_config_stable


def test_constants_to_four_places():
    u, z = linearized_coefficients(1), linearized_coefficients(-1)
    assert round(u.lam, 4) == -0.9417 and round(z.lam, 4) == -1.8583
    assert round(u.mu, 4) == 1.2791 and round(z.mu, 4) == 0.8209
    assert u.shape == "U" and u.stable_candidate
    assert z.shape == "Z" and not z.stable_candidate


@pytest.mark.parametrize("sign", [1, -1])
def test_constraints_hold(sign):
    co = linearized_coefficients(sign)
    r1, r2 = constraint_residuals(co.alpha1, co.alpha3)
    assert abs(r1) <= 1e-12 and abs(r2) <= 1e-12


def test_constraint_roots_by_polynomial():
    # eliminate alpha1 = -(3 + alpha3)/5 and solve the quadratic in alpha3 independently
    roots = np.roots([4.0, 2.0, -5.0])
    coeffs = sorted(linearized_coefficients(s).alpha3 for s in (1, -1))
    np.testing.assert_allclose(sorted(roots.real), coeffs, atol=1e-14)


def test_rejects_bad_root_sign():
    with pytest.raises(ValueError):
        linearized_coefficients(0)


def test_critical_force_examples(geom):
    fu, fz = critical_force(geom, 1.0)
    assert fu == pytest.approx(-0.11771, abs=1e-5)
    # 0.25896 is a rounded value; the closed form gives 0.2589795...
    assert critical_force(geom, 0.6)[0] == pytest.approx(0.25896, rel=1e-4)
    # bracket vanishes at L0 = 2 (b^2 - a^2) / b
    assert critical_force(geom, 2 * (1 - 0.75**2))[0] == pytest.approx(0.0, abs=1e-15)
    assert fz / fu == pytest.approx(linearized_coefficients(-1).lam / linearized_coefficients(1).lam)


def test_critical_force_requires_symmetry():
    g = SegmentGeometry(0.7, 1.0, 0.8, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        critical_force(g, 1.0)


@pytest.mark.parametrize("sign", [1, -1])
def test_shortening_coefficient_from_exact_kinematics(sign):
    co = linearized_coefficients(sign)
    q2 = 1e-3
    q = (co.alpha1 * q2, q2, co.alpha3 * q2)
    p = forward_kinematics(q, 1.0)
    assert (6.0 - p.x) / q2**2 == pytest.approx(co.mu, abs=1e-4)
    # no first-order sideways motion
    assert abs(p.y) <= 1e-8
    assert deflection_coefficient(co.shape) == co.mu


def test_deflection_coefficient_rejects_other():
    with pytest.raises(ValueError):
        deflection_coefficient("S")


@given(st.floats(0.3, 1.3), st.floats(0.2, 1.8), st.sampled_from([1, -1]))
@settings(max_examples=100, deadline=None)
def test_shape_force_is_critical_force(a, l0, sign):
    g = SegmentGeometry.symmetric(a, 1.0, 1.0)
    idx = 0 if sign == 1 else 1
    assert shape_force(g, l0, 1e-3, sign) == pytest.approx(critical_force(g, l0)[idx], rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("sign", [1, -1])
def test_linearized_force_matches_wrench_limit(geom, sign):
    # the exact tip force on a small ratio-consistent shape tends to the linearised one
    co = linearized_coefficients(sign)
    l0 = 0.6
    q2 = 1e-5
    q = np.array([co.alpha1, 1.0, co.alpha3]) * q2
    f = np.linalg.lstsq(jacobian(q, 1.0).matrix.T, -chain_torques(geom, l0, q), rcond=None)[0]
    fx, fy = linearized_force(geom, l0, *q)
    assert f[0] == pytest.approx(fx, rel=1e-3)
    assert fy == 0.0


def test_linearized_force_rejects_zero_q2(geom):
    with pytest.raises(DomainError):
        linearized_force(geom, 1.0, 0.1, 0.0, 0.1)


@pytest.mark.parametrize(
    "q,shape",
    [
        ((-0.1, 0.2, 0.1), "U"),
        ((0.1, -0.2, -0.1), "U"),
        ((-0.1, 0.2, -0.1), "Z"),
        ((0.1, -0.2, 0.1), "Z"),
        ((0.1, 0.2, 0.1), "other"),
        ((0.0, 0.2, 0.1), "other"),
    ],
)
def test_classify(q, shape):
    assert classify_shape(q) == shape
    assert classify_shape(JointConfig(*q)) == shape


@pytest.mark.parametrize("sign", [1, -1])
def test_linearized_ratios_classify_as_their_shape(sign):
    co = linearized_coefficients(sign)
    assert classify_shape((co.alpha1, 1.0, co.alpha3)) == co.shape


def test_u_shape_stores_less_energy(geom):
    # straight pose stable (L0 = 1): shortening along U costs less spring energy
    dx = 1e-4
    energies = {}
    for sign in (1, -1):
        co = linearized_coefficients(sign)
        q2 = math.sqrt(dx / co.mu)
        energies[co.shape] = chain_energy(geom, 1.0, (co.alpha1 * q2, q2, co.alpha3 * q2))
    assert energies["U"] < energies["Z"]


@given(st.floats(0.6, 1.2), st.floats(0.2, 1.5))
@settings(max_examples=200, deadline=None)
def test_sign_of_critical_force_matches_straight_stability(a, l0):
    g = SegmentGeometry.symmetric(a, 1.0, 1.0)
    fu = critical_force(g, l0)[0]
    if abs(fu) < 1e-12:
        return
    stable, _ = is_straight_config_stable(g, SegmentControls.symmetric(l0))
    assert (fu > 0) == (not stable)

