import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavrel import hamiltonian as H

CF = H.CircleField.from_functions


def _sqrt2x(r):
    return H.solution_trace(lambda x, y: math.sqrt(2) * x, lambda x, y: (math.sqrt(2) + 0 * x, 0 * y), r)


def test_H_of_cosine_radial_data():
    u = CF(lambda t: 0 * t, np.cos)
    assert abs(H.hamiltonian_H(u) - math.pi / 4) < 1e-14


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 5))
def test_vector_on_constant_data(c):
    v = H.ham_vector(CF(lambda t: 0 * t, lambda t: c + 0 * t, 256))
    assert np.max(np.abs(v.phi - c)) < 1e-12
    assert np.max(np.abs(v.phin - 2 * c)) < 1e-12


def test_c0_residual_is_the_light_angle_derivative():
    u = CF(np.cos, lambda t: 0 * t)
    r = H.c0_residuals(u)
    # d(phi_n - phi) = sin at pi/4, 3pi/4, -3pi/4, -pi/4 (grid order)
    want = np.sin([math.pi / 4, 3 * math.pi / 4, 5 * math.pi / 4, 7 * math.pi / 4])
    assert np.allclose(np.sort(r), np.sort(want), atol=1e-12)
    with pytest.raises(H.HamiltonianError):
        H.ham_vector(u)


def test_light_angles_need_a_grid_multiple_of_eight():
    with pytest.raises(H.HamiltonianError):
        H.c0_residuals(CF(np.cos, np.sin, 260))


@pytest.mark.parametrize("phi, phin, level, first", [
    (np.sin, np.sin, 6, None),
    (lambda t: np.sin(2 * t), lambda t: np.sin(2 * t) + 0.1 * np.cos(4 * t), 6, None),
    (lambda t: 0 * t, lambda t: -np.cos(4 * t) / 8, 6, None),
    (np.cos, lambda t: 0 * t, -1, 0),
    (lambda t: 0 * t, lambda t: np.cos(t) - 2 / 3 * np.cos(t) ** 3, 0, 1),
])
def test_constraint_chain_golden_levels(phi, phin, level, first):
    d = H.constraint_chain(CF(phi, phin))
    assert d.level == level
    assert d.first_failure == first


@pytest.mark.parametrize("fun, grad", [
    (lambda x, y: math.sqrt(2) * x, lambda x, y: (math.sqrt(2) + 0 * x, 0 * y)),
    (lambda x, y: (y + x) ** 3, lambda x, y: (3 * (y + x) ** 2, 3 * (y + x) ** 2)),
    (lambda x, y: np.exp(y - x) + np.sin(y + x), lambda x, y: (-np.exp(y - x) + np.cos(y + x),
                                                               np.exp(y - x) + np.cos(y + x))),
])
def test_solution_traces_pass_every_level(fun, grad):
    assert H.constraint_chain(H.solution_trace(fun, grad)).level == 6


def test_forms_identities_on_solutions():
    u = H.solution_trace(lambda x, y: np.sin(y + x) + (y - x) ** 2,
                         lambda x, y: (np.cos(y + x) - 2 * (y - x), np.cos(y + x) + 2 * (y - x)))
    a, b = H.forms(u)
    v = H.ham_vector(u)
    av, bv = H.forms(v)
    th = u.theta
    h = th[1] - th[0]
    away = np.min(np.abs(((th[:, None] - np.array(H.LIGHT_ANGLES)) + math.pi) % (2 * math.pi) - math.pi),
                  axis=1) > 0.2

    def fd(y):
        return (-np.roll(y, -2) + 8 * np.roll(y, -1) - 8 * np.roll(y, 1) + np.roll(y, 2)) / (12 * h)

    with np.errstate(divide="ignore", invalid="ignore"):
        ea = av + fd(a / np.tan(th - math.pi / 4))
        eb = bv + fd(b / np.tan(th + math.pi / 4))
    assert np.max(np.abs(ea[away])) < 1e-6
    assert np.max(np.abs(eb[away])) < 1e-6


def test_flow_maps_outer_trace_to_inner_trace():
    v = H.reduced_flow_neg(_sqrt2x(1.0), math.log(2))
    w = _sqrt2x(0.5)
    assert np.max(np.abs(v.phi - w.phi)) < 1e-10
    assert np.max(np.abs(v.phin - w.phin)) < 1e-10


def test_flow_is_identity_at_zero():
    u = _sqrt2x(1.0)
    assert (H.reduced_flow_neg(u, 0.0) - u).sup() == 0.0


def test_flow_generator_is_minus_the_vector():
    u = H.solution_trace(lambda x, y: np.sin(y + x) + np.cos(0.5 * (y - x)),
                         lambda x, y: (np.cos(y + x) + 0.5 * np.sin(0.5 * (y - x)),
                                       np.cos(y + x) - 0.5 * np.sin(0.5 * (y - x))))
    hv = H.ham_vector(u)
    d1 = (H.reduced_flow_neg(u, 1e-2) - u) * (1 / 1e-2)
    d2 = (H.reduced_flow_neg(u, 5e-3) - u) * (1 / 5e-3)
    rich = d2 * 2.0 - d1
    assert (rich + hv).sup() < 1e-3 * hv.sup()


def test_membership_and_kernel():
    xi = 0.7
    k = H.kernel_field(xi, -1, 0)
    ra, rb = H.c_xi_membership(k, xi)
    assert max(ra, rb) < 1e-10
    assert H.reduced_flow_neg(k, xi).sup() < 1e-10 * k.sup()
    # a generic field is not in C(-xi)
    ra, rb = H.c_xi_membership(CF(np.sin, np.cos), xi)
    assert max(ra, rb) > 0.1


def test_arcs_grow_with_xi():
    assert H.theta0(math.log(2)) == pytest.approx(math.pi / 3)
    (c0, w0), _ = H.arcs(0.2, -1)
    (c1, w1), _ = H.arcs(1.0, -1)
    assert c0 == c1 == math.pi / 4 and w1 > w0


@pytest.fixture(scope="module")
def samples():
    return H.member_samples(0.7, n=3, seed=1)


def test_samples_are_members(samples):
    for u in samples:
        assert max(H.c_xi_membership(u, 0.7)) < 1e-8 * max(1.0, u.sup())


def test_composition_law(samples):
    assert H.flow_composition_check(0.3, 0.4, samples) < 1e-8


def test_flow_preserves_omega(samples):
    assert H.pullback_residual(0.7, samples) < 1e-9


def test_grid_size_checked():
    with pytest.raises(H.HamiltonianError):
        H.CircleField(np.zeros(64), np.zeros(64))
