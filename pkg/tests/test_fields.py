import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavrel import fields as F
from wavrel import spectral

TP = 2 * math.pi


def _wave(x, y):
    return x * y + np.sin(y + x) + np.cos(0.5 * (y - x))


def _wave_grad(x, y):
    a, b = np.cos(y + x), -0.5 * np.sin(0.5 * (y - x))
    return y + a - b, x + a + b


def test_spectral_derivative_and_integral():
    t = np.arange(64) * TP / 64
    y = np.sin(3 * t) + np.cos(t)
    assert np.allclose(spectral.derivative(y, TP), 3 * np.cos(3 * t) - np.sin(t), atol=1e-12)
    assert abs(spectral.integral(np.cos(t) ** 2, TP) - math.pi) < 1e-13
    assert abs(spectral.evaluate(y, TP, 0.37)[0] - (math.sin(1.11) + math.cos(0.37))) < 1e-12


def test_solution_traces_lie_in_L(disk, annulus, ellipse):
    for d in (disk, annulus, ellipse):
        u = F.trace_plane(d, _wave, _wave_grad, 512)
        assert F.L_residual(d, u) < 1e-10


def test_non_solution_is_rejected(disk):
    u = F.trace_plane(disk, lambda x, y: x**2, lambda x, y: (2 * x, 0 * y), 512)
    assert F.L_residual(disk, u) > 0.5


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_rho_round_trip(disk, c):
    t = np.arange(256) * TP / 256
    phi = sum(a * np.cos((k + 1) * t) for k, a in enumerate(c[:3])) + c[3]
    phin = sum(a * np.sin((k + 1) * t) for k, a in enumerate(c[3:]))
    u = F.BoundaryField(disk, phi, phin)
    v = F.rho_inverse(disk, F.rho(disk, u), u.phi[:, 0], check=False)
    assert np.max(np.abs(v.phi - u.phi)) < 1e-12
    # phi_n is only recovered away from the light points' removable fill
    mask = np.min(np.abs(((t[:, None] - np.pi / 4 - np.arange(4) * np.pi / 2) + np.pi) % TP - np.pi), axis=1) > 0.05
    assert np.max(np.abs(v.phin - u.phin)[0, mask]) < 1e-10


def test_rho_inverse_needs_an_exact_sum(annulus):
    a = np.ones((2, 256))
    with pytest.raises(F.FieldError, match="not exact"):
        F.rho_inverse(annulus, F.OneFormPair(annulus, a, 0 * a), [0, 0])


def test_make_L_field_checks_invariance(disk):
    with pytest.raises(F.FieldError, match="not invariant"):
        F.make_L_field(disk, F.plane(lambda x, y: x), 0.0, 256)


def test_make_L_field_matches_the_plane_trace(disk):
    # f(y + x) = (y + x)^2 is E- invariant on any domain
    u = F.make_L_field(disk, F.plane(lambda x, y: (y + x) ** 2), F.plane(lambda x, y: np.sin(y - x)), 512)
    w = F.trace_solution(disk, lambda s: s**2, lambda s: 2 * s, np.sin, np.cos, 512)
    assert np.max(np.abs(u.phi - w.phi)) < 1e-12
    assert np.max(np.abs(u.phin - w.phin)) < 1e-8


def test_interior_value_reconstructs_the_solution(disk):
    u = F.trace_plane(disk, _wave, _wave_grad, 512)
    val = F.interior_value(disk, F.rho(disk, u), (0, 0.0, u.phi[0, 0]), np.array([0.2, -0.1]))
    assert abs(val - _wave(0.2, -0.1)) < 1e-9


def test_holonomy_form_has_opposite_periods(annulus):
    (pair,) = F.holonomy_basis(annulus, 512)
    a, b = F.periods(annulus, pair)
    assert np.allclose(a, [-1.0, 1.0], atol=1e-10)
    assert np.allclose(b, 0.0)


def test_bump_is_flat_at_the_ends():
    u = np.array([0.0, 1e-3, 0.5, 1 - 1e-3, 1.0])
    v = F.bump(u)
    assert v[0] == 0 and v[-1] == 0 and v[2] > 5
    assert v[1] < 1e-15


def test_field_shape_is_validated(disk, annulus):
    with pytest.raises(F.FieldError):
        F.BoundaryField(annulus, np.zeros((1, 128)), np.zeros((1, 128)))
    with pytest.raises(F.FieldError, match="at least"):
        F.BoundaryField(disk, np.zeros(16), np.zeros(16))
