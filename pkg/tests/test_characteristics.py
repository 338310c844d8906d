import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavrel import characteristics as C

TP = 2 * math.pi


@pytest.fixture(scope="module")
def disk_maps(disk):
    return C.involution_map(disk, "-", 512), C.involution_map(disk, "+", 512)


@pytest.fixture(scope="module")
def annulus_maps(annulus):
    return C.involution_map(annulus, "-", 512), C.involution_map(annulus, "+", 512)


def test_disk_minus_reflects_about_the_diagonal(disk):
    r = C.trace_null(disk, (0, 0.0), "-")
    assert r.outcome == "hit" and r.component == 0
    assert abs(C._wrap(r.t - math.pi / 2, TP)) < 1e-12


def test_tangent_start_is_refused(disk):
    with pytest.raises(C.TraceError, match="tangent"):
        C.trace_null(disk, (0, math.pi / 4), "-")


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, TP), st.sampled_from("+-"))
def test_disk_tracer_matches_closed_form(disk, t, sign):
    if min(abs(C._wrap(t - math.pi / 4 - k * math.pi / 2, TP)) for k in range(4)) < 1e-3:
        return
    _, want = C.closed_form_oracle({"kind": "disk"}, sign, ("out", t))
    tc, tt = C.trace_many(disk, [0], [t], sign)
    assert tc[0] == 0
    assert abs(C._wrap(tt[0] - want, TP)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, TP), st.sampled_from([0, 1]), st.sampled_from("+-"))
def test_involutions_square_to_identity(annulus_maps, t, comp, sign):
    E = annulus_maps[0] if sign == "-" else annulus_maps[1]
    c1, t1 = E(comp, t)
    if c1 is None or c1 < 0:
        return
    c2, t2 = E(c1, t1)
    assert c2 == comp
    assert abs(C._wrap(t2 - t, TP)) < 1e-8


def test_annulus_oracle_on_both_components(annulus):
    shape = {"kind": "annulus", "r1": 1, "r2": 2}
    ts = np.arange(64) * TP / 64 + 1e-3
    for sign in "+-":
        for comp, which in ((0, "out"), (1, "in")):
            tc, tt = C.trace_many(annulus, np.full(ts.size, comp), ts, sign)
            for t, k, s in zip(ts, tc, tt):
                ang = t if comp == 0 else -t
                w, th = C.closed_form_oracle(shape, sign, (which, ang))
                kk = 0 if w == "out" else 1
                assert k == kk
                got = s if kk == 0 else -s
                assert abs(C._wrap(got - th, TP)) < 1e-9


def test_hole_shadow_is_the_arccos_window(annulus):
    # outer rays reach the hole iff |cos(theta +- pi/4)| < r1/r2
    ts = np.arange(512) * TP / 512 + 1e-3
    tc, _ = C.trace_many(annulus, np.zeros(512, int), ts, "-")
    frac = np.mean(tc == 1)
    want = 2 * (math.pi - 2 * math.acos(0.5)) / TP
    assert abs(frac - want) < 2 / 512


def test_involution_is_orientation_reversing(disk_maps):
    Em, _ = disk_maps
    d = Em.derivative(0, np.array([0.1, 1.0, 2.0, 4.0]))
    assert np.all(d < 0)
    assert np.allclose(d, -1.0, atol=1e-8)


def test_table_rows_mark_exceptional_orders(disk_maps):
    rows = disk_maps[0].table_rows()
    assert len(rows) == 512
    assert {r[4] for r in rows} <= {1, 2}


def test_convex_light_points_are_singletons(disk):
    ex = C.exceptional_set(disk, "-")
    assert len(ex) == 2
    assert all(order == 1 for _, _, order in ex)


def test_concave_light_point_chains_through_the_tangent(bean):
    ex = C.exceptional_set(bean, "-")
    orders = sorted(o for _, _, o in ex)
    assert orders == [1, 1, 1, 1, 3, 3, 3, 3, 3, 3]
    cls = C.equivalence_class(bean, "-", (0, math.pi / 4))
    assert len(cls) == 3
    ts = sorted(t for _, t in cls)
    # the chain has three distinct points
    assert min(np.diff(ts)) > 0.1


def test_generic_class_has_two_members(bean):
    cls = C.equivalence_class(bean, "-", (0, 0.3))
    assert len(cls) == 2


def test_sign_parsing():
    assert C.sign_str("+") == "+" and C.sign_str(-1) == "-"
    with pytest.raises(ValueError):
        C.sign_str("x")
