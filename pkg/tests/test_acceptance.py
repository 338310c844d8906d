"""Acceptance run: one PASS/FAIL line per criterion.

    python3 tests/test_acceptance.py      # prints the eight lines
    pytest tests/test_acceptance.py -s    # same, one test per criterion
"""

import math
import sys
import time

import numpy as np
import pytest

from wavrel import characteristics as C
from wavrel import diamond as Dm
from wavrel import dirichlet as Dr
from wavrel import fields as F
from wavrel import hamiltonian as H
from wavrel import misner as Ms
from wavrel import spectral
from wavrel import symplectic as S
from wavrel.geometry import make_domain

TP = 2 * math.pi
DISK = {"curves": [{"kind": "circle", "r": 1}]}
ANNULUS = {"curves": [{"kind": "circle", "r": 2}, {"kind": "circle", "r": 1}], "outer": 0}
BLOB = {"curves": [{"kind": "fourier", "cx": [0, 1, 0, 0.0, 0.1], "cy": [0, 0, 1, 0.08, 0]}]}
FOUR = {"curves": [{"kind": "circle", "r": 3},
                   {"kind": "circle", "r": 0.5, "center": [1.2, 0.3]},
                   {"kind": "circle", "r": 0.4, "center": [-1.1, 0.9]},
                   {"kind": "circle", "r": 0.45, "center": [-0.3, -1.4]}], "outer": 0}


def criterion_1():
    """Tracer against the closed-form disk and annulus involutions."""
    worst, wrong = 0.0, 0
    shapes = [(DISK, {"kind": "disk"}), (ANNULUS, {"kind": "annulus", "r1": 1, "r2": 2})]
    for spec, shape in shapes:
        d = make_domain(spec)
        for sign in "+-":
            for comp in range(d.N):
                ts = np.arange(512) * TP / 512 + 1e-3
                tc, tt = C.trace_many(d, np.full(512, comp), ts, sign)
                for t, k, s in zip(ts, tc, tt):
                    which = "out" if comp == 0 else "in"
                    w, th = C.closed_form_oracle(shape, sign, (which, t if comp == 0 else -t))
                    kk = 0 if w == "out" else 1
                    wrong += int(k != kk)
                    worst = max(worst, abs(C._wrap((s if kk == 0 else -s) - th, TP)))
    return wrong == 0 and worst < 1e-8, f"max angle error {worst:.1e}, wrong component {wrong}"


def criterion_2():
    """Isotropy of a K = 16 basis of L on four domains."""
    boosted, _ = S.conformal_push(S.conformal_matrix("boost", 0.5), (0, 0), make_domain(DISK))
    cases = [("disk", make_domain(DISK), 1024), ("annulus", make_domain(ANNULUS), 1024),
             ("boosted disk", boosted, 1024), ("blob", make_domain(BLOB), 2048)]
    parts, ok = [], True
    for name, d, M in cases:
        B = S.L_basis(d, 16, M, validate=True) + S.holonomy_L_basis(d, M, check_paths=False)
        P = S.pairing_matrix(d, B).matrix
        nrm = np.array([b.norm() for b in B])
        r = float(np.max(np.abs(P) / np.outer(nrm, nrm)))
        ok &= r < 1e-7
        parts.append(f"{name} {r:.1e}")
    return ok, ", ".join(parts)


def criterion_3():
    """Truncated defects 0, 2, 6 (surrogate), stable in K and M."""
    got, ok = {}, True
    for name, spec, want in (("disk", DISK, 0), ("annulus", ANNULUS, 2), ("4-component", FOUR, 6)):
        d = make_domain(spec)
        vals = set()
        for K in (8, 12):
            for M in (1024, 2048):
                r = S.truncated_reduction(d, K, M)
                vals.add(r.defect)
                ok &= r.defect == want and r.extra["defect_completed"] == 0
        got[name] = sorted(vals)
    return ok, "truncation surrogate; " + ", ".join(f"{k} {v}" for k, v in got.items())


def _random_function(rng):
    c = rng.normal(size=rng.integers(1, 6))
    k, a = rng.uniform(0.2, 2.0), rng.normal()
    return lambda s: np.polynomial.polynomial.polyval(np.asarray(s, float), c) + a * np.sin(k * math.pi * s)


def criterion_4():
    """Vertex formula against bulk quadrature; the identity example."""
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(50):
        f, g = _random_function(rng), _random_function(rng)
        p0, m0 = rng.uniform(-1, 1, 2)
        box = (p0, p0 + rng.uniform(0.3, 2), m0, m0 + rng.uniform(0.3, 2))
        hj = Dm.hj_action(Dm.diamond_L(f, g, box))
        worst = max(worst, abs(hj - Dm.bulk_action(f, g, box)) / max(1.0, abs(hj)))
    ident = Dm.named_function("id")
    hj1 = Dm.hj_action(Dm.diamond_L(ident, ident))
    bulk1 = Dm.bulk_action(ident, ident)
    ok = worst < 1e-10 and hj1 == -1.0 and abs(bulk1 + 1) < 1e-10
    return ok, f"50 random pairs max {worst:.1e}; id/id HJ {hj1:g}, bulk {bulk1:.12f}"


def criterion_5():
    """Disk identity, cos theta obstruction, kernel field."""
    disk = make_domain(DISK)
    rng = np.random.default_rng(5)
    B = S.L_basis(disk, 8, 1024)
    worst = 0.0
    for _ in range(100):
        c = rng.normal(size=len(B))
        u = sum((a * b for a, b in zip(c[1:], B[1:])), c[0] * B[0])
        phi = lambda k, s, u=u: spectral.evaluate(u.phi[k], TP, s)[0]  # noqa: E731
        v = Dr.dirichlet_existence_obstruction(disk, phi, (0, float(rng.uniform(0, TP))), 2)
        worst = max(worst, abs(v) / max(1.0, float(np.max(np.abs(u.phi)))))
    # cos(th) - cos(pi/2 - th) + cos(th - pi) - cos(-pi/2 - th) vanishes identically
    obs = max(abs(Dr.dirichlet_existence_obstruction(disk, lambda k, s: math.cos(s), (0, p), 2))
              for p in np.linspace(0, TP, 13))
    cos2 = abs(Dr.dirichlet_existence_obstruction(disk, lambda k, s: math.cos(2 * s), (0, 0.0), 2))
    u, _, _ = Dr.dirichlet_kernel_field(disk, (0.1, 0.4), 2)
    kres = F.L_residual(disk, u)
    kern_ok = np.max(np.abs(u.phi)) == 0 and np.max(np.abs(u.phin)) > 1e-3 and kres < 1e-8
    ok = worst < 1e-8 and obs >= 0.1 and kern_ok
    return ok, (f"identity max {worst:.1e}; cos obstruction {obs:.1e} (needs >= 0.1, "
                f"cos 2th gives {cos2:.2f}); kernel field L-residual {kres:.1e}")


def criterion_6():
    """Hamiltonian suite."""
    CF = H.CircleField.from_functions
    parts, ok = [], True
    h = H.hamiltonian_H(CF(lambda t: 0 * t, np.cos))
    ok &= abs(h - math.pi / 4) < 1e-8
    parts.append(f"H {abs(h - math.pi / 4):.0e}")
    v = H.ham_vector(CF(lambda t: 0 * t, lambda t: 0.7 + 0 * t))
    e = max(np.max(np.abs(v.phi - 0.7)), np.max(np.abs(v.phin - 1.4)))
    ok &= e < 1e-8
    parts.append(f"Hv {e:.0e}")
    # C0 residuals against the analytic derivative at the light angles
    u = CF(lambda t: np.sin(3 * t), lambda t: np.cos(t) + np.sin(2 * t))
    th = np.array([math.pi / 4, 3 * math.pi / 4, 5 * math.pi / 4, 7 * math.pi / 4])
    exact = -np.sin(th) + 2 * np.cos(2 * th) - 3 * np.cos(3 * th)
    c0 = float(np.max(np.abs(np.sort(H.c0_residuals(u)) - np.sort(exact))))
    ok &= c0 < 1e-8
    parts.append(f"C0 {c0:.0e}")
    sq = lambda x, y: math.sqrt(2) * x  # noqa: E731
    gsq = lambda x, y: (math.sqrt(2) + 0 * x, 0 * y)  # noqa: E731
    out = H.reduced_flow_neg(H.solution_trace(sq, gsq, 1.0), math.log(2))
    inner = H.solution_trace(sq, gsq, 0.5)
    fl = (out - inner).sup()
    ok &= fl < 1e-6
    parts.append(f"flow {fl:.0e}")
    samples = H.member_samples(0.7, n=4, seed=0)
    pb = H.pullback_residual(0.7, samples)
    comp = H.flow_composition_check(0.3, 0.4, samples)
    ok &= pb < 1e-7 and comp < 1e-6
    parts.append(f"pullback {pb:.0e}, composition {comp:.0e}")
    return ok, ", ".join(parts)


def criterion_7():
    """Misner certificate against the Minkowski annulus."""
    rng = np.random.default_rng(7)
    orth = 0.0
    for _ in range(20):
        c = rng.normal(size=9)
        g = lambda x, c=c: c[0] + sum(c[2 * k - 1] * np.cos(k * x) + c[2 * k] * np.sin(k * x)  # noqa: E731
                                      for k in range(1, 5))
        # analytic g' so the residual is not built from the same derivative
        dg = lambda x, c=c: sum(k * (c[2 * k] * np.cos(k * x) - c[2 * k - 1] * np.sin(k * x))  # noqa: E731
                                for k in range(1, 5))
        orth = max(orth, Ms.misner_orth_residual(Ms.misner_L(g, dg=dg)))
    defects = [Ms.misner_defect(K).defect for K in range(9)]
    grow = defects == [2 * (2 * K + 1) for K in range(9)]
    ann = make_domain(ANNULUS)
    flat = [S.truncated_reduction(ann, K, 1024).defect for K in (4, 8)]
    outcomes = {Ms.misner_trace(float(x), "-", comp, h=0.05).outcome
                for comp in (0, 1) for x in rng.uniform(0, TP, 8)}
    ok = orth < 1e-10 and grow and flat == [2, 2] and outcomes == {"asymptotic"}
    return ok, (f"orth {orth:.0e}; defects {defects}; annulus {flat}; "
                f"minus traces {sorted(outcomes)}")


def criterion_8():
    """omega on a 10-field family under translation, scaling 2, boost 0.5."""
    ann = make_domain(ANNULUS)
    fam = (S.glob_basis(ann, 4, 1024)[:8] + S.holonomy_L_basis(ann, 1024, check_paths=False)
           + S.complement_basis(ann, 2, 1024)[:1])
    P0 = S.pairing_matrix(ann, fam).matrix
    worst = {}
    for kind, p, b in (("translation", 0.0, (0.7, -0.3)), ("scaling", 2.0, (0, 0)), ("boost", 0.5, (0, 0))):
        A = S.conformal_matrix(kind, p)
        pushed = [S.conformal_push(A, b, ann, u) for u in fam]
        P1 = S.pairing_matrix(pushed[0][0], [q[1] for q in pushed]).matrix
        worst[kind] = float(np.max(np.abs(P1 - P0)))
    ok = len(fam) == 10 and max(worst.values()) < 1e-7 and np.max(np.abs(P0)) > 0.1
    return ok, ", ".join(f"{k} {v:.0e}" for k, v in worst.items())


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4,
            criterion_5, criterion_6, criterion_7, criterion_8]


def _line(i, ok, detail, dt):
    return f"criterion {i}: {'PASS' if ok else 'FAIL'}  ({dt:.1f}s)  {detail}"


@pytest.mark.parametrize("i", range(1, 9))
def test_criterion(i, capsys):
    t0 = time.perf_counter()
    ok, detail = CRITERIA[i - 1]()
    with capsys.disabled():
        print("\n" + _line(i, ok, detail, time.perf_counter() - t0))
    assert ok, detail


if __name__ == "__main__":
    start = time.perf_counter()
    fails = 0
    for i, fn in enumerate(CRITERIA, 1):
        t0 = time.perf_counter()
        ok, detail = fn()
        fails += not ok
        print(_line(i, ok, detail, time.perf_counter() - t0), flush=True)
    print(f"total {time.perf_counter() - start:.1f}s, {8 - fails}/8 pass")
    sys.exit(1 if fails else 0)
