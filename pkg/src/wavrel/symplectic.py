"""Boundary symplectic pairing, isotropy and truncated Lagrangian defects.

The pairing of two boundary fields u = (phi, phi_n), w = (psi, psi_n) is

    omega(u, w) = sum_k  int  j(u) psi - phi j(w)  dt,
    j(u) = v cos 2th phi_n - sin 2th phi_t,

with the quadrature the periodic trapezoid rule on each component.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev

from . import fields as F
from .characteristics import _sgn
from .geometry import Domain
from .fields import BoundaryField, OneFormPair, FieldError, frames, periods  # noqa: F401

RANK_TOL = 1e-8


@dataclass
class PairingMatrix:
    """omega evaluated on a finite basis (rows x columns)."""

    matrix: np.ndarray
    rows: list = field(default_factory=list)
    cols: list = field(default_factory=list)

    def antisymmetry(self) -> float:
        A = self.matrix
        if A.shape[0] != A.shape[1]:
            return float("nan")
        return float(np.max(np.abs(A + A.T))) if A.size else 0.0


@dataclass
class DefectReport:
    dim_L: int
    dim_perp: int
    defect: int
    spectrum: list
    threshold: float
    dim_test: int = 0
    K: int = 0
    M: int = 0
    extra: dict = field(default_factory=dict)
    label: str = "truncation surrogate"

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in
             ("dim_L", "dim_perp", "defect", "threshold", "dim_test", "K", "M", "label")}
        d["spectrum"] = [float(s) for s in self.spectrum]
        d.update(self.extra)
        return d


# ---------------------------------------------------------------- pairing


def _current(u: BoundaryField) -> np.ndarray:
    fr = frames(u.domain, u.M)
    return fr.v * fr.c2 * u.phin - fr.s2 * u.dphi()


def omega(domain: Domain, u: BoundaryField, w: BoundaryField) -> float:
    """The boundary symplectic pairing omega(u, w)."""
    if u.phi.shape != w.phi.shape:
        raise FieldError("grid mismatch")
    fr = frames(domain, u.M)
    integrand = _current(u) * w.phi - u.phi * _current(w)
    return float(np.sum(integrand.sum(axis=1) * fr.T / u.M))


def pairing_matrix(domain: Domain, rows, cols=None) -> PairingMatrix:
    """Matrix of omega on basis lists (vectorized)."""
    cols = rows if cols is None else cols
    if not rows or not cols:
        return PairingMatrix(np.zeros((len(rows), len(cols))), rows, cols)
    M = rows[0].M
    fr = frames(domain, M)
    wts = np.repeat(fr.T / M, M)
    Jr = np.array([_current(b).ravel() for b in rows]) * wts
    Pr = np.array([b.phi.ravel() for b in rows]) * wts
    Jc = np.array([_current(b).ravel() for b in cols])
    Pc = np.array([b.phi.ravel() for b in cols])
    A = Jr @ Pc.T - Pr @ Jc.T
    return PairingMatrix(A, rows, cols)


def isotropy_residual(domain: Domain, basis) -> float:
    """max |omega(b_i, b_j)| / (|b_i| |b_j|)."""
    if len(basis) < 2:
        return 0.0
    A = pairing_matrix(domain, list(basis)).matrix
    n = np.array([b.norm() for b in basis])
    return float(np.max(np.abs(A) / np.outer(n, n)))


# ---------------------------------------------------------------- bases


def sigma_range(domain: Domain, sign, M: int):
    fr = frames(domain, M)
    s = fr.y + _sgn(sign) * fr.x
    return float(s.min()), float(s.max())


def _scaled(domain, sign, M):
    lo, hi = sigma_range(domain, sign, M)
    return lambda s: (2.0 * s - (lo + hi)) / (hi - lo), 2.0 / (hi - lo)


def glob_basis(domain: Domain, K: int, M: int) -> list:
    """Traces of F(s+) + G(s-) with F, G Chebyshev polynomials of degree
    <= K in the rescaled null coordinates (constant counted once)."""
    out = []
    zero = lambda s: 0.0 * s  # noqa: E731
    for sgn in (+1, -1):
        sc, ds = _scaled(domain, sgn, M)
        for m in range(0 if sgn > 0 else 1, K + 1):
            c = np.zeros(m + 1)
            c[m] = 1.0
            dc = chebyshev.chebder(c)
            P = lambda s, c=c: chebyshev.chebval(sc(s), c)  # noqa: E731
            dP = lambda s, dc=dc: ds * chebyshev.chebval(sc(s), dc)  # noqa: E731
            if sgn > 0:
                out.append(F.trace_solution(domain, P, dP, zero, zero, M))
            else:
                out.append(F.trace_solution(domain, zero, zero, P, dP, M))
    return out


def L_basis(domain: Domain, K: int, M: int, validate: bool = False) -> list:
    """Elements of L built through make_L_field from invariant Chebyshev
    families of the null coordinates (exercises the light-point limits)."""
    out = []
    fr = frames(domain, M)
    for sgn in (+1, -1):
        sc, _ = _scaled(domain, sgn, M)
        s = sc(fr.y + sgn * fr.x)
        for m in range(0 if sgn > 0 else 1, K + 1):
            c = np.zeros(m + 1)
            c[m] = 1.0
            h = chebyshev.chebval(s, c)
            if sgn > 0:
                out.append(F.make_L_field(domain, h, 0.0, M, validate=validate))
            else:
                out.append(F.make_L_field(domain, 0.0, h, M, validate=validate))
    return out


def _window(domain, sign, M, rel=0.1):
    """Product of smooth notches vanishing to high order at the null
    coordinate values of the light points of the given class."""
    fr = frames(domain, M)
    sgn = _sgn(sign)
    lab = "-" if sgn < 0 else "+"
    # the matching null coordinate is constant along the sign-characteristics
    s = fr.y - sgn * fr.x
    lo, hi = float(s.min()), float(s.max())
    w = rel * (hi - lo)
    z = np.ones_like(s)
    for lp in fr.light:
        if lp.sign != lab:
            continue
        x, y = domain.curves[lp.component].position(lp.t)
        c = float(y - sgn * x)
        z *= (1.0 - np.exp(-(((s - c) / w) ** 2))) ** 4
    return z


def complement_basis(domain: Domain, K: int, M: int) -> list:
    """Fields dual to the global solutions: anti-invariant generators,
    windowed away from the light points, plus one flux direction."""
    fr = frames(domain, M)
    out = []
    for sgn in (-1, +1):
        zeta = _window(domain, sgn, M)
        X, Y = F.image_points(domain, sgn, M)
        sc, _ = _scaled(domain, -sgn, M)
        other = fr.y + sgn * fr.x
        mine = fr.y - sgn * fr.x
        for m in range(K):
            c = np.zeros(m + 1)
            c[m] = 1.0
            h = other * chebyshev.chebval(sc(mine), c)
            # h is a plane function: evaluate it exactly at the image points
            comp = (Y + sgn * X) * chebyshev.chebval(sc(Y - sgn * X), c)
            a = 0.5 * (h - np.nan_to_num(comp, nan=0.0)) * zeta
            at = np.array([F.spectral.derivative(a[k], fr.T[k]) for k in range(domain.N)])
            zero = np.zeros_like(at)
            if sgn < 0:
                phin = F._phin_from_forms(domain, M, at, zero, check=False)
            else:
                phin = F._phin_from_forms(domain, M, zero, at, check=False)
            out.append(BoundaryField(domain, a, phin))
    flux = np.zeros((domain.N, M))
    flux[domain.outer] = fr.c2[domain.outer]
    out.append(BoundaryField(domain, np.zeros((domain.N, M)), flux))
    return out


def locally_constant_basis(domain: Domain, M: int) -> list:
    out = []
    for i in range(domain.N):
        if i == domain.outer:
            continue
        phi = np.zeros((domain.N, M))
        phi[i] = 1.0
        out.append(BoundaryField(domain, phi, np.zeros_like(phi)))
    return out


def holonomy_L_basis(domain: Domain, M: int, check_paths: bool = True) -> list:
    """N - 1 elements of L outside L^glob.

    The E- holonomy forms kappa_i and E+ forms lambda_j are combined so
    that alpha + beta is exact on every component; phi is then anchored
    per component by interior reconstruction."""
    if domain.N < 2:
        return []
    fr = frames(domain, M)
    kap = F.holonomy_forms(domain, -1, M)
    lam = F.holonomy_forms(domain, +1, M)
    A = np.array([[F.spectral.integral(k[c], fr.T[c]) for c in range(domain.N)] for k, _ in kap]).T
    B = np.array([[F.spectral.integral(k[c], fr.T[c]) for c in range(domain.N)] for k, _ in lam]).T
    P = np.hstack([A, B])
    _, s, vt = np.linalg.svd(P)
    n = domain.N - 1
    null = vt[-n:]
    # orthonormal null rows; express them in a canonical basis
    red = np.linalg.qr(null.T)[0].T
    out = []
    outer = domain.outer
    for row in red:
        a = sum(x * k for x, (k, _) in zip(row[:n], kap))
        b = sum(y * k for y, (k, _) in zip(row[n:], lam))
        pair = OneFormPair(domain, a, b)
        anchors = np.zeros(domain.N)
        for c in range(domain.N):
            if c == outer:
                continue
            target = np.array(domain.curves[c].position(0.0), float)
            anchors[c] = _reconstruct(domain, pair, outer, target, check_paths)
        u = F.rho_inverse(domain, pair, anchors, tol=1e-7, check=False)
        out.append(u)
    return out


def _reconstruct(domain, pair, outer, target, check_paths):
    base_t = 0.0
    base = (outer, base_t, 0.0)
    p0 = np.array(domain.curves[outer].position(base_t), float)
    w = F.find_path(domain, p0, target)
    val = F.interior_value(domain, pair, base, target, detour=w)
    if check_paths:
        w2 = F.find_path(domain, p0, target, avoid=w if w is not None else p0)
        val2 = F.interior_value(domain, pair, base, target, detour=w2)
        if abs(val - val2) > 1e-6 * max(1.0, abs(val)):
            raise FieldError(f"interior reconstruction is path dependent ({val} vs {val2})")
    return val


# ---------------------------------------------------------------- defects


def _rank(A, tol):
    if A.size == 0:
        return 0, np.zeros(0), 0.0
    s = np.linalg.svd(A, compute_uv=False)
    thr = tol * (s[0] if s.size and s[0] > 0 else 1.0)
    return int(np.sum(s > thr)), s, thr


def _gram(basis):
    X = np.array([np.concatenate([b.phi.ravel(), b.phin.ravel()]) for b in basis])
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def defect(domain: Domain, test: list, L: list, tol: float = RANK_TOL):
    """dim(L-perp within span(test)) - dim L, by singular values."""
    rV, _, _ = _rank(_gram(test), tol)
    rL, _, _ = _rank(_gram(L), tol)
    Om = pairing_matrix(domain, test, L).matrix
    Om = Om / np.max(np.abs(Om)) if Om.size and np.max(np.abs(Om)) > 0 else Om
    rO, s, thr = _rank(Om, tol)
    return rV - rO - rL, rV - rO, rL, s, thr, rV


def truncated_reduction(domain: Domain, K: int = 8, M: int = 1024,
                        tol: float = RANK_TOL, completed: bool = False) -> DefectReport:
    """Truncated defect dim(L_h-perp) - dim(L_h).

    Test space: global-solution traces, their anti-invariant duals, the
    locally constant fields and the holonomy elements. With
    ``completed=False`` L_h is spanned by the global solutions (expected
    defect 2(N-1)); with ``completed=True`` the holonomy elements are
    added (expected defect 0).
    """
    t0 = time.perf_counter()
    G = glob_basis(domain, K, M)
    C = complement_basis(domain, K, M)
    LC = locally_constant_basis(domain, M)
    H = holonomy_L_basis(domain, M)
    test = G + C + LC + H
    L = G + H if completed else G
    d, dperp, dL, s, thr, rV = defect(domain, test, L, tol)
    extra = {
        "defect_completed" if completed else "defect_glob": d,
        "isotropy": isotropy_residual(domain, G + H),
        "runtime_s": round(time.perf_counter() - t0, 3),
        "N": domain.N,
    }
    if not completed:
        d2, _, _, _, _, _ = defect(domain, test, G + H, tol)
        extra["defect_completed"] = d2
    return DefectReport(dL, dperp, d, list(s), float(thr), rV, K, M, extra)


# ---------------------------------------------------------------- conformal maps


ETA = np.diag([1.0, -1.0])


def conformal_matrix(kind: str, param: float = 0.0) -> np.ndarray:
    if kind == "translation" or kind == "identity":
        return np.eye(2)
    if kind == "scaling":
        return float(param) * np.eye(2)
    if kind == "boost":
        c, s = math.cosh(param), math.sinh(param)
        return np.array([[c, s], [s, c]])
    raise ValueError(f"unknown conformal map {kind!r}")


def conformal_push(A, b, domain: Domain, u: BoundaryField | None = None):
    """Push a domain (and optionally a field) forward by p -> A p + b.

    phi is transported unchanged in the parameter t; phi_n is recomputed
    from the transported gradient and the new outward normal."""
    A = np.asarray(A, float)
    G = A.T @ ETA @ A
    lam = G[0, 0]
    if not (lam > 0 and np.allclose(G, lam * ETA, atol=1e-12 * max(1.0, lam))):
        raise ValueError("map is not conformal for the Minkowski metric")
    curves = tuple(c.affine(A, b) for c in domain.curves)
    src = dict(domain.source)
    src["pushed"] = {"A": A.tolist(), "b": list(map(float, b))}
    new = Domain(curves, domain.outer, domain.metric, src)
    if u is None:
        return new, None
    fr = frames(domain, u.M)
    fr2 = frames(new, u.M)
    pt = u.dphi()
    tx, ty = fr.xd / fr.v, fr.yd / fr.v
    gx = pt / fr.v * tx + u.phin * fr.nx
    gy = pt / fr.v * ty + u.phin * fr.ny
    Ai = np.linalg.inv(A).T
    hx = Ai[0, 0] * gx + Ai[0, 1] * gy
    hy = Ai[1, 0] * gx + Ai[1, 1] * gy
    return new, BoundaryField(new, u.phi.copy(), hx * fr2.nx + hy * fr2.ny)
