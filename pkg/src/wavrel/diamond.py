"""The light-like diamond, handled exactly in null coordinates.

The diamond is the box [s+0, s+1] x [s-0, s-1] in (s+, s-) = (y + x, y - x).
Vertices: a = (s+0, s-0) at the bottom, b = (s+1, s-0), c = (s+1, s-1) on
top and d = (s+0, s-1). Edges ab and dc run along s+, edges ad and bc
along s-.

Edge integrals use the Stieltjes trapezoid sum  sum (psi_i + psi_i+1)/2 *
(phi_i+1 - phi_i), which telescopes exactly: the discrete pairing is exactly
antisymmetric and the boundary form of phi dphi is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MIN_POINTS = 64
PERP_TOL = 1e-8


class DiamondError(ValueError):
    pass


@dataclass
class DiamondField:
    """Edge values of a boundary field on the diamond.

    ab, dc are sampled on a uniform s+ grid, ad, bc on a uniform s- grid.
    """

    box: tuple  # (sp0, sp1, sm0, sm1)
    ab: np.ndarray
    dc: np.ndarray
    ad: np.ndarray
    bc: np.ndarray

    def __post_init__(self):
        self.ab, self.dc, self.ad, self.bc = (np.asarray(a, float) for a in
                                              (self.ab, self.dc, self.ad, self.bc))
        if self.ab.size != self.dc.size or self.ad.size != self.bc.size:
            raise DiamondError("opposite edges need matching grids")
        if min(self.ab.size, self.ad.size) < MIN_POINTS:
            raise DiamondError(f"edge grids need at least {MIN_POINTS} points")
        v = self.vertices()
        scale = max(1.0, float(np.max(np.abs(v))))
        pairs = [(self.ab[0], self.ad[0]), (self.ab[-1], self.bc[0]),
                 (self.dc[-1], self.bc[-1]), (self.dc[0], self.ad[-1])]
        if any(abs(p - q) > 1e-12 * scale for p, q in pairs):
            raise DiamondError("edge values disagree at a vertex")

    def vertices(self) -> np.ndarray:
        """(phi_a, phi_b, phi_c, phi_d)."""
        return np.array([self.ab[0], self.ab[-1], self.dc[-1], self.dc[0]])

    def grids(self):
        sp0, sp1, sm0, sm1 = self.box
        return np.linspace(sp0, sp1, self.ab.size), np.linspace(sm0, sm1, self.ad.size)

    def _same(self, other):
        if self.box != other.box or self.ab.size != other.ab.size or self.ad.size != other.ad.size:
            raise DiamondError("grid mismatch")

    def __add__(self, o):
        self._same(o)
        return DiamondField(self.box, self.ab + o.ab, self.dc + o.dc, self.ad + o.ad, self.bc + o.bc)

    def __mul__(self, s):
        return DiamondField(self.box, s * self.ab, s * self.dc, s * self.ad, s * self.bc)

    __rmul__ = __mul__


def _stieltjes(psi, phi):
    return float(np.sum(0.5 * (psi[1:] + psi[:-1]) * np.diff(phi)))


def _edge_sum(u: DiamondField, w: DiamondField) -> float:
    """The oriented sum over edges of eps * psi dphi (eps = +1 on s+ edges),
    traversing a -> b -> c -> d -> a."""
    return (_stieltjes(w.ab, u.ab) - _stieltjes(w.bc, u.bc)
            - _stieltjes(w.dc, u.dc) + _stieltjes(w.ad, u.ad))


def diamond_omega(u: DiamondField, w: DiamondField) -> float:
    """2 * edge sum of eps psi dphi plus 2 (phi psi)_a - _b + _c - _d."""
    u._same(w)
    pa, pb, pc, pd = u.vertices()
    qa, qb, qc, qd = w.vertices()
    corner = pa * qa - pb * qb + pc * qc - pd * qd
    return 2.0 * _edge_sum(u, w) + 2.0 * corner


def diamond_L(f, g, box=(0.0, 1.0, 0.0, 1.0), n: int = 129) -> DiamondField:
    """Edge restrictions of f(s+) + g(s-)."""
    sp0, sp1, sm0, sm1 = box
    sp = np.linspace(sp0, sp1, n)
    sm = np.linspace(sm0, sm1, n)
    F = np.asarray(f(sp), float) * np.ones(n)
    G = np.asarray(g(sm), float) * np.ones(n)
    f0, f1 = F[0], F[-1]
    g0, g1 = G[0], G[-1]
    return DiamondField(tuple(map(float, box)), F + g0, F + g1, f0 + G, f1 + G)


def decomposition_residual(u: DiamondField):
    """Deviation of ab - dc and ad - bc from constants, plus (f, g)."""
    r1 = u.ab - u.dc
    r2 = u.ad - u.bc
    res = max(float(np.ptp(r1)), float(np.ptp(r2)))
    f = u.ab - u.ab[0]
    g = u.ad - u.ad[0]
    return res, f, g


def hj_action(u: DiamondField, tol: float = 1e-10, check: bool = True) -> float:
    """On-shell action 1/2 (-phi_a^2 + phi_b^2 - phi_c^2 + phi_d^2)."""
    res, _, _ = decomposition_residual(u)
    scale = max(1.0, float(np.max(np.abs(u.vertices()))))
    if res > tol * scale:
        raise DiamondError(f"field is not in L (decomposition residual {res:.2e})")
    a, b, c, d = u.vertices()
    val = 0.5 * (-a * a + b * b - c * c + d * d)
    if check:
        quad = 0.5 * _edge_sum(u, u)
        if abs(quad - val) > 1e-10 * max(1.0, abs(val)):
            raise DiamondError("vertex formula disagrees with the boundary quadrature")
    return float(val)


def boundary_action(u: DiamondField) -> float:
    """1/2 * edge sum of eps phi dphi."""
    return 0.5 * _edge_sum(u, u)


def bulk_action(f, g, box=(0.0, 1.0, 0.0, 1.0), n: int = 48, deg: int = 64) -> float:
    """Integral over the diamond of ((d_x phi)^2 - (d_y phi)^2) / 2 for
    phi = f(s+) + g(s-), by tensor Gauss-Legendre in null coordinates
    (dx dy = ds+ ds- / 2); f', g' from Chebyshev interpolants."""
    sp0, sp1, sm0, sm1 = box
    cheb = np.polynomial.chebyshev.Chebyshev
    df = cheb.interpolate(lambda s: np.asarray(f(s), float) * np.ones_like(s), deg, [sp0, sp1]).deriv()
    dg = cheb.interpolate(lambda s: np.asarray(g(s), float) * np.ones_like(s), deg, [sm0, sm1]).deriv()
    z, w = np.polynomial.legendre.leggauss(n)
    sp = 0.5 * (sp1 - sp0) * z + 0.5 * (sp1 + sp0)
    sm = 0.5 * (sm1 - sm0) * z + 0.5 * (sm1 + sm0)
    P, Q = np.meshgrid(sp, sm, indexing="ij")
    phx = df(P) - dg(Q)
    phy = df(P) + dg(Q)
    dens = 0.5 * (phx**2 - phy**2) * 0.5
    W = np.outer(w, w) * 0.25 * (sp1 - sp0) * (sm1 - sm0)
    return float(np.sum(W * dens))


def _legendre_L(box, n, K):
    """Basis of L from Legendre polynomials in each null coordinate."""
    sp0, sp1, sm0, sm1 = box
    out = []
    for k in range(K + 1):
        c = np.zeros(k + 1)
        c[k] = 1.0
        P = np.polynomial.legendre.Legendre(c, domain=[sp0, sp1])
        out.append(diamond_L(P, lambda s: 0.0 * s, box, n))
        if k:
            Q = np.polynomial.legendre.Legendre(c, domain=[sm0, sm1])
            out.append(diamond_L(lambda s: 0.0 * s, Q, box, n))
    return out


def diamond_perp_certificate(w: DiamondField, K: int = 8, tol: float = PERP_TOL) -> dict:
    """Coisotropy test: w is omega-orthogonal to L iff ab - dc and ad - bc are
    constant, in which case w lies in L. Otherwise an element of L with a
    nonzero pairing is exhibited."""
    res, f, g = decomposition_residual(w)
    scale = max(1.0, float(np.max(np.abs(np.concatenate([w.ab, w.dc, w.ad, w.bc])))))
    if res <= tol * scale:
        return {"class": "in L", "residual": res, "f": f, "g": g}
    n = w.ab.size
    if w.ad.size != n:
        raise DiamondError("certificate needs square edge grids")
    best = None
    for u in _legendre_L(w.box, n, K):
        val = diamond_omega(u, w)
        if best is None or abs(val) > abs(best[0]):
            best = (val, u)
    return {"class": "not in L-perp", "residual": res, "omega": float(best[0]), "witness": best[1]}


# ---------------------------------------------------------------- named functions


def named_function(spec: str):
    """Parse one of: id, const:c, sin:k, poly:c0,c1,..."""
    spec = spec.strip()
    if spec == "id":
        return lambda s: np.asarray(s, float)
    kind, _, arg = spec.partition(":")
    try:
        if kind == "const":
            c = float(arg)
            return lambda s: c + 0.0 * np.asarray(s, float)
        if kind == "sin":
            k = float(arg)
            return lambda s: np.sin(k * math.pi * np.asarray(s, float))
        if kind == "poly":
            coef = [float(x) for x in arg.split(",") if x.strip()]
            return lambda s: np.polynomial.polynomial.polyval(np.asarray(s, float), coef)
    except ValueError as exc:
        raise DiamondError(f"bad function argument {spec!r}") from exc
    raise DiamondError(f"unknown function {spec!r}; use id, const:c, sin:k or poly:c0,c1,...")
