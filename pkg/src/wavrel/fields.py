"""Boundary fields, the characteristic forms (alpha, beta) and elements of L.

A boundary field is a pair (phi, phi_n) sampled on a uniform grid of every
component; phi_n is the derivative along the Euclidean outward normal. The
map rho sends it to the pair of densities

    alpha = ((1 - sin 2th) phi_t + v cos 2th phi_n) / 2
    beta  = ((1 + sin 2th) phi_t - v cos 2th phi_n) / 2

which on solutions F(s+) + G(s-) are the boundary traces of dF and dG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from shapely import contains_xy
from shapely.geometry import LineString, Point, Polygon
from shapely.prepared import prep

from . import spectral
from .characteristics import _wrap, direction, trace_many, _crossings_other, _sgn
from .geometry import Domain, DomainError, frame_arrays, light_points

MIN_M = 64
QUARTER = 0.25 * math.pi


class FieldError(ValueError):
    pass


# ---------------------------------------------------------------- frames


class _Frames:
    """Per-grid frame data for a domain (x, y, theta, v, kappa, ...)."""

    def __init__(self, domain: Domain, M: int):
        self.M = M
        self.T = np.array([c.T for c in domain.curves])
        self.t = np.array([c.grid(M) for c in domain.curves])
        arr = [frame_arrays(c, c.grid(M)) for c in domain.curves]
        self.x, self.y, self.xd, self.yd, self.theta, self.v, self.kappa = (
            np.array([a[i] for a in arr]) for i in range(7))
        self.c2 = (self.yd**2 - self.xd**2) / self.v**2
        self.s2 = -2.0 * self.xd * self.yd / self.v**2
        self.nx, self.ny = self.yd / self.v, -self.xd / self.v
        self.light = light_points(domain)


_CACHE: dict = {}


def frames(domain: Domain, M: int) -> _Frames:
    key = (id(domain), M)
    hit = _CACHE.get(key)
    if hit is None or hit[0] is not domain:
        hit = (domain, _Frames(domain, M))
        _CACHE[key] = hit
    return hit[1]


def involution_grid(domain: Domain, sign, M: int):
    """E_sign evaluated at every grid point: arrays (target comp, target t)
    of shape (N, M); light points of the matching class carry component -1."""
    key = ("inv", id(domain), M, _sgn(sign))
    hit = _CACHE.get(key)
    if hit is not None and hit[0] is domain:
        return hit[1]
    fr = frames(domain, M)
    N = domain.N
    tc = np.full((N, M), -1, int)
    tt = np.full((N, M), np.nan)
    lab = "-" if _sgn(sign) < 0 else "+"
    for c in range(N):
        keep = np.ones(M, bool)
        for lp in fr.light:
            if lp.component == c and lp.sign == lab:
                keep &= np.abs(_wrap(fr.t[c] - lp.t, fr.T[c])) > 1e-6 * fr.T[c]
        r = trace_many(domain, np.full(int(keep.sum()), c), fr.t[c][keep], sign)
        tc[c, keep], tt[c, keep] = r
    _CACHE[key] = (domain, (tc, tt))
    return tc, tt


def image_points(domain: Domain, sign, M: int):
    """Plane coordinates of E_sign applied to every grid point (NaN at
    light points)."""
    tc, tt = involution_grid(domain, sign, M)
    X = np.full(tc.shape, np.nan)
    Y = np.full(tc.shape, np.nan)
    for k in range(domain.N):
        m = tc == k
        if np.any(m):
            X[m], Y[m] = domain.curves[k].position(tt[m])
    return X, Y


# ---------------------------------------------------------------- types


@dataclass
class BoundaryField:
    """(phi, phi_n) on uniform grids, arrays of shape (N, M)."""

    domain: Domain
    phi: np.ndarray
    phin: np.ndarray
    coeffs: dict | None = None

    def __post_init__(self):
        self.phi = np.atleast_2d(np.asarray(self.phi, float))
        self.phin = np.atleast_2d(np.asarray(self.phin, float))
        if self.phi.shape != self.phin.shape or self.phi.shape[0] != self.domain.N:
            raise FieldError("field arrays must have shape (N, M)")
        if self.phi.shape[1] < MIN_M:
            raise FieldError(f"grid size must be at least {MIN_M}")

    @property
    def M(self) -> int:
        return self.phi.shape[1]

    def __add__(self, other):
        return BoundaryField(self.domain, self.phi + other.phi, self.phin + other.phin)

    def __sub__(self, other):
        return BoundaryField(self.domain, self.phi - other.phi, self.phin - other.phin)

    def __mul__(self, a: float):
        return BoundaryField(self.domain, a * self.phi, a * self.phin)

    __rmul__ = __mul__

    def norm(self) -> float:
        fr = frames(self.domain, self.M)
        w = fr.v * (fr.T / self.M)[:, None]
        return float(np.sqrt(np.sum(w * (self.phi**2 + self.phin**2))))

    def dphi(self) -> np.ndarray:
        fr = frames(self.domain, self.M)
        return np.array([spectral.derivative(self.phi[c], fr.T[c]) for c in range(self.domain.N)])


@dataclass
class OneFormPair:
    """Densities (alpha, beta) against dt, arrays of shape (N, M)."""

    domain: Domain
    alpha: np.ndarray
    beta: np.ndarray

    @property
    def M(self) -> int:
        return self.alpha.shape[1]

    def __add__(self, other):
        return OneFormPair(self.domain, self.alpha + other.alpha, self.beta + other.beta)

    def __mul__(self, a: float):
        return OneFormPair(self.domain, a * self.alpha, a * self.beta)

    __rmul__ = __mul__


@dataclass
class LFieldWitness:
    f: np.ndarray
    g: np.ndarray
    holonomy: list = field(default_factory=list)


# ---------------------------------------------------------------- helpers


def sample(domain: Domain, fn, M: int) -> np.ndarray:
    """Grid values of ``fn`` given as callable(comp, t), callable(x, y)
    on the plane (``plane=True`` attribute), a constant or an (N, M) array."""
    if callable(fn):
        fr = frames(domain, M)
        if getattr(fn, "plane", False):
            return np.asarray(fn(fr.x, fr.y), float)
        return np.array([np.asarray(fn(c, fr.t[c]), float) * np.ones(M) for c in range(domain.N)])
    arr = np.asarray(fn, float)
    if arr.ndim == 0:
        return np.full((domain.N, M), float(arr))
    return np.atleast_2d(arr)


def plane(fn: Callable) -> Callable:
    """Mark a callable as a function of plane coordinates (x, y)."""
    fn.plane = True
    return fn


def _cot_weight(theta, sign):
    # cot(theta - pi/4) for sign "-", cot(theta + pi/4) for sign "+"
    return 1.0 / np.tan(theta - QUARTER) if sign < 0 else 1.0 / np.tan(theta + QUARTER)


def _regular_product(domain, M, dens, sign, check=True, tol=1e-6):
    """cot(theta -+ pi/4) * dens on the grid with the removable singularity
    at the light points of the matching class filled by two-sided
    polynomial extrapolation."""
    fr = frames(domain, M)
    lab = "-" if sign < 0 else "+"
    with np.errstate(divide="ignore", invalid="ignore"):
        out = _cot_weight(fr.theta, sign) * dens
    for lp in fr.light:
        if lp.sign != lab:
            continue
        c = lp.component
        curve = domain.curves[c]
        T = fr.T[c]
        h = T / M
        j = np.arange(1, 6)
        ts = np.concatenate([lp.t - j[::-1] * h, lp.t + j * h])
        th = frame_arrays(curve, ts)[4]
        vals = _cot_weight(th, sign) * spectral.evaluate(dens[c], T, ts)
        x = ts - lp.t
        near = np.nonzero(np.abs(_wrap(fr.t[c] - lp.t, T)) < 1.5 * h)[0]
        if near.size == 0:
            continue
        coef = np.polyfit(x / h, vals, 9)
        d = _wrap(fr.t[c][near] - lp.t, T)
        out[c, near] = np.polyval(coef, d / h)
        if check:
            left = np.polyval(np.polyfit(x[:5] / h, vals[:5], 4), 0.0)
            right = np.polyval(np.polyfit(x[5:] / h, vals[5:], 4), 0.0)
            scale = max(1.0, float(np.max(np.abs(dens[c]))))
            if abs(left - right) > tol * scale:
                raise FieldError(
                    f"one-sided limits disagree at light point t={lp.t:.6g} "
                    f"(component {c}): {left:.3e} vs {right:.3e}")
    return out


def _phin_from_forms(domain, M, a, b, check=True):
    fr = frames(domain, M)
    qa = _regular_product(domain, M, a, -1, check)
    qb = _regular_product(domain, M, b, +1, check)
    return -(qa + qb) / fr.v


def pullback(domain: Domain, sign, dens: np.ndarray) -> np.ndarray:
    """Density of E_sign^* of a 1-form given as densities on the grid."""
    M = dens.shape[1]
    tc, tt = involution_grid(domain, sign, M)
    fr = frames(domain, M)
    out = np.full(dens.shape, np.nan)
    d = direction(sign)
    for c in range(domain.N):
        for k in range(domain.N):
            m = tc[c] == k
            if not np.any(m):
                continue
            val = spectral.evaluate(dens[k], fr.T[k], tt[c, m])
            v1 = domain.curves[k].velocity(tt[c, m])
            jac = ((d[0] * fr.yd[c, m] - d[1] * fr.xd[c, m])
                   / (d[0] * v1[1] - d[1] * v1[0]))
            out[c, m] = val * jac
    return out


def compose(domain: Domain, sign, h: np.ndarray) -> np.ndarray:
    """Grid values of h o E_sign (NaN at light points)."""
    M = h.shape[1]
    tc, tt = involution_grid(domain, sign, M)
    fr = frames(domain, M)
    out = np.full(h.shape, np.nan)
    for c in range(domain.N):
        for k in range(domain.N):
            m = tc[c] == k
            if np.any(m):
                out[c, m] = spectral.evaluate(h[k], fr.T[k], tt[c, m])
    return out


def _fill_nan(arr):
    out = arr.copy()
    M = arr.shape[1]
    for c in range(arr.shape[0]):
        bad = np.nonzero(np.isnan(arr[c]))[0]
        for i in bad:
            left = [arr[c, (i - j) % M] for j in range(1, 5)]
            right = [arr[c, (i + j) % M] for j in range(1, 5)]
            if np.any(np.isnan(left)) or np.any(np.isnan(right)):
                continue
            xs = np.array([-4, -3, -2, -1, 1, 2, 3, 4], float)
            ys = np.array(left[::-1] + right)
            out[c, i] = np.polyval(np.polyfit(xs, ys, 7), 0.0)
    return out


# ---------------------------------------------------------------- operations


def project_invariant(domain: Domain, sign, h, M: int = 1024) -> np.ndarray:
    """E_sign-symmetrization (h + h o E) / 2, light-point samples filled by
    matched one-sided extrapolation."""
    h = sample(domain, h, M)
    return _fill_nan(0.5 * (h + compose(domain, sign, h)))


def invariance_residual(domain: Domain, sign, h: np.ndarray, exclude: float = 0.0) -> float:
    """max |h o E - h| over grid points (optionally away from I')."""
    r = np.abs(compose(domain, sign, h) - h)
    if exclude > 0:
        r = _mask_exceptional(domain, sign, r, exclude)
    return float(np.nanmax(r)) if np.any(np.isfinite(r)) else 0.0


def _mask_exceptional(domain, sign, r, width):
    from .characteristics import exceptional_set

    M = r.shape[1]
    fr = frames(domain, M)
    r = r.copy()
    for (c, t, _) in exceptional_set(domain, sign, fr.light):
        near = np.abs(_wrap(fr.t[c] - t, fr.T[c])) < width * fr.T[c]
        r[c, near] = np.nan
    return r


def make_L_field(domain: Domain, f, g, M: int = 1024, validate: bool = True,
                 tol: float = 1e-6) -> BoundaryField:
    """Element of L generated by an E- invariant f and an E+ invariant g.

    phi = f + g and phi_n = -(cot(th - pi/4) f_t + cot(th + pi/4) g_t) / v,
    with the cotangent singularities resolved by one-sided extrapolation.

    Parameters
    ----------
    f, g : callable(comp, t), plane callable (see :func:`plane`), constant,
        or (N, M) array.
    validate : bool
        Check invariance of f and g against the sampled involutions.
    """
    F = sample(domain, f, M)
    G = sample(domain, g, M)
    if validate:
        for sgn, h, name in ((-1, F, "f"), (+1, G, "g")):
            if np.ptp(h) == 0:
                continue
            res = invariance_residual(domain, sgn, h, exclude=2.0 / M)
            if res > tol * max(1.0, float(np.max(np.abs(h)))):
                raise FieldError(f"{name} is not invariant (residual {res:.2e})")
    fr = frames(domain, M)
    Ft = np.array([spectral.derivative(F[c], fr.T[c]) for c in range(domain.N)])
    Gt = np.array([spectral.derivative(G[c], fr.T[c]) for c in range(domain.N)])
    phin = _phin_from_forms(domain, M, Ft, Gt)
    return BoundaryField(domain, F + G, phin)


def rho(domain: Domain, u: BoundaryField) -> OneFormPair:
    """(phi, phi_n) -> (alpha, beta)."""
    fr = frames(domain, u.M)
    pt = u.dphi()
    a = 0.5 * ((1 - fr.s2) * pt + fr.v * fr.c2 * u.phin)
    b = 0.5 * ((1 + fr.s2) * pt - fr.v * fr.c2 * u.phin)
    return OneFormPair(domain, a, b)


def rho_inverse(domain: Domain, pair: OneFormPair, anchors, tol: float = 1e-8,
                check: bool = True) -> BoundaryField:
    """Recover (phi, phi_n) from (alpha, beta) and phi(t=0) per component."""
    M = pair.M
    fr = frames(domain, M)
    s = pair.alpha + pair.beta
    anchors = np.broadcast_to(np.asarray(anchors, float), (domain.N,))
    phi = np.empty_like(s)
    for c in range(domain.N):
        per = spectral.integral(s[c], fr.T[c])
        scale = max(1.0, float(np.sum(np.abs(s[c])) * fr.T[c] / M))
        if abs(per) > tol * scale:
            raise FieldError(f"alpha + beta is not exact on component {c} (period {per:.3e})")
        phi[c] = anchors[c] + spectral.cumulative(s[c] - per / fr.T[c], fr.T[c])
    phin = _phin_from_forms(domain, M, pair.alpha, pair.beta, check)
    return BoundaryField(domain, phi, phin)


def trace_solution(domain: Domain, F, dF, G, dG, M: int = 1024) -> BoundaryField:
    """Trace of the global solution F(y + x) + G(y - x)."""
    fr = frames(domain, M)
    sp, sm = fr.y + fr.x, fr.y - fr.x
    phi = F(sp) + G(sm)
    gx = dF(sp) - dG(sm)
    gy = dF(sp) + dG(sm)
    return BoundaryField(domain, phi, gx * fr.nx + gy * fr.ny)


def trace_plane(domain: Domain, fun, grad, M: int = 1024) -> BoundaryField:
    """Trace (value, outward normal derivative) of a plane function."""
    fr = frames(domain, M)
    gx, gy = grad(fr.x, fr.y)
    return BoundaryField(domain, fun(fr.x, fr.y), gx * fr.nx + gy * fr.ny)


def L_residual(domain: Domain, u: BoundaryField, exclude: float | None = None) -> float:
    """Membership residual for L: invariance of rho(u) under the pullbacks,
    relative to the size of rho(u)."""
    p = rho(domain, u)
    ex = 2.0 / u.M if exclude is None else exclude
    ra = np.abs(pullback(domain, -1, p.alpha) - p.alpha)
    rb = np.abs(pullback(domain, +1, p.beta) - p.beta)
    ra = _mask_exceptional(domain, -1, ra, ex)
    rb = _mask_exceptional(domain, +1, rb, ex)
    scale = max(1e-300, float(np.max(np.abs(p.alpha)) + np.max(np.abs(p.beta))))
    return float(max(np.nanmax(ra), np.nanmax(rb)) / scale)


# ---------------------------------------------------------------- interior


def _polygon(domain: Domain, n=1024) -> Polygon:
    rings = [np.column_stack(c.position(c.grid(n))) for c in domain.curves]
    holes = [r for i, r in enumerate(rings) if i != domain.outer]
    return Polygon(rings[domain.outer], holes)


def point_hits(domain: Domain, P: np.ndarray, sign, G: int = 1024):
    """For interior points P (n, 2): the two boundary ends of the null line
    of the given sign, as arrays (comp, t) for the backward and forward ends."""
    d = direction(sign)
    D = np.tile(d, (P.shape[0], 1))
    rows_all, comp_all, t_all = [], [], []
    for c, curve in enumerate(domain.curves):
        r, t, _ = _crossings_other(curve, P, D, G)
        rows_all.append(r)
        comp_all.append(np.full(r.size, c))
        t_all.append(t)
    rows = np.concatenate(rows_all)
    comps = np.concatenate(comp_all)
    ts = np.concatenate(t_all)
    s = np.empty(ts.size)
    for c in range(domain.N):
        m = comps == c
        x, y = domain.curves[c].position(ts[m])
        rr = rows[m]
        s[m] = ((x - P[rr, 0]) * d[0] + (y - P[rr, 1]) * d[1]) / (d @ d)
    n = P.shape[0]
    out = []
    for key in (np.where(s < 0, -s, np.inf), np.where(s > 0, s, np.inf)):
        res = np.full((n, 2), np.nan)
        order = np.lexsort((key, rows))
        r_sorted = rows[order]
        first = np.ones(order.size, bool)
        first[1:] = r_sorted[1:] != r_sorted[:-1]
        pick = order[first]
        pick = pick[np.isfinite(key[pick])]
        res[rows[pick], 0] = comps[pick]
        res[rows[pick], 1] = ts[pick]
        out.append(res)
    return out[0], out[1]


def _track(domain, P, sign, dens, jump=0.05):
    """Accumulated change of the primitive along a densely sampled path,
    following a boundary foot of the null line continuously."""
    feet = point_hits(domain, P, sign)
    T = np.array([c.T for c in domain.curves])
    M = dens.shape[1]
    prims = [spectral.primitive(dens[c], T[c]) for c in range(domain.N)]
    drift = np.array([spectral.mean(dens[c]) for c in range(domain.N)])
    steps, vals = [], []
    for f in feet:
        val = np.full(f.shape[0], np.nan)
        for c in range(domain.N):
            m = f[:, 0] == c
            if np.any(m):
                val[m] = prims[c](f[m, 1])
        a, b = f[:-1], f[1:]
        ok = np.isfinite(a[:, 0]) & np.isfinite(b[:, 0]) & (a[:, 0] == b[:, 0])
        ca = np.where(ok, a[:, 0], 0).astype(int)
        raw = b[:, 1] - a[:, 1]
        dt = _wrap(raw, T[ca])
        ok &= np.abs(dt) <= jump * T[ca]
        step = val[1:] - val[:-1] + drift[ca] * (dt - raw)
        steps.append(np.where(ok, step, np.nan))
    side = 0 if np.isfinite(feet[0][0, 0]) else 1
    total = 0.0
    for k in range(P.shape[0] - 1):
        if not np.isfinite(steps[side][k]):
            side = 1 - side
            if not np.isfinite(steps[side][k]):
                raise FieldError("path crosses a tangency chain of the null foliation")
        total += steps[side][k]
    return float(total)


def _nudge_start(domain, base):
    c0, t0, _ = base
    curve = domain.curves[int(c0)]
    x0, y0 = (float(q) for q in curve.position(float(t0)))
    xd, yd = (float(q) for q in curve.velocity(float(t0)))
    vv = math.hypot(xd, yd)
    eps = 1e-11 * domain.diameter()
    return np.array([x0 - eps * yd / vv, y0 + eps * xd / vv])


def interior_value(domain: Domain, pair: OneFormPair, base, target, n: int = 240,
                   detour=None) -> float:
    """Reconstruct phi at an interior (or boundary) point by integrating the
    characteristic forms along the moving feet of the two null lines.

    Parameters
    ----------
    base : (component, t, phi value) of a boundary point
    target : (x, y)
    detour : optional intermediate point; the path is then a two-leg polyline
    """
    start = _nudge_start(domain, base)
    tgt = np.asarray(target, float)
    poly = _polygon(domain)
    slack = 1e-4 * domain.diameter()
    if not poly.buffer(slack).contains(Point(*tgt)):
        raise FieldError("target lies outside the domain")
    if not poly.contains(Point(*tgt)) or poly.boundary.distance(Point(*tgt)) < slack:
        # boundary target: approach a point just inside
        ring = poly.buffer(-slack).boundary
        tgt = np.array(ring.interpolate(ring.project(Point(*tgt))).coords[0])
    legs = [start, tgt] if detour is None else [start, np.asarray(detour, float), tgt]
    pts = []
    for a, b in zip(legs[:-1], legs[1:]):
        if not poly.buffer(slack).contains(LineString([a, b])):
            raise FieldError("path leaves the domain")
        s = np.linspace(0.0, 1.0, n)[:, None]
        seg = a + s * (b - a)
        pts.append(seg if not pts else seg[1:])
    P = np.vstack(pts)
    return float(base[2]) + _track(domain, P, -1, pair.alpha) + _track(domain, P, +1, pair.beta)


def find_path(domain: Domain, a, b, avoid=None, grid: int = 48):
    """Waypoint w such that a -> w -> b stays inside the domain (None when
    the straight segment already does). ``avoid`` excludes waypoints near
    a previous choice, giving a genuinely different second path."""
    poly = _polygon(domain)
    prepared = prep(poly)
    a, b = np.asarray(a, float), np.asarray(b, float)
    slack = 1e-4 * domain.diameter()
    if avoid is None and poly.buffer(slack).contains(LineString([a, b])):
        return None
    minx, miny, maxx, maxy = poly.bounds
    X, Y = np.meshgrid(np.linspace(minx, maxx, grid), np.linspace(miny, maxy, grid))
    W = np.column_stack([X.ravel(), Y.ravel()])
    inner = poly.buffer(-0.02 * domain.diameter())
    W = W[contains_xy(inner, W[:, 0], W[:, 1])]
    if avoid is not None:
        W = W[np.linalg.norm(W - np.asarray(avoid), axis=1) > 0.25 * domain.diameter()]
    cost = np.linalg.norm(W - a, axis=1) + np.linalg.norm(b - W, axis=1)
    fat = prep(poly.buffer(slack))
    for j in np.argsort(cost):
        w = W[j]
        if fat.contains(LineString([a, w])) and fat.contains(LineString([w, b])):
            return w
    raise FieldError("no interior path found")


# ---------------------------------------------------------------- holonomy


def bump(u, p: int = 8):
    """cos^(2p) bump density on (0, 1) with unit integral (C^(2p-1))."""
    u = np.asarray(u, float)
    out = np.where((u > 0) & (u < 1), np.cos(math.pi * (u - 0.5)) ** (2 * p), 0.0)
    return out * (4**p / math.comb(2 * p, p))


def _hole_order(domain):
    return [i for i in range(domain.N) if i != domain.outer] + [domain.outer]


def _grid_stretch(domain, tc, tt, src, M):
    """Image grid steps per source grid step under the sampled involution."""
    st = np.full(M, np.nan)
    for k in range(domain.N):
        m = tc[src] == k
        if np.any(m):
            Tk = domain.curves[k].T
            d = _wrap(np.roll(tt[src], -1) - np.roll(tt[src], 1), Tk) / 2.0
            st[m] = np.abs(d[m]) * M / Tk
    return st


def _best_window(ok, stretch, half):
    """Centre of the admissible window with the best-resolved image.
    Score: resolution (in grid points) of the worse-sampled side."""
    M = ok.size
    best = None
    for k in range(M):
        win = np.arange(k - half, k + half + 1) % M
        if not np.all(ok[win]):
            continue
        score = (2 * half + 1) * min(1.0, float(np.nanmin(stretch[win])))
        if best is None or score > best[0]:
            best = (score, k)
    return best


def holonomy_forms(domain: Domain, sign, M: int = 1024, width: float = 0.1):
    """Invariant bump 1-forms psi_i + E^* psi_i, one per hole.

    psi_i sits on an arc of hole i whose image lies in a later component
    (holes first, outer last). Since the form is symmetric under E, the
    bump may equally be placed on the image arc; the better-resolved
    placement is used.

    Returns a list of (alpha-like density array (N, M), hole index)."""
    if domain.N < 2:
        return []
    fr = frames(domain, M)
    tc, tt = involution_grid(domain, sign, M)
    order = _hole_order(domain)
    rank = {c: i for i, c in enumerate(order)}
    lab = "-" if _sgn(sign) < 0 else "+"

    from .characteristics import exceptional_set

    excl = exceptional_set(domain, sign, fr.light)

    def clear_of_light(c, ok, gap):
        for (cc, t, _) in excl:
            if cc == c:
                ok &= np.abs(_wrap(fr.t[c] - t, fr.T[c])) > gap
        return ok

    out = []
    full = int(math.ceil(0.5 * width * M))
    for i in order[:-1]:
        ok = np.array([tc[i, k] >= 0 and rank[tc[i, k]] > rank[i] for k in range(M)])
        ok = clear_of_light(i, ok, 0.6 * width * fr.T[i])
        cands = []
        a = _best_window(ok, _grid_stretch(domain, tc, tt, i, M), full)
        if a is not None:
            cands.append((a[0], i, a[1], full))
        for k in range(domain.N):
            if rank[k] <= rank[i]:
                continue
            okk = clear_of_light(k, tc[k] == i, 0.6 * width * fr.T[k])
            if not np.any(okk):
                continue
            run = _longest_run(okk)
            half = min(full, int(0.4 * run))
            if half < 4:
                continue
            b = _best_window(okk, _grid_stretch(domain, tc, tt, k, M), half)
            if b is not None:
                cands.append((b[0], k, b[1], half))
        if not cands:
            raise FieldError(f"ordering condition fails for component {i}")
        _, c, j, half = max(cands, key=lambda q: q[0])
        Tc = fr.T[c]
        wdt = (2 * half + 1) * Tc / M
        dens = np.zeros((domain.N, M))
        u = _wrap(fr.t[c] - fr.t[c][j], Tc) / wdt + 0.5
        dens[c] = bump(u) / wdt
        dens = dens + np.nan_to_num(pullback(domain, sign, dens))
        if c != i:
            dens = -dens  # unit period on the hole itself
        out.append((dens, i))
    return out


def _longest_run(mask):
    M = mask.size
    if mask.all():
        return M
    best = run = 0
    for k in range(2 * M):
        run = run + 1 if mask[k % M] else 0
        best = max(best, run)
    return min(best, M)


def holonomy_basis(domain: Domain, M: int = 1024) -> list:
    """N - 1 pairs (kappa_i, 0) with kappa_i invariant under E-."""
    return [OneFormPair(domain, k, np.zeros_like(k)) for k, _ in holonomy_forms(domain, -1, M)]


def periods(domain: Domain, pair: OneFormPair):
    """(integral of alpha, integral of beta) over every component."""
    fr = frames(domain, pair.M)
    a = np.array([spectral.integral(pair.alpha[c], fr.T[c]) for c in range(domain.N)])
    b = np.array([spectral.integral(pair.beta[c], fr.T[c]) for c in range(domain.N)])
    return a, b
