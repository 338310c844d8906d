"""Null characteristics and the boundary involutions E+ and E-.

On Minkowski and conformally flat domains the null lines are straight with
direction (+-1, 1)/2; intersections with the boundary are found by bracketing
the signed crossing function ``cross(d, r(t) - p)`` on a parameter grid and
bisecting. All starts of a batch are processed together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .geometry import Domain, DomainError, LightPoint, light_points

GRID = 2048
BISECT_ITERS = 60
EPS_LIGHT = 1e-6  # exclusion radius around light points, in units of T
MISNER_Y_STOP = 1e-8
MISNER_SLOPE = 1e6


class TraceError(RuntimeError):
    pass


def direction(sign: str) -> np.ndarray:
    """Euclidean direction of the null field d_sign = (d_y + sign d_x)/2."""
    s = _sgn(sign)
    return np.array([0.5 * s, 0.5])


def _sgn(sign) -> int:
    if sign in ("+", "plus", 1, +1):
        return 1
    if sign in ("-", "minus", -1):
        return -1
    raise ValueError(f"sign must be + or -, got {sign!r}")


def sign_str(sign) -> str:
    return "+" if _sgn(sign) > 0 else "-"


@dataclass
class HitResult:
    outcome: str  # hit | asymptotic | escaped
    component: int | None = None
    t: float | None = None
    path: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))


# ---------------------------------------------------------------- core tracer


def _bisect(curve, P, D, lo, hi, flo, rows, deflate=None):
    """Vectorized bisection of h(t) = cross(D, r(t) - P) on [lo, hi]."""
    Px, Py = P[rows, 0], P[rows, 1]
    Dx, Dy = D[rows, 0], D[rows, 1]
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        x, y = curve.position(mid)
        h = Dx * (y - Py) - Dy * (x - Px)
        if deflate is not None:
            h = h / np.sin(math.pi * (mid - deflate) / curve.T)
        left = np.signbit(h) == np.signbit(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, h, flo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def _grid_size(curve, G):
    """Grid for bracketing: G caps a size scaled to the harmonic content."""
    if curve.kind == "diamond":
        return min(G, 512)
    n = max(1, (len(curve.cx) - 1) // 2)
    return int(min(G, max(512, 64 * n)))


_HULLS: dict = {}


def _hull(curve):
    """Centre and radius of a disk containing the curve."""
    hit = _HULLS.get(id(curve))
    if hit is None or hit[0] is not curve:
        x, y = curve.position(curve.grid(2048))
        cx, cy = float(np.mean(x)), float(np.mean(y))
        r = float(np.max(np.hypot(x - cx, y - cy)))
        # pad for the chord sag between samples
        hit = (curve, (cx, cy, r * 1.001 + 1e-12))
        _HULLS[id(curve)] = hit
    return hit[1]


def _crossings_other(curve, P, D, G):
    """Transversal and tangential line crossings with a component not
    containing the start point. Returns (rows, t, touch_flag)."""
    cx, cy, R = _hull(curve)
    dist = np.abs(D[:, 0] * (cy - P[:, 1]) - D[:, 1] * (cx - P[:, 0])) / np.hypot(D[:, 0], D[:, 1])
    near = np.nonzero(dist <= R)[0]
    if near.size < P.shape[0]:
        r, t, tch = _crossings_other_all(curve, P[near], D[near], G)
        return near[r], t, tch
    return _crossings_other_all(curve, P, D, G)


def _crossings_other_all(curve, P, D, G):
    if P.shape[0] == 0:
        return np.zeros(0, int), np.zeros(0), np.zeros(0, bool)
    G = _grid_size(curve, G)
    tg = curve.grid(G)
    x, y = curve.position(tg)
    xd, yd = curve.velocity(tg)
    H = D[:, :1] * (y[None, :] - P[:, 1:2]) - D[:, 1:2] * (x[None, :] - P[:, :1])
    Hp = D[:, :1] * yd[None, :] - D[:, 1:2] * xd[None, :]
    sH = np.signbit(H)
    sHn = np.roll(sH, -1, axis=1)
    rows, cols = np.nonzero(sH != sHn)
    out_r, out_t, out_touch = [], [], []
    if rows.size:
        lo = tg[cols]
        hi = lo + curve.T / G
        t = _bisect(curve, P, D, lo, hi, H[rows, cols], rows)
        out_r.append(rows)
        out_t.append(np.mod(t, curve.T))
        out_touch.append(np.zeros(rows.size, bool))
    # cells where h keeps its sign but h' flips: possible double crossing
    sP = np.signbit(Hp)
    r2, c2 = np.nonzero((sP != np.roll(sP, -1, axis=1)) & (sH == sHn))
    if r2.size:
        lo = tg[c2]
        hi = lo + curve.T / G
        flo = Hp[r2, c2]
        Dx, Dy = D[r2, 0], D[r2, 1]
        for _ in range(BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            vx, vy = curve.velocity(mid)
            hp = Dx * vy - Dy * vx
            left = np.signbit(hp) == np.signbit(flo)
            lo, flo, hi = np.where(left, mid, lo), np.where(left, hp, flo), np.where(left, hi, mid)
        tm = 0.5 * (lo + hi)
        x, y = curve.position(tm)
        hm = Dx * (y - P[r2, 1]) - Dy * (x - P[r2, 0])
        scale = np.hypot(D[r2, 0], D[r2, 1])
        touch = np.abs(hm) <= 1e-9 * scale
        split = (np.signbit(hm) != sH[r2, c2]) & ~touch
        if np.any(touch):
            out_r.append(r2[touch])
            out_t.append(np.mod(tm[touch], curve.T))
            out_touch.append(np.ones(int(touch.sum()), bool))
        if np.any(split):
            rs, cs, ms = r2[split], c2[split], tm[split]
            for a, b in ((tg[cs], ms), (ms, tg[cs] + curve.T / G)):
                xa, ya = curve.position(a)
                fa = D[rs, 0] * (ya - P[rs, 1]) - D[rs, 1] * (xa - P[rs, 0])
                t = _bisect(curve, P, D, a, b, fa, rs)
                out_r.append(rs)
                out_t.append(np.mod(t, curve.T))
                out_touch.append(np.zeros(rs.size, bool))
    if not out_r:
        return np.zeros(0, int), np.zeros(0), np.zeros(0, bool)
    return np.concatenate(out_r), np.concatenate(out_t), np.concatenate(out_touch)


def _crossings_self(curve, P, D, t0, G, double=False):
    """Crossings with the component containing the start point r(t0).

    The known root at t0 is divided out (sin^2 for a tangential start), and
    each row is sampled on its own grid (t0, t0 + T).
    """
    T = curve.T
    G = _grid_size(curve, G)
    # shared grid, rolled so each row starts just after its own t0
    base = curve.grid(G)
    bx, by = curve.position(base)
    j0 = np.searchsorted(base, np.mod(t0, T), side="right")
    idx = (j0[:, None] + np.arange(G)[None, :]) % G
    off = np.mod(base[idx] - t0[:, None], T)
    off = np.where(off <= 0, T, off)
    tg = t0[:, None] + off
    x, y = bx[idx], by[idx]
    H = D[:, :1] * (y - P[:, 1:2]) - D[:, 1:2] * (x - P[:, :1])
    s = np.sin(math.pi * off / T)
    # grid points within rounding of t0 carry no information
    s = np.where(np.abs(s) < 1e-12, np.nan, s)
    xd, yd = curve.velocity(t0)
    hp0 = D[:, 0] * yd - D[:, 1] * xd
    with np.errstate(invalid="ignore"):
        if double:
            xdd, ydd = curve.acceleration(t0)
            h20 = 0.5 * (D[:, 0] * ydd - D[:, 1] * xdd)
            Hd = H / s**2
            lim0 = lim1 = h20 * (T / math.pi) ** 2
        else:
            Hd = H / s
            lim0 = hp0 * T / math.pi
            lim1 = -lim0
    # drop uninformative samples by copying the neighbouring limit
    bad = np.isnan(Hd)
    if np.any(bad):
        Hd = np.where(bad & (off[:, :] < 0.5 * T), lim0[:, None], Hd)
        Hd = np.where(np.isnan(Hd), lim1[:, None], Hd)
    ext = np.concatenate([lim0[:, None], Hd, lim1[:, None]], axis=1)
    text = np.concatenate([t0[:, None], tg, (t0 + T)[:, None]], axis=1)
    sg = np.signbit(ext)
    rows, cols = np.nonzero(sg[:, :-1] != sg[:, 1:])
    if not rows.size:
        return np.zeros(0, int), np.zeros(0), np.zeros(0, bool)
    lo = text[rows, cols]
    hi = text[rows, cols + 1]
    Px, Py = P[rows, 0], P[rows, 1]
    Dx, Dy = D[rows, 0], D[rows, 1]
    flo = ext[rows, cols]
    t0r = t0[rows]
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        xm, ym = curve.position(mid)
        h = Dx * (ym - Py) - Dy * (xm - Px)
        sm = np.sin(math.pi * (mid - t0r) / T)
        with np.errstate(invalid="ignore", divide="ignore"):
            h = h / (sm**2 if double else sm)
        left = np.signbit(h) == np.signbit(flo)
        lo, flo, hi = np.where(left, mid, lo), np.where(left, h, flo), np.where(left, hi, mid)
    t = np.mod(0.5 * (lo + hi), T)
    return rows, t, np.zeros(rows.size, bool)


def line_crossings(domain: Domain, comp, t0, D, G=GRID, double=False):
    """All crossings of the lines through r_comp(t0) with direction D.

    Returns a list (per start) of arrays with columns (component, t, s,
    touch) where ``s`` is the signed line parameter in units of D.
    """
    comp = np.atleast_1d(np.asarray(comp, int))
    t0 = np.atleast_1d(np.asarray(t0, float))
    D = np.broadcast_to(np.asarray(D, float), (t0.size, 2)).copy()
    P = np.empty((t0.size, 2))
    for c in np.unique(comp):
        m = comp == c
        x, y = domain.curves[c].position(t0[m])
        P[m, 0], P[m, 1] = x, y
    recs = []
    for c, curve in enumerate(domain.curves):
        own = np.nonzero(comp == c)[0]
        other = np.nonzero(comp != c)[0]
        if own.size:
            r, t, tch = _crossings_self(curve, P[own], D[own], t0[own], G, double)
            recs.append((own[r], np.full(r.size, c), t, tch))
        if other.size:
            r, t, tch = _crossings_other(curve, P[other], D[other], G)
            recs.append((other[r], np.full(r.size, c), t, tch))
    rows = np.concatenate([r[0] for r in recs]) if recs else np.zeros(0, int)
    comps = np.concatenate([r[1] for r in recs]) if recs else np.zeros(0, int)
    ts = np.concatenate([r[2] for r in recs]) if recs else np.zeros(0)
    tch = np.concatenate([r[3] for r in recs]) if recs else np.zeros(0, bool)
    s = np.empty(ts.size)
    for c in np.unique(comps):
        m = comps == c
        x, y = domain.curves[c].position(ts[m])
        rr = rows[m]
        s[m] = ((x - P[rr, 0]) * D[rr, 0] + (y - P[rr, 1]) * D[rr, 1]) / np.sum(D[rr] ** 2, axis=1)
    out = []
    order = np.argsort(rows, kind="stable")
    rows, comps, ts, s, tch = rows[order], comps[order], ts[order], s[order], tch[order]
    bounds = np.searchsorted(rows, np.arange(t0.size + 1))
    for i in range(t0.size):
        a, b = bounds[i], bounds[i + 1]
        out.append(np.column_stack([comps[a:b], ts[a:b], s[a:b], tch[a:b]]))
    return out, P


def _inward_dirs(domain, comp, t0, sign):
    """Null direction at each start oriented into the domain."""
    d = direction(sign)
    D = np.tile(d, (t0.size, 1))
    for c in np.unique(comp):
        m = comp == c
        xd, yd = domain.curves[c].velocity(t0[m])
        # inward normal is the tangent turned left
        dot = -yd * d[0] + xd * d[1]
        D[m] *= np.where(dot < 0, -1.0, 1.0)[:, None]
    return D


def trace_many(domain: Domain, comp, t0, sign, G=GRID, chunk=256):
    """Batch version of :func:`trace_null` returning (target comp, target t).

    Rows whose ray is tangent to the boundary at the start are reported with
    component -1.
    """
    comp = np.atleast_1d(np.asarray(comp, int))
    t0 = np.atleast_1d(np.asarray(t0, float))
    tc = np.full(t0.size, -1, int)
    tt = np.full(t0.size, np.nan)
    if domain.is_misner:
        raise TraceError("use misner tracing for the Misner cylinder")
    diam = domain.diameter()
    for a in range(0, t0.size, chunk):
        sl = slice(a, a + chunk)
        D = _inward_dirs(domain, comp[sl], t0[sl], sign)
        recs, _ = line_crossings(domain, comp[sl], t0[sl], D, G)
        dn = np.hypot(D[:, 0], D[:, 1])
        for i, rec in enumerate(recs):
            if not rec.size:
                continue
            ok = rec[:, 2] * dn[i] > 1e-9 * diam
            if not np.any(ok):
                continue
            j = np.argmin(np.where(ok, rec[:, 2], np.inf))
            tc[a + i] = int(rec[j, 0])
            tt[a + i] = rec[j, 1]
    return tc, tt


def trace_null(domain: Domain, start, sign, G=GRID) -> HitResult:
    """Follow the null line of the given sign from a boundary point.

    Parameters
    ----------
    start : (component, t) for plane domains, (component, x) for Misner
        where component 0 is y = -1 and 1 is y = +1.
    """
    comp, t = start
    if domain.is_misner:
        from .misner import misner_trace

        return misner_trace(float(t), sign, comp)
    curve = domain.curves[comp]
    xd, yd = curve.velocity(t)
    d = direction(sign)
    if abs(d[0] * yd - d[1] * xd) < 1e-12 * math.hypot(xd, yd):
        raise TraceError("start point is light-like: ray is tangent")
    tc, tt = trace_many(domain, [comp], [t], sign, G)
    if tc[0] < 0:
        raise TraceError("no boundary intersection found")
    p0 = np.array(curve.position(t), float)
    p1 = np.array(domain.curves[tc[0]].position(tt[0]), float)
    return HitResult("hit", int(tc[0]), float(tt[0]), np.vstack([p0, p1]))


# ---------------------------------------------------------------- involutions


def _map_derivative(domain, c0, t0, c1, t1, sign):
    """dE/dt from implicit differentiation of cross(d, r1(t1) - r0(t0)) = 0."""
    d = direction(sign)
    v0 = domain.curves[c0].velocity(t0)
    v1 = domain.curves[c1].velocity(t1)
    return (d[0] * v0[1] - d[1] * v0[0]) / (d[0] * v1[1] - d[1] * v1[0])


@dataclass
class InvolutionMap:
    """Sampled involution E_sign with Newton polishing against the tracer."""

    domain: Domain
    sign: str
    grid: int
    t: list  # per component sample parameters
    target_comp: list
    target_t: list
    light: list
    exceptional: list = field(default_factory=list)  # [(comp, t)] of I'_sign
    oracle: str | None = None

    def __post_init__(self):
        self._segments = []
        for c in range(self.domain.N):
            self._segments.append(self._build_segments(c))

    def _build_segments(self, c):
        T = self.domain.curves[c].T
        ts, tc, tt = self.t[c], self.target_comp[c], self.target_t[c]
        segs = []
        ok = tc >= 0
        if not np.any(ok):
            return segs
        # split where the target component changes or the target jumps
        idx = np.nonzero(ok)[0]
        cur = [idx[0]]
        for i in idx[1:]:
            j = cur[-1]
            Tt = self.domain.curves[tc[j]].T
            jump = abs(_wrap(tt[i] - tt[j], Tt))
            gap = i - j
            if tc[i] == tc[j] and gap <= 2 and jump < 0.25 * Tt:
                cur.append(i)
            else:
                segs.append(cur)
                cur = [i]
        segs.append(cur)
        # merge the wrap-around piece
        if len(segs) > 1:
            a, b = segs[0], segs[-1]
            Tt = self.domain.curves[tc[a[0]]].T
            if (tc[a[0]] == tc[b[-1]] and a[0] + len(ts) - b[-1] <= 2
                    and abs(_wrap(tt[a[0]] - tt[b[-1]], Tt)) < 0.25 * Tt):
                segs[0] = b + a
                segs.pop()
        out = []
        for s in segs:
            s = np.array(s)
            x = ts[s].astype(float).copy()
            x[1:] = x[0] + np.cumsum(np.mod(np.diff(x), T))
            Tt = self.domain.curves[tc[s[0]]].T
            y = np.unwrap(tt[s], period=Tt)
            if len(s) >= 4:
                out.append((x[0], x[-1], int(tc[s[0]]), CubicSpline(x, y)))
            else:
                out.append((x[0], x[-1], int(tc[s[0]]), None, x, y))
        return out

    def _guess(self, c, t):
        T = self.domain.curves[c].T
        h = T / self.grid
        for seg in self._segments[c]:
            a, b = seg[0], seg[1]
            u = a + np.mod(t - a, T)
            # extrapolate past the ends only on segments closing the circle;
            # elsewhere an end may sit next to a jump of the map
            slack = 0.5 * h if b - a >= T - 1.5 * h else 0.0
            if u <= b + slack or u >= a + T - slack:
                if u > b + h:
                    u -= T
                if seg[3] is None:
                    y = np.interp(u, seg[4], seg[5])
                else:
                    y = float(seg[3](u))
                return seg[2], y
        return None, None

    def _fixed(self, c, t):
        """Singleton exceptional classes (convex light points) are fixed."""
        T = self.domain.curves[c].T
        for ec, et, order in self.exceptional:
            if order == 1 and ec == c and abs(_wrap(t - et, T)) < 1e-9 * T:
                return c, float(et)
        return None

    def __call__(self, c: int, t: float, polish: bool = True):
        """E_sign(c, t) as (component, t)."""
        fx = self._fixed(c, float(t))
        if fx is not None:
            return fx
        tc, tg = self._guess(c, float(t))
        if tc is None or not polish:
            if tc is None:
                r = trace_many(self.domain, [c], [t], self.sign)
                return int(r[0][0]), float(r[1][0])
            return tc, float(np.mod(tg, self.domain.curves[tc].T))
        res = _newton_polish(self.domain, c, float(t), tc, tg, self.sign)
        if res is None:
            r = trace_many(self.domain, [c], [t], self.sign)
            return int(r[0][0]), float(r[1][0])
        return tc, res

    def evaluate(self, c: int, t, polish: bool = True):
        t = np.atleast_1d(np.asarray(t, float))
        out = [self(c, s, polish) for s in t]
        return np.array([o[0] for o in out]), np.array([o[1] for o in out])

    def derivative(self, c: int, t):
        """dE/dt at parameter(s) t of component c."""
        t = np.atleast_1d(np.asarray(t, float))
        tc, tt = self.evaluate(c, t)
        out = np.empty(t.size)
        for k in np.unique(tc):
            m = tc == k
            out[m] = _map_derivative(self.domain, c, t[m], k, tt[m], self.sign)
        return out

    def class_order(self, c, t):
        T = self.domain.curves[c].T
        for ec, et, order in self.exceptional:
            if ec == c and abs(_wrap(t - et, T)) < 1e-9 * T:
                return order
        return 2

    def table_rows(self):
        rows = []
        ex = self.exceptional
        for c in range(self.domain.N):
            T = self.domain.curves[c].T
            for t, tc, tt in zip(self.t[c], self.target_comp[c], self.target_t[c]):
                order = 2
                for (ec, et, eo) in ex:
                    if ec == c and abs(_wrap(t - et, T)) < 1e-9 * T:
                        order = eo
                rows.append((c, float(t), int(tc), float(tt), order))
        return rows


def _wrap(x, T):
    return (x + 0.5 * T) % T - 0.5 * T


def _newton_polish(domain, c0, t0, c1, guess, sign, iters=8):
    d = direction(sign)
    x0, y0 = domain.curves[c0].position(t0)
    cur = domain.curves[c1]
    t = float(guess)
    for _ in range(iters):
        x, y = cur.position(t)
        xd, yd = cur.velocity(t)
        h = d[0] * (y - y0) - d[1] * (x - x0)
        hp = d[0] * yd - d[1] * xd
        if hp == 0:
            return None
        step = float(h / hp)
        t -= step
        if abs(step) < 1e-15 * cur.T:
            break
    x, y = cur.position(t)
    if abs(d[0] * (y - y0) - d[1] * (x - x0)) > 1e-11 * domain.diameter():
        return None
    if abs(_wrap(t - guess, cur.T)) > 1e-3 * cur.T:
        return None
    return float(np.mod(t, cur.T))


def involution_map(domain: Domain, sign, grid: int = 2048) -> InvolutionMap:
    """Sample E_sign on a uniform grid of every component.

    Samples within ``1e-6 T`` of a light point are dropped (NaN target);
    exceptional classes are attached from :func:`exceptional_set`.
    """
    if domain.is_misner:
        if _sgn(sign) < 0:
            raise TraceError("involution undefined: minus characteristics never return")
        raise TraceError("use misner module for the Misner cylinder")
    sign = sign_str(sign)
    lps = light_points(domain)
    ts_all, tc_all, tt_all = [], [], []
    for c, curve in enumerate(domain.curves):
        ts = curve.grid(grid)
        keep = np.ones(grid, bool)
        for lp in lps:
            if lp.component == c:
                keep &= np.abs(_wrap(ts - lp.t, curve.T)) > EPS_LIGHT * curve.T
        tc = np.full(grid, -1, int)
        tt = np.full(grid, np.nan)
        r = trace_many(domain, np.full(int(keep.sum()), c), ts[keep], sign)
        tc[keep], tt[keep] = r
        ts_all.append(ts)
        tc_all.append(tc)
        tt_all.append(tt)
    m = InvolutionMap(domain, sign, grid, ts_all, tc_all, tt_all, lps)
    m.exceptional = exceptional_set(domain, sign, lps)
    return m


# ---------------------------------------------------------------- classes


def _trace_through(domain, c, t, D, forward=True, double=False):
    """Nearest crossing beyond r_c(t) along +-D, skipping s ~ 0.

    ``double`` removes the double root of a tangent start."""
    recs, _ = line_crossings(domain, [c], [t], D[None, :], double=double)
    rec = recs[0]
    diam = domain.diameter()
    dn = float(np.hypot(*D))
    sgn = 1.0 if forward else -1.0
    ok = sgn * rec[:, 2] * dn > 1e-9 * diam
    if not np.any(ok):
        return None
    j = np.argmin(np.where(ok, sgn * rec[:, 2], np.inf))
    return int(rec[j, 0]), float(rec[j, 1]), bool(rec[j, 3])


def _tangent_class(domain, lp: LightPoint, sign):
    """Class of a light point of matching sign: trace both ways along the
    tangent line when the line enters the domain (kappa < 0)."""
    members = [(lp.component, lp.t)]
    if lp.kappa > 0:
        return members
    d = direction(sign)
    for fwd in (True, False):
        c, t = lp.component, lp.t
        for _ in range(16):
            r = _trace_through(domain, c, t, d, fwd, double=True)
            if r is None:
                break
            c, t, touch = r
            members.append((c, t))
            if not touch:
                break
    return members


def exceptional_set(domain: Domain, sign, lps=None) -> list:
    """Points of I'_sign as (component, t, class order)."""
    sign = sign_str(sign)
    lps = light_points(domain) if lps is None else lps
    out = []
    for lp in lps:
        if lp.sign != sign:
            continue
        cls = _tangent_class(domain, lp, sign)
        for (c, t) in cls:
            out.append((c, t, len(cls)))
    return out


def equivalence_class(domain: Domain, sign, p, max_size: int = 64) -> list:
    """The class of p under the relation generated by the sign-characteristics.

    Returns an ordered list of (component, t). Generic points give two
    members; light points of matching sign give one member (outer convex
    arcs) or a chain through tangencies of length three or more.
    """
    sign = sign_str(sign)
    c, t = int(p[0]), float(p[1])
    T = domain.curves[c].T
    for lp in light_points(domain):
        if lp.component == c and abs(_wrap(lp.t - t, T)) < 1e-9 * T and lp.sign == sign:
            return _tangent_class(domain, lp, sign)
    lpset = [lp for lp in light_points(domain) if lp.sign == sign]
    D = _inward_dirs(domain, np.array([c]), np.array([t]), sign)[0]
    members = [(c, t)]
    cur = (c, t)
    tangent = False
    for _ in range(max_size):
        r = _trace_through(domain, cur[0], cur[1], D, True, double=tangent)
        if r is None:
            break
        cc, tt, touch = r
        if not touch:
            for lp in lpset:
                Tc = domain.curves[cc].T
                if lp.component == cc and abs(_wrap(lp.t - tt, Tc)) < 1e-6 * Tc:
                    touch = True
                    tt = lp.t
        members.append((cc, tt))
        if not touch:
            return members
        cur = (cc, tt)
        tangent = True
    raise TraceError("equivalence class exceeds the configured bound")


# ---------------------------------------------------------------- oracles


def closed_form_oracle(shape: dict, sign, p):
    """Closed-form involutions of a centered disk or annulus.

    Points are ``(which, angle)`` with which in {"out", "in"} and the polar
    angle. The annulus formula picks the arccos branch by the side of the
    chord the ray leaves towards: ``s = sgn sin(angle +- pi/4)``.
    """
    s = _sgn(sign)
    which, th = p
    th = float(th)
    kind = shape.get("kind", "disk")
    if kind == "disk":
        return "out", float(np.mod(-s * 0.5 * math.pi - th, 2 * math.pi))
    r1, r2 = float(shape["r1"]), float(shape["r2"])
    q = s * 0.25 * math.pi
    if which == "in":
        br = 1.0 if math.sin(th + q) >= 0 else -1.0
        return "out", float(np.mod(-q + br * math.acos((r1 / r2) * math.cos(th + q)), 2 * math.pi))
    c = math.cos(th + q)
    if abs(c) >= r1 / r2:
        # chord misses the hole: same reflection as on the disk
        return "out", float(np.mod(-s * 0.5 * math.pi - th, 2 * math.pi))
    # nearest of the two hole crossings is the one mapping back to th
    cands = []
    for br in (1.0, -1.0):
        psi = -q + br * math.acos((r2 / r1) * c)
        _, back = closed_form_oracle(shape, sign, ("in", psi))
        cands.append((abs(_wrap(back - th, 2 * math.pi)), psi))
    return "in", float(np.mod(min(cands)[1], 2 * math.pi))
