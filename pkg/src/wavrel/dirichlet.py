"""Dirichlet-problem diagnostics from the dynamics of E+ E-.

A boundary field lies in the image of the Dirichlet map only if the
alternating sum of phi along every periodic orbit of E+ E- vanishes, and a
periodic arc produces functions invariant under both involutions, hence a
solution with zero Dirichlet trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import fields as F
from . import spectral
from .characteristics import _wrap, involution_map
from .geometry import Domain

BINS = 64
ORBIT_TOL = 1e-9
EXACT_LIMIT = 4000

_MAPS: dict = {}


class OrbitError(RuntimeError):
    pass


@dataclass
class OrbitRecord:
    start: tuple
    iterates: np.ndarray  # columns (component, t)
    period: int | None
    rotation: float | None
    discrepancy: float
    method: str = "polished"
    notes: list = field(default_factory=list)

    def to_dict(self, keep: int = 16) -> dict:
        return {
            "start": [int(self.start[0]), float(self.start[1])],
            "n": int(self.iterates.shape[0]),
            "first_iterates": self.iterates[:keep].tolist(),
            "period": self.period,
            "rotation_number": self.rotation,
            "discrepancy": self.discrepancy,
            "method": self.method,
            "notes": self.notes,
        }


def maps(domain: Domain, grid: int = 2048):
    """Cached (E-, E+) involution maps."""
    key = (id(domain), grid)
    hit = _MAPS.get(key)
    if hit is None or hit[0] is not domain:
        hit = (domain, involution_map(domain, "-", grid), involution_map(domain, "+", grid))
        _MAPS[key] = hit
    return hit[1], hit[2]


def step(domain: Domain, p, grid: int = 2048):
    """One application of E+ E- (E- first)."""
    em, ep = maps(domain, grid)
    c, t = em(int(p[0]), float(p[1]))
    if c is None or c < 0 or not np.isfinite(t):
        raise OrbitError(f"orbit hits an exceptional chain at {p}")
    c, t = ep(c, t)
    if c is None or c < 0 or not np.isfinite(t):
        raise OrbitError(f"orbit hits an exceptional chain at {p}")
    return int(c), float(t)


def _discrepancy(ts, T):
    h, _ = np.histogram(np.mod(ts, T), bins=BINS, range=(0.0, T))
    return float(np.max(np.abs(h / max(1, ts.size) - 1.0 / BINS)))


def _lift_spline(domain: Domain, comp: int, grid: int = 2048):
    """Periodic spline g with lift(E+ E-)(t) = t + g(t) on one component."""
    key = ("lift", id(domain), comp, grid)
    hit = _MAPS.get(key)
    if hit is not None and hit[0] is domain:
        return hit[1]
    T = domain.curves[comp].T
    em, ep = maps(domain, grid)
    ts = np.arange(grid) * (T / grid)
    c1, t1 = em.evaluate(comp, ts)
    img = np.empty(grid)
    for k in np.unique(c1):
        m = c1 == k
        c2, t2 = ep.evaluate(int(k), t1[m])
        if np.any(c2 != comp):
            raise OrbitError("orbit leaves the component")
        img[m] = t2
    lift = np.unwrap(img, period=T)
    lift -= T * math.floor(lift[0] / T + 1e-12)  # lift(0) in [0, T)
    g = lift - ts
    spl = CubicSpline(np.append(ts, T), np.append(g, g[0]), bc_type="periodic")
    _MAPS[key] = (domain, spl)
    return spl


def rotation_number(domain: Domain, component: int = 0, n_iter: int = 100000,
                    start: float = 0.0, grid: int = 2048):
    """Birkhoff average of the lifted displacement of E+ E- (in turns).

    Returns (rho, converged_delta) with delta = |rho_n - rho_{n/2}|."""
    T = domain.curves[component].T
    g = _lift_spline(domain, component, grid)
    x = float(start)
    half = None
    for k in range(1, n_iter + 1):
        x += float(g(x % T))
        if k == n_iter // 2:
            half = (x - start) / (k * T)
    rho = (x - start) / (n_iter * T)
    delta = abs(rho - half) if half is not None else float("nan")
    return float(rho % 1.0), float(delta)


def orbit(domain: Domain, p, n_iter: int = 100, grid: int = 2048,
          tol: float = ORBIT_TOL) -> OrbitRecord:
    """Iterate E+ E- from p = (component, t) and collect statistics.

    Short orbits (n_iter <= 4000) or multiply connected domains use the
    polished involutions; long orbits on a single component iterate the
    spline of the lifted composite map."""
    c0, t0 = int(p[0]), float(p[1])
    T0 = domain.curves[c0].T
    its = [(c0, t0 % T0)]
    period = None
    method = "polished"
    if n_iter <= EXACT_LIMIT or domain.N > 1:
        c, t = c0, t0
        for k in range(1, n_iter + 1):
            c, t = step(domain, (c, t), grid)
            its.append((c, t))
            if period is None and c == c0 and abs(_wrap(t - t0, T0)) < tol * T0:
                period = k
        arr = np.array(its, float)
        rot = None
        if domain.N == 1:
            rot, _ = rotation_number(domain, 0, min(n_iter, 20000), t0, grid)
    else:
        method = "lift-spline"
        g = _lift_spline(domain, c0, grid)
        x = t0
        ts = np.empty(n_iter + 1)
        ts[0] = t0
        for k in range(1, n_iter + 1):
            x += float(g(x % T0))
            ts[k] = x
        d = np.abs(_wrap(ts[1:] - t0, T0))
        hits = np.nonzero(d < tol * T0)[0]
        period = int(hits[0] + 1) if hits.size else None
        rot = float(((ts[-1] - t0) / (n_iter * T0)) % 1.0)
        arr = np.column_stack([np.full(n_iter + 1, c0), np.mod(ts, T0)])
    mine = arr[arr[:, 0] == c0, 1]
    return OrbitRecord((c0, t0), arr, period, rot, _discrepancy(mine, T0), method)


def dirichlet_existence_obstruction(domain: Domain, u, p, n: int,
                                    grid: int = 2048) -> float:
    """Alternating sum  sum_i phi(P^i p) - phi(E- P^i p),  P = E+ E-.

    ``u`` is a BoundaryField or callable(comp, t). Requires P^n p = p."""
    em, _ = maps(domain, grid)
    if isinstance(u, F.BoundaryField):
        T = np.array([c.T for c in domain.curves])
        phi = lambda c, t: float(spectral.evaluate(u.phi[c], T[c], t)[0])  # noqa: E731
    else:
        phi = lambda c, t: float(np.asarray(u(c, t)))  # noqa: E731
    c0, t0 = int(p[0]), float(p[1])
    T0 = domain.curves[c0].T
    c, t = c0, t0
    total = 0.0
    for _ in range(n):
        cm, tm = em(c, t)
        total += phi(c, t) - phi(cm, tm)
        c, t = step(domain, (c, t), grid)
    if c != c0 or abs(_wrap(t - t0, T0)) > ORBIT_TOL * T0 * 10:
        raise OrbitError(f"(E+E-)^{n} p != p (landed at {(c, t)})")
    return total


def _bump_fn(a, b, T):
    w = (b - a) % T

    def psi(t):
        u = np.mod(np.asarray(t, float) - a, T) / w
        return F.bump(u) * w * (math.comb(16, 8) / 4**8)  # peak value 1

    return psi


def dirichlet_kernel_field(domain: Domain, U=(0.1, 0.4), n: int = 2, M: int = 1024,
                           component: int = 0, grid: int = 2048, tol: float = 1e-7):
    """A nonzero element of L with zero Dirichlet trace.

    f = sum_i psi o (E- E+)^i + psi o (E- E+)^i o E-  is invariant under both
    involutions when every point of U has period n; the field is then the
    L element generated by (f, -f): phi = 0, phi_n != 0.

    Returns (field, f samples, (res_minus, res_plus))."""
    a, b = U
    T = domain.curves[component].T
    for q in np.linspace(a, b, 7):
        c, t = component, float(q)
        for _ in range(n):
            c, t = step(domain, (c, t), grid)
        if c != component or abs(_wrap(t - q, T)) > 1e-8 * T:
            raise OrbitError("no periodic arc: U is not made of period-n points")
    em, ep = maps(domain, grid)
    psi = _bump_fn(a, b, T)
    fr = F.frames(domain, M)
    f = np.zeros((domain.N, M))
    for c in range(domain.N):
        for j, t in enumerate(fr.t[c]):
            # f(x) = sum_i psi(Q^i x) + psi(E- Q^i x),  Q = E+ E-, walked
            # forward along the orbit; equal to the backward sum since Q^n = id
            cur = (c, float(t))
            acc = 0.0
            for _ in range(n):
                alt = em(*cur)
                for q in (cur, alt):
                    if q[0] == component:
                        acc += float(psi(q[1]))
                nxt = ep(*alt)
                cur = (int(nxt[0]), float(nxt[1]))
            f[c, j] = acc
    res = (F.invariance_residual(domain, -1, f, exclude=2.0 / M),
           F.invariance_residual(domain, +1, f, exclude=2.0 / M))
    if max(res) > tol * max(1.0, float(np.max(np.abs(f)))):
        raise OrbitError(f"kernel generator is not invariant (residuals {res})")
    u = F.make_L_field(domain, f, -f, M, validate=False)
    return u, f, res


def diagnose(domain: Domain, n_iter: int = 20000, samples: int = 16, seed: int = 0,
             grid: int = 2048) -> dict:
    """Verdict among no-uniqueness / no-existence / inconclusive."""
    rng = np.random.default_rng(seed)
    T = domain.curves[0].T
    out = {"kernel_found": False, "obstruction_samples": [], "rotation_number": None}
    periods = []
    for t in rng.uniform(0, T, samples):
        rec = orbit(domain, (0, float(t)), min(n_iter, 64), grid)
        periods.append(rec.period)
    if domain.N == 1:
        rho, delta = rotation_number(domain, 0, n_iter, 0.0, grid)
        out["rotation_number"] = rho
        out["rotation_delta"] = delta
    per = [p for p in periods if p]
    if per and len(per) == len(periods):
        n = max(set(per), key=per.count)
        t = float(rng.uniform(0, T))
        try:
            a = t
            u, _, _ = dirichlet_kernel_field(domain, (a, a + 0.05 * T), n, grid=grid)
            out["kernel_found"] = bool(np.max(np.abs(u.phin)) > 1e-6)
        except (OrbitError, F.FieldError):
            pass
        cos2 = lambda c, s: float(np.cos(2 * s))  # noqa: E731
        for t in rng.uniform(0, T, 4):
            try:
                out["obstruction_samples"].append(
                    dirichlet_existence_obstruction(domain, cos2, (0, float(t)), n, grid))
            except OrbitError:
                pass
    if out["kernel_found"]:
        verdict = "no-uniqueness"
    elif any(abs(v) > 1e-6 for v in out["obstruction_samples"]):
        verdict = "no-existence"
    else:
        verdict = "inconclusive"
    out["verdict"] = verdict
    out["periods"] = periods
    return out
