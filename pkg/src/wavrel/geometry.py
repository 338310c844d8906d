"""Boundary curves, Lorentzian metrics and domains on a plane chart.

Closed curves are stored as truncated real Fourier series in ``t`` (circles
and ellipses included) or as a null-edged diamond polygon. Orientation is
normalized at construction: the outer component runs counterclockwise and
holes run clockwise, so the domain always lies to the left of the tangent.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from shapely.geometry import LinearRing, Polygon

TWO_PI = 2.0 * math.pi
KAPPA_MIN = 1e-6


class DomainError(ValueError):
    """Malformed or unsupported domain description."""


class AssumptionBViolation(DomainError):
    """A boundary arc is light-like, so light points are not isolated."""


class AssumptionCViolation(DomainError):
    """Curvature vanishes at a light-like boundary point."""


# ---------------------------------------------------------------- curves


@dataclass(frozen=True)
class ParamCurve:
    """Smooth closed plane curve with period ``T``.

    For ``kind`` in {circle, ellipse, fourier} the coordinates are

        x(t) = cx[0] + sum_k cx[2k-1] cos(k w t) + cx[2k] sin(k w t)

    with ``w = 2 pi / T`` (same layout for y). The diamond kind is a
    piecewise linear chain through four vertices, one unit of ``t`` per edge.
    """

    kind: str
    cx: np.ndarray
    cy: np.ndarray
    T: float = TWO_PI
    params: dict = field(default_factory=dict)
    vertices: np.ndarray | None = None

    # evaluation -----------------------------------------------------------
    def _series(self, t, order):
        t = np.asarray(t, dtype=float)
        n = (len(self.cx) - 1) // 2
        w = TWO_PI / self.T
        k = np.arange(1, n + 1) * w
        ph = t[..., None] * k
        c, s = np.cos(ph), np.sin(ph)
        ax, bx = self.cx[1::2], self.cx[2::2]
        ay, by = self.cy[1::2], self.cy[2::2]
        if order == 0:
            x = self.cx[0] + c @ ax + s @ bx
            y = self.cy[0] + c @ ay + s @ by
        elif order == 1:
            x = (-s * k) @ ax + (c * k) @ bx
            y = (-s * k) @ ay + (c * k) @ by
        else:
            x = (-c * k**2) @ ax + (-s * k**2) @ bx
            y = (-c * k**2) @ ay + (-s * k**2) @ by
        return x, y

    def _polygon(self, t, order):
        t = np.mod(np.asarray(t, dtype=float), self.T)
        v = self.vertices
        i = np.minimum(np.floor(t).astype(int), 3)
        a, b = v[i], v[(i + 1) % 4]
        if order == 0:
            s = (t - i)[..., None]
            p = a + s * (b - a)
        elif order == 1:
            p = b - a
        else:
            p = np.zeros_like(a)
        return p[..., 0], p[..., 1]

    def position(self, t):
        return self._polygon(t, 0) if self.kind == "diamond" else self._series(t, 0)

    def velocity(self, t):
        return self._polygon(t, 1) if self.kind == "diamond" else self._series(t, 1)

    def acceleration(self, t):
        return self._polygon(t, 2) if self.kind == "diamond" else self._series(t, 2)

    def grid(self, M: int) -> np.ndarray:
        return np.arange(M) * (self.T / M)

    def reversed(self) -> "ParamCurve":
        """Same trace, opposite orientation: t -> -t."""
        if self.kind == "diamond":
            return ParamCurve(self.kind, self.cx, self.cy, self.T, dict(self.params),
                              self.vertices[[0, 3, 2, 1]])
        cx, cy = self.cx.copy(), self.cy.copy()
        cx[2::2] *= -1
        cy[2::2] *= -1
        p = dict(self.params)
        p["reversed"] = not p.get("reversed", False)
        return ParamCurve(self.kind, cx, cy, self.T, p)

    def affine(self, A, b) -> "ParamCurve":
        """Image under p -> A p + b; the parameter is unchanged."""
        A = np.asarray(A, float)
        b = np.asarray(b, float)
        if self.kind == "diamond":
            return ParamCurve("diamond", self.cx, self.cy, self.T, dict(self.params),
                              self.vertices @ A.T + b)
        cx = A[0, 0] * self.cx + A[0, 1] * self.cy
        cy = A[1, 0] * self.cx + A[1, 1] * self.cy
        cx[0] += b[0]
        cy[0] += b[1]
        return ParamCurve("fourier", cx, cy, self.T, {"from": self.kind})

    def signed_area(self, M: int = 2048) -> float:
        x, y = self.position(self.grid(M))
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def diameter(self, M: int = 512) -> float:
        x, y = self.position(self.grid(M))
        return float(max(np.ptp(x), np.ptp(y)) * math.sqrt(2.0))


def circle(r: float, center=(0.0, 0.0)) -> ParamCurve:
    if r <= 0:
        raise DomainError("circle radius must be positive")
    return ParamCurve("circle", np.array([center[0], r, 0.0]),
                      np.array([center[1], 0.0, r]), TWO_PI,
                      {"r": float(r), "center": [float(center[0]), float(center[1])]})


def ellipse(a: float, b: float, center=(0.0, 0.0)) -> ParamCurve:
    if a <= 0 or b <= 0:
        raise DomainError("ellipse semi-axes must be positive")
    return ParamCurve("ellipse", np.array([center[0], a, 0.0]),
                      np.array([center[1], 0.0, b]), TWO_PI,
                      {"a": float(a), "b": float(b), "center": list(map(float, center))})


def fourier_curve(cx: Sequence[float], cy: Sequence[float], T: float = TWO_PI) -> ParamCurve:
    cx = np.asarray(cx, float)
    cy = np.asarray(cy, float)
    n = max(len(cx), len(cy))
    if n % 2 == 0:
        n += 1
    cx = np.pad(cx, (0, n - len(cx)))
    cy = np.pad(cy, (0, n - len(cy)))
    return ParamCurve("fourier", cx, cy, float(T), {})


def diamond_curve(sp: Sequence[float], sm: Sequence[float]) -> ParamCurve:
    """Null diamond with vertices a, b, c, d in characteristic coordinates."""
    (p0, p1), (m0, m1) = sp, sm
    sig = np.array([[p0, m0], [p1, m0], [p1, m1], [p0, m1]], float)
    # x = (s+ - s-)/2, y = (s+ + s-)/2
    verts = np.column_stack([(sig[:, 0] - sig[:, 1]) / 2, (sig[:, 0] + sig[:, 1]) / 2])
    return ParamCurve("diamond", np.zeros(1), np.zeros(1), 4.0,
                      {"sp": [p0, p1], "sm": [m0, m1]}, verts)


# ---------------------------------------------------------------- metric


@dataclass(frozen=True)
class MetricField:
    kind: str = "minkowski"
    poly: np.ndarray | None = None

    def omega(self, x, y):
        """Conformal factor (1 unless kind is conformal)."""
        x = np.asarray(x, float)
        if self.kind != "conformal":
            return np.ones_like(x)
        return np.polynomial.polynomial.polyval2d(x, np.asarray(y, float), self.poly)

    def matrix(self, x, y) -> np.ndarray:
        """2x2 metric matrix at a single point."""
        if self.kind == "misner":
            return np.array([[-float(y), 0.5], [0.5, 0.0]])
        return float(self.omega(x, y)) * np.diag([1.0, -1.0])


# ---------------------------------------------------------------- domain


@dataclass(frozen=True)
class Domain:
    curves: tuple
    outer: int = 0
    metric: MetricField = field(default_factory=MetricField)
    source: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.curves)

    @property
    def is_misner(self) -> bool:
        return self.metric.kind == "misner"

    def diameter(self) -> float:
        return max(c.diameter() for c in self.curves)

    def digest(self) -> str:
        blob = json.dumps(self.source, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _parse_curve(spec: dict) -> ParamCurve:
    kind = spec.get("kind")
    if kind == "circle":
        return circle(float(spec["r"]), spec.get("center", (0.0, 0.0)))
    if kind == "ellipse":
        return ellipse(float(spec["a"]), float(spec["b"]), spec.get("center", (0.0, 0.0)))
    if kind == "fourier":
        return fourier_curve(spec["cx"], spec["cy"], float(spec.get("T", TWO_PI)))
    if kind == "diamond":
        return diamond_curve(spec["sp"], spec["sm"])
    raise DomainError(f"unknown curve kind {kind!r}")


def _parse_metric(spec) -> MetricField:
    if spec in (None, "minkowski"):
        return MetricField("minkowski")
    if spec == "misner":
        return MetricField("misner")
    if isinstance(spec, dict) and "conformal" in spec:
        poly = np.atleast_2d(np.asarray(spec["conformal"]["poly"], float))
        return MetricField("conformal", poly)
    raise DomainError(f"unknown metric {spec!r}")


def make_domain(spec: dict | str) -> Domain:
    """Validate a domain-spec document and build a :class:`Domain`.

    Parameters
    ----------
    spec : dict or str
        Parsed JSON document (or its text). See the README for the schema.

    Returns
    -------
    Domain
        Curves re-oriented so the outer curve is counterclockwise and holes
        are clockwise.

    Raises
    ------
    DomainError
        On unknown kinds, non-Lorentzian metrics, irregular or
        self-intersecting curves.
    """
    if isinstance(spec, str):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise DomainError(f"malformed domain JSON: {exc}") from exc
    if not isinstance(spec, dict):
        raise DomainError("domain spec must be a JSON object")
    metric = _parse_metric(spec.get("metric", "minkowski"))
    if metric.kind == "misner":
        # fixed cylinder S^1 x [-1, 1]; its two boundary circles live in misner.py
        return Domain((), 0, metric, spec)

    raw = spec.get("curves")
    if not raw:
        raise DomainError("domain needs at least one curve")
    curves = [_parse_curve(c) for c in raw]
    outer = int(spec.get("outer", 0))
    if not 0 <= outer < len(curves):
        raise DomainError("outer index out of range")

    for c in curves:
        _, _ = c.position(0.0)
        vx, vy = c.velocity(c.grid(1024))
        if np.min(np.hypot(vx, vy)) <= 1e-12:
            raise DomainError("irregular curve: zero speed")
        x, y = c.position(c.grid(1024))
        if not LinearRing(np.column_stack([x, y])).is_simple:
            raise DomainError("self-intersecting curve")

    normed = []
    for i, c in enumerate(curves):
        a = c.signed_area()
        want_ccw = i == outer
        normed.append(c if (a > 0) == want_ccw else c.reversed())

    if len(normed) > 1:
        rings = [np.column_stack(c.position(c.grid(512))) for c in normed]
        holes = [r for i, r in enumerate(rings) if i != outer]
        if not Polygon(rings[outer], holes).is_valid:
            raise DomainError("holes must be disjoint and inside the outer curve")

    if metric.kind == "conformal":
        xs, ys = [], []
        for c in normed:
            x, y = c.position(c.grid(256))
            xs.append(x)
            ys.append(y)
        x0, x1 = min(map(np.min, xs)), max(map(np.max, xs))
        y0, y1 = min(map(np.min, ys)), max(map(np.max, ys))
        gx, gy = np.meshgrid(np.linspace(x0, x1, 33), np.linspace(y0, y1, 33))
        if np.min(metric.omega(gx, gy)) <= 0:
            raise DomainError("metric not Lorentzian: conformal factor must be positive")

    return Domain(tuple(normed), outer, metric, spec)


# ---------------------------------------------------------------- frames


def frame_arrays(curve: ParamCurve, t):
    """Vectorized frame: (x, y, xd, yd, theta mod pi, v, kappa)."""
    x, y = curve.position(t)
    xd, yd = curve.velocity(t)
    xdd, ydd = curve.acceleration(t)
    v = np.hypot(xd, yd)
    theta = np.mod(np.arctan2(yd, xd) + 0.5 * math.pi, math.pi)
    kappa = (xd * ydd - yd * xdd) / v**3
    return x, y, xd, yd, theta, v, kappa


def frame(curve: ParamCurve, t: float):
    """Position, unit tangent, theta in [0, pi), speed and signed curvature.

    theta is the angle of the tangent rotated by a quarter turn, reduced mod
    pi; kappa > 0 where the curve turns left.
    """
    x, y, xd, yd, theta, v, kappa = frame_arrays(curve, np.asarray(t, float))
    if np.any(v <= 1e-12):
        raise DomainError("irregular point: zero speed")
    return (np.array([x, y]), np.array([xd, yd]) / v, float(theta), float(v), float(kappa))


def cos2theta(curve: ParamCurve, t):
    xd, yd = curve.velocity(t)
    return (yd**2 - xd**2) / (xd**2 + yd**2)


def sin2theta(curve: ParamCurve, t):
    xd, yd = curve.velocity(t)
    return -2.0 * xd * yd / (xd**2 + yd**2)


@dataclass(frozen=True)
class LightPoint:
    component: int
    t: float
    sign: str  # "-" for I_minus (theta = pi/4), "+" for I_plus (theta = 3pi/4)
    kappa: float


def light_points(domain: Domain, grid: int = 4096, kappa_min: float = KAPPA_MIN) -> list:
    """Roots of cos 2 theta on every component, classified into I+ and I-.

    Raises
    ------
    AssumptionBViolation
        If cos 2 theta vanishes on a whole arc.
    AssumptionCViolation
        If the curvature at a root is below ``kappa_min`` in magnitude.
    """
    if domain.is_misner:
        raise DomainError("light points are not defined for the Misner cylinder")
    out = []
    for ci, c in enumerate(domain.curves):
        ts = c.grid(grid)
        f = cos2theta(c, ts)
        small = np.abs(f) < 1e-9
        if np.any(small & np.roll(small, 1)):
            raise AssumptionBViolation(f"light-like arc on component {ci}")
        tol = 1e-12 * c.T
        pos = ~np.signbit(f)
        idx = np.nonzero(pos != np.roll(pos, -1))[0]
        fn = lambda s: float(cos2theta(c, s))
        for i in idx:
            a = ts[i]
            b = ts[i] + c.T / grid
            r = brentq(fn, a, b, xtol=tol, rtol=4 * np.finfo(float).eps)
            r = float(np.mod(r, c.T))
            _, _, th, _, kap = frame(c, r)
            if abs(kap) < kappa_min:
                raise AssumptionCViolation(f"zero curvature at light point t={r:.6g}")
            sign = "-" if abs(th - 0.25 * math.pi) < 0.25 * math.pi else "+"
            out.append(LightPoint(ci, r, sign, kap))
        # touching zeros without a sign change mean a degenerate root
        af = np.abs(f)
        mins = (af < np.roll(af, 1)) & (af <= np.roll(af, -1)) & (af < 1e-6)
        for i in np.nonzero(mins)[0]:
            if not (pos[i] != pos[(i + 1) % grid] or pos[i] != pos[i - 1]):
                raise AssumptionCViolation(f"degenerate light point near t={ts[i]:.6g}")
    return out


def outward_normal(curve: ParamCurve, t):
    xd, yd = curve.velocity(t)
    v = np.hypot(xd, yd)
    return yd / v, -xd / v


def boundary_data(domain: Domain, component: int, t: float, normal=None):
    """Induced boundary data (Gamma, u, mu) for a transversal vector field.

    Parameters
    ----------
    normal : None or length-2 vector
        Transversal vector at the point; ``None`` uses the Euclidean outward
        unit normal.

    Returns
    -------
    (Gamma, u, mu)
        ``Gamma = g^-1(n*, n*)``, the tangential coefficient ``u`` of
        ``g^-1(n*, .) - Gamma n`` against d/dt, and the density ``mu`` of the
        contracted volume form against dt.
    """
    c = domain.curves[component]
    (x, y), (xd, yd) = c.position(t), c.velocity(t)
    if normal is None:
        n = np.array(outward_normal(c, t), float)
    else:
        n = np.asarray(normal, float)
    r_dot = np.array([float(xd), float(yd)])
    cross = n[0] * r_dot[1] - n[1] * r_dot[0]
    if abs(cross) < 1e-12 * np.linalg.norm(n) * np.linalg.norm(r_dot):
        raise DomainError("normal field is tangent to the boundary")
    nstar = np.array([r_dot[1], -r_dot[0]]) / cross
    g = domain.metric.matrix(float(x), float(y))
    ginv = np.linalg.inv(g)
    gamma = float(nstar @ ginv @ nstar)
    U = ginv @ nstar - gamma * n
    u = float(U @ r_dot / (r_dot @ r_dot))
    mu = float(math.sqrt(abs(np.linalg.det(g))) * cross)
    return gamma, u, mu
