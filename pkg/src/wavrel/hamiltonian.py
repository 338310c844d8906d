"""Radial evolution on circles centred at the origin.

Coordinates x = e^xi cos(th), y = e^xi sin(th). On every circle a field is
the pair (phi, phi_n) on a uniform th-grid with phi_n = d phi / d xi, so
rescaling circles is the identity on data. The unit circle and the
circle r = e^-xi are both identified with S^1 this way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fields as F
from . import spectral
from .geometry import make_domain

TWO_PI = 2.0 * math.pi
MIN_M = 256
LIGHT_ANGLES = (math.pi / 4, 3 * math.pi / 4, -3 * math.pi / 4, -math.pi / 4)
C0_TOL = 1e-6

_ANNULI: dict = {}


class HamiltonianError(ValueError):
    pass


@dataclass
class CircleField:
    """(phi, phi_n) on th_k = 2 pi k / M, phi_n the xi-derivative."""

    phi: np.ndarray
    phin: np.ndarray

    def __post_init__(self):
        self.phi = np.asarray(self.phi, float).copy()
        self.phin = np.asarray(self.phin, float).copy()
        if self.phi.shape != self.phin.shape or self.phi.ndim != 1:
            raise HamiltonianError("phi and phi_n must be 1-d arrays of equal length")
        if self.phi.size < MIN_M:
            raise HamiltonianError(f"grid size must be at least {MIN_M}")

    @property
    def M(self) -> int:
        return self.phi.size

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.M) * (TWO_PI / self.M)

    def __add__(self, o):
        return CircleField(self.phi + o.phi, self.phin + o.phin)

    def __sub__(self, o):
        return CircleField(self.phi - o.phi, self.phin - o.phin)

    def __mul__(self, a):
        return CircleField(a * self.phi, a * self.phin)

    __rmul__ = __mul__

    def sup(self) -> float:
        return float(max(np.max(np.abs(self.phi)), np.max(np.abs(self.phin))))

    @classmethod
    def from_functions(cls, phi, phin, M: int = 1024):
        th = np.arange(M) * (TWO_PI / M)
        return cls(np.broadcast_to(phi(th), (M,)), np.broadcast_to(phin(th), (M,)))


@dataclass
class ConstraintDiagnostic:
    level: int  # deepest level passed, -1 if C_0 fails
    residuals: list  # per level: residuals at the four light angles
    passed: list
    first_failure: int | None


def solution_trace(fun, grad, r: float = 1.0, M: int = 1024) -> CircleField:
    """Circle data of a plane function on the circle of radius r."""
    th = np.arange(M) * (TWO_PI / M)
    x, y = r * np.cos(th), r * np.sin(th)
    gx, gy = grad(x, y)
    return CircleField(fun(x, y) * np.ones(M), (x * gx + y * gy) * np.ones(M))


def _d(y, order=1):
    return spectral.derivative(y, TWO_PI, order)


def hamiltonian_H(u: CircleField) -> float:
    """1/2 of the integral of cos(2 th) (phi_n^2 + (d phi / d th)^2)."""
    w = np.cos(2 * u.theta) * (u.phin**2 + _d(u.phi) ** 2)
    return 0.5 * float(spectral.integral(w, TWO_PI))


def momentum(u: CircleField) -> np.ndarray:
    """cos(2 th) phi_n - sin(2 th) d phi / d th."""
    th = u.theta
    return np.cos(2 * th) * u.phin - np.sin(2 * th) * _d(u.phi)


def circle_omega(u: CircleField, w: CircleField) -> float:
    """Pairing  integral of p(u) psi - phi p(w)."""
    return float(spectral.integral(momentum(u) * w.phi - u.phi * momentum(w), TWO_PI))


def forms(u: CircleField):
    """Characteristic densities (alpha, beta) against d th."""
    th = u.theta
    pt = _d(u.phi)
    s2, c2 = np.sin(2 * th), np.cos(2 * th)
    return 0.5 * ((1 - s2) * pt + c2 * u.phin), 0.5 * ((1 + s2) * pt - c2 * u.phin)


def _light_index(M):
    if M % 8:
        raise HamiltonianError("grid size must be a multiple of 8 so light angles are grid points")
    return [(int(round(a / TWO_PI * M)) % M) for a in LIGHT_ANGLES]


def c0_residuals(u: CircleField) -> np.ndarray:
    """d(phi_n - phi)/d th at the four light angles."""
    idx = _light_index(u.M)
    return (_d(u.phin) - _d(u.phi))[idx]


def _c0_scale(u):
    return max(1.0, float(np.max(np.abs(_d(u.phi)))), float(np.max(np.abs(_d(u.phin)))))


def bandwidth(u: CircleField, floor: float = 1e-13) -> int:
    """Largest Fourier mode above the relative noise floor."""
    B = 0
    for y in (u.phi, u.phin):
        mag = np.abs(np.fft.rfft(y))
        top = float(mag.max())
        if top > 0:
            B = max(B, int(np.nonzero(mag > floor * top)[0].max()))
    return min(B, u.M // 2 - 1)


def _project(y, B):
    c = np.fft.rfft(y)
    c[B + 1:] = 0.0
    return np.fft.irfft(c, n=y.size)


def _divide_cos2(D, B):
    """q of band B - 2 with cos(2 th) q = D, solved in coefficient space.

    Modes k >= 2 of the product fix q_0..q_{B-2} top down; the leftover
    equations at k = 0, 1 (and Im q_0) are the four light-angle conditions
    and are not enforced here."""
    M = D.size
    d = np.fft.rfft(D) / M
    q = np.zeros(B + 3, complex)
    for k in range(B, 1, -1):
        q[k - 2] = 2.0 * d[k] - q[k + 2]
    q[0] = q[0].real
    c = np.zeros(M // 2 + 1, complex)
    c[:B - 1 if B >= 2 else 0] = q[:max(B - 1, 0)]
    return np.fft.irfft(c * M, n=M)


def ham_vector(u: CircleField, tol: float = C0_TOL, check: bool = True,
               band: int | None = None) -> CircleField:
    """The vector field: (phi_n, N / cos 2th) with
    N = sin 2th phi_n' + (sin 2th phi_n + cos 2th phi')'.

    Writing N = cos 2th (2 phi_n + phi'') + 2 sin 2th D, D = (phi_n - phi)',
    only D is divided by cos 2th; the division is exact for band-limited D
    vanishing at the light angles, which also supplies the 0/0 limits there.
    Everything is kept in the band of the input (or ``band``).
    """
    _light_index(u.M)
    if check:
        r = np.max(np.abs(c0_residuals(u)))
        if r > tol * _c0_scale(u):
            raise HamiltonianError(f"field is not in C_0 (light-angle residual {r:.3e})")
    B = bandwidth(u) if band is None else band
    phi, phin = _project(u.phi, B), _project(u.phin, B)
    th = u.theta
    D = _d(phin) - _d(phi)
    q = _divide_cos2(D, B)
    out = 2.0 * phin + _d(phi, 2) + 2.0 * np.sin(2 * th) * q
    return CircleField(phin, _project(out, B))


def constraint_chain(u: CircleField, k_max: int = 6, tol: float = C0_TOL) -> ConstraintDiagnostic:
    """C_k = {u in C_{k-1} : H-check u in C_{k-1}}, tested as
    (H-check)^j u in C_0 for j <= k."""
    v = u
    residuals, passed = [], []
    scale = _c0_scale(u)
    B = bandwidth(u)
    for k in range(k_max + 1):
        r = c0_residuals(v)
        residuals.append([float(x) for x in r])
        ok = bool(np.all(np.isfinite(r))) and float(np.max(np.abs(r))) <= tol * max(scale, _c0_scale(v))
        passed.append(ok)
        if not ok or k == k_max:
            break
        v = ham_vector(v, check=False, band=B)
    first = None if all(passed) else passed.index(False)
    level = (first - 1) if first is not None else len(passed) - 1
    return ConstraintDiagnostic(level, residuals, passed, first)


# ---------------------------------------------------------------- C(-xi)


def theta0(xi: float) -> float:
    return math.acos(math.exp(-xi))


def arcs(xi: float, sign) -> list:
    """Arcs (centre, half-width) of U_-(xi) (sign -1) or U_+(xi) (sign +1)."""
    t0 = theta0(xi)
    cen = (math.pi / 4, -3 * math.pi / 4) if sign < 0 else (-math.pi / 4, 3 * math.pi / 4)
    return [(c, t0) for c in cen]


def _in_arcs(th, xi, sign):
    m = np.zeros(th.shape, bool)
    for c, w in arcs(xi, sign):
        m |= np.abs(np.angle(np.exp(1j * (th - c)))) < w
    return m


def c_xi_membership(u: CircleField, xi: float):
    """Invariance residuals of alpha under th -> pi/2 - th on U_- and of
    beta under th -> -pi/2 - th on U_+ (densities flip sign under these
    reflections)."""
    if xi <= 0:
        raise HamiltonianError("xi must be positive")
    a, b = forms(u)
    th = u.theta
    out = []
    for dens, sgn, refl in ((a, -1, math.pi / 2), (b, +1, -math.pi / 2)):
        m = _in_arcs(th, xi, sgn)
        if not np.any(m):
            out.append(0.0)
            continue
        img = spectral.evaluate(dens, TWO_PI, refl - th[m])
        out.append(float(np.max(np.abs(dens[m] + img))))
    return tuple(out)


def _annulus(xi: float):
    key = float(xi)
    dom = _ANNULI.get(key)
    if dom is None:
        r0 = math.exp(-xi)
        dom = make_domain({"curves": [{"kind": "circle", "r": 1.0},
                                      {"kind": "circle", "r": r0}], "outer": 0})
        _ANNULI[key] = dom
    return dom


def reduced_flow_neg(u: CircleField, xi: float, tol: float = C0_TOL,
                     check: bool = True) -> CircleField:
    """Inner-circle data of the solution on e^-xi <= r <= 1 with outer data u.

    The inner characteristic densities are pullbacks of the outer ones
    along the null lines; phi at the inner point (r0, 0) comes from the
    outer arc between the two feet of its null lines.
    """
    if xi == 0:
        return CircleField(u.phi, u.phin)
    if check:
        ra, rb = c_xi_membership(u, xi)
        a0, b0 = forms(u)
        scale = max(1.0, float(np.max(np.abs(a0))), float(np.max(np.abs(b0))))
        if max(ra, rb) > tol * scale:
            raise HamiltonianError(
                f"outer data is not in C(-xi) (residuals {ra:.2e}, {rb:.2e})")
    dom = _annulus(xi)
    r0 = math.exp(-xi)
    M = u.M
    phi = np.zeros((2, M))
    phin = np.zeros((2, M))
    phi[0], phin[0] = u.phi, u.phin  # unit circle: xi- and r-derivatives agree
    p = F.rho(dom, F.BoundaryField(dom, phi, phin))
    a_in = F._fill_nan(F.pullback(dom, -1, p.alpha))[1]
    b_in = F._fill_nan(F.pullback(dom, +1, p.beta))[1]
    if not (np.all(np.isfinite(a_in)) and np.all(np.isfinite(b_in))):
        raise HamiltonianError("annulus solve failed: unresolved characteristic feet")
    # feet of the null lines through (r0, 0): x + y = r0 and y - x = -r0
    s = math.asin(r0 / math.sqrt(2.0))
    tq, tq2 = s - math.pi / 4, math.pi / 4 - s
    Pa = spectral.primitive(p.alpha[0], TWO_PI)
    anchor = float(spectral.evaluate(u.phi, TWO_PI, tq2)[0] - (Pa(tq2) - Pa(tq))[0])
    pair = F.OneFormPair(dom, np.array([p.alpha[0], a_in]), np.array([p.beta[0], b_in]))
    try:
        bf = F.rho_inverse(dom, pair, [u.phi[0], anchor], tol=1e-6)
    except F.FieldError as exc:
        raise HamiltonianError(f"annulus solve failed: {exc}") from exc
    # hole parameter t sits at polar angle -t; its normal points to the origin
    idx = (-np.arange(M)) % M
    return CircleField(bf.phi[1][idx], -r0 * bf.phin[1][idx])


def kernel_field(xi: float, sign: int = -1, arc: int = 0, M: int = 1024,
                 amp: float = 1.0) -> CircleField:
    """An element of ker F_-xi: an invariant density supported in one arc of
    U_sign(xi) (the other density zero), with phi vanishing off the arc."""
    (c, w) = arcs(xi, sign)[arc]
    refl = math.pi / 2 if sign < 0 else -math.pi / 2
    th = np.arange(M) * (TWO_PI / M)
    lo, hi = c + 0.15 * w, c + 0.85 * w

    def h(t):
        z = (np.mod(t - lo, TWO_PI)) / (hi - lo)
        return amp * np.where(z < 1.0, F.bump(np.clip(z, 0.0, 1.0)), 0.0)

    dens = h(th) - h(refl - th)
    disk = make_domain({"curves": [{"kind": "circle", "r": 1.0}]})
    zero = np.zeros(M)
    a, b = (dens, zero) if sign < 0 else (zero, dens)
    bf = F.rho_inverse(disk, F.OneFormPair(disk, a[None], b[None]), [0.0], tol=1e-8)
    phi = bf.phi[0] - float(spectral.evaluate(bf.phi[0], TWO_PI, c + w)[0])
    return CircleField(phi, bf.phin[0])


def flow_composition_check(xi: float, xi2: float, samples) -> float:
    """max over samples of |F_-xi' (F_-xi u) - F_-(xi+xi') u|, relative."""
    worst = 0.0
    for u in samples:
        direct = reduced_flow_neg(u, xi + xi2)
        mid = reduced_flow_neg(u, xi)
        two = reduced_flow_neg(mid, xi2)
        worst = max(worst, (two - direct).sup() / max(1.0, u.sup()))
    return worst


def pullback_residual(xi: float, samples) -> float:
    """max |omega(F u, F w) - omega(u, w)| over sample pairs, relative."""
    imgs = [reduced_flow_neg(u, xi) for u in samples]
    worst = 0.0
    for i in range(len(samples)):
        for j in range(i + 1, len(samples)):
            d = circle_omega(imgs[i], imgs[j]) - circle_omega(samples[i], samples[j])
            worst = max(worst, abs(d) / max(1.0, samples[i].sup() * samples[j].sup()))
    return worst


def member_samples(xi: float, n: int = 4, seed: int = 0, M: int = 1024, K: int = 4) -> list:
    """Random elements of C(-xi): outer traces of L elements of the annulus
    e^-xi <= r <= 1 (make_L_field on null-coordinate polynomials, plus the
    holonomy element) and kernel fields."""
    from .symplectic import L_basis, holonomy_L_basis

    dom = _annulus(xi)
    pool = [CircleField(b.phi[0], b.phin[0]) for b in L_basis(dom, K, M)[1:]]
    pool += [CircleField(b.phi[0], b.phin[0]) for b in holonomy_L_basis(dom, M, check_paths=False)]
    pool += [kernel_field(xi, s, a, M) for s in (-1, 1) for a in (0, 1)]
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        c = rng.normal(size=len(pool))
        acc = CircleField(np.zeros(M), np.zeros(M))
        for ci, p in zip(c, pool):
            acc = acc + (ci / max(1.0, p.sup())) * p
        out.append(acc)
    return out
