"""The Misner cylinder S^1 x [-1, 1] with metric dx dy - y dx^2.

Null directions: d+ = d_y and d- = -d_x - y d_y. The circle y = 0 is a
closed null curve that attracts every d- curve. Boundary data use the
transversals n = 2 d_y - d_x on y = -1 and n = 2 d_y + d_x on y = 1.

The boundary current of the action is J = phi_x + 2 y phi_y, which equals
-phi_n on y = -1, phi_n on y = 1 and the tangential derivative phi_x on the
null circle y = 0 (so data on that circle reduce to phi alone).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectral
from .characteristics import HitResult, TraceError, _sgn
from .symplectic import DefectReport

TWO_PI = 2.0 * math.pi
MIN_M = 256
RANK_TOL = 1e-9

# channel layouts per part; "0" marks the null circle y = 0
PARTS = {
    "full": ("phi_in", "phin_in", "phi_out", "phin_out"),
    "lower": ("phi_in", "phin_in", "phi_0"),
    "upper": ("phi_0", "phi_out", "phin_out"),
}


class MisnerError(ValueError):
    pass


@dataclass
class MisnerField:
    """Boundary data of the full cylinder on aligned x-grids."""

    phi_in: np.ndarray
    phin_in: np.ndarray
    phi_out: np.ndarray
    phin_out: np.ndarray

    def __post_init__(self):
        arrs = [np.asarray(a, float) * np.ones(1) for a in
                (self.phi_in, self.phin_in, self.phi_out, self.phin_out)]
        M = max(a.size for a in arrs)
        arrs = [np.broadcast_to(a, (M,)).astype(float) for a in arrs]
        if any(a.ndim != 1 or a.size != M for a in arrs):
            raise MisnerError("grids must be aligned")
        if M < MIN_M:
            raise MisnerError(f"grid size must be at least {MIN_M}")
        self.phi_in, self.phin_in, self.phi_out, self.phin_out = arrs

    @property
    def M(self) -> int:
        return self.phi_in.size

    def channels(self):
        return np.array([self.phi_in, self.phin_in, self.phi_out, self.phin_out])


def grid(M: int = 256) -> np.ndarray:
    return np.arange(M) * (TWO_PI / M)


def _d(y):
    return spectral.derivative(y, TWO_PI)


def misner_L(g, M: int = 256, dg=None) -> MisnerField:
    """(g, -g', g, g'). ``g`` is a callable on [0, 2 pi) or grid samples."""
    x = grid(M)
    G = np.asarray(g(x) if callable(g) else g, float) * np.ones(M)
    dG = _d(G) if dg is None else np.asarray(dg(x), float) * np.ones(M)
    return MisnerField(G, -dG, G.copy(), dG.copy())


def misner_orth_residual(u: MisnerField) -> float:
    """sup |phi_in' - phin_in - phi_out' - phin_out|."""
    r = _d(u.phi_in) - u.phin_in - _d(u.phi_out) - u.phin_out
    return float(np.max(np.abs(r)))


def misner_symplectic(u: MisnerField, w: MisnerField) -> float:
    """Integral of phi_in psin_in - psi_in phin_in + phi_out psin_out - psi_out phin_out."""
    if u.M != w.M:
        raise MisnerError("grid mismatch")
    integrand = (u.phi_in * w.phin_in - w.phi_in * u.phin_in
                 + u.phi_out * w.phin_out - w.phi_out * u.phin_out)
    return float(spectral.integral(integrand, TWO_PI))


# ---------------------------------------------------------------- truncated defect


def _pairing(part: str, U: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Pairing matrix for stacks of channel arrays, shapes (n, C, M)."""
    h = TWO_PI / U.shape[-1]
    if part == "full":
        P = (U[:, 0] @ W[:, 1].T - U[:, 1] @ W[:, 0].T
             + U[:, 2] @ W[:, 3].T - U[:, 3] @ W[:, 2].T)
    elif part == "lower":
        # y = 0 is the top boundary: -(J_u psi - phi J_w) with J = phi_x
        Ud, Wd = _d(U[:, 2]), _d(W[:, 2])
        P = (U[:, 0] @ W[:, 1].T - U[:, 1] @ W[:, 0].T
             - (Ud @ W[:, 2].T - U[:, 2] @ Wd.T))
    elif part == "upper":
        Ud, Wd = _d(U[:, 0]), _d(W[:, 0])
        P = ((Ud @ W[:, 0].T - U[:, 0] @ Wd.T)
             + U[:, 1] @ W[:, 2].T - U[:, 2] @ W[:, 1].T)
    else:
        raise MisnerError(f"unknown part {part!r}")
    return P * h


def _modes(K: int, M: int) -> np.ndarray:
    x = grid(M)
    rows = [np.ones(M)]
    for k in range(1, K + 1):
        rows += [np.cos(k * x), np.sin(k * x)]
    return np.array(rows)


def part_L(part: str, g: np.ndarray) -> np.ndarray:
    """Channels of the L element generated by g(x) (samples), shape (C, M)."""
    dg = _d(g)
    if part == "full":
        return np.array([g, -dg, g, dg])
    if part == "lower":
        return np.array([g, -dg, g])
    if part == "upper":
        return np.array([g, g, dg])
    raise MisnerError(f"unknown part {part!r}")


def _rank(A, tol=RANK_TOL):
    if A.size == 0:
        return 0, np.zeros(0), 0.0
    s = np.linalg.svd(A, compute_uv=False)
    thr = tol * (s[0] if s.size and s[0] > 0 else 1.0)
    return int(np.sum(s > thr)), s, thr


def misner_defect(K: int, M: int = 256, part: str = "full", tol: float = RANK_TOL) -> DefectReport:
    """dim(L-perp) - dim(L) inside the Fourier truncation of degree K.

    ``part`` selects the full cylinder or one of its halves y <= 0 and
    y >= 0 (on which the null circle carries phi only)."""
    if K < 0:
        raise MisnerError("K must be non-negative")
    if M < max(MIN_M, 4 * K + 4):
        raise MisnerError("grid too small for the truncation")
    if part not in PARTS:
        raise MisnerError(f"unknown part {part!r}")
    C = len(PARTS[part])
    B = _modes(K, M)
    n = B.shape[0]
    V = np.zeros((C * n, C, M))
    for c in range(C):
        V[c * n:(c + 1) * n, c] = B
    L = np.array([part_L(part, b) for b in B])
    rL, _, _ = _rank(L.reshape(n, -1), tol)
    Om = _pairing(part, V, L)
    Om = Om / np.max(np.abs(Om))
    rO, s, thr = _rank(Om, tol)
    dim_perp = C * n - rO
    iso = float(np.max(np.abs(_pairing(part, L, L))))
    extra = {"part": part, "isotropy": iso, "expected_full": 2 * (2 * K + 1)}
    if part == "full":
        # kernel of the orthogonality functional, computed independently
        R = np.array([_d(v[0]) - v[1] - _d(v[2]) - v[3] for v in V])
        rR, _, _ = _rank(R, tol)
        extra["orth_kernel_dim"] = C * n - rR
    return DefectReport(rL, dim_perp, dim_perp - rL, list(s), float(thr), C * n, K, M, extra,
                        label="truncation surrogate")


# ---------------------------------------------------------------- null curves


def _field(sign):
    if _sgn(sign) < 0:
        return lambda p: np.array([-1.0, -p[1]])
    return lambda p: np.array([0.0, 1.0])


def misner_trace(x0: float, sign, comp: int = 0, h: float = 0.01, y_stop: float = 1e-8,
                 s_max: float = 60.0) -> HitResult:
    """RK4 along a null direction from a boundary circle.

    comp 0 is y = -1, comp 1 is y = +1; the direction is chosen to point
    into the cylinder. Outcomes: "hit" (reaches a boundary circle, t is its
    x), "asymptotic" (|y| and the vertical speed fall below y_stop) or "escaped" (neither within
    s_max)."""
    if comp not in (0, 1):
        raise TraceError("Misner boundary component must be 0 (y=-1) or 1 (y=1)")
    y0 = -1.0 if comp == 0 else 1.0
    f = _field(sign)
    v0 = f(np.array([x0, y0]))
    if v0[1] * (-y0) <= 0:
        f0 = f
        f = lambda p: -f0(p)  # noqa: E731
    p = np.array([float(x0), y0])
    path = [p.copy()]
    s = 0.0
    while s < s_max:
        k1 = f(p)
        k2 = f(p + 0.5 * h * k1)
        k3 = f(p + 0.5 * h * k2)
        k4 = f(p + h * k3)
        q = p + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        s += h
        if abs(q[1]) >= 1.0 and s > h / 2:
            lam = (math.copysign(1.0, q[1]) - p[1]) / (q[1] - p[1])
            hit = p + lam * (q - p)
            path.append(hit)
            arr = np.array(path)
            arr[:, 0] = np.mod(arr[:, 0], TWO_PI)
            return HitResult("hit", 0 if hit[1] < 0 else 1, float(hit[0] % TWO_PI), arr)
        p = q
        path.append(p.copy())
        if abs(p[1]) < y_stop and abs(f(p)[1]) < 10 * y_stop:  # stalled on y = 0
            arr = np.array(path)
            arr[:, 0] = np.mod(arr[:, 0], TWO_PI)
            return HitResult("asymptotic", None, None, arr)
    arr = np.array(path)
    arr[:, 0] = np.mod(arr[:, 0], TWO_PI)
    return HitResult("escaped", None, None, arr)


def condition_a(samples: int = 16, seed: int = 0) -> dict:
    """Fraction of boundary points whose null curve of each sign returns to
    the boundary. Both involutions exist only if both fractions are 1."""
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, TWO_PI, samples)
    out = {}
    for sign in ("-", "+"):
        hits = 0
        outcomes = []
        for comp in (0, 1):
            for x in xs:
                r = misner_trace(float(x), sign, comp, h=0.05)
                outcomes.append(r.outcome)
                hits += r.outcome == "hit"
        out[sign] = {"hit_fraction": hits / (2 * samples),
                     "outcomes": sorted(set(outcomes))}
    out["holds"] = all(out[s]["hit_fraction"] == 1.0 for s in ("-", "+"))
    return out
