"""Periodic spectral tools on uniform grids (FFT based)."""

from __future__ import annotations

import numpy as np


def _k(M, T):
    return np.fft.rfftfreq(M, d=T / M) * 2.0 * np.pi


def derivative(y, T, order=1):
    """Spectral derivative of periodic samples along the last axis."""
    y = np.asarray(y, float)
    M = y.shape[-1]
    c = np.fft.rfft(y, axis=-1)
    k = _k(M, T)
    mult = (1j * k) ** order
    if M % 2 == 0:
        mult[-1] = 0.0 if order % 2 else mult[-1].real
    return np.fft.irfft(c * mult, n=M, axis=-1)


def mean(y):
    return np.mean(np.asarray(y, float), axis=-1)


def integral(y, T):
    """Periodic trapezoid rule (spectrally accurate)."""
    return np.sum(np.asarray(y, float), axis=-1) * (T / np.shape(y)[-1])


def evaluate(y, T, t):
    """Trigonometric interpolant of grid samples ``y`` evaluated at ``t``."""
    y = np.asarray(y, float)
    M = y.shape[-1]
    c = np.fft.rfft(y) / M
    k = _k(M, T)
    w = np.full(c.size, 2.0)
    w[0] = 1.0
    if M % 2 == 0:
        w[-1] = 1.0
    t = np.atleast_1d(np.asarray(t, float))
    ph = np.exp(1j * np.outer(t, k))
    return (ph @ (w * c)).real


def primitive(y, T):
    """Callable P with P' = y, including the linear drift of the mean."""
    y = np.asarray(y, float)
    M = y.shape[-1]
    c = np.fft.rfft(y) / M
    k = _k(M, T)
    a0 = c[0].real
    w = np.full(c.size, 2.0)
    w[0] = 0.0
    if M % 2 == 0:
        w[-1] = 0.0
    kk = k.copy()
    kk[0] = 1.0
    cp = w * c / (1j * kk)

    def P(t):
        t = np.atleast_1d(np.asarray(t, float))
        return a0 * t + (np.exp(1j * np.outer(t, k)) @ cp).real

    return P


def cumulative(y, T):
    """Grid values of the primitive vanishing at t = 0 (periodic part only
    when the mean is zero)."""
    y = np.asarray(y, float)
    M = y.shape[-1]
    c = np.fft.rfft(y, axis=-1)
    k = _k(M, T)
    kk = k.copy()
    kk[0] = 1.0
    d = c / (1j * kk)
    d[..., 0] = 0.0
    if M % 2 == 0:
        d[..., -1] = 0.0
    t = np.arange(M) * (T / M)
    v = np.fft.irfft(d, n=M, axis=-1) + np.real(c[..., :1]) / M * t
    return v - v[..., :1]
