"""Helpers for band-limited Fourier series on the circle.

Coefficient arrays of a series truncated at ``|j| <= n`` are stored with
length ``2n + 1`` and mode ``j`` at index ``j + n``.  All circle integrals
use the normalized measure ``dtheta / 2pi``.
"""

import numpy as np


def modes(n):
    """Integer modes ``-n..n`` aligned with a coefficient array."""
    return np.arange(-n, n + 1)


def order_of(coeffs):
    size = np.shape(coeffs)[-1]
    if size % 2 != 1:
        raise ValueError(f"coefficient array length must be odd, got {size}")
    return (size - 1) // 2


def quartic_grid_size(n):
    """Smallest power of two >= 4n + 1; exact quadrature for |u|^4."""
    m = 1
    while m < 4 * n + 1:
        m *= 2
    return m


def to_grid(coeffs, m):
    """Evaluate ``sum_j c_j exp(i j theta)`` at ``theta_k = 2 pi k / m``.

    Works along the last axis.  Modes beyond the Nyquist range are folded
    (aliased), so the point values are exact for any ``m >= 1``.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    n = order_of(coeffs)
    spectrum = np.zeros(coeffs.shape[:-1] + (m,), dtype=complex)
    idx = modes(n) % m
    if 2 * n + 1 <= m:
        spectrum[..., idx] = coeffs
    else:
        for col, k in enumerate(idx):
            spectrum[..., k] += coeffs[..., col]
    return np.fft.ifft(spectrum, axis=-1) * m


def from_grid(values, n):
    """Fourier coefficients ``|j| <= n`` of grid values (trapezoid rule)."""
    values = np.asarray(values, dtype=complex)
    m = values.shape[-1]
    if m < 2 * n + 1:
        raise ValueError(f"grid of {m} points cannot resolve {n} modes")
    spectrum = np.fft.fft(values, axis=-1) / m
    return spectrum[..., modes(n) % m]


def spectral_derivative(values):
    """Derivative in theta of periodic grid values, via FFT."""
    values = np.asarray(values)
    m = values.shape[-1]
    k = np.fft.fftfreq(m, d=1.0 / m)
    if m % 2 == 0:
        k[m // 2] = 0.0
    out = np.fft.ifft(1j * k * np.fft.fft(values, axis=-1), axis=-1)
    if np.isrealobj(values):
        return out.real
    return out


def evaluate_at(coeffs, theta):
    """Direct evaluation at arbitrary points (for off-grid midpoints)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    n = order_of(coeffs)
    theta = np.asarray(theta, dtype=float)
    phases = np.exp(1j * np.multiply.outer(theta, modes(n)))
    return phases @ coeffs
