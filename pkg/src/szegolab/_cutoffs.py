"""Smooth compactly-supported cutoffs used by the example domains and d*."""

from __future__ import annotations

import numpy as np


def _psi(u):
    """exp(-1/u) for u > 0, 0 otherwise (smooth at 0)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smoothstep(u):
    """Smooth monotone step: 0 for u <= 0, 1 for u >= 1, C-infinity."""
    u = np.asarray(u, dtype=float)
    a = _psi(u)
    b = _psi(1.0 - u)
    return a / (a + b)


def chi_down(t, lo: float, hi: float):
    """Smooth non-increasing cutoff: 1 for t <= lo, 0 for t >= hi."""
    return 1.0 - smoothstep((np.asarray(t, dtype=float) - lo) / (hi - lo))


def bump(u):
    """Standard smooth bump on (-1, 1) with bump(0) = 1."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
    return out


def smoothstep_prime(u):
    """Derivative of smoothstep (vectorized, analytic)."""
    u = np.asarray(u, dtype=float)
    a = _psi(u)
    b = _psi(1.0 - u)
    da = np.zeros_like(u)
    db = np.zeros_like(u)
    pos = u > 0
    da[pos] = a[pos] / (u[pos] ** 2)
    neg = (1.0 - u) > 0
    db[neg] = -b[neg] / ((1.0 - u[neg]) ** 2)
    s = a + b
    return (da * s - a * (da + db)) / (s * s)
