"""Smooth cutoff profiles shared by the quantizer and the escape function."""

from __future__ import annotations

import numpy as np

__all__ = ["smooth_step", "smooth_step_derivative"]


def _bump(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _bump_derivative(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos]) / t[pos] ** 2
    return out


def smooth_step(t) -> np.ndarray:
    """C-infinity monotone step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    f = _bump(t)
    g = _bump(1.0 - t)
    return f / (f + g)


def smooth_step_derivative(t) -> np.ndarray:
    """Exact derivative of :func:`smooth_step`."""
    t = np.asarray(t, dtype=float)
    f = _bump(t)
    g = _bump(1.0 - t)
    fp = _bump_derivative(t)
    gp = _bump_derivative(1.0 - t)
    return (fp * g + f * gp) / (f + g) ** 2
