"""Two small nonconvex benchmark functions.

``f1`` is a smooth two-dimensional function with a sign-flip ridge along
the rotated coordinate (x1+x2)/sqrt(2), giving symmetric competing basins.
``f2`` is piecewise-defined and mixed-integer: x1 ranges over the integers
0..10 while x2 is continuous on [-5, 5].
"""
from __future__ import annotations

import numpy as np

from ..tt import Grid
from ..ttgo import MonotoneTransform
from .base import Problem

_SQRT2 = np.sqrt(2.0)


def f1(x1, x2):
    """Value(s) of the continuous nonconvex function; sign(0) counts as 0."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    z = (x1 + x2) / _SQRT2
    val = -0.5 * (0.8 * z - 2.0 * np.sign(z)) ** 2 + 0.1 * (x1**2 + x2**2) + 2.0
    return float(val) if val.ndim == 0 else val


# Piecewise brackets for f2 in the rotated coordinate: (include_lo, lo, hi,
# include_hi, center, bump height).
_F2_PIECES = [
    (True, -7.0, -3.0, False, -5.0, 8.0),
    (True, -3.0, 1.0, False, -1.0, 3.0),
    (True, 1.0, 5.0, True, 3.0, 4.0),
    (False, 5.0, 9.0, True, 7.0, 5.0),
    (False, 9.0, 13.0, True, 11.0, 10.0),
]


def _f2_rotated(xt1: np.ndarray, xt2: np.ndarray) -> np.ndarray:
    g = np.zeros_like(xt1)
    h = np.zeros_like(xt1)
    for inc_lo, lo, hi, inc_hi, c, height in _F2_PIECES:
        m_lo = xt1 >= lo if inc_lo else xt1 > lo
        m_hi = xt1 <= hi if inc_hi else xt1 < hi
        m = m_lo & m_hi
        g = np.where(m, np.abs(-((xt1 - c) ** 2) + height), g)
        h = np.where(m, (xt1 - c) ** 2 + (xt2 - c) ** 2, h)
    return 0.5 * g + 0.1 * h


def f2(x1, x2) -> float:
    """Mixed-integer piecewise function; x1 must be an integer in 0..10."""
    x1f = float(x1)
    if abs(x1f - round(x1f)) > 1e-9 or not 0 <= round(x1f) <= 10:
        raise ValueError(f"x1 must be an integer in 0..10, got {x1!r}")
    xt1 = (x1f - float(x2)) / _SQRT2
    xt2 = (x1f + float(x2)) / _SQRT2
    return float(_f2_rotated(np.asarray(xt1), np.asarray(xt2)))


def f2_batch(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Vectorized f2 over already-valid integer x1 values."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return _f2_rotated((x1 - x2) / _SQRT2, (x1 + x2) / _SQRT2)


def build_f1(n1: int = 100, n2: int = 100, lo: float = -5.0, hi: float = 5.0,
             beta: float = 2.0) -> Problem:
    def batch(Z, A, W):
        return f1(W[:, 0], W[:, 1])

    return Problem(
        name="f1",
        condition_grids=[],
        action_sets=[],
        weight_grids=[Grid(lo, hi, n1), Grid(lo, hi, n2)],
        cost_batch=batch,
        transform=MonotoneTransform("negexp", beta),
        meta={"r_max": 2, "oracle_resolution": 1000},
    )


def build_f2(n2: int = 100, beta: float = 1.0) -> Problem:
    def batch(Z, A, W):
        return f2_batch(A[:, 0], W[:, 0])

    return Problem(
        name="f2",
        condition_grids=[],
        action_sets=[np.arange(11)],
        weight_grids=[Grid(-5.0, 5.0, n2)],
        cost_batch=batch,
        transform=MonotoneTransform("negexp", beta),
        meta={"r_max": 2, "oracle_resolution": 1001},
    )
