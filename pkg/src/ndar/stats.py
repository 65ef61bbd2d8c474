"""Correlation statistics for (attractor AR, achieved AR) style pairs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as _st

from .errors import UndefinedStatisticError


@dataclass(frozen=True)
class Correlation:
    pearson_r: float
    pearson_p: float
    spearman_rho: float
    spearman_p: float
    n: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _check(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if x.size < 3:
        raise UndefinedStatisticError(f"need at least 3 pairs, got {x.size}")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise UndefinedStatisticError("correlation undefined: zero variance in a coordinate")
    return x, y


def pearson(x, y) -> float:
    x, y = _check(x, y)
    dx, dy = x - x.mean(), y - y.mean()
    return float(np.clip(dx @ dy / np.sqrt((dx @ dx) * (dy @ dy)), -1.0, 1.0))


def average_ranks(x) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    return _st.rankdata(x, method="average")


def spearman(x, y) -> float:
    x, y = _check(x, y)
    return pearson(average_ranks(x), average_ranks(y))


def correlate(x, y) -> Correlation:
    x, y = _check(x, y)
    r = pearson(x, y)
    rho = spearman(x, y)
    # two-sided p-values from the t distribution with n-2 dof
    return Correlation(r, _p_value(r, x.size), rho, _p_value(rho, x.size), int(x.size))


def _p_value(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    t = r * np.sqrt((n - 2) / (1.0 - r * r))
    return float(2.0 * _st.t.sf(abs(t), n - 2))


def stats(pairs) -> dict:
    """``{pearson_r, spearman_rho}`` for a list of ``(x, y)`` pairs."""
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("pairs must be a list of (x, y)")
    c = correlate(arr[:, 0], arr[:, 1])
    return {"pearson_r": c.pearson_r, "spearman_rho": c.spearman_rho}
