"""Exponential-rate fits and other trace diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class FitResult:
    """``plateau - R(t) ~ gap0 * exp(-rate * (t - shift))`` on the fit window.

    ``log_shift = rate * shift`` is the same offset measured on ln(plateau - R),
    which is the dimensionless quantity the transient estimates refer to.
    """

    rate: float
    shift: float
    residual: float
    log_shift: float


def fit_decay_rate(times, r, window: tuple[float, float], target_plateau: float = 1.0) -> FitResult:
    """Least-squares line through ln(target_plateau - R) on ``window``."""
    times = np.asarray(times, dtype=float)
    r = np.asarray(r, dtype=float)
    t_a, t_b = window
    if not (times[0] <= t_a < t_b <= times[-1]):
        raise FitError(f"window {window} not inside trace [{times[0]}, {times[-1]}]")
    mask = (times >= t_a) & (times <= t_b)
    if mask.sum() < 2:
        raise FitError(f"fewer than 2 samples in window {window}")
    gap = target_plateau - r[mask]
    if np.any(gap <= 0):
        raise FitError(f"non-positive gap in window {window}: trace saturated")
    gap0 = target_plateau - r[0]
    if gap0 <= 0:
        raise FitError("initial gap is non-positive")
    slope, intercept = np.polyfit(times[mask], np.log(gap), 1)
    rate = -slope
    if not math.isfinite(rate) or rate == 0:
        raise FitError(f"degenerate fitted rate {rate}")
    log_shift = intercept - math.log(gap0)
    fitted = np.exp(intercept + slope * times[mask])
    residual = float(np.max(np.abs(fitted - gap) / gap))
    return FitResult(rate=float(rate), shift=float(log_shift / rate), residual=residual, log_shift=float(log_shift))


def loglog_slope(times, r, window: tuple[float, float]) -> float:
    """Slope of ln R against ln t on ``window`` (R must be positive there)."""
    times = np.asarray(times, dtype=float)
    r = np.asarray(r, dtype=float)
    mask = (times >= window[0]) & (times <= window[1])
    if mask.sum() < 2 or np.any(r[mask] <= 0):
        raise FitError("need at least 2 positive samples for a log-log slope")
    return float(np.polyfit(np.log(times[mask]), np.log(r[mask]), 1)[0])


def first_crossing(times, r, level: float) -> float:
    """Linearly interpolated first time where ``r`` reaches ``level`` (nan if never)."""
    times = np.asarray(times, dtype=float)
    r = np.asarray(r, dtype=float)
    above = np.nonzero(r >= level)[0]
    if above.size == 0:
        return math.nan
    k = above[0]
    if k == 0:
        return float(times[0])
    return float(np.interp(level, r[k - 1 : k + 1], times[k - 1 : k + 1]))
