"""Forecast error measures: MAPE, MAE and the coefficient of determination."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class EvalResult:
    mape: float
    mae: float
    r2: float


def _pair(actual, forecast, min_len=1):
    a = np.asarray(actual, dtype=float).ravel()
    f = np.asarray(forecast, dtype=float).ravel()
    if a.shape != f.shape:
        raise MetricError(f"length mismatch: {a.size} actual vs {f.size} forecast")
    if a.size < min_len:
        raise MetricError(f"need at least {min_len} values, got {a.size}")
    return a, f


def mape(actual, forecast) -> float:
    """Mean absolute percentage error, in percent."""
    a, f = _pair(actual, forecast)
    if np.any(a == 0):
        raise MetricError("undefined MAPE: actual contains zero")
    return float(np.mean(np.abs((a - f) / a)) * 100.0)


def mae(actual, forecast) -> float:
    a, f = _pair(actual, forecast)
    return float(np.mean(np.abs(a - f)))


def r2(actual, forecast) -> float:
    """1 - SS_res / SS_tot, where SS_res is the residual sum of squares."""
    a, f = _pair(actual, forecast, min_len=2)
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0.0:
        raise MetricError("undefined R²: actual values are constant")
    ss_res = float(np.sum((a - f) ** 2))
    return 1.0 - ss_res / ss_tot


def evaluate(actual, forecast) -> EvalResult:
    return EvalResult(mape(actual, forecast), mae(actual, forecast), r2(actual, forecast))
