"""Forecast error measures over aligned actual/forecast vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class MetricsError(Exception):
    pass


class LengthMismatch(MetricsError):
    pass


class EmptyVectors(MetricsError):
    pass


class WmapeUndefined(MetricsError):
    """Sum of actuals is zero; WMAPE has no value."""


@dataclass(frozen=True)
class EvalReport:
    n: int
    mae: float
    rmse: float
    mape: float | None
    wmape: float
    mape_undefined: bool = False


def evaluate(actual, forecast) -> EvalReport:
    """MAE, RMSE, MAPE and WMAPE of ``forecast`` against ``actual``.

    MAPE is flagged undefined (value ``None``) when any actual is zero;
    WMAPE raises :class:`WmapeUndefined` when the actuals sum to zero.
    """
    a = np.asarray(actual, dtype=float)
    f = np.asarray(forecast, dtype=float)
    if a.shape != f.shape or a.ndim != 1:
        raise LengthMismatch(f"shapes {a.shape} vs {f.shape}")
    if a.size == 0:
        raise EmptyVectors("empty input")
    if not (np.isfinite(a).all() and np.isfinite(f).all()):
        raise MetricsError("non-finite entries")

    abs_err = np.abs(f - a)
    mae = float(abs_err.mean())
    rmse = float(math.sqrt(np.mean((f - a) ** 2)))
    sum_a = float(a.sum())
    if sum_a == 0.0:
        raise WmapeUndefined("sum of actuals is zero")
    wmape = float(abs_err.sum() / sum_a)
    mape_undefined = bool((a == 0).any())
    if mape_undefined:
        mape = None
    else:
        with np.errstate(over="ignore"):
            mape = float(np.mean(abs_err / np.abs(a)))
    return EvalReport(int(a.size), mae, rmse, mape, wmape, mape_undefined)


def rmse_improvement(before: float, after: float) -> float:
    """RMSE difference before vs after optimisation (positive = improved)."""
    if not (math.isfinite(before) and math.isfinite(after)):
        raise MetricsError("non-finite RMSE")
    return before - after
