"""
Log-log fits for scaling sweeps.
"""
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats


@dataclass
class LogLogFit:
    slope: float
    intercept: float
    residual: float
    points: int
    decades: float


def decades(x: Sequence[float]) -> float:
    """log10 span of positive values."""
    x = np.asarray(x, dtype=float)
    return float(math.log10(np.max(x) / np.min(x)))


def loglog_fit(x: Sequence[float], y: Sequence[float]) -> LogLogFit:
    """
    Least-squares line through (ln x, ln |y|).

    Args:
        x: Positive independent values
        y: Nonzero measured values

    Returns:
        LogLogFit with the RMS residual of ln |y|
    """
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("loglog_fit needs at least two points with positive x and nonzero y")
    lx = np.log(x)
    ly = np.log(y)
    if np.all(lx == lx[0]):
        raise ValueError("loglog_fit needs at least two distinct x values")
    fit = stats.linregress(lx, ly)
    residual = float(np.sqrt(np.mean((ly - (fit.intercept + fit.slope * lx)) ** 2)))
    return LogLogFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        residual=residual,
        points=int(x.size),
        decades=decades(x),
    )
