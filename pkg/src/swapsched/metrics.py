"""Quality metrics for an estimated hourly demand series.

* trend stability: spread of least-squares slopes over fixed windows
* period match: cosine similarity between the dominant DFT periods and a list
  of expected periods (24 h and 168 h by default)
* outlier ratio: share of points outside mean +/- 3 standard deviations
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array

from ._validation import DataValidationError, check_positive_int, check_series

DEFAULT_PERIODS = (24.0, 168.0)

# Peaks below this fraction of the series' L1 size are treated as rounding noise.
_PEAK_FLOOR = 1e-10


@dataclass(frozen=True)
class MetricsReport:
    s_m: float
    p_m: float
    o_m: float
    window_hours: int
    expected_periods: tuple

    def to_dict(self):
        return {
            "s_m": self.s_m,
            "p_m": self.p_m,
            "o_m": self.o_m,
            "window": self.window_hours,
            "periods": list(self.expected_periods),
        }


def window_slopes(series, window_hours):
    """OLS slope of each complete, non-overlapping window (trailing partial dropped)."""
    y = check_series(series)
    w = check_positive_int(window_hours, "window_hours", minimum=2)
    n_windows = y.size // w
    segments = y[: n_windows * w].reshape(n_windows, w)
    x = np.arange(w, dtype=float)
    xc = x - x.mean()
    yc = segments - segments.mean(axis=1, keepdims=True)
    return yc @ xc / (xc @ xc)


def trend_stability(series, window_hours=24):
    y = check_series(series)
    w = check_positive_int(window_hours, "window_hours", minimum=2)
    if y.size < 2 * w:
        raise DataValidationError(f"need at least {2 * w} points for window {w}, got {y.size}")
    return float(np.std(window_slopes(y, w)))


def dominant_periods(series, top_k=2):
    """The `top_k` strongest non-DC DFT bins as ``(period, amplitude)`` pairs.

    Bins whose amplitude is indistinguishable from rounding noise are dropped,
    so a constant series yields no peaks.
    """
    y = check_series(series, min_length=2)
    top_k = check_positive_int(top_k, "top_k")
    n = y.size
    amp = np.abs(np.fft.rfft(y - y.mean()))[1:]
    floor = _PEAK_FLOOR * np.abs(y).sum()
    order = np.argsort(-amp, kind="stable")[:top_k]
    return [(n / (k + 1), float(amp[k])) for k in order if amp[k] > floor]


def period_match(series, expected_periods=DEFAULT_PERIODS, top_k=2, tolerance=1.0):
    """Cosine similarity between detected and expected periodicity.

    The detected vector holds, for each expected period, the normalised
    amplitude of the strongest detected peak within `tolerance` samples of it
    (0 when none); the expected vector is all ones.
    """
    periods = np.asarray(expected_periods, dtype=float)
    if periods.size == 0:
        raise DataValidationError("expected_periods is empty")
    if np.any(periods <= 0):
        raise DataValidationError("expected periods must be positive")
    y = check_series(series)
    if y.size < 2 * periods.max():
        raise DataValidationError(
            f"need at least {int(np.ceil(2 * periods.max()))} points, got {y.size}"
        )
    peaks = dominant_periods(y, top_k)
    if not peaks:
        return 0.0
    top = max(a for _, a in peaks)
    detected = np.zeros(periods.size)
    for i, target in enumerate(periods):
        hits = [a / top for p, a in peaks if abs(p - target) <= tolerance]
        if hits:
            detected[i] = max(hits)
    norm = np.linalg.norm(detected)
    if norm == 0:
        return 0.0
    return float(detected.sum() / (norm * np.sqrt(periods.size)))


def outlier_ratio(series):
    y = check_series(series, min_length=2)
    mu = y.mean()
    sigma = y.std()
    if sigma == 0:
        return 0.0
    inside = (y > mu - 3 * sigma) & (y < mu + 3 * sigma)
    return float(np.count_nonzero(~inside) / y.size)


def evaluate_dataset(series, window_hours=24, expected_periods=DEFAULT_PERIODS, top_k=2):
    periods = tuple(float(p) for p in expected_periods)
    return MetricsReport(
        s_m=trend_stability(series, window_hours),
        p_m=period_match(series, periods, top_k),
        o_m=outlier_ratio(series),
        window_hours=int(window_hours),
        expected_periods=periods,
    )


class DemandSeriesMetrics(TransformerMixin, BaseEstimator):
    """Map each row of a 2-D array of hourly series to ``[s_m, p_m, o_m]``.

    Stateless; ``fit`` only validates the input so the transformer can sit in
    a scikit-learn pipeline.
    """

    def __init__(self, window_hours=24, expected_periods=DEFAULT_PERIODS, top_k=2):
        self.window_hours = window_hours
        self.expected_periods = expected_periods
        self.top_k = top_k

    def fit(self, X, y=None):
        check_array(X, dtype=float)
        return self

    def transform(self, X):
        X = check_array(X, dtype=float)
        rows = []
        for series in X:
            r = evaluate_dataset(series, self.window_hours, self.expected_periods, self.top_k)
            rows.append((r.s_m, r.p_m, r.o_m))
        return np.array(rows, dtype=float).reshape(-1, 3)
