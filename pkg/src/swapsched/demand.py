"""Swap-demand estimation from charging sessions.

Each session's chance of being a battery-swap customer is a logistic function
of its charging duration (min), charging energy (kWh) and the station's swap
time (min). Hourly expected demand is the sum of those chances over the
sessions that arrived in the hour; with identical sessions and Poisson
arrivals this equals ``prob * lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import (
    DataValidationError,
    check_counts,
    check_nonnegative,
    check_probability,
)
from .ingest import PriceSeries, hour_index, hourly_arrivals

DEFAULT_THETA = (0.08, 0.08, -0.8)
DEFAULT_SWAP_TIME = 5.0
DEFAULT_RATIO_A = 5 / 13
HOURS_PER_WEEK = 168


@dataclass(frozen=True)
class ModelParams:
    theta: tuple = DEFAULT_THETA
    swap_time_minutes: float = DEFAULT_SWAP_TIME

    def __post_init__(self):
        theta = tuple(float(t) for t in self.theta)
        if len(theta) != 3 or not all(math.isfinite(t) for t in theta):
            raise DataValidationError(f"theta must be 3 finite reals, got {self.theta!r}")
        if not (self.swap_time_minutes > 0 and math.isfinite(self.swap_time_minutes)):
            raise DataValidationError("swap_time_minutes must be > 0")
        object.__setattr__(self, "theta", theta)


@dataclass(frozen=True)
class FeatureVector:
    t_sum: float
    v_sum: float
    c_r: float

    def __post_init__(self):
        for name in ("t_sum", "v_sum", "c_r"):
            check_nonnegative(getattr(self, name), name)


@dataclass(frozen=True)
class DemandSeries:
    expected: np.ndarray
    rounded: np.ndarray
    origin: datetime | None = None
    arrivals: np.ndarray | None = None

    def __len__(self):
        return len(self.expected)


@dataclass(frozen=True)
class DemandProfile:
    """Hourly swap demand per battery type and the matching electricity price.

    The optimizer's horizon is the profile length (24 for a daily plan).
    """

    demand_a: np.ndarray
    demand_b: np.ndarray
    price: np.ndarray = field(default=None)

    def __post_init__(self):
        a = check_counts(self.demand_a, "demand_a")
        b = check_counts(self.demand_b, "demand_b", length=a.size)
        if a.size == 0:
            raise DataValidationError("a demand profile needs at least one hour")
        price = np.ones(a.size) if self.price is None else np.asarray(self.price, dtype=float)
        if price.shape != (a.size,):
            raise DataValidationError(f"price must have length {a.size}, got {price.shape}")
        if not np.all(np.isfinite(price)) or np.any(price < 0):
            raise DataValidationError("prices must be finite and >= 0")
        for name, arr in (("demand_a", a), ("demand_b", b), ("price", price)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def horizon(self):
        return self.demand_a.size

    @property
    def demand(self):
        """Demand as a ``(2, horizon)`` array, type A first."""
        return np.stack([self.demand_a, self.demand_b])

    @classmethod
    def zeros(cls, horizon=24, price=1.0):
        return cls(np.zeros(horizon, int), np.zeros(horizon, int), np.full(horizon, float(price)))


def round_half_up(x):
    """Round to the nearest integer, halves away from zero for x >= 0."""
    return np.floor(np.asarray(x, dtype=float) + 0.5).astype(np.int64)


def logistic(z):
    """Overflow-free logistic, ``exp(-log(1 + exp(-z)))``."""
    return np.exp(-np.logaddexp(0.0, -np.asarray(z, dtype=float)))


def swap_probability(x, params=ModelParams()):
    if not isinstance(x, FeatureVector):
        x = FeatureVector(*x)
    z = (params.theta[0] * x.t_sum + params.theta[1] * x.v_sum
         + params.theta[2] * x.c_r)
    if not math.isfinite(z):
        raise DataValidationError("non-finite logistic argument")
    return float(logistic(z))


def swap_probabilities(duration_minutes, energy_kwh, params=ModelParams()):
    """Vectorised :func:`swap_probability` over sessions sharing one swap time."""
    t = np.asarray(duration_minutes, dtype=float)
    v = np.asarray(energy_kwh, dtype=float)
    z = params.theta[0] * t + params.theta[1] * v + params.theta[2] * params.swap_time_minutes
    if not np.all(np.isfinite(z)):
        raise DataValidationError("non-finite logistic argument")
    return logistic(z)


def expected_demand_poisson(prob, lam):
    prob = check_probability(prob)
    lam = check_nonnegative(lam, "lambda")
    return prob * lam


def poisson_pmf(n, lam):
    if lam == 0:
        return 1.0 if n == 0 else 0.0
    return math.exp(-lam + n * math.log(lam) - math.lgamma(n + 1))


def _poisson_tail(truncation_n, lam):
    # Mass strictly beyond truncation_n, summed forward until terms vanish.
    if lam == 0:
        return 0.0
    n = truncation_n + 1
    term = poisson_pmf(n, lam)
    tail = 0.0
    while term > 0 and (n <= lam or term > 1e-300):
        tail += term
        n += 1
        term *= lam / n
        if n > truncation_n + 100_000:
            break
    return tail


def expected_demand_total_expectation(prob, lam, truncation_n=200, tail_tol=1e-12):
    """Expected swaps as a truncated sum over the Poisson arrival count.

    Computes ``sum_{n=0..N} n * prob * P(arrivals = n)`` directly, without
    using the closed-form mean; raises if the omitted tail mass exceeds
    `tail_tol`.
    """
    prob = check_probability(prob)
    lam = check_nonnegative(lam, "lambda")
    tail = _poisson_tail(int(truncation_n), lam)
    if tail >= tail_tol:
        raise DataValidationError(
            f"truncation at n={truncation_n} leaves Poisson tail mass {tail:.3g} for lambda={lam}"
        )
    return math.fsum(n * prob * poisson_pmf(n, lam) for n in range(int(truncation_n) + 1))


def _hour_of_week(origin, n_hours):
    return np.array(
        [((origin + timedelta(hours=h)).weekday() * 24 + (origin + timedelta(hours=h)).hour)
         for h in range(n_hours)],
        dtype=np.int64,
    )


def smooth_hour_of_week(expected, origin):
    """Replace each hour by the mean over all hours sharing its hour-of-week."""
    expected = np.asarray(expected, dtype=float)
    how = _hour_of_week(origin, expected.size)
    sums = np.bincount(how, weights=expected, minlength=HOURS_PER_WEEK)
    counts = np.bincount(how, minlength=HOURS_PER_WEEK)
    return sums[how] / counts[how]


def estimate_demand_series(sessions, params=ModelParams(), lambda_smoothing=False):
    """Hourly expected swap demand from a session log.

    Each hour's expectation is the sum of its sessions' swap probabilities, so
    an hour with ``n`` identical sessions gives ``n * p``. `lambda_smoothing`
    averages each hour with the same hour-of-week in other weeks.
    """
    sessions = list(sessions)
    arrivals = hourly_arrivals(sessions)
    idx = hour_index(sessions, arrivals.origin)
    probs = swap_probabilities(
        [s.duration_minutes for s in sessions], [s.energy_kwh for s in sessions], params
    )
    expected = np.bincount(idx, weights=probs, minlength=len(arrivals))
    if lambda_smoothing:
        expected = smooth_hour_of_week(expected, arrivals.origin)
    return DemandSeries(expected, round_half_up(expected), arrivals.origin, arrivals.hourly_counts)


def split_by_type(total, ratio_a):
    """Split integer totals so type A gets ``round_half_up(ratio_a * total)``."""
    ratio_a = check_probability(ratio_a, "ratio_a")
    total = check_counts(total, "total")
    a = round_half_up(ratio_a * total)
    return a, total - a


def split_demand(series, ratio_a=DEFAULT_RATIO_A, prices=None, start=0, horizon=24):
    """Cut a `horizon`-hour window out of `series` and split it into types A and B."""
    rounded = series.rounded if isinstance(series, DemandSeries) else round_half_up(series)
    if start < 0 or len(rounded) < start + horizon:
        raise DataValidationError(
            f"series has {len(rounded)} hours, need {start + horizon} for this window"
        )
    a, b = split_by_type(rounded[start:start + horizon], ratio_a)
    prices = PriceSeries.flat() if prices is None else prices
    if not isinstance(prices, PriceSeries):
        prices = PriceSeries(np.asarray(prices, dtype=float), daily=len(prices) == 24)
    return DemandProfile(a, b, prices.window(start, horizon))


class SwapDemandEstimator(TransformerMixin, BaseEstimator):
    """Estimate hourly battery-swap demand from charging sessions.

    Parameters
    ----------
    theta : tuple of 3 floats
        Logistic weights for duration (min), energy (kWh) and swap time (min).
    swap_time : float
        Battery swap time in minutes, shared by every session.
    lambda_smoothing : bool
        Average each hour with the same hour-of-week across weeks.
    ratio_a : float
        Share of swaps assigned to battery type A by :meth:`profile`.

    Attributes
    ----------
    series_ : DemandSeries
        Estimated hourly demand of the fitted session log.
    origin_ : datetime
        Clock hour of ``series_`` index 0.
    """

    def __init__(self, theta=DEFAULT_THETA, swap_time=DEFAULT_SWAP_TIME,
                 lambda_smoothing=False, ratio_a=DEFAULT_RATIO_A):
        self.theta = theta
        self.swap_time = swap_time
        self.lambda_smoothing = lambda_smoothing
        self.ratio_a = ratio_a

    def _params(self):
        return ModelParams(tuple(self.theta), float(self.swap_time))

    def fit(self, X, y=None):
        check_probability(self.ratio_a, "ratio_a")
        self.series_ = estimate_demand_series(X, self._params(), self.lambda_smoothing)
        self.origin_ = self.series_.origin
        self.n_sessions_ = int(self.series_.arrivals.sum())
        return self

    def transform(self, X):
        """Expected hourly demand for the sessions in `X`."""
        return estimate_demand_series(X, self._params(), self.lambda_smoothing).expected

    def decision_function(self, X):
        """Logistic argument for rows of ``[duration_min, energy_kwh]``."""
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise DataValidationError("expected columns [duration_min, energy_kwh]")
        theta = self._params().theta
        return theta[0] * X[:, 0] + theta[1] * X[:, 1] + theta[2] * float(self.swap_time)

    def predict_proba(self, X):
        """Columns ``[P(no swap), P(swap)]`` per row."""
        p = logistic(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def profile(self, prices=None, start=0, horizon=24):
        check_is_fitted(self, "series_")
        return split_demand(self.series_, self.ratio_a, prices, start, horizon)
