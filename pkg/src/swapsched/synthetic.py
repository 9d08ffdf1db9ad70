"""Seeded synthetic demand profiles for benchmarking the optimiser.

A region has a daily two-peak swap demand per battery type. Type A peaks in
the morning and type B in the evening, so at most hours one type clearly
out-demands the other. Hourly counts are Poisson draws around the intensity
curve. Prices follow a three-tier time-of-use tariff with a night valley.
"""

from __future__ import annotations

import numpy as np

from .demand import DemandProfile

# Three-tier tariff (currency / charged battery): valley 0-7, peak 10-11 and 18-21.
TOU_PRICE = np.array(
    [0.35] * 8 + [0.70] * 2 + [1.10] * 2 + [0.70] * 6 + [1.10] * 4 + [0.70] * 2
)

# Seeds of the ten benchmark regions used by the comparison acceptance check.
BENCHMARK_REGION_SEEDS = tuple(range(1001, 1011))


def _bump(hours, centre, width):
    d = np.minimum(np.abs(hours - centre), 24 - np.abs(hours - centre))
    return np.exp(-0.5 * (d / width) ** 2)


def demand_intensity(rng, hours, peak_hour, scale):
    base = 0.6 + 0.4 * rng.random()
    main = _bump(hours, peak_hour, 2.0 + rng.random())
    secondary = 0.5 * _bump(hours, (peak_hour + 10) % 24, 2.0)
    return scale * (base * 0.4 + main + secondary)


def make_region(seed, m_a=5, m_b=8, intensity=0.8):
    """A 24-hour demand-intensive profile with A/B skew, reproducible from `seed`.

    Peak hourly demand per type is roughly its inventory times `intensity`.
    """
    rng = np.random.default_rng(seed)
    hours = np.arange(24)
    lam_a = demand_intensity(rng, hours, 8 + rng.integers(-1, 2), intensity * m_a * 0.8)
    lam_b = demand_intensity(rng, hours, 18 + rng.integers(-1, 2), intensity * m_b * 0.8)
    d_a = rng.poisson(lam_a)
    d_b = rng.poisson(lam_b)
    return DemandProfile(d_a, d_b, TOU_PRICE.copy())


def benchmark_regions(m_a=5, m_b=8, seeds=BENCHMARK_REGION_SEEDS):
    return {f"synthetic-{s}": make_region(s, m_a, m_b) for s in seeds}


def price_valley_profile(demand_level=3, horizon=24, valley=(0, 8),
                         valley_price=0.3, base_price=1.0):
    """Flat demand for both types with a cheap block of hours."""
    d = np.full(horizon, demand_level)
    price = np.full(horizon, base_price)
    price[valley[0]:valley[1]] = valley_price
    return DemandProfile(d, d.copy(), price)
