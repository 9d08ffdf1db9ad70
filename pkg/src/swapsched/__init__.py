"""Battery swap station demand estimation and charging-plan optimisation."""

from ._validation import DataValidationError
from .demand import (
    DemandProfile,
    DemandSeries,
    ModelParams,
    SwapDemandEstimator,
    estimate_demand_series,
    split_demand,
    swap_probability,
)
from .ga import ChargingScheduleGA, GaConfig, RunResult, compare, run
from .ingest import ChargingSession, PriceSeries, hourly_arrivals, load_prices, parse_sessions
from .metrics import DemandSeriesMetrics, MetricsReport, evaluate_dataset
from .station import StationConfig, immediate_plan, simulate

__all__ = [
    "ChargingScheduleGA",
    "ChargingSession",
    "DataValidationError",
    "DemandProfile",
    "DemandSeries",
    "DemandSeriesMetrics",
    "GaConfig",
    "MetricsReport",
    "ModelParams",
    "PriceSeries",
    "RunResult",
    "StationConfig",
    "SwapDemandEstimator",
    "compare",
    "estimate_demand_series",
    "evaluate_dataset",
    "hourly_arrivals",
    "immediate_plan",
    "load_prices",
    "parse_sessions",
    "run",
    "simulate",
    "split_demand",
    "swap_probability",
]
