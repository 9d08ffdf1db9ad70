import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from swapsched import ChargingScheduleGA, DemandSeriesMetrics, SwapDemandEstimator
from swapsched.demand import estimate_demand_series, swap_probability
from swapsched.ingest import PriceSeries, parse_sessions
from swapsched.synthetic import make_region


def test_demand_estimator_params_roundtrip():
    est = SwapDemandEstimator(theta=(0.1, 0.05, -1.0), swap_time=3.0)
    params = est.get_params()
    assert params == {"theta": (0.1, 0.05, -1.0), "swap_time": 3.0,
                      "lambda_smoothing": False, "ratio_a": 5 / 13}
    assert clone(est).get_params() == params
    assert est.set_params(swap_time=4.0).swap_time == 4.0


def test_demand_estimator_fit_matches_function(sessions_csv):
    sessions = parse_sessions(sessions_csv)
    est = SwapDemandEstimator().fit(sessions)
    ref = estimate_demand_series(sessions)
    assert np.array_equal(est.series_.expected, ref.expected)
    assert est.n_sessions_ == len(sessions)
    assert np.array_equal(est.transform(sessions), ref.expected)
    assert np.array_equal(SwapDemandEstimator().fit_transform(sessions), ref.expected)


def test_predict_proba():
    proba = SwapDemandEstimator().predict_proba([[60, 30], [0, 0]])
    assert proba.shape == (2, 2)
    assert proba[0, 1] == pytest.approx(swap_probability((60, 30, 5)))
    assert np.allclose(proba.sum(axis=1), 1.0)


def test_profile_requires_fit(sessions_csv):
    est = SwapDemandEstimator()
    with pytest.raises(NotFittedError):
        est.profile()
    est.fit(parse_sessions(sessions_csv))
    prof = est.profile(PriceSeries.flat(0.5), start=24)
    assert prof.horizon == 24 and np.all(prof.price == 0.5)
    assert np.array_equal(prof.demand_a + prof.demand_b, est.series_.rounded[24:48])


def test_metrics_in_pipeline():
    X = np.vstack([np.sin(2 * np.pi * np.arange(336) / 24), np.ones(336)])
    out = make_pipeline(DemandSeriesMetrics()).fit_transform(X)
    assert out.shape == (2, 3)


def test_schedule_ga_estimator():
    prof = make_region(1005)
    ga = ChargingScheduleGA(max_iterations=30, random_state=3)
    assert clone(ga).get_params()["random_state"] == 3
    with pytest.raises(NotFittedError):
        ga.predict(prof)
    ga.fit(prof)
    charge = ga.predict(prof)
    assert charge.shape == (2, 24)
    assert ga.score(prof) == pytest.approx(-ga.best_fitness_)
    assert ga.convergence_.shape == (30,)
    plan = ga.plan(prof)
    assert plan["c_ours"] <= plan["c_is"] + 1e-9 or plan["penalty"] > 0
    array_input = np.column_stack([prof.demand_a, prof.demand_b, prof.price])
    again = ChargingScheduleGA(max_iterations=30, random_state=3).fit(array_input)
    assert np.array_equal(again.best_individual_, ga.best_individual_)
