"""Genetic algorithm for 24-hour charging plans, with LRU-guided sampling.

Individuals are generated hour by hour from the station dynamics: after the
hour's swaps, the charge for type ``i`` is drawn uniformly from
``[delta, empties]``. Under the ``"lru"`` strategy ``delta`` is the excess of
type ``i``'s demand over the other type's demand (capped by the empties), so a
type that is currently in higher demand is recharged at least by that excess.
The ``"uniform"`` strategy always uses ``delta = 0`` and is the plain-GA
baseline. Mutation regenerates a whole individual the same way, so every
individual the engine creates is feasible by construction.

Randomness comes from one seed split into independent streams for
initialisation, selection, crossover and mutation.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import DataValidationError, check_positive_int
from .demand import DemandProfile
from .station import (
    StationConfig,
    check_individual,
    evaluate_population,
    immediate_plan,
    plan_record,
    simulate,
)

STRATEGIES = ("lru", "uniform")
STREAMS = ("init", "selection", "crossover", "mutation")


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 100
    crossover_prob: float = 0.8
    mutation_rate: float = 0.005
    max_iterations: int = 500
    tournament_size: int = 3
    elitism_count: int = 1
    seed: int = 0
    strategy: str = "lru"

    def __post_init__(self):
        check_positive_int(self.population_size, "population_size")
        check_positive_int(self.max_iterations, "max_iterations")
        check_positive_int(self.tournament_size, "tournament_size")
        check_positive_int(self.elitism_count, "elitism_count", minimum=0)
        check_positive_int(self.seed, "seed", minimum=0)
        if self.seed >= 2**64:
            raise DataValidationError("seed must fit in 64 bits")
        for name in ("crossover_prob", "mutation_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DataValidationError(f"{name} must lie in [0, 1], got {value!r}")
        if self.tournament_size > self.population_size:
            raise DataValidationError("tournament_size cannot exceed population_size")
        if self.elitism_count >= self.population_size:
            raise DataValidationError("elitism_count must be smaller than population_size")
        if self.strategy not in STRATEGIES:
            raise DataValidationError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")


@dataclass
class RunResult:
    best_individual: np.ndarray
    best_fitness: float
    best_generation: int
    best_fitness_per_generation: np.ndarray
    mean_best_fitness: float
    per_iteration_seconds: float
    strategy: str = "lru"
    seed: int = 0

    def summary(self):
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "f_best": self.best_fitness,
            "g_f_best": self.best_generation,
            "mean_best_fitness": self.mean_best_fitness,
        }


def rng_streams(seed):
    """Independent generators keyed by purpose, derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(s) for name, s in zip(STREAMS, children)}


def lru_delta(d_i, d_j, e):
    return max(0, min(d_i - d_j, e))


def sample_charge(d_i, d_j, e, strategy, rng):
    """Charge drawn for one type and hour given the empties `e` after swaps."""
    if e == 0:
        return 0
    low = lru_delta(d_i, d_j, e) if strategy == "lru" and d_i > d_j else 0
    return int(rng.integers(low, e, endpoint=True))


def generate_population(profile, cfg, strategy, rng, n):
    """`n` feasible individuals built by stepping the station forward."""
    if strategy not in STRATEGIES:
        raise DataValidationError(f"unknown strategy {strategy!r}")
    h = profile.horizon
    demand = profile.demand
    other = demand[::-1]
    genes = np.zeros((n, 2, h), dtype=np.int64)
    if n == 0:
        return genes.reshape(0, 2 * h)
    full = np.broadcast_to(cfg.capacity, (n, 2)).copy()
    empty = np.zeros((n, 2), dtype=np.int64)
    for t in range(h):
        served = np.minimum(demand[:, t], full)
        empty += served
        full -= served
        if strategy == "lru":
            low = np.clip(demand[:, t] - other[:, t], 0, None)
            low = np.minimum(low, empty)
        else:
            low = np.zeros_like(empty)
        c = rng.integers(low, empty, endpoint=True)
        full += c
        empty -= c
        genes[:, :, t] = c
    return genes.reshape(n, 2 * h)


def generate_individual(profile, cfg, strategy, rng):
    return generate_population(profile, cfg, strategy, rng, 1)[0]


def tournament_indices(fitnesses, k, rng, n_select):
    """Winners of `n_select` tournaments of `k` distinct contestants each.

    Lowest fitness wins; ties go to the lowest population index.
    """
    fit = np.asarray(fitnesses, dtype=float)
    size = fit.size
    contestants = np.argsort(rng.random((n_select, size)), axis=1)[:, :k]
    scores = fit[contestants]
    is_best = scores == scores.min(axis=1, keepdims=True)
    return np.where(is_best, contestants, size).min(axis=1)


def tournament_select(population, fitnesses, k, rng):
    idx = tournament_indices(fitnesses, k, rng, 1)[0]
    return np.array(population[idx], copy=True)


def crossover_pairs(parents_1, parents_2, rng, prob):
    """Midpoint crossover of row-aligned parents: swap the type-B halves."""
    p1 = np.asarray(parents_1)
    p2 = np.asarray(parents_2)
    half = p1.shape[1] // 2
    swap = rng.random(p1.shape[0]) < prob
    c1 = p1.copy()
    c2 = p2.copy()
    c1[swap, half:] = p2[swap, half:]
    c2[swap, half:] = p1[swap, half:]
    return c1, c2


def midpoint_crossover(p1, p2, rng, prob):
    c1, c2 = crossover_pairs(np.atleast_2d(p1), np.atleast_2d(p2), rng, prob)
    return c1[0], c2[0]


def mutate_population(population, profile, cfg, ga, rng):
    """Regenerate every individual for which any per-gene trial fires."""
    pop = np.array(population, copy=True)
    fires = (rng.random(pop.shape) < ga.mutation_rate).any(axis=1)
    n_new = int(fires.sum())
    if n_new:
        pop[fires] = generate_population(profile, cfg, ga.strategy, rng, n_new)
    return pop


def mutate(ind, profile, cfg, ga, rng):
    return mutate_population(np.atleast_2d(ind), profile, cfg, ga, rng)[0]


def run(profile, station, ga):
    """Evolve a population and return the best plan with its convergence curve."""
    streams = rng_streams(ga.seed)
    xi_max = immediate_plan(profile, station)[1]
    n = ga.population_size
    n_offspring = n - ga.elitism_count
    n_pairs = math.ceil(n_offspring / 2)

    started = time.perf_counter()
    pop = generate_population(profile, station, ga.strategy, streams["init"], n)
    curve = np.empty(ga.max_iterations)
    best_ind, best_fit = None, np.inf
    for gen in range(ga.max_iterations):
        fit = evaluate_population(pop, profile, station, xi_max)[0]
        leader = int(np.argmin(fit))
        curve[gen] = fit[leader]
        if fit[leader] < best_fit:
            best_fit, best_ind = float(fit[leader]), pop[leader].copy()
        if gen == ga.max_iterations - 1:
            break
        elites = pop[np.argsort(fit, kind="stable")[: ga.elitism_count]]
        chosen = tournament_indices(fit, ga.tournament_size, streams["selection"], 2 * n_pairs)
        c1, c2 = crossover_pairs(pop[chosen[0::2]], pop[chosen[1::2]],
                                 streams["crossover"], ga.crossover_prob)
        children = np.empty((2 * n_pairs, pop.shape[1]), dtype=np.int64)
        children[0::2] = c1
        children[1::2] = c2
        children = mutate_population(children[:n_offspring], profile, station, ga,
                                     streams["mutation"])
        pop = np.vstack([elites, children])
    elapsed = time.perf_counter() - started

    best_generation = int(np.flatnonzero(curve == curve.min())[0])
    return RunResult(
        best_individual=best_ind,
        best_fitness=best_fit,
        best_generation=best_generation,
        best_fitness_per_generation=curve,
        mean_best_fitness=float(curve.mean()),
        per_iteration_seconds=elapsed / ga.max_iterations,
        strategy=ga.strategy,
        seed=ga.seed,
    )


@dataclass
class ComparisonReport:
    strategies: tuple
    seeds: tuple
    runs: dict = field(default_factory=dict)  # strategy -> list[RunResult], seed order

    def f_best(self, strategy):
        return np.array([r.best_fitness for r in self.runs[strategy]])

    def wins(self):
        """Per-seed head-to-head counts on best fitness."""
        a, b = self.strategies
        fa, fb = self.f_best(a), self.f_best(b)
        if a == b:
            return {"ties": len(self.seeds), a: 0}
        return {a: int(np.sum(fa < fb)), b: int(np.sum(fb < fa)), "ties": int(np.sum(fa == fb))}

    def median_winner(self):
        """Strategy with strictly lower median f_best, or ``None`` on a tie."""
        a, b = self.strategies
        ma, mb = np.median(self.f_best(a)), np.median(self.f_best(b))
        if a == b or ma == mb:
            return None
        return a if ma < mb else b

    def mean_iteration_seconds(self, strategy):
        return float(np.mean([r.per_iteration_seconds for r in self.runs[strategy]]))

    def to_dict(self):
        """Deterministic summary; wall-clock timings are left out on purpose."""
        out = {"strategies": list(self.strategies), "seeds": list(self.seeds), "results": {}}
        for s in dict.fromkeys(self.strategies):
            runs = self.runs[s]
            out["results"][s] = {
                "runs": [r.summary() for r in runs],
                "mean_f_best": float(np.mean([r.best_fitness for r in runs])),
                "median_f_best": float(np.median([r.best_fitness for r in runs])),
                "mean_g_f_best": float(np.mean([r.best_generation for r in runs])),
                "mean_best_fitness": float(np.mean([r.mean_best_fitness for r in runs])),
            }
        out["wins"] = self.wins()
        out["median_winner"] = self.median_winner()
        return out


def compare(profile, station, ga, seeds, strategies=("uniform", "lru")):
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise DataValidationError("compare needs at least one seed")
    if len(strategies) != 2:
        raise DataValidationError("compare takes exactly two strategies")
    report = ComparisonReport(tuple(strategies), seeds)
    for strategy in dict.fromkeys(strategies):
        report.runs[strategy] = [
            run(profile, station, replace(ga, strategy=strategy, seed=s)) for s in seeds
        ]
    return report


def as_profile(X):
    """Accept a DemandProfile or a ``(horizon, 3)`` array of demand A, demand B, price."""
    if isinstance(X, DemandProfile):
        return X
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise DataValidationError("expected a DemandProfile or an array of shape (horizon, 3)")
    return DemandProfile(arr[:, 0], arr[:, 1], arr[:, 2])


class ChargingScheduleGA(BaseEstimator):
    """Charging-plan optimiser with a scikit-learn style interface.

    ``fit(profile)`` evolves a plan for the given demand profile; ``predict``
    replays the learned chromosome on a profile and returns the charges
    actually applied, shape ``(2, horizon)``. ``score`` is the negated fitness
    so that larger is better.
    """

    def __init__(self, strategy="lru", population_size=100, crossover_prob=0.8,
                 mutation_rate=0.005, max_iterations=500, tournament_size=3,
                 elitism_count=1, random_state=0, m_a=5, m_b=8, tau_s=0.9, tau_1=2.0,
                 satisfaction_term="literal_gamma"):
        self.strategy = strategy
        self.population_size = population_size
        self.crossover_prob = crossover_prob
        self.mutation_rate = mutation_rate
        self.max_iterations = max_iterations
        self.tournament_size = tournament_size
        self.elitism_count = elitism_count
        self.random_state = random_state
        self.m_a = m_a
        self.m_b = m_b
        self.tau_s = tau_s
        self.tau_1 = tau_1
        self.satisfaction_term = satisfaction_term

    def station_config(self):
        return StationConfig(self.m_a, self.m_b, self.tau_s, self.tau_1, self.satisfaction_term)

    def ga_config(self):
        return GaConfig(
            population_size=self.population_size,
            crossover_prob=self.crossover_prob,
            mutation_rate=self.mutation_rate,
            max_iterations=self.max_iterations,
            tournament_size=self.tournament_size,
            elitism_count=self.elitism_count,
            seed=0 if self.random_state is None else self.random_state,
            strategy=self.strategy,
        )

    def fit(self, X, y=None):
        profile = as_profile(X)
        self.result_ = run(profile, self.station_config(), self.ga_config())
        self.best_individual_ = self.result_.best_individual
        self.best_fitness_ = self.result_.best_fitness
        self.convergence_ = self.result_.best_fitness_per_generation
        self.horizon_ = profile.horizon
        return self

    def predict(self, X):
        check_is_fitted(self, "best_individual_")
        profile = as_profile(X)
        check_individual(self.best_individual_, profile.horizon)
        return simulate(self.best_individual_, profile, self.station_config()).charge

    def score(self, X, y=None):
        check_is_fitted(self, "best_individual_")
        return -simulate(self.best_individual_, as_profile(X), self.station_config()).fitness

    def plan(self, X):
        """Plan summary (per-type arrays, cost, gamma, r_opt) for profile `X`."""
        check_is_fitted(self, "best_individual_")
        return plan_record(self.best_individual_, as_profile(X), self.station_config())
