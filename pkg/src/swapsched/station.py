"""Hour-by-hour inventory dynamics of a two-type battery swap station.

A chromosome holds the number of batteries to charge each hour, type A genes
first, then type B. Every hour the station first serves swaps from its full
stock, then charges ``min(gene, empties)`` batteries. Charging more than the
available empties is therefore clamped ("repaired") rather than rejected.

Fitness (lower is better)::

    cost / xi_max + gamma + penalty(gamma)

where cost is the price-weighted number of charges, xi_max is the cost of the
charge-everything-immediately policy, and gamma is total charges over total
demand. `satisfaction_term="one_minus_gamma"` replaces ``gamma`` by
``1 - gamma``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import DataValidationError, check_positive_int
from .demand import DemandProfile

SATISFACTION_TERMS = ("literal_gamma", "one_minus_gamma")
TYPES = ("A", "B")


@dataclass(frozen=True)
class StationConfig:
    m_a: int = 5
    m_b: int = 8
    tau_s: float = 0.9
    tau_1: float = 2.0
    satisfaction_term: str = "literal_gamma"

    def __post_init__(self):
        check_positive_int(self.m_a, "m_a")
        check_positive_int(self.m_b, "m_b")
        if not 0 < self.tau_s <= 1:
            raise DataValidationError(f"tau_s must lie in (0, 1], got {self.tau_s!r}")
        if not self.tau_1 >= 0:
            raise DataValidationError(f"tau_1 must be >= 0, got {self.tau_1!r}")
        if self.satisfaction_term not in SATISFACTION_TERMS:
            raise DataValidationError(
                f"satisfaction_term must be one of {SATISFACTION_TERMS}, "
                f"got {self.satisfaction_term!r}"
            )

    @property
    def capacity(self):
        return np.array([self.m_a, self.m_b], dtype=np.int64)


@dataclass(frozen=True)
class SimulationTrace:
    """Per-type, per-hour state; arrays have shape ``(2, horizon)``, row 0 is type A.

    `full` and `empty` are end-of-hour stocks after charging.
    """

    supplied: np.ndarray
    full: np.ndarray
    empty: np.ndarray
    charge: np.ndarray
    cost: float
    gamma: float
    penalty: float
    fitness: float

    @property
    def applied_genes(self):
        return self.charge.reshape(-1)


def check_individual(genes, horizon):
    genes = np.asarray(genes)
    if genes.shape != (2 * horizon,):
        raise DataValidationError(f"individual must have {2 * horizon} genes, got {genes.shape}")
    as_int = genes.astype(np.int64)
    if not np.array_equal(as_int, genes) or np.any(as_int < 0):
        raise DataValidationError("genes must be non-negative integers")
    return as_int


def clamp_supply(d, f_prev):
    """Swaps actually served: demand capped by the full stock left over."""
    return min(d, f_prev)


def _step_all(genes, profile, cfg):
    """Reference simulation in plain Python; returns per-hour lists."""
    h = profile.horizon
    demand = profile.demand
    out = {k: [[0] * h, [0] * h] for k in ("supplied", "full", "empty", "charge")}
    for i, m in enumerate((cfg.m_a, cfg.m_b)):
        full, empty = m, 0
        for t in range(h):
            served = clamp_supply(int(demand[i, t]), full)
            empty += served
            full -= served
            charged = min(int(genes[i * h + t]), empty)
            full += charged
            empty -= charged
            out["supplied"][i][t] = served
            out["full"][i][t] = full
            out["empty"][i][t] = empty
            out["charge"][i][t] = charged
    return {k: np.array(v, dtype=np.int64) for k, v in out.items()}


def satisfaction_ratio(total_charged, total_demand):
    """Charged over demanded; an idle horizon counts as fully satisfied."""
    if total_demand == 0:
        return 1.0
    return total_charged / total_demand


def satisfaction(trace, profile):
    return satisfaction_ratio(int(trace.charge.sum()), int(profile.demand.sum()))


def penalty(gamma, cfg):
    return 0.0 if gamma >= cfg.tau_s else float(cfg.tau_1)


def plan_cost(charge, profile):
    """Price-weighted charges, ``sum_t (c_A,t + c_B,t) * V_t``."""
    return float(np.asarray(charge).reshape(2, -1).sum(axis=0) @ profile.price)


def _combine(cost, gamma, cfg, xi_max):
    cost_term = cost / xi_max if xi_max > 0 else 0.0
    sat_term = gamma if cfg.satisfaction_term == "literal_gamma" else 1.0 - gamma
    return cost_term + sat_term + penalty(gamma, cfg)


def immediate_plan(profile, cfg):
    """Charge every empty battery in the hour it is swapped in.

    Returns the chromosome and its cost, which is the normaliser ``xi_max``.
    """
    h = profile.horizon
    genes = np.zeros(2 * h, dtype=np.int64)
    demand = profile.demand
    for i, m in enumerate((cfg.m_a, cfg.m_b)):
        full, empty = m, 0
        for t in range(h):
            served = clamp_supply(int(demand[i, t]), full)
            empty += served
            full -= served
            genes[i * h + t] = empty
            full += empty
            empty = 0
    return genes, plan_cost(genes, profile)


def simulate(genes, profile, cfg, xi_max=None):
    """Run one chromosome through the horizon and score it.

    `xi_max` defaults to the immediate-charging cost of `profile`.
    """
    genes = check_individual(genes, profile.horizon)
    if xi_max is None:
        xi_max = immediate_plan(profile, cfg)[1]
    states = _step_all(genes, profile, cfg)
    cost = plan_cost(states["charge"], profile)
    gamma = satisfaction_ratio(int(states["charge"].sum()), int(profile.demand.sum()))
    return SimulationTrace(
        supplied=states["supplied"],
        full=states["full"],
        empty=states["empty"],
        charge=states["charge"],
        cost=cost,
        gamma=gamma,
        penalty=penalty(gamma, cfg),
        fitness=_combine(cost, gamma, cfg, xi_max),
    )


def repair(genes, profile, cfg):
    """Genes after clamping each hour's charge to the empties on hand."""
    return simulate(genes, profile, cfg, xi_max=0.0).applied_genes


def fitness(genes, profile, cfg, xi_max):
    return simulate(genes, profile, cfg, xi_max).fitness


def evaluate_population(population, profile, cfg, xi_max):
    """Vectorised fitness of a ``(n, 2*horizon)`` gene matrix.

    Returns ``(fitness, cost, gamma)`` arrays of length n; agrees with
    :func:`simulate` row by row.
    """
    pop = np.asarray(population, dtype=np.int64)
    n = pop.shape[0]
    h = profile.horizon
    genes = pop.reshape(n, 2, h)
    demand = profile.demand
    full = np.broadcast_to(cfg.capacity, (n, 2)).copy()
    empty = np.zeros((n, 2), dtype=np.int64)
    charged_per_hour = np.empty((n, h), dtype=np.int64)
    for t in range(h):
        served = np.minimum(demand[:, t], full)
        empty += served
        full -= served
        c = np.minimum(genes[:, :, t], empty)
        full += c
        empty -= c
        charged_per_hour[:, t] = c[:, 0] + c[:, 1]
    charged_total = charged_per_hour.sum(axis=1)
    cost = charged_per_hour @ profile.price
    total_demand = int(demand.sum())
    gamma = charged_total / total_demand if total_demand else np.ones(n)
    pen = np.where(gamma >= cfg.tau_s, 0.0, float(cfg.tau_1))
    cost_term = cost / xi_max if xi_max > 0 else np.zeros(n)
    sat = gamma if cfg.satisfaction_term == "literal_gamma" else 1.0 - gamma
    return cost_term + sat + pen, cost, gamma


def optimisation_rate(cost_immediate, cost_plan):
    """Relative saving ``(C_is - C_ours) / C_is``; 0 when nothing is charged."""
    if cost_immediate == 0:
        return 0.0
    return (cost_immediate - cost_plan) / cost_immediate


def plan_record(genes, profile, cfg):
    """JSON-ready summary of a plan next to the immediate baseline."""
    imm_genes, c_is = immediate_plan(profile, cfg)
    tr = simulate(genes, profile, cfg, xi_max=c_is)
    record = {"horizon": profile.horizon, "price": profile.price.tolist()}
    for i, name in enumerate(TYPES):
        record[name] = {
            "demand": profile.demand[i].tolist(),
            "supplied": tr.supplied[i].tolist(),
            "charge": tr.charge[i].tolist(),
            "full": tr.full[i].tolist(),
            "empty": tr.empty[i].tolist(),
        }
    record.update(
        cost=tr.cost,
        gamma=tr.gamma,
        penalty=tr.penalty,
        fitness=tr.fitness,
        c_is=c_is,
        c_ours=tr.cost,
        r_opt=optimisation_rate(c_is, tr.cost),
    )
    return record
