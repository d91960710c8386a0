"""Fairness and centrality metrics, budget sweeps and the hypothesis trend report."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exact import brute_force, solve_exact
from .heuristics import LocalSearchConfig, solve_heuristic
from .instance import Instance, build_cost, check_network
from .routing import CostModel, all_pairs_travel_times, format_p, parse_p, shortest_length_matrix, social_cost
from .synthetic import budget_grid

SOLVERS = ("heuristic", "exact", "brute")


def solve(instance: Instance, p, solver: str = "heuristic", config: LocalSearchConfig | None = None) -> frozenset[int]:
    p = parse_p(p)
    if solver == "heuristic":
        return solve_heuristic(instance, p, config)
    if solver == "exact":
        return solve_exact(instance, p, canonical_ties=instance.m <= 16)[0]
    if solver == "brute":
        return brute_force(instance, p)[0]
    raise ValueError(f"unknown solver {solver!r} (expected one of {', '.join(SOLVERS)})")


@dataclass(frozen=True)
class SweepRecord:
    p: float
    budget: float
    network: frozenset[int]
    social_cost: float
    gini: float
    worst_best_ratio: float
    per_city_avg_cost: tuple[float, ...]
    build_cost: float

    def row(self) -> dict:
        return {
            "p": format_p(self.p),
            "budget": self.budget,
            "social_cost": self.social_cost,
            "gini": self.gini,
            "worst_best_ratio": self.worst_best_ratio,
            "edges_built": len(self.network),
            "build_cost": self.build_cost,
        }


def _pair_data(instance: Instance, network) -> tuple[np.ndarray, np.ndarray]:
    D = all_pairs_travel_times(instance, network)
    model = CostModel(instance)
    return model.pair_times(D), model.tau


def gini(instance: Instance, network: Iterable[int]) -> float:
    """Demand-weighted Gini index of travel times over city pairs."""
    t, w = _pair_data(instance, network)
    if not np.isfinite(t).all():
        raise ValueError("Gini index undefined: some travellers cannot reach their destination")
    denom = 2.0 * w.sum() * np.dot(w, t)
    if denom == 0:
        raise ValueError("Gini index undefined: zero total demand or zero travel time")
    order = np.argsort(t, kind="stable")
    t, w = t[order], w[order]
    # sum over ordered pairs of |t_P - t_Q| w_P w_Q, using the sorted order
    w_before = np.cumsum(w) - w
    wt_before = np.cumsum(w * t) - w * t
    num = 2.0 * float(np.dot(w, t * w_before - wt_before))
    return float(num / denom)


def average_costs(instance: Instance, network: Iterable[int]) -> np.ndarray:
    """Demand-weighted mean travel time per city (``nan`` for cities without demand)."""
    D = all_pairs_travel_times(instance, network)
    tau = instance.demand_matrix
    tot = tau.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        weighted = np.where(tau > 0, tau * D, 0.0).sum(axis=1)
        return np.where(tot > 0, weighted / tot, np.nan)


def average_cost(instance: Instance, network: Iterable[int], i: int) -> float:
    if not 0 <= i < instance.n:
        raise ValueError(f"unknown city {i}")
    if instance.demand_matrix[i].sum() <= 0:
        raise ValueError(f"city {i} has no demand; its average cost is undefined")
    return float(average_costs(instance, network)[i])


def worst_best_ratio(instance: Instance, network: Iterable[int]) -> float:
    ac = average_costs(instance, network)
    if np.isnan(ac).any():
        missing = [int(i) for i in np.flatnonzero(np.isnan(ac))]
        raise ValueError(f"cities {missing} have no demand; worst-best ratio undefined")
    if not np.isfinite(ac).all():
        raise ValueError("some travellers cannot reach their destination; worst-best ratio undefined")
    lo = ac.min()
    if lo == 0:
        raise ValueError("best city has zero average cost")
    return float(ac.max() / lo)


def remoteness_all(instance: Instance) -> np.ndarray:
    """Mean shortest-path length (candidate graph, edge lengths) from each city to all others.

    Falls back to straight-line distances when the candidate graph is disconnected.
    """
    n = instance.n
    if n < 2:
        raise ValueError("remoteness needs at least two cities")
    D = shortest_length_matrix(instance)
    if not np.isfinite(D).all():
        if not all(c.has_coords for c in instance.cities):
            raise ValueError("candidate graph is disconnected and cities lack coordinates")
        xy = np.array([[c.x, c.y] for c in instance.cities])
        D = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=-1))
    return D.sum(axis=1) / (n - 1)


def remoteness(instance: Instance, c: int) -> float:
    return float(remoteness_all(instance)[c])


def _or_nan(fn, *args) -> float:
    try:
        return fn(*args)
    except ValueError:
        return math.nan


def network_metrics(instance: Instance, network: Iterable[int]) -> dict:
    """Gini, worst-best ratio and per-city average cost; undefined values come back as ``nan``."""
    R = check_network(instance, network)
    return {
        "gini": _or_nan(gini, instance, R),
        "worst_best_ratio": _or_nan(worst_best_ratio, instance, R),
        "per_city_avg_cost": [float(x) for x in average_costs(instance, R)],
    }


def _cell(args) -> SweepRecord:
    instance, p, B, solver, config = args
    J = instance.with_budget(B)
    R = solve(J, p, solver, config)
    met = network_metrics(J, R)
    return SweepRecord(
        p=p,
        budget=B,
        network=R,
        social_cost=social_cost(J, R, p),
        gini=met["gini"],
        worst_best_ratio=met["worst_best_ratio"],
        per_city_avg_cost=tuple(met["per_city_avg_cost"]),
        build_cost=build_cost(J, R),
    )


def budget_sweep(instance: Instance, p_list: Sequence, num_budgets: int, solver: str = "heuristic",
                 config: LocalSearchConfig | None = None, workers: int = 1) -> list[SweepRecord]:
    """Solve and measure every (p, budget) cell; records sorted by (p, budget)."""
    ps = sorted({parse_p(p) for p in p_list})
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}")
    budgets = budget_grid(instance, num_budgets)
    cells = [(instance, p, B, solver, config) for p in ps for B in budgets]
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_cell, cells))
    return [_cell(c) for c in cells]


def vac(instance: Instance, p, num_budgets: int = 300, solver: str = "heuristic",
        config: LocalSearchConfig | None = None) -> np.ndarray:
    """Per-city average cost, averaged over the sampled budget grid."""
    p = parse_p(p)
    rows = [average_costs(instance.with_budget(B), solve(instance.with_budget(B), p, solver, config))
            for B in budget_grid(instance, num_budgets)]
    return np.mean(rows, axis=0)


def hypothesis_report(instance: Instance, records: Sequence[SweepRecord], mid: tuple[float, float] = (0.25, 0.75)) -> dict:
    """Trend summary: mean Gini per p over mid-range budgets, and the slope of
    budget-averaged city cost against remoteness per p.

    Budgets count as mid-range when they fall within the ``mid`` fraction of
    the sampled range.  Observations only; nothing here is asserted.
    """
    if not records:
        return {"mean_gini_mid": {}, "vac_remoteness_slope": {}}
    lo = min(r.budget for r in records)
    hi = max(r.budget for r in records)
    a, b = lo + mid[0] * (hi - lo), lo + mid[1] * (hi - lo)
    re = remoteness_all(instance)
    gini_mid, slope = {}, {}
    for p in sorted({r.p for r in records}):
        rows = [r for r in records if r.p == p]
        g = [r.gini for r in rows if a <= r.budget <= b]
        gini_mid[format_p(p)] = float(np.nanmean(g)) if g else math.nan
        v = np.nanmean(np.array([r.per_city_avg_cost for r in rows]), axis=0)
        slope[format_p(p)] = float(np.polyfit(re, v, 1)[0]) if len(re) >= 2 else math.nan
    return {"mean_gini_mid": gini_mid, "vac_remoteness_slope": slope}
