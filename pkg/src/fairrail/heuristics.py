"""Marginal-contribution scoring, edge filtering, greedy generation and local search."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

from .instance import Instance, check_network
from .routing import CostModel, parse_p

log = logging.getLogger(__name__)

FIRST = "first"
BEST = "best"


@dataclass(frozen=True)
class LocalSearchConfig:
    """Settings for :func:`solve_heuristic`.

    ``warmup`` is the cheaper neighbourhood run before the final
    ``(m_add, m_del)`` pass; ``sigma=None`` means ``min(m, 3n)``.
    ``improvement_rule`` is ``"best"`` (take the cheapest improving move) or
    ``"first"`` (take the first one found in scan order).
    """

    m_add: int = 2
    m_del: int = 2
    sigma: int | None = None
    improvement_rule: str = BEST
    warmup: tuple[int, int] | None = (1, 2)

    def __post_init__(self):
        if self.m_add < 0 or self.m_del < 0:
            raise ValueError("m_add and m_del must be non-negative")
        if self.m_add + self.m_del < 1:
            raise ValueError("m_add + m_del must be at least 1")
        if self.sigma is not None and self.sigma < 1:
            raise ValueError("sigma must be a positive integer")
        if self.improvement_rule not in (FIRST, BEST):
            raise ValueError(f"unknown improvement rule {self.improvement_rule!r}")


def default_sigma(instance: Instance) -> int:
    return min(instance.m, 3 * instance.n)


def network_cost(instance: Instance, edges: Iterable[int]) -> float:
    return math.fsum(instance.edges[e].length for e in edges)


def _soft_mcs(model: CostModel, R: frozenset[int]) -> dict[int, float]:
    base_mask = model.mask(R)
    base = model.times(base_mask)
    out = {}
    for e in sorted(R):
        base_mask[e] = False
        after = model.times(base_mask)
        base_mask[e] = True
        out[e] = float(model.cost_increase(base, after) / model.length[e])
    return out


def _hard_mcs(model: CostModel, U: frozenset[int]) -> dict[int, float]:
    mask = model.mask(U)
    base = model.times(mask, hard=True)
    out = {}
    for e in sorted(U):
        mask[e] = False
        after = model.times(mask, hard=True)
        mask[e] = True
        out[e] = float(model.cost_increase(base, after) / model.length[e])
    return out


def marginal_contribution_soft(instance: Instance, network: Iterable[int], e: int, p) -> float:
    """Cost increase per unit length when ``e`` is unbuilt but still usable by bus."""
    R = check_network(instance, network)
    if e not in R:
        raise ValueError(f"edge {e} is not in the network")
    model = CostModel(instance, p)
    mask = model.mask(R)
    base = model.times(mask)
    mask[e] = False
    return float(model.cost_increase(base, model.times(mask)) / model.length[e])


def marginal_contribution_hard(instance: Instance, universe: Iterable[int], e: int, p) -> float:
    """Cost increase per unit length when ``e`` is removed from the travel graph altogether."""
    U = check_network(instance, universe)
    if e not in U:
        raise ValueError(f"edge {e} is not in the universe")
    model = CostModel(instance, p)
    mask = model.mask(U)
    base = model.times(mask, hard=True)
    mask[e] = False
    return float(model.cost_increase(base, model.times(mask, hard=True)) / model.length[e])


def mc_ranking(instance: Instance, p, universe: Iterable[int] | None = None) -> list[tuple[int, float]]:
    """Edges sorted by hard marginal contribution, highest first (ties: lower id first)."""
    U = frozenset(range(instance.m)) if universe is None else check_network(instance, universe)
    mcs = _hard_mcs(CostModel(instance, p), U)
    return sorted(mcs.items(), key=lambda kv: (-kv[1], kv[0]))


def preprocess(instance: Instance, sigma: int, p) -> frozenset[int]:
    """Drop the lowest-MC edge, recomputing MCs each round, until ``sigma`` edges remain."""
    if sigma > instance.m:
        raise ValueError(f"sigma={sigma} exceeds the number of candidate edges ({instance.m})")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    model = CostModel(instance, p)
    E = frozenset(range(instance.m))
    for _ in range(instance.m - sigma):
        mcs = _hard_mcs(model, E)
        worst = min(mcs, key=lambda e: (mcs[e], e))
        E = E - {worst}
    return E


def greedy_generate(instance: Instance, allowed: Iterable[int], p) -> frozenset[int]:
    R = check_network(instance, allowed)
    model = CostModel(instance, p)
    while network_cost(instance, R) > instance.budget:
        mcs = _soft_mcs(model, R)
        worst = min(mcs, key=lambda e: (mcs[e], e))
        R = R - {worst}
    return R


def _find_improvement(model: CostModel, instance: Instance, R: frozenset[int], cost: float,
                      allowed: frozenset[int], m_add: int, m_del: int, rule: str):
    B = instance.budget
    length = model.length
    inside = sorted(R)
    outside = sorted(allowed - R)
    best = None
    for d in range(m_del + 1):
        for dels in combinations(inside, d):
            kept = R.difference(dels)
            slack = B - network_cost(instance, kept)
            fits = [e for e in outside if length[e] <= slack + 1e-9 * max(1.0, abs(B))]
            base = None
            for a in range(1, m_add + 1):
                for adds in combinations(fits, a):
                    if a > 1 and sum(length[e] for e in adds) > slack + 1e-9 * max(1.0, abs(B)):
                        continue
                    new = kept.union(adds)
                    if network_cost(instance, new) > B:
                        continue
                    if base is None:
                        base = model.times(model.mask(kept))
                    T = base
                    for e in adds:
                        T = model.insert(T, e)
                    c = model.cost_of_times(T)
                    if c < cost:
                        if rule == FIRST:
                            return new, c
                        if best is None or c < best[1]:
                            best = (new, c)
    return best


def local_search(instance: Instance, allowed: Iterable[int], start: Iterable[int], m_add: int, m_del: int,
                 p, improvement_rule: str = BEST) -> frozenset[int]:
    """Apply strictly improving (m_add, m_del) moves until none exists.

    Moves are scanned with deletion sets first (smallest first, lexicographic),
    then addition sets (smallest first, lexicographic).  Pure deletions are
    skipped since removing edges never lowers the cost.  Under the best rule,
    equal-cost moves go to the one scanned first.
    """
    allowed = check_network(instance, allowed)
    R = check_network(instance, start)
    if network_cost(instance, R) > instance.budget:
        raise ValueError("local search needs a feasible start network")
    if m_add < 0 or m_del < 0:
        raise ValueError("m_add and m_del must be non-negative")
    if improvement_rule not in (FIRST, BEST):
        raise ValueError(f"unknown improvement rule {improvement_rule!r}")
    model = CostModel(instance, p)
    cost = model.cost(model.mask(R))
    steps = 0
    while True:
        move = _find_improvement(model, instance, R, cost, allowed, m_add, m_del, improvement_rule)
        if move is None:
            log.debug("local search (%d,%d): %d steps, cost %.6g", m_add, m_del, steps, cost)
            return R
        R, cost = move
        steps += 1


def solve_heuristic(instance: Instance, p, config: LocalSearchConfig | None = None) -> frozenset[int]:
    """Filter edges, build a feasible network greedily, then improve it by local search."""
    p = parse_p(p)
    config = config or LocalSearchConfig()
    sigma = default_sigma(instance) if config.sigma is None else config.sigma
    allowed = preprocess(instance, sigma, p)
    R = greedy_generate(instance, allowed, p)
    if config.warmup is not None:
        R = local_search(instance, allowed, R, *config.warmup, p, config.improvement_rule)
    return local_search(instance, allowed, R, config.m_add, config.m_del, p, config.improvement_rule)
