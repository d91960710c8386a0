"""Exact optimal networks: bound-improvement search with no-good recording, plus brute force."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .heuristics import mc_ranking, network_cost, solve_heuristic
from .instance import Instance, check_network
from .routing import INF, CostModel, parse_p

log = logging.getLogger(__name__)

BRUTE_FORCE_CAP = 20


@dataclass
class SearchState:
    """Incumbent, recorded no-goods and branching order shared across improvement rounds.

    No-goods are bitmasks over edge ids; a no-good ``N`` excludes ``N`` and all
    of its subsets.  They are kept in a numpy array so the subset test is one
    vectorised pass (object dtype once masks outgrow 64 bits).
    """

    incumbent: frozenset[int]
    incumbent_cost: float
    branch_order: list[tuple[int, float]]
    nodes: int = 0
    evaluations: int = 0
    _ng: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint64), repr=False)

    @property
    def nogoods(self) -> list[int]:
        return [int(N) for N in self._ng]

    def _key(self, top: int):
        if top.bit_length() > 64 and self._ng.dtype != object:
            self._ng = self._ng.astype(object)
        return top if self._ng.dtype == object else np.uint64(top)

    def covered(self, top: int) -> bool:
        if not len(self._ng):
            return False
        t = self._key(top)
        return bool(np.any((self._ng | t) == self._ng))

    def record(self, top: int) -> None:
        if self.covered(top):
            return
        t = self._key(top)
        keep = (self._ng | t) != t
        self._ng = np.append(self._ng[keep], np.array([t], dtype=self._ng.dtype))


def _bits(edges: Iterable[int]) -> int:
    out = 0
    for e in edges:
        out |= 1 << e
    return out


def _members(bits: int) -> list[int]:
    out = []
    i = 0
    while bits:
        if bits & 1:
            out.append(i)
        bits >>= 1
        i += 1
    return out


class _Search:
    def __init__(self, instance: Instance, p, state: SearchState, c_star: float, lower_bound: bool,
                 deadline: float | None = None):
        self.instance = instance
        self.deadline = deadline
        self.model = CostModel(instance, p)
        self.state = state
        self.c_star = c_star
        self.lower_bound = lower_bound
        self.order = [e for e, _ in state.branch_order]
        self.length = instance.lengths
        self.B = instance.budget
        K = instance.detour_factor
        # rail on a path of new length L saves at most (K - 1) * L over the bus
        self.saving = None if math.isinf(K) else K - 1.0
        lengths = instance.lengths
        # exact subset-sum reasoning only for integral lengths and modest budgets
        self.integral = (
            bool(np.all(lengths == np.round(lengths))) and math.isfinite(self.B) and self.B <= 1_000_000
        )

    def times(self, bits: int) -> np.ndarray:
        self.state.evaluations += 1
        mask = np.zeros(self.instance.m, dtype=bool)
        mask[_members(bits)] = True
        return self.model.times(mask)

    def cost(self, bits: int) -> float:
        return self.model.cost_of_times(self.times(bits))

    def fits(self, bits: int) -> bool:
        return math.fsum(self.length[e] for e in _members(bits)) <= self.B

    def bound(self, D_inc: np.ndarray, inc_len: float, D_top: np.ndarray) -> float:
        """Cost lower bound for feasible networks between ``inc`` and ``top``.

        Each pair is at least as slow as with all of ``top`` built, and at
        least as slow as in ``inc`` minus the saving the leftover budget can buy.
        """
        t = self.model.pair_times(D_top)
        if self.saving is not None:
            t = np.maximum(t, self.model.pair_times(D_inc) - self.saving * (self.B - inc_len))
        return self.model.aggregate(t)

    def cut(self, lb: float) -> bool:
        # a small margin keeps float error in the bound from cutting a true improvement
        return lb - 1e-9 * abs(self.c_star) >= self.c_star

    def leaf(self, R: int, excluded: list[int], D: np.ndarray | None):
        # an excluded edge that still fits means R + that edge was already refuted
        slack = self.B - math.fsum(self.length[e] for e in _members(R))
        if any(self.length[e] <= slack and self.fits(R | (1 << e)) for e in excluded):
            self.state.record(R)
            return None
        c = self.cost(R) if D is None else self.model.cost_of_times(D)
        if c < self.c_star:
            return R
        self.state.record(R)
        return None

    def node(self, pos: int, inc: int, inc_len: float, D_inc: np.ndarray | None, top: int,
             D_top: np.ndarray | None, excluded: list[int]):
        self.state.nodes += 1
        if self.deadline is not None and self.state.nodes % 256 == 0 and time.monotonic() > self.deadline:
            raise TimeoutError("exact search exceeded its time limit")
        if pos == len(self.order) or self.fits(top):
            return self.leaf(top, excluded, D_top)
        e = self.order[pos]
        bit = 1 << e
        with_e = math.fsum(self.length[x] for x in _members(inc | bit))
        if with_e <= self.B:
            D_with = None
            if self.lower_bound:
                D_with = self.model.insert(D_inc, e)
            if not self.lower_bound or not self.cut(self.bound(D_with, with_e, D_top)):
                found = self.node(pos + 1, inc | bit, with_e, D_with, top, D_top, excluded)
                if found is not None:
                    return found
        rest = top & ~bit
        excluded = excluded + [e]
        if self.state.covered(rest):
            return None
        if self.integral and self.dominated(inc, rest, excluded):
            return None
        D_rest = None
        if self.lower_bound:
            D_rest = self.times(rest)
            if self.model.cost_of_times(D_rest) >= self.c_star:
                self.state.record(rest)
                return None
            if self.cut(self.bound(D_inc, inc_len, D_rest)):
                return None
        return self.node(pos + 1, inc, inc_len, D_inc, rest, D_rest, excluded)

    def dominated(self, inc: int, top: int, excluded: list[int]) -> bool:
        """True when every feasible completion leaves room for some excluded edge.

        Such completions are subsets of networks already refuted in that
        edge's include branch.
        """
        inc_cost = int(round(math.fsum(self.length[e] for e in _members(inc))))
        cap = int(math.floor(self.B)) - inc_cost
        if cap < 0:
            return False
        reach = 1
        full = (1 << (cap + 1)) - 1
        for e in _members(top & ~inc):
            reach = (reach | (reach << int(self.length[e]))) & full
        best = inc_cost + reach.bit_length() - 1
        room = min(int(self.length[e]) for e in excluded)
        return best + room <= self.B


def improve_once(instance: Instance, p, c_star: float, state: SearchState,
                 lower_bound: bool = True, time_limit: float | None = None) -> frozenset[int] | None:
    """Find a feasible network with cost strictly below ``c_star``, or ``None``.

    Depth-first over include/exclude decisions in ``state.branch_order``
    (include first).  Branches over budget or covered by a no-good are cut;
    with ``lower_bound`` set, a branch is also cut when building every
    still-possible edge would not beat ``c_star``.  Rejected leaves are
    recorded as no-goods in ``state``.  Raises :class:`TimeoutError` when
    ``time_limit`` seconds pass first.
    """
    deadline = None if time_limit is None else time.monotonic() + time_limit
    search = _Search(instance, parse_p(p), state, c_star, lower_bound, deadline)
    top = (1 << instance.m) - 1
    if state.covered(top):
        return None
    D_inc = D_top = None
    if lower_bound:
        D_inc, D_top = search.times(0), search.times(top)
    found = search.node(0, 0, 0.0, D_inc, top, D_top, [])
    return None if found is None else frozenset(_members(found))


def find_below(instance: Instance, p, threshold: float, *, lower_bound: bool = True,
               time_limit: float | None = None) -> frozenset[int] | None:
    """Decision version: some feasible network with cost strictly below ``threshold``, or ``None``."""
    p = parse_p(p)
    model = CostModel(instance, p)
    state = SearchState(frozenset(), model.cost(model.mask(())), mc_ranking(instance, p))
    return improve_once(instance, p, threshold, state, lower_bound=lower_bound, time_limit=time_limit)


def _lex_smallest(instance: Instance, model: CostModel, c_star: float) -> frozenset[int] | None:
    """Lexicographically smallest sorted edge list among feasible networks with cost <= c_star."""
    m = instance.m
    length = instance.lengths
    B = instance.budget

    def cost(edges):
        mask = np.zeros(m, dtype=bool)
        mask[list(edges)] = True
        return model.cost(mask)

    def visit(S: list[int]):
        if cost(S) <= c_star:
            return S
        start = S[-1] + 1 if S else 0
        for i in range(start, m):
            cand = S + [i]
            if math.fsum(length[x] for x in cand) > B:
                continue
            if cost(cand + list(range(i + 1, m))) > c_star:
                # later i only shrink this superset
                break
            found = visit(cand)
            if found is not None:
                return found
        return None

    found = visit([])
    return None if found is None else frozenset(found)


def solve_exact(instance: Instance, p, *, lower_bound: bool = True, canonical_ties: bool = True,
                initial: Iterable[int] | None = None) -> tuple[frozenset[int], float]:
    """Optimal feasible network and its cost.

    Starts from the heuristic network (or ``initial``) and repeats
    :func:`improve_once` until it finds nothing better.  With
    ``canonical_ties`` the optimum whose sorted edge list is lexicographically
    smallest is returned; that final pass can be expensive on large instances.
    """
    p = parse_p(p)
    model = CostModel(instance, p)
    start = solve_heuristic(instance, p) if initial is None else check_network(instance, initial)
    if network_cost(instance, start) > instance.budget:
        raise ValueError("initial network is infeasible")
    state = SearchState(start, model.cost(model.mask(start)), mc_ranking(instance, p))
    rounds = 0
    while True:
        better = improve_once(instance, p, state.incumbent_cost, state, lower_bound=lower_bound)
        if better is None:
            break
        state.incumbent = better
        state.incumbent_cost = model.cost(model.mask(better))
        rounds += 1
    log.debug("exact: %d improvements, %d nodes, %d evaluations, %d no-goods",
              rounds, state.nodes, state.evaluations, len(state.nogoods))
    best, best_cost = state.incumbent, state.incumbent_cost
    if canonical_ties:
        tied = _lex_smallest(instance, model, best_cost)
        if tied is not None:
            best = tied
            best_cost = model.cost(model.mask(tied))
    return best, best_cost


def brute_force(instance: Instance, p, cap: int = BRUTE_FORCE_CAP) -> tuple[frozenset[int], float]:
    """Enumerate every subset of edges; ties go to the lexicographically smallest edge list."""
    m = instance.m
    if m > cap:
        raise ValueError(f"brute force limited to {cap} edges, instance has {m}")
    model = CostModel(instance, parse_p(p))
    length = instance.lengths
    subsets = []
    for bits in range(1 << m):
        edges = _members(bits)
        if math.fsum(length[e] for e in edges) <= instance.budget:
            subsets.append(edges)
    best_cost = INF
    best: tuple[int, ...] | None = None
    chunk = 2048
    for start in range(0, len(subsets), chunk):
        part = subsets[start:start + chunk]
        masks = np.zeros((len(part), m), dtype=bool)
        for row, edges in enumerate(part):
            masks[row, edges] = True
        times = _batch_times(model, masks)
        for row, edges in enumerate(part):
            c = model.cost_of_times(times[row])
            key = tuple(edges)
            if c < best_cost or (c == best_cost and (best is None or key < best)):
                best_cost, best = c, key
    return frozenset(best), best_cost


def _batch_times(model: CostModel, masks: np.ndarray) -> np.ndarray:
    w = np.where(masks, model.length, model.bus)
    D = np.full((len(masks), model.n, model.n), INF)
    D[:, model.u, model.v] = w
    D[:, model.v, model.u] = w
    idx = np.arange(model.n)
    D[:, idx, idx] = 0.0
    for k in range(model.n):
        np.minimum(D, D[:, :, k, None] + D[:, None, k, :], out=D)
    return D
