"""Travel times on a network and the p-egalitarian social cost."""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .instance import Instance, check_network

INF = math.inf


def parse_p(value) -> float:
    """Normalise a fairness parameter to ``int`` (finite) or ``math.inf``."""
    if isinstance(value, str):
        s = value.strip().lower()
        if s in ("inf", "infinity", "+inf", "∞"):
            return INF
        try:
            value = int(s)
        except ValueError:
            raise ValueError(f"fairness parameter must be a positive integer or 'inf', got {value!r}") from None
    if isinstance(value, float):
        if math.isinf(value) and value > 0:
            return INF
        if not value.is_integer():
            raise ValueError(f"fairness parameter must be an integer, got {value}")
        value = int(value)
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool) and value >= 1:
        return int(value)
    raise ValueError(f"fairness parameter must be a positive integer or 'inf', got {value!r}")


def format_p(p: float) -> str:
    return "inf" if p == INF else str(int(p))


def edge_travel_time(instance: Instance, network: Iterable[int], e: int) -> float:
    net = check_network(instance, network)
    if not 0 <= e < instance.m:
        raise ValueError(f"unknown edge {e}")
    length = instance.edges[e].length
    if e in net:
        return length
    K = instance.detour_factor
    return INF if math.isinf(K) else K * length


def floyd_warshall(W: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths on a dense symmetric weight matrix (``inf`` = no edge)."""
    D = np.array(W, dtype=float, copy=True)
    np.fill_diagonal(D, 0.0)
    for k in range(D.shape[0]):
        np.minimum(D, D[:, k, None] + D[None, k, :], out=D)
    return D


class CostModel:
    """Precomputed arrays for evaluating many networks of one instance.

    Every network-valued argument here is a boolean mask over the canonical
    edge ids; the public wrappers below accept edge-id sets.
    """

    def __init__(self, instance: Instance, p=1):
        self.instance = instance
        self.p = parse_p(p)
        self.n = instance.n
        self.u = np.array([e.u for e in instance.edges], dtype=np.intp)
        self.v = np.array([e.v for e in instance.edges], dtype=np.intp)
        self.length = instance.lengths.copy()
        K = instance.detour_factor
        self.bus = np.full(instance.m, INF) if math.isinf(K) else K * self.length
        tau = instance.demand_matrix
        iu, ju = np.triu_indices(self.n, 1)
        keep = tau[iu, ju] > 0
        self.pi, self.pj = iu[keep], ju[keep]
        self.tau = tau[iu, ju][keep]

    def mask(self, network: Iterable[int]) -> np.ndarray:
        m = np.zeros(len(self.length), dtype=bool)
        idx = list(network)
        if idx:
            m[idx] = True
        return m

    def weights(self, built: np.ndarray, hard: bool = False) -> np.ndarray:
        off = INF if hard else self.bus
        return np.where(built, self.length, off)

    def times_from_weights(self, w: np.ndarray) -> np.ndarray:
        W = np.full((self.n, self.n), INF)
        W[self.u, self.v] = w
        W[self.v, self.u] = w
        return floyd_warshall(W)

    def times(self, built: np.ndarray, hard: bool = False) -> np.ndarray:
        """Travel times with ``built`` edges at their length.

        Unbuilt edges carry the detour (bus) weight, or are removed entirely
        when ``hard`` is set.
        """
        return self.times_from_weights(self.weights(built, hard))

    def insert(self, D: np.ndarray, e: int, w: float | None = None) -> np.ndarray:
        """Distances after lowering edge ``e`` to weight ``w`` (default: its length)."""
        a, b = self.u[e], self.v[e]
        w = self.length[e] if w is None else w
        via_ab = D[:, a, None] + w + D[None, b, :]
        via_ba = D[:, b, None] + w + D[None, a, :]
        return np.minimum(D, np.minimum(via_ab, via_ba))

    def pair_times(self, D: np.ndarray) -> np.ndarray:
        return D[self.pi, self.pj]

    def aggregate(self, t: np.ndarray) -> float:
        return aggregate(t, self.tau, self.p)

    def cost_of_times(self, D: np.ndarray) -> float:
        return aggregate(D[self.pi, self.pj], self.tau, self.p)

    def cost(self, built: np.ndarray, hard: bool = False) -> float:
        return self.cost_of_times(self.times(built, hard))

    def cost_increase(self, before: np.ndarray, after: np.ndarray) -> float:
        """``SW(after) - SW(before)`` for two travel-time matrices.

        When ``before`` already has unreachable demand pairs, the difference is
        taken over the pairs reachable in ``before``; any such pair becoming
        unreachable makes the increase infinite.
        """
        tb, ta = self.pair_times(before), self.pair_times(after)
        ok = np.isfinite(tb)
        if not ok.all():
            tb, ta, tau = tb[ok], ta[ok], self.tau[ok]
        else:
            tau = self.tau
        if not np.isfinite(ta).all():
            return INF
        return aggregate(ta, tau, self.p) - aggregate(tb, tau, self.p)


def aggregate(t: np.ndarray, tau: np.ndarray, p: float) -> float:
    """Demand-weighted p-norm of travel times (``max`` over positive-demand pairs for p = inf).

    Finite ``p > 1`` factors out the largest time before exponentiation so
    large exponents do not overflow.
    """
    if len(t) == 0:
        return 0.0
    if p == INF:
        return float(t.max())
    if not np.isfinite(t).all():
        return INF
    if p == 1:
        return float(np.dot(tau, t))
    top = float(t.max())
    if top == 0.0:
        return 0.0
    s = float(np.dot(tau, (t / top) ** p))
    return top * s ** (1.0 / p)


def all_pairs_travel_times(instance: Instance, network: Iterable[int]) -> np.ndarray:
    net = check_network(instance, network)
    model = CostModel(instance)
    return model.times(model.mask(net))


def social_cost(instance: Instance, network: Iterable[int], p) -> float:
    net = check_network(instance, network)
    model = CostModel(instance, p)
    return model.cost(model.mask(net))


def hard_social_cost(instance: Instance, universe: Iterable[int], p) -> float:
    """Social cost with every edge of ``universe`` built and all other edges untraversable."""
    net = check_network(instance, universe)
    model = CostModel(instance, p)
    return model.cost(model.mask(net), hard=True)


def shortest_length_matrix(instance: Instance) -> np.ndarray:
    """Shortest-path distances in the length-weighted candidate graph."""
    model = CostModel(instance)
    return model.times_from_weights(model.length)
