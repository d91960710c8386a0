"""Problem data model: cities, candidate edges, demand, budget and detour factor."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

# A network is a set of canonical edge ids (indices into ``Instance.edges``).
Network = frozenset


@dataclass(frozen=True)
class City:
    id: int
    name: str
    population: float
    x: float | None = None
    y: float | None = None

    @property
    def has_coords(self) -> bool:
        return self.x is not None and self.y is not None


@dataclass(frozen=True)
class CandidateEdge:
    u: int
    v: int
    length: float

    def key(self) -> tuple[int, int]:
        return (min(self.u, self.v), max(self.u, self.v))


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class Instance:
    """An instance of the railway design problem.

    Edges are stored canonically (``u < v``, sorted by ``(u, v)``) so that the
    position of an edge in ``edges`` is its canonical id.  Demand is kept as
    the raw list of ``(u, v, tau)`` entries on unordered pairs; duplicates are
    reported by :func:`validate` rather than silently merged.
    """

    cities: tuple[City, ...]
    edges: tuple[CandidateEdge, ...]
    demand: tuple[tuple[int, int, int], ...]
    budget: float
    detour_factor: float = 3.0
    name: str = ""

    def __post_init__(self):
        edges = tuple(
            sorted(
                (CandidateEdge(*e.key(), float(e.length)) for e in self.edges),
                key=lambda e: (e.u, e.v),
            )
        )
        demand = tuple(
            sorted((min(u, v), max(u, v), int(t)) for u, v, t in self.demand)
        )
        object.__setattr__(self, "cities", tuple(self.cities))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "budget", float(self.budget))
        object.__setattr__(self, "detour_factor", float(self.detour_factor))

    @property
    def n(self) -> int:
        return len(self.cities)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def K(self) -> float:
        return self.detour_factor

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.edges], dtype=float)

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {(e.u, e.v): i for i, e in enumerate(self.edges)}

    @cached_property
    def demand_matrix(self) -> np.ndarray:
        tau = np.zeros((self.n, self.n))
        for u, v, t in self.demand:
            tau[u, v] += t
            tau[v, u] = tau[u, v]
        return tau

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    def edge_id(self, u: int, v: int) -> int:
        try:
            return self.edge_index[(min(u, v), max(u, v))]
        except KeyError:
            raise KeyError(f"no candidate edge between {u} and {v}") from None

    def network(self, pairs: Iterable[tuple[int, int]]) -> frozenset[int]:
        """Build a network from city pairs."""
        return frozenset(self.edge_id(u, v) for u, v in pairs)

    def with_budget(self, budget: float) -> "Instance":
        return replace(self, budget=budget)

    def city_index(self, name: str) -> int:
        for c in self.cities:
            if c.name == name:
                return c.id
        raise KeyError(name)


def validate(instance: Instance) -> list[Violation]:
    out: list[Violation] = []
    n = instance.n
    ids = [c.id for c in instance.cities]
    if ids != list(range(n)):
        out.append(Violation("city-ids", f"city ids must be 0..{n - 1} in order, got {ids}"))
    for c in instance.cities:
        if not (c.population > 0):
            out.append(Violation("population", f"city {c.id} ({c.name}) has non-positive population {c.population}"))

    seen: set[tuple[int, int]] = set()
    for e in instance.edges:
        if e.u == e.v:
            out.append(Violation("self-loop", f"edge ({e.u},{e.v}) is a self-loop"))
        if not (0 <= e.u < n and 0 <= e.v < n):
            out.append(Violation("edge-endpoint", f"edge ({e.u},{e.v}) references an unknown city"))
        if (e.u, e.v) in seen:
            out.append(Violation("duplicate-edge", f"edge ({e.u},{e.v}) listed more than once"))
        seen.add((e.u, e.v))
        if not (e.length > 0) or math.isnan(e.length):
            out.append(Violation("edge-length", f"edge ({e.u},{e.v}) has non-positive length {e.length}"))

    seen = set()
    for u, v, t in instance.demand:
        if u == v:
            out.append(Violation("demand-diagonal", f"demand declared on diagonal pair ({u},{v})"))
        if not (0 <= u < n and 0 <= v < n):
            out.append(Violation("demand-endpoint", f"demand pair ({u},{v}) references an unknown city"))
        if (u, v) in seen:
            out.append(Violation("duplicate-pair", f"demand for pair {{{u},{v}}} declared more than once"))
        seen.add((u, v))
        if t < 0:
            out.append(Violation("demand-negative", f"demand for pair {{{u},{v}}} is negative ({t})"))

    if not (instance.budget >= 0):
        out.append(Violation("budget", f"budget must be non-negative, got {instance.budget}"))
    K = instance.detour_factor
    if math.isnan(K) or not K > 1:
        out.append(Violation("detour-factor", f"detour factor must exceed 1, got {K}"))
    return out


def check_network(instance: Instance, network: Iterable[int]) -> frozenset[int]:
    net = frozenset(network)
    bad = [e for e in net if not (isinstance(e, (int, np.integer)) and 0 <= e < instance.m)]
    if bad:
        raise ValueError(f"unknown edge reference(s): {sorted(map(str, bad))}")
    return net


def build_cost(instance: Instance, network: Iterable[int]) -> float:
    net = check_network(instance, network)
    return math.fsum(instance.edges[e].length for e in net)


def is_feasible(instance: Instance, network: Iterable[int]) -> bool:
    return build_cost(instance, network) <= instance.budget


def gravity_demand(
    cities: Sequence[City], alpha: float = 1.0, min_demand: int = 1
) -> tuple[tuple[int, int, int], ...]:
    """Gravity-model demand: ``max(min_demand, round(alpha * p_i * p_j / d_ij))``.

    ``d_ij`` is the straight-line distance between city coordinates.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    for c in cities:
        if not c.has_coords:
            raise ValueError(f"city {c.id} ({c.name}) has no coordinates")
    out = []
    for a in range(len(cities)):
        for b in range(a + 1, len(cities)):
            ci, cj = cities[a], cities[b]
            d = math.hypot(ci.x - cj.x, ci.y - cj.y)
            if d == 0:
                raise ValueError(f"cities {ci.name!r} and {cj.name!r} have coincident coordinates")
            tau = max(min_demand, round(alpha * ci.population * cj.population / d))
            out.append((min(ci.id, cj.id), max(ci.id, cj.id), int(tau)))
    return tuple(sorted(out))


def example1(K: float = 5.0, budget: float = 4.0) -> Instance:
    """Three cities X, Y, Z: one large hub and two close satellites."""
    cities = (
        City(0, "X", 100.0, 0.0, 0.0),
        City(1, "Y", 30.0, 2.0, 0.5),
        City(2, "Z", 30.0, 2.0, -0.5),
    )
    edges = (CandidateEdge(0, 1, 2.0), CandidateEdge(0, 2, 2.0), CandidateEdge(1, 2, 1.0))
    demand = ((0, 1, 16), (0, 2, 16), (1, 2, 5))
    return Instance(cities, edges, demand, budget, K, name="example1")


def example2(K: float = 3.0, budget: float = 9.0) -> Instance:
    """Six-city graph a - b_i - c - d_i with a d_1 d_2 shortcut, unit demand."""
    names = ["a", "b1", "b2", "c", "d1", "d2"]
    xy = [(0, 0), (1, 1), (1, -1), (2, 0), (3, 1), (3, -1)]
    cities = tuple(City(i, nm, 1.0, *xy[i]) for i, nm in enumerate(names))
    edges = (
        CandidateEdge(0, 1, 2.0),
        CandidateEdge(0, 2, 2.0),
        CandidateEdge(1, 3, 1.0),
        CandidateEdge(2, 3, 1.0),
        CandidateEdge(3, 4, 1.0),
        CandidateEdge(3, 5, 1.0),
        CandidateEdge(4, 5, 1.0),
    )
    demand = tuple((i, j, 1) for i in range(6) for j in range(i + 1, 6))
    return Instance(cities, edges, demand, budget, K, name="example2")
