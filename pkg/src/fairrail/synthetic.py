"""Random instance generators for tests and experiments."""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import Delaunay

from .instance import CandidateEdge, City, Instance, gravity_demand


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_instance(n: int, m: int, seed=None, K: float = 3.0, budget_frac: float | None = None,
                    max_demand: int = 20, integral: bool = False) -> Instance:
    """Random connected graph with ``m`` edges (a random spanning tree plus extra edges).

    Lengths are uniform reals in [1, 10] (integers with ``integral``), demands uniform integers in
    [0, max_demand] with at least one positive pair.
    """
    rng = _rng(seed)
    pairs_all = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if not n - 1 <= m <= len(pairs_all):
        raise ValueError(f"need n-1 <= m <= {len(pairs_all)}, got m={m}")
    perm = rng.permutation(n)
    chosen = set()
    for k in range(1, n):
        a, b = int(perm[k]), int(perm[rng.integers(k)])
        chosen.add((min(a, b), max(a, b)))
    rest = [pq for pq in pairs_all if pq not in chosen]
    for idx in rng.permutation(len(rest))[: m - len(chosen)]:
        chosen.add(rest[idx])
    if integral:
        lengths = rng.integers(1, 11, size=len(chosen)).astype(float)
    else:
        lengths = rng.uniform(1.0, 10.0, size=len(chosen))
    edges = [CandidateEdge(u, v, float(w)) for (u, v), w in zip(sorted(chosen), lengths)]
    tau = rng.integers(0, max_demand + 1, size=len(pairs_all))
    if tau.sum() == 0:
        tau[rng.integers(len(tau))] = 1
    demand = [(i, j, int(t)) for (i, j), t in zip(pairs_all, tau) if t > 0]
    cities = [City(i, f"c{i}", 1.0) for i in range(n)]
    total = sum(e.length for e in edges)
    frac = rng.uniform(0.0, 1.0) if budget_frac is None else budget_frac
    B = min(e.length for e in edges) + frac * (total - min(e.length for e in edges))
    if integral:
        B = float(round(B))
    return Instance(cities, edges, demand, B, K, name=f"random-{n}-{m}")


def random_gravity_instance(n: int, seed=None, K: float = 3.0, alpha: float = 1.0,
                            budget: float | None = None, size: float = 1000.0) -> Instance:
    """Cities scattered in a square with heavy-tailed populations.

    Candidate edges are the Delaunay triangulation of the city positions with
    straight-line lengths; demand follows the gravity model.
    """
    rng = _rng(seed)
    xy = rng.uniform(0.0, size, size=(n, 2))
    pops = np.round(50.0 * (1.0 + rng.pareto(1.2, size=n)), 1)
    cities = [City(i, f"city{i}", float(pops[i]), float(xy[i, 0]), float(xy[i, 1])) for i in range(n)]
    pairs = set()
    if n >= 3:
        tri = Delaunay(xy)
        for simplex in tri.simplices:
            for a in range(3):
                for b in range(a + 1, 3):
                    i, j = int(simplex[a]), int(simplex[b])
                    pairs.add((min(i, j), max(i, j)))
    elif n == 2:
        pairs.add((0, 1))
    edges = [CandidateEdge(i, j, float(math.dist(xy[i], xy[j]))) for i, j in sorted(pairs)]
    total = sum(e.length for e in edges)
    return Instance(cities, edges, gravity_demand(cities, alpha), total if budget is None else budget, K,
                    name=f"gravity-{n}")


def budget_grid(instance: Instance, num: int) -> list[float]:
    """Evenly spaced budgets from the shortest edge to the total length; one budget means the total."""
    if num < 1:
        raise ValueError("need at least one budget")
    total = math.fsum(instance.lengths)
    if num == 1:
        return [total]
    lo = float(instance.lengths.min())
    return [float(b) for b in np.linspace(lo, total, num)]
