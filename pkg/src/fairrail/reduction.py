"""3-SAT to railway design: gadget instances, assignment extraction and an equivalence check."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .exact import brute_force, find_below
from .instance import CandidateEdge, City, Instance, check_network
from .routing import INF, parse_p

TARGET_TOL = 1e-9


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(int(l) for l in c) for c in self.clauses))
        if self.num_vars < 1:
            raise ValueError("formula needs at least one variable")
        for i, clause in enumerate(self.clauses):
            if len(clause) != 3:
                raise ValueError(f"clause {i + 1} has {len(clause)} literals, expected exactly 3")
            vs = [abs(l) for l in clause]
            if any(l == 0 for l in clause) or any(v > self.num_vars for v in vs):
                raise ValueError(f"clause {i + 1} has a literal outside 1..{self.num_vars}: {clause}")
            if len(set(vs)) != 3:
                raise ValueError(f"clause {i + 1} repeats a variable: {clause}")

    @property
    def m(self) -> int:
        return len(self.clauses)


@dataclass(frozen=True)
class ReductionOutput:
    instance: Instance
    target_sw: float
    k: int
    city_roles: dict[int, tuple[str, int]]
    formula: CnfFormula
    p: float

    # role lookup: ("v"|"p"|"n", x) for variable gadgets, ("c", d), ("a", 0)
    def city(self, role: str, index: int = 0) -> int:
        for cid, r in self.city_roles.items():
            if r == (role, index):
                return cid
        raise KeyError((role, index))


def satisfies(formula: CnfFormula, assignment: dict[int, bool]) -> bool:
    return all(any(assignment[abs(l)] == (l > 0) for l in clause) for clause in formula.clauses)


def truth_table(formula: CnfFormula) -> dict[int, bool] | None:
    """First satisfying assignment in binary counting order, or ``None``."""
    n = formula.num_vars
    for bits in itertools.product((False, True), repeat=n):
        assignment = {x + 1: bits[x] for x in range(n)}
        if satisfies(formula, assignment):
            return assignment
    return None


def reduce_3sat(formula: CnfFormula, p) -> ReductionOutput:
    p = parse_p(p)
    n, m = formula.num_vars, formula.m
    k = m * n + 2 * n + 1
    cities: list[City] = []
    roles: dict[int, tuple[str, int]] = {}

    def add(role: str, index: int, name: str, x: float, y: float) -> int:
        cid = len(cities)
        cities.append(City(cid, name, 1.0, x, y))
        roles[cid] = (role, index)
        return cid

    var_c, pos_c, neg_c, clause_c = {}, {}, {}, {}
    for x in range(1, n + 1):
        cx = 3.0 * x
        var_c[x] = add("v", x, f"v{x}", cx, 1.0)
        pos_c[x] = add("p", x, f"p{x}", cx - 1.0, 2.0)
        neg_c[x] = add("n", x, f"n{x}", cx + 1.0, 2.0)
    width = 3.0 * (n + 1)
    for d in range(1, m + 1):
        clause_c[d] = add("c", d, f"c{d}", width * d / (m + 1), 4.0)
    a = add("a", 0, "a", width / 2.0, -2.0)

    edges = []
    for x in range(1, n + 1):
        edges += [
            CandidateEdge(a, pos_c[x], float(k)),
            CandidateEdge(a, neg_c[x], float(k)),
            CandidateEdge(var_c[x], pos_c[x], 1.0),
            CandidateEdge(var_c[x], neg_c[x], 1.0),
        ]
    for d, clause in enumerate(formula.clauses, start=1):
        for lit in clause:
            lit_city = pos_c[lit] if lit > 0 else neg_c[-lit]
            edges.append(CandidateEdge(clause_c[d], lit_city, 1.0))
    demand = [(a, var_c[x], 1) for x in range(1, n + 1)] + [(a, clause_c[d], 1) for d in range(1, m + 1)]
    B = 2 * n + 3 * m + n * k
    instance = Instance(tuple(cities), tuple(edges), tuple(demand), float(B), INF, name="3sat-reduction")
    target = float(k + 1) if p == INF else (m + n) ** (1.0 / p) * (k + 1)
    return ReductionOutput(instance, target, k, roles, formula, p)


def extract_assignment(output: ReductionOutput, network: Iterable[int]) -> dict[int, bool] | None:
    """Read ``x = True`` off a built capital-to-positive-literal edge; ``None`` unless exactly one
    capital edge per variable is built."""
    inst = output.instance
    R = check_network(inst, network)
    a = output.city("a")
    out = {}
    for x in range(1, output.formula.num_vars + 1):
        pos = inst.edge_id(a, output.city("p", x)) in R
        neg = inst.edge_id(a, output.city("n", x)) in R
        if pos == neg:
            return None
        out[x] = pos
    return out


def verify_equivalence(formula: CnfFormula, p, solver: str = "exact", time_limit: float | None = None) -> bool:
    """Satisfiability (truth table) must agree with the existence of a feasible network
    meeting the target cost; a network found for a satisfiable formula must also
    decode to a satisfying assignment."""
    red = reduce_3sat(formula, p)
    sat = truth_table(formula) is not None
    threshold = red.target_sw + TARGET_TOL
    if solver == "exact":
        R = find_below(red.instance, red.p, threshold, time_limit=time_limit)
    elif solver == "brute":
        R, c = brute_force(red.instance, red.p, cap=max(20, red.instance.m))
        R = R if c < threshold else None
    else:
        raise ValueError(f"unknown solver {solver!r}")
    if sat != (R is not None):
        return False
    if R is not None:
        assignment = extract_assignment(red, R)
        return assignment is not None and satisfies(formula, assignment)
    return True


def random_3cnf(num_vars: int, num_clauses: int, seed=None) -> CnfFormula:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if num_vars < 3:
        raise ValueError("3-CNF clauses need at least three variables")
    clauses = []
    for _ in range(num_clauses):
        vs = rng.choice(np.arange(1, num_vars + 1), size=3, replace=False)
        signs = rng.choice((-1, 1), size=3)
        clauses.append(tuple(int(v * s) for v, s in zip(vs, signs)))
    return CnfFormula(num_vars, tuple(clauses))


def lift_to_3cnf(num_vars: int, clauses: Iterable[Iterable[int]]) -> CnfFormula:
    """Equisatisfiable exactly-3-literal formula; short clauses are padded with fresh variables."""
    out = []
    nv = num_vars
    for clause in clauses:
        lits = list(dict.fromkeys(int(l) for l in clause))
        if len(lits) == 3:
            out.append(tuple(lits))
        elif len(lits) == 2:
            nv += 1
            out += [(lits[0], lits[1], nv), (lits[0], lits[1], -nv)]
        elif len(lits) == 1:
            y, z = nv + 1, nv + 2
            nv += 2
            out += [(lits[0], sy * y, sz * z) for sy in (1, -1) for sz in (1, -1)]
        else:
            raise ValueError(f"cannot lift clause with {len(lits)} literals: {lits}")
    return CnfFormula(max(nv, 3), tuple(out))


def read_dimacs(text: str) -> tuple[int, list[tuple[int, ...]]]:
    """Variable count and clauses (any width) from DIMACS CNF text; checks the declared clause count."""
    header = None
    lits: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad DIMACS header: {line!r}")
            header = (int(parts[2]), int(parts[3]))
            continue
        if header is None:
            raise ValueError("DIMACS clause before 'p cnf' header")
        lits += [int(tok) for tok in line.split()]
    if header is None:
        raise ValueError("missing 'p cnf' header")
    clauses, cur = [], []
    for l in lits:
        if l == 0:
            clauses.append(tuple(cur))
            cur = []
        else:
            cur.append(l)
    if cur:
        raise ValueError("last clause is not terminated by 0")
    n, m = header
    if len(clauses) != m:
        raise ValueError(f"header declares {m} clauses, found {len(clauses)}")
    return n, clauses


def parse_dimacs(text: str) -> CnfFormula:
    n, clauses = read_dimacs(text)
    return CnfFormula(n, tuple(clauses))


def to_dimacs(formula: CnfFormula) -> str:
    lines = [f"p cnf {formula.num_vars} {formula.m}"]
    lines += [" ".join(str(l) for l in c) + " 0" for c in formula.clauses]
    return "\n".join(lines) + "\n"


TOY_FORMULA = CnfFormula(4, ((1, -2, 3), (-2, 3, -4)))
