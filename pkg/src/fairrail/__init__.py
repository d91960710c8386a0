"""Fair railway network design: solvers, fairness metrics and a 3-SAT gadget generator."""

from .analysis import (
    SweepRecord,
    average_cost,
    average_costs,
    budget_sweep,
    gini,
    hypothesis_report,
    network_metrics,
    remoteness,
    remoteness_all,
    solve,
    vac,
    worst_best_ratio,
)
from .exact import brute_force, find_below, improve_once, solve_exact
from .formats import Result, dump_instance, load_instance, load_result
from .heuristics import (
    LocalSearchConfig,
    greedy_generate,
    local_search,
    marginal_contribution_hard,
    marginal_contribution_soft,
    preprocess,
    solve_heuristic,
)
from .instance import CandidateEdge, City, Instance, build_cost, example1, example2, gravity_demand, is_feasible, validate
from .reduction import CnfFormula, extract_assignment, reduce_3sat, verify_equivalence
from .routing import INF, all_pairs_travel_times, social_cost
from .svgmap import render_map

__version__ = "0.1.0"
