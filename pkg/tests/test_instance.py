import math

import pytest

from fairrail.instance import (
    CandidateEdge,
    City,
    Instance,
    build_cost,
    check_network,
    example1,
    gravity_demand,
    is_feasible,
    validate,
)


def codes(instance):
    return {v.code for v in validate(instance)}


def test_example1_is_valid(ex1):
    assert validate(ex1) == []
    assert ex1.n == 3 and ex1.m == 3
    assert ex1.total_length == 5.0


def test_edges_are_canonicalised():
    cities = [City(0, "a", 1), City(1, "b", 1), City(2, "c", 1)]
    inst = Instance(cities, [CandidateEdge(2, 1, 1.0), CandidateEdge(1, 0, 2.0)], [(1, 0, 3)], 5.0, 2.0)
    assert [e.key() for e in inst.edges] == [(0, 1), (1, 2)]
    assert inst.demand == ((0, 1, 3),)
    assert inst.edge_id(2, 1) == 1
    assert inst.demand_matrix[1, 0] == 3


@pytest.mark.parametrize("K", [1.0, 0.5, math.nan])
def test_detour_factor_must_exceed_one(K):
    problems = validate(example1(K=K))
    assert [v.code for v in problems] == ["detour-factor"]
    assert "detour factor" in problems[0].message


def test_infinite_detour_factor_is_allowed():
    assert validate(example1(K=math.inf)) == []


def test_structural_violations():
    cities = [City(0, "a", 1), City(1, "b", -2)]
    inst = Instance(
        cities,
        [CandidateEdge(0, 0, 1.0), CandidateEdge(0, 1, 0.0), CandidateEdge(1, 0, 3.0), CandidateEdge(0, 5, 1.0)],
        [(0, 0, 1), (0, 1, -1), (1, 0, 2), (0, 9, 1)],
        -1.0,
        2.0,
    )
    assert codes(inst) == {
        "population", "self-loop", "edge-length", "duplicate-edge", "edge-endpoint",
        "demand-diagonal", "demand-negative", "duplicate-pair", "demand-endpoint", "budget",
    }


def test_city_ids_must_be_dense():
    inst = Instance([City(0, "a", 1), City(2, "b", 1)], [], [], 0.0, 2.0)
    assert "city-ids" in codes(inst)


def test_build_cost_and_feasibility(ex1):
    R1 = ex1.network([(0, 1), (0, 2)])
    assert build_cost(ex1, R1) == 4.0
    assert is_feasible(ex1, R1)
    assert not is_feasible(ex1, range(3))


def test_unknown_edge_reference(ex1):
    with pytest.raises(ValueError):
        check_network(ex1, [7])
    with pytest.raises(KeyError):
        ex1.edge_id(0, 0)


def test_gravity_demand_hand_value():
    # 100 * 40 / 100 = 40 commuters
    cities = [City(0, "a", 100.0, 0.0, 0.0), City(1, "b", 40.0, 60.0, 80.0)]
    assert gravity_demand(cities) == ((0, 1, 40),)
    assert gravity_demand(cities, alpha=0.5) == ((0, 1, 20),)


def test_gravity_demand_floor_and_errors():
    far = [City(0, "a", 1.0, 0.0, 0.0), City(1, "b", 1.0, 1000.0, 0.0)]
    assert gravity_demand(far) == ((0, 1, 1),)
    with pytest.raises(ValueError, match="coincident"):
        gravity_demand([City(0, "a", 1.0, 0.0, 0.0), City(1, "b", 1.0, 0.0, 0.0)])
    with pytest.raises(ValueError, match="coordinates"):
        gravity_demand([City(0, "a", 1.0), City(1, "b", 1.0, 0.0, 0.0)])


def test_with_budget_keeps_everything_else(ex1):
    J = ex1.with_budget(2.0)
    assert J.budget == 2.0 and J.edges == ex1.edges and J.demand == ex1.demand


def test_duplicate_pair_declared_in_reverse(ex1):
    inst = Instance(ex1.cities, ex1.edges, ex1.demand + ((1, 0, 3),), 4.0, 5.0)
    assert "duplicate-pair" in codes(inst)


def test_build_cost_examples(ex1):
    assert build_cost(ex1, []) == 0.0
    assert build_cost(ex1, range(3)) == 5.0
    assert is_feasible(ex1.with_budget(0.0), [])


def test_gravity_small_example_and_symmetry():
    a, b = City(0, "a", 10.0, 0.0, 0.0), City(1, "b", 20.0, 3.0, 4.0)
    assert gravity_demand([a, b]) == ((0, 1, 40),)
    swapped = [City(0, "b", 20.0, 3.0, 4.0), City(1, "a", 10.0, 0.0, 0.0)]
    assert gravity_demand(swapped) == gravity_demand([a, b])
