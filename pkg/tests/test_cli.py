import csv
import io
import json
import math
import re
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairrail.cli import run_cli
from fairrail.formats import FileFormatError, Result, dump_instance, instance_from_dict, instance_to_dict, load_instance
from fairrail.instance import City, Instance, example1
from fairrail.reduction import TOY_FORMULA, to_dimacs
from fairrail.svgmap import render_map
from fairrail.synthetic import random_gravity_instance, random_instance

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture
def ex1_file(tmp_path):
    path = tmp_path / "example1.json"
    dump_instance(example1(), path)
    return path


def run(argv, capsys):
    code = run_cli([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# file formats

def test_instance_round_trip(ex1):
    again = instance_from_dict(json.loads(json.dumps(instance_to_dict(ex1))))
    assert again == ex1


@given(st.integers(2, 7), st.integers(0, 10_000), st.sampled_from([2.0, 3.0, math.inf]))
def test_random_instance_round_trip(n, seed, K):
    inst = random_instance(n, n - 1, seed=seed, K=K)
    assert instance_from_dict(json.loads(json.dumps(instance_to_dict(inst)))) == inst


def test_gravity_demand_model_in_file():
    data = instance_to_dict(example1())
    data["demand"] = {"model": "gravity", "alpha": 1.0}
    inst = instance_from_dict(data)
    assert len(inst.demand) == 3 and all(t >= 1 for _, _, t in inst.demand)


@pytest.mark.parametrize("mutate,field", [
    (lambda d: d.pop("cities"), "cities"),
    (lambda d: d["edges"][1].pop("length"), "edges[1].length"),
    (lambda d: d["cities"][2].update(population="many"), "cities[2].population"),
    (lambda d: d.update(K="huge"), "K"),
    (lambda d: d["demand"][0].update(tau=1.5), "demand[0].tau"),
    (lambda d: d.update(demand={"model": "radiation"}), "demand.model"),
])
def test_malformed_fields_are_named(mutate, field):
    data = instance_to_dict(example1())
    mutate(data)
    with pytest.raises(FileFormatError, match=re.escape(field)):
        instance_from_dict(data)


def test_missing_budget_defaults_to_total_length():
    data = instance_to_dict(example1())
    del data["budget"]
    assert instance_from_dict(data).budget == 5.0


def test_result_round_trip():
    r = Result(solver="exact", p="inf", budget=4.0, network=[(0, 1), (0, 2)],
               social_cost={"1": 84.0, "inf": math.inf}, build_cost=4.0,
               metrics={"gini": 0.1, "worst_best_ratio": math.nan, "per_city_avg_cost": [2.0, math.inf]},
               config={"sigma": None}, instance="x", duration_s=0.25)
    back = Result.from_json(r.to_json())
    assert back.social_cost == r.social_cost
    assert math.isnan(back.metrics["worst_best_ratio"])
    assert back.metrics["per_city_avg_cost"] == [2.0, math.inf]
    assert back.to_json() == r.to_json()
    json.loads(r.to_json())  # strict JSON, no bare Infinity/NaN
    assert "Infinity" not in r.to_json() and "NaN" not in r.to_json()


# command line

def test_validate_ok(ex1_file, capsys):
    code, out, _ = run(["validate", ex1_file], capsys)
    assert code == 0 and "OK" in out


def test_validate_reports_detour_factor(tmp_path, capsys):
    path = tmp_path / "k1.json"
    dump_instance(example1(K=1.0), path)
    code, _, err = run(["validate", path], capsys)
    assert code == 2 and "detour factor" in err


def test_validate_bad_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code, _, err = run(["validate", path], capsys)
    assert code == 2 and "invalid JSON" in err


def test_solve_exact_example1(ex1_file, tmp_path, capsys):
    out_path = tmp_path / "r.json"
    code, _, _ = run(["solve", "--p", "1", "--budget", "4", "--solver", "exact", ex1_file, "-o", out_path], capsys)
    assert code == 0
    res = Result.from_json(out_path.read_text())
    assert res.social_cost["1"] == 84.0
    assert sorted(res.network) == [(0, 1), (0, 2)]
    assert res.metrics["gini"] == pytest.approx(640 / 6216)


@pytest.mark.parametrize("solver", ["heuristic", "exact", "brute"])
def test_solvers_agree_on_small_file(ex1_file, capsys, solver):
    code, out, _ = run(["solve", "--p", "inf", "--budget", "4", "--solver", solver, "--report-p", "1,3", ex1_file], capsys)
    assert code == 0
    res = Result.from_json(out)
    assert res.social_cost["inf"] == 3.0
    assert set(res.social_cost) == {"inf", "1", "3"}


@pytest.mark.parametrize("rule", ["best", "first"])
def test_improvement_rule_is_recorded(ex1_file, capsys, rule):
    code, out, _ = run(["solve", "--p", "1", "--rule", rule, ex1_file], capsys)
    assert code == 0
    res = Result.from_json(out)
    assert res.config["improvement_rule"] == rule
    assert res.social_cost["1"] == 84.0


def test_solve_output_is_deterministic(ex1_file, capsys):
    a = run(["solve", "--p", "2", ex1_file], capsys)[1]
    b = run(["solve", "--p", "2", "--seed", "7", ex1_file], capsys)[1]
    assert a == b


@pytest.mark.parametrize("argv", [
    ["solve", "--p", "0", "x.json"],
    ["solve", "--p", "1"],
    ["solve", "--p", "1", "--solver", "magic", "x.json"],
    ["frobnicate"],
    [],
])
def test_usage_errors_exit_1(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 1 and err


def test_sigma_too_large_is_usage_error(ex1_file, capsys):
    code, _, err = run(["solve", "--p", "1", "--sigma", "9", ex1_file], capsys)
    assert code == 1 and "--sigma" in err


def test_missing_file_is_data_error(tmp_path, capsys):
    code, _, err = run(["solve", "--p", "1", tmp_path / "nope.json"], capsys)
    assert code == 2 and "nope.json" in err


def test_sweep_csv(ex1_file, capsys):
    code, out, _ = run(["sweep", "--p-list", "1,2,inf", "--budgets", "4", ex1_file], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["p", "budget", "social_cost", "gini", "worst_best_ratio", "edges_built", "build_cost"]
    assert len(rows) == 1 + 3 * 4
    for row in rows[1:]:
        float(row[1]), float(row[2]), float(row[3])
        assert 0 <= float(row[3]) <= 1


def test_sweep_report(tmp_path, capsys):
    inst_path = tmp_path / "g.json"
    dump_instance(random_gravity_instance(6, seed=3), inst_path)
    rep = tmp_path / "rep.json"
    code, _, _ = run(["sweep", "--p-list", "1,10", "--budgets", "5", "--report", rep, inst_path], capsys)
    assert code == 0
    assert set(json.loads(rep.read_text())) == {"mean_gini_mid", "vac_remoteness_slope"}


def test_metrics_from_result(ex1_file, tmp_path, capsys):
    res = tmp_path / "r.json"
    run(["solve", "--p", "1", "--solver", "exact", ex1_file, "-o", res], capsys)
    code, out, _ = run(["metrics", "--network", res, ex1_file], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["social_cost"] == {"1": 84.0, "inf": 4.0}
    assert data["metrics"]["worst_best_ratio"] == pytest.approx(26 / 21)
    assert data["feasible"] is True


def test_map_command(ex1_file, tmp_path, capsys):
    res = tmp_path / "r.json"
    svg = tmp_path / "m.svg"
    run(["solve", "--p", "1", ex1_file, "-o", res], capsys)
    code, _, _ = run(["map", "--network", res, "-o", svg, ex1_file], capsys)
    assert code == 0
    root = ET.parse(svg).getroot()
    assert len(root.findall(f".//{SVG}circle")) == 3


def test_reduce_sat_and_verify(tmp_path, capsys):
    cnf = tmp_path / "toy.cnf"
    cnf.write_text(to_dimacs(TOY_FORMULA))
    out = tmp_path / "red.json"
    code, _, _ = run(["reduce-sat", "--p", "1", cnf, "-o", out], capsys)
    assert code == 0
    inst = load_instance(out)
    assert inst.n == 15 and inst.m == 22 and inst.budget == 82 and math.isinf(inst.K)
    assert json.loads(out.read_text())["meta"]["target_social_cost"] == 108.0
    code, stdout, _ = run(["verify-reduction", "--p", "1", cnf], capsys)
    assert code == 0 and stdout.strip() == "SAT ⟺ network found: OK"


def test_verify_unsat_with_lifting(tmp_path, capsys):
    cnf = tmp_path / "unsat.cnf"
    cnf.write_text("p cnf 1 2\n1 0\n-1 0\n")
    code, _, err = run(["verify-reduction", "--p", "inf", cnf], capsys)
    assert code == 2 and "literals" in err
    code, out, _ = run(["verify-reduction", "--p", "inf", "--lift", cnf], capsys)
    assert code == 0 and out.strip() == "UNSAT ⟺ no network found: OK"


# SVG map

def _lines(svg_text, cls):
    root = ET.fromstring(svg_text)
    return [ln for ln in root.iter(f"{SVG}line") if ln.get("class") == cls]


def test_map_example1_structure(ex1):
    text = render_map(ex1, [0, 1])
    root = ET.fromstring(text)
    assert root.get("version") == "1.1"
    assert len(root.findall(f".//{SVG}circle")) == 3
    assert len(_lines(text, "built")) == 2
    dashed = _lines(text, "unbuilt")
    assert len(dashed) == 1 and dashed[0].get("stroke-dasharray")
    assert [t.text for t in root.iter(f"{SVG}text")] == ["X", "Y", "Z"]


def test_map_empty_network_all_dashed(ex1):
    text = render_map(ex1, [])
    assert len(_lines(text, "unbuilt")) == 3 and not _lines(text, "built")


def test_map_population_scales_markers(ex1):
    root = ET.fromstring(render_map(ex1, []))
    radii = [float(c.get("r")) for c in root.iter(f"{SVG}circle")]
    assert radii[0] > radii[1] == radii[2]


@given(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4), st.sampled_from([0.5, 2.0, 10.0, 1000.0]))
def test_map_invariant_under_translation_and_scale(dx, dy, s):
    inst = random_gravity_instance(6, seed=1)
    moved = Instance(
        tuple(City(c.id, c.name, c.population, c.x * s + dx, c.y * s + dy) for c in inst.cities),
        inst.edges, inst.demand, inst.budget, inst.detour_factor, inst.name,
    )
    assert render_map(inst, [0, 2]) == render_map(moved, [0, 2])


def test_map_keeps_aspect_ratio():
    cities = (City(0, "w", 1.0, 0.0, 0.0), City(1, "e", 1.0, 10.0, 1.0))
    inst = Instance(cities, (), (), 0.0, 2.0)
    root = ET.fromstring(render_map(inst))
    (c0, c1) = list(root.iter(f"{SVG}circle"))
    dx = float(c1.get("cx")) - float(c0.get("cx"))
    dy = float(c0.get("cy")) - float(c1.get("cy"))
    assert dx == pytest.approx(500.0) and dy == pytest.approx(50.0)


def test_map_needs_coordinates():
    inst = random_instance(3, 2, seed=0)
    with pytest.raises(ValueError, match="coordinates"):
        render_map(inst)


def test_data_files_are_valid():
    root = Path(__file__).resolve().parent.parent / "data"
    for path in sorted(root.glob("*.json")):
        assert run_cli(["validate", str(path)]) == 0, path
