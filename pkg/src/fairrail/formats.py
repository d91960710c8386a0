"""Instance and result files (JSON) and sweep tables (CSV)."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .instance import CandidateEdge, City, Instance, gravity_demand


class FileFormatError(ValueError):
    """Malformed input file; the message names the offending field."""


def _num(value: float):
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def json_safe(obj):
    """Replace infinities by ``"inf"`` and NaN by ``null`` throughout nested dicts and lists."""
    if isinstance(obj, dict):
        return {k: json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    return _num(obj)


def _real(value, where: str, allow_inf: bool = False) -> float:
    if isinstance(value, str) and allow_inf and value.strip().lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FileFormatError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise FileFormatError(f"{where}: expected an integer, got {value!r}")
    return value


def _get(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise FileFormatError(f"{where}: expected an object")
    if key not in obj:
        raise FileFormatError(f"{where}.{key}: missing required field")
    return obj[key]


def instance_from_dict(data: dict) -> Instance:
    if not isinstance(data, dict):
        raise FileFormatError("instance: expected a JSON object")
    cities = []
    raw_cities = _get(data, "cities", "instance")
    if not isinstance(raw_cities, list):
        raise FileFormatError("cities: expected an array")
    for i, c in enumerate(raw_cities):
        where = f"cities[{i}]"
        x = c.get("x") if isinstance(c, dict) else None
        y = c.get("y") if isinstance(c, dict) else None
        cities.append(City(
            _int(_get(c, "id", where), f"{where}.id"),
            str(c.get("name", f"city{i}")),
            _real(_get(c, "population", where), f"{where}.population"),
            None if x is None else _real(x, f"{where}.x"),
            None if y is None else _real(y, f"{where}.y"),
        ))
    edges = []
    raw_edges = _get(data, "edges", "instance")
    if not isinstance(raw_edges, list):
        raise FileFormatError("edges: expected an array")
    for i, e in enumerate(raw_edges):
        where = f"edges[{i}]"
        edges.append(CandidateEdge(
            _int(_get(e, "u", where), f"{where}.u"),
            _int(_get(e, "v", where), f"{where}.v"),
            _real(_get(e, "length", where), f"{where}.length"),
        ))
    raw_demand = _get(data, "demand", "instance")
    if isinstance(raw_demand, dict):
        model = raw_demand.get("model")
        if model != "gravity":
            raise FileFormatError(f"demand.model: unsupported demand model {model!r}")
        alpha = _real(raw_demand.get("alpha", 1.0), "demand.alpha")
        min_demand = _int(raw_demand.get("min_demand", 1), "demand.min_demand")
        try:
            demand = gravity_demand(cities, alpha, min_demand)
        except ValueError as exc:
            raise FileFormatError(f"demand: {exc}") from None
    elif isinstance(raw_demand, list):
        demand = []
        for i, d in enumerate(raw_demand):
            where = f"demand[{i}]"
            demand.append((
                _int(_get(d, "u", where), f"{where}.u"),
                _int(_get(d, "v", where), f"{where}.v"),
                _int(_get(d, "tau", where), f"{where}.tau"),
            ))
    else:
        raise FileFormatError("demand: expected an array of {u, v, tau} or a gravity model object")
    K = _real(_get(data, "K", "instance"), "K", allow_inf=True)
    if "budget" in data:
        budget = _real(data["budget"], "budget")
    else:
        budget = math.fsum(e.length for e in edges)
    return Instance(tuple(cities), tuple(edges), tuple(demand), budget, K, name=str(data.get("name", "")))


def instance_to_dict(instance: Instance, meta: dict | None = None) -> dict:
    out: dict[str, Any] = {
        "name": instance.name,
        "K": _num(instance.detour_factor),
        "budget": instance.budget,
        "cities": [],
        "edges": [{"u": e.u, "v": e.v, "length": e.length} for e in instance.edges],
        "demand": [{"u": u, "v": v, "tau": t} for u, v, t in instance.demand],
    }
    for c in instance.cities:
        row: dict[str, Any] = {"id": c.id, "name": c.name, "population": c.population}
        if c.has_coords:
            row["x"], row["y"] = c.x, c.y
        out["cities"].append(row)
    if meta:
        out["meta"] = meta
    return out


def load_instance(path: str | Path) -> Instance:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return instance_from_dict(data)


def dump_instance(instance: Instance, path: str | Path | None = None, meta: dict | None = None) -> str:
    text = json.dumps(instance_to_dict(instance, meta), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


@dataclass
class Result:
    """One solved network with its costs and fairness metrics."""

    solver: str
    p: str
    budget: float
    network: list[tuple[int, int]]
    social_cost: dict[str, float]
    build_cost: float
    metrics: dict[str, Any] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)
    instance: str = ""
    duration_s: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["network"] = [list(e) for e in self.network]
        d["social_cost"] = json_safe(self.social_cost)
        d["metrics"] = json_safe(self.metrics)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Result":
        def back(v):
            if v == "inf":
                return math.inf
            if v is None:
                return math.nan
            return v

        try:
            return cls(
                solver=d["solver"],
                p=str(d["p"]),
                budget=float(d["budget"]),
                network=[(int(u), int(v)) for u, v in d["network"]],
                social_cost={k: back(v) for k, v in d["social_cost"].items()},
                build_cost=float(d["build_cost"]),
                metrics={k: ([back(x) for x in v] if isinstance(v, list) else back(v))
                         for k, v in d.get("metrics", {}).items()},
                config=dict(d.get("config", {})),
                instance=str(d.get("instance", "")),
                duration_s=float(d.get("duration_s", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(f"result file: missing or malformed field ({exc})") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Result":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"result file: invalid JSON ({exc.msg})") from None


def load_result(path: str | Path) -> Result:
    try:
        return Result.from_json(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc.strerror}") from None


SWEEP_HEADER = ("p", "budget", "social_cost", "gini", "worst_best_ratio", "edges_built", "build_cost")


def sweep_csv(records: Sequence) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_HEADER, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.row().items()})
    return buf.getvalue()
