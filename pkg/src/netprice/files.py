"""Reading model, scenario and sweep files; writing reports.

Model file::

    {"firms": [{"name": "L", "cost": 0}, ...],
     "edges": [["L", "T"], ...],
     "c0": 0,
     "demand": {"family": "linear", "a": 1, "b": 1}}

Scenario file::

    {"base": <model>,
     "scenarios": [{"name": "B", "merge": ["1", "2"], "extra_edges": [["1+2", "3"]]},
                   {"name": "tax", "tariffs": {"3": 0.05}, "t0": 0}]}

Sweep file::

    {"demand": {...}, "n_min": 1, "n_max": 14, "kinds": ["empty", "chain"], "c0": 0}
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import demandkit, netcore
from .equilibria import MarketModel
from .errors import InputError
from .scenarios import Merger, Scenario, Tariff

DIGITS = 12


def load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _number(x, what):
    try:
        val = demandkit._parse_number(x)
    except InputError:
        raise InputError(f"{what}: expected a number, got {x!r}") from None
    return float(val) if not isinstance(val, Fraction) else val


def _require(data, key, where):
    if not isinstance(data, dict) or key not in data:
        raise InputError(f"{where}: missing '{key}'")
    return data[key]


def network_from_dict(data: dict, where="model") -> netcore.InfluenceNetwork:
    firms = _require(data, "firms", where)
    if not isinstance(firms, list):
        raise InputError(f"{where}: 'firms' must be a list")
    names = []
    for k, firm in enumerate(firms):
        name = firm.get("name") if isinstance(firm, dict) else firm
        if name is None:
            raise InputError(f"{where}: firm #{k + 1} has no name")
        names.append(str(name))
    if len(set(names)) != len(names):
        dup = sorted({x for x in names if names.count(x) > 1})
        raise InputError(f"{where}: duplicate firm names {dup}")
    edges = data.get("edges", [])
    seen = set()
    adj = np.zeros((len(names), len(names)), dtype=bool)
    pos = {x: i for i, x in enumerate(names)}
    for e in edges:
        if not isinstance(e, (list, tuple)) or len(e) != 2:
            raise InputError(f"{where}: edge {e!r} must be a pair of firm names")
        a, b = str(e[0]), str(e[1])
        for x in (a, b):
            if x not in pos:
                raise InputError(f"{where}: edge {a}→{b} names unknown firm {x!r}")
        if (a, b) in seen:
            raise InputError(f"{where}: duplicate edge {a}→{b}")
        seen.add((a, b))
        adj[pos[a], pos[b]] = True
    return netcore.validate(adj, names)


def model_from_dict(data: dict, where="model") -> MarketModel:
    net = network_from_dict(data, where)
    costs = []
    for firm in data["firms"]:
        cost = firm.get("cost", 0) if isinstance(firm, dict) else 0
        costs.append(_number(cost, f"{where}: cost of firm {firm.get('name')!r}"))
    c0 = _number(data.get("c0", 0), f"{where}: c0")
    demand = demandkit.from_dict(_require(data, "demand", where))
    return MarketModel(net, costs, c0, demand)


def model_to_dict(model: MarketModel) -> dict:
    return {
        "firms": [{"name": x, "cost": float(c)} for x, c in zip(model.labels, model.costs)],
        "edges": [list(e) for e in model.net.edges()],
        "c0": float(model.c0),
        "demand": demandkit.to_dict(model.demand),
    }


def load_model(path) -> MarketModel:
    return model_from_dict(load_json(path), str(path))


def scenario_from_dict(data: dict, where: str) -> Scenario:
    name = str(_require(data, "name", where))
    where = f"{where}: scenario {name!r}"
    has_merge, has_tariff = "merge" in data, "tariffs" in data or "t0" in data
    if has_merge == has_tariff:
        raise InputError(f"{where}: give exactly one of 'merge' or 'tariffs'")
    if has_merge:
        firms = tuple(str(x) for x in data["merge"])
        network = None
        if "network" in data:
            network = network_from_dict(data["network"], where)
        cost = data.get("cost")
        return Scenario(name, Merger(
            firms=firms,
            extra_edges=tuple(tuple(str(x) for x in e) for e in data.get("extra_edges", [])),
            network=network,
            cost=None if cost is None else float(_number(cost, f"{where}: cost")),
        ))
    tariffs = data.get("tariffs", {})
    if not isinstance(tariffs, dict):
        raise InputError(f"{where}: 'tariffs' must map firm names to amounts")
    return Scenario(name, Tariff(
        {str(k): float(_number(v, f"{where}: tariff on {k!r}")) for k, v in tariffs.items()},
        float(_number(data.get("t0", 0), f"{where}: t0")),
    ))


def load_scenarios(path) -> tuple[MarketModel, list[Scenario]]:
    data = load_json(path)
    base = model_from_dict(_require(data, "base", str(path)), f"{path}: base")
    items = _require(data, "scenarios", str(path))
    return base, [scenario_from_dict(s, str(path)) for s in items]


def load_sweep(path) -> dict:
    data = load_json(path)
    where = str(path)
    demand = demandkit.from_dict(_require(data, "demand", where))
    lo, hi = int(data.get("n_min", 1)), int(_require(data, "n_max", where))
    kinds = tuple(data.get("kinds", ("empty", "chain")))
    for kind in kinds:
        if kind not in ("empty", "chain"):
            raise InputError(f"{where}: unknown network kind {kind!r}")
    return {"demand": demand, "n_range": range(lo, hi + 1), "kinds": kinds,
            "c0": float(_number(data.get("c0", 0), f"{where}: c0"))}


def fmt(x) -> str:
    """12 significant digits, plain decimal point, no grouping."""
    if isinstance(x, (bool, np.bool_)) or x is None:
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{DIGITS}g}"
    return str(x)


def round_floats(obj):
    """Recursively round floats in a JSON-ready structure to 12 digits."""
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [round_floats(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.{DIGITS}g}")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(round_floats(obj), indent=2, ensure_ascii=False)


def to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    fields = []
    for r in rows:
        fields += [k for k in r if k not in fields]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: fmt(r[k]) if k in r else "" for k in fields})
    return buf.getvalue()


def write_text(path, text: str):
    Path(path).write_text(text, encoding="utf-8")
