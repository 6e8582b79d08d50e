"""Merger and tariff experiments compared against a base market.

A scenario changes the base model in one of two ways:

* :class:`Merger` contracts two firms into one (optionally with extra
  influence edges, or with a fully specified post-merger network);
* :class:`Tariff` adds per-firm cost increments ``t_i`` and an increment
  ``t0`` to the price-taker cost.

:func:`run_comparison` solves the base and every scenario and reports
price, welfare and profit changes together with verdict flags.  Profits of
a merged firm are always compared with the summed pre-merger profits of
its constituents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import equilibria, netcore
from .demandkit import Demand, Linear, Power
from .equilibria import EquilibriumReport, MarketModel
from .errors import InputError
from .netcore import InfluenceNetwork

NEUTRAL_TOL = 1e-9
LINEAR_SWEEP_CAP = 20
GENERIC_SWEEP_CAP = 16


@dataclass(frozen=True)
class Merger:
    """Contract ``firms`` (two labels) into a single firm labelled ``"a+b"``.

    Attributes:
        firms: the two merging firms.
        extra_edges: influence edges gained after the merger, by label.
        network: explicit post-merger network; overrides contraction.
        cost: marginal cost of the merged firm (default: sum of both).
    """

    firms: tuple
    extra_edges: tuple = ()
    network: InfluenceNetwork | None = None
    cost: float | None = None


@dataclass(frozen=True)
class Tariff:
    """Additive cost changes ``t_i`` by firm label and ``t0`` for price takers."""

    tariffs: dict = field(default_factory=dict)
    t0: float = 0.0

    @property
    def total(self) -> float:
        return float(sum(self.tariffs.values())) + float(self.t0)


@dataclass(frozen=True)
class Scenario:
    name: str
    delta: Merger | Tariff


@dataclass
class ScenarioResult:
    name: str
    model: MarketModel
    report: EquilibriumReport
    groups: dict  # post-scenario label -> tuple of base labels
    welfare: dict
    deltas: dict
    verdict: dict


@dataclass
class ComparisonReport:
    base_model: MarketModel
    base: EquilibriumReport
    base_welfare: dict
    results: list

    def columns(self) -> list[tuple]:
        """Groups of base firms shown as one profit column.

        Firms that merge in any scenario share a column, so every row can
        be expressed on the same columns.
        """
        labels = list(self.base.labels)
        parent = {x: x for x in labels}

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        for res in self.results:
            for members in res.groups.values():
                root = find(members[0])
                for m in members[1:]:
                    parent[find(m)] = root
        cols = {}
        for x in labels:
            cols.setdefault(find(x), []).append(x)
        return [tuple(v) for v in cols.values()]

    def rows(self) -> list[dict]:
        """Table rows: P*, total profit, grouped profits, CS, SW (and TW when taxed)."""
        cols = self.columns()
        base_profit = dict(zip(self.base.labels, self.base.profits))
        out = [_row("base", self.base, self.base_welfare, cols,
                    {x: (x,) for x in self.base.labels}, base_profit)]
        for res in self.results:
            profit = dict(zip(res.report.labels, res.report.profits))
            out.append(_row(res.name, res.report, res.welfare, cols, res.groups, profit))
        return out

    def to_dict(self) -> dict:
        return {
            "base": {"report": self.base.to_dict(), "welfare": self.base_welfare},
            "scenarios": [
                {"name": r.name, "report": r.report.to_dict(), "welfare": r.welfare,
                 "deltas": r.deltas, "verdict": r.verdict}
                for r in self.results
            ],
        }


def _row(name, report, welfare, cols, groups, profit):
    by_base = {}
    for label, members in groups.items():
        by_base[members] = profit[label]
    row = {"scenario": name, "P_star": float(report.P_star), "total_profit": float(report.total_profit)}
    for col in cols:
        row["pi_" + "+".join(col)] = float(sum(v for members, v in by_base.items() if set(members) <= set(col)))
    row["cs"] = float(welfare["cs"])
    row["sw"] = float(welfare["sw"])
    if "tw" in welfare:
        row["tw"] = float(welfare["tw"])
    return row


def apply(base: MarketModel, scenario: Scenario) -> tuple[MarketModel, dict]:
    """Post-scenario model and the map from its firm labels to base labels."""
    delta = scenario.delta
    if isinstance(delta, Tariff):
        costs = np.array(base.costs, dtype=float)
        for label, t in delta.tariffs.items():
            try:
                costs[base.net.index(str(label))] += float(t)
            except KeyError:
                raise InputError(f"scenario {scenario.name!r}: tariff on unknown firm {label!r}") from None
        model = MarketModel(base.net, costs, float(base.c0) + float(delta.t0), base.demand)
        return model, {x: (x,) for x in base.labels}
    if isinstance(delta, Merger):
        if len(delta.firms) != 2:
            raise InputError(f"scenario {scenario.name!r}: a merger needs exactly two firms")
        try:
            a, b = (base.net.index(str(x)) for x in delta.firms)
        except KeyError as exc:
            raise InputError(f"scenario {scenario.name!r}: {exc.args[0]}") from None
        merged = f"{base.labels[a]}+{base.labels[b]}"
        if delta.network is not None:
            net = delta.network
            expected = {x for k, x in enumerate(base.labels) if k not in (a, b)} | {merged}
            if set(net.labels) != expected:
                raise InputError(f"scenario {scenario.name!r}: post-merger network must have firms "
                                 f"{sorted(expected)}, got {sorted(net.labels)}")
        else:
            net = netcore.merge_nodes(base.net, a, b, delta.extra_edges)
        merged_cost = base.costs[a] + base.costs[b] if delta.cost is None else float(delta.cost)
        base_cost = dict(zip(base.labels, base.costs))
        costs = [merged_cost if x == merged else base_cost[x] for x in net.labels]
        groups = {x: (base.labels[a], base.labels[b]) if x == merged else (x,) for x in net.labels}
        return MarketModel(net, costs, base.c0, base.demand), groups
    raise InputError(f"scenario {scenario.name!r}: unknown change {type(delta).__name__}")


def _sign(x):
    if abs(x) < NEUTRAL_TOL:
        return "neutral"
    return "desirable" if x > 0 else "undesirable"


def _welfare(model, report, tariff_total=None):
    w = equilibria.welfare(report, model)
    if tariff_total is not None:
        w["tariff_revenue"] = report.quantity * tariff_total
        w["tw"] = w["cs"] + w["total_profit"] + w["tariff_revenue"]
    return w


def run_comparison(base: MarketModel, scenarios: Sequence[Scenario],
                   tol: float = equilibria.DEFAULT_TOL) -> ComparisonReport:
    """Solve ``base`` and each scenario and compare them.

    Verdicts per scenario:

    * ``social``: sign of the change in total surplus (``neutral`` within 1e-9);
    * ``private``: sign of the merging firms' joint profit change (mergers only);
    * ``pareto``: consumer surplus and every firm's (grouped) profit strictly rise.
    """
    base_report = equilibria.solve(base, tol)
    base_welfare = _welfare(base, base_report)
    base_profit = dict(zip(base.labels, base_report.profits))
    results = []
    for sc in scenarios:
        model, groups = apply(base, sc)
        report = equilibria.solve(model, tol)
        t_total = sc.delta.total if isinstance(sc.delta, Tariff) else None
        w = _welfare(model, report, t_total)
        d_profit = {label: float(p - sum(base_profit[m] for m in groups[label]))
                    for label, p in zip(report.labels, report.profits)}
        deltas = {
            "P_star": report.P_star - base_report.P_star,
            "cs": w["cs"] - base_welfare["cs"],
            "sw": w["sw"] - base_welfare["sw"],
            "total_profit": w["total_profit"] - base_welfare["total_profit"],
            "profits": d_profit,
        }
        if "tw" in w:
            deltas["tw"] = w["tw"] - base_welfare["sw"]
        merging = [label for label, members in groups.items() if len(members) > 1]
        verdict = {
            "social": _sign(deltas["tw"] if "tw" in deltas else deltas["sw"]),
            "private": _sign(sum(d_profit[x] for x in merging)) if merging else None,
            "pareto": bool(deltas["cs"] > NEUTRAL_TOL and all(v > NEUTRAL_TOL for v in d_profit.values())),
        }
        results.append(ScenarioResult(sc.name, model, report, groups, w, deltas, verdict))
    return ComparisonReport(base, base_report, base_welfare, results)


def tariff_sensitivity(model: MarketModel, tariff_total: float = 0.0,
                       report: EquilibriumReport | None = None) -> dict:
    """Local effect of total cost on prices, profits and total welfare.

    ``dP_dC`` is the analytic pass-through; ``dP_dC_numeric`` and the per-firm
    ``dprofit_dC`` use central differences in the price-taker cost.
    ``dTW_dP`` is ``D'(P*) (P* - C_hat)`` with physical cost
    ``C_hat = C - tariff_total``.
    """
    if report is None:
        report = equilibria.solve(model)
    C = model.total_cost
    h = 1e-6 * max(1.0, C)
    if model.c0 < h:
        raise InputError("finite differences need a price-taker cost of at least 1e-6 * max(1, C)")
    up = equilibria.solve(model.with_c0(model.c0 + h))
    down = equilibria.solve(model.with_c0(model.c0 - h))
    c_hat = C - tariff_total
    P = report.P_star
    return {
        "dP_dC": equilibria.dP_dC(model, report),
        "dP_dC_numeric": (up.P_star - down.P_star) / (2 * h),
        "dprofit_dC": (up.profits - down.profits) / (2 * h),
        "dTW_dP": float(model.demand.slope(P) * (P - c_hat)),
        "c_hat": c_hat,
    }


def sweep_model(demand: Demand, n: int, kind: str, c0: float = 0.0) -> MarketModel:
    return MarketModel(netcore.canonical(kind, n), np.zeros(n), c0, demand)


def dwl_sweep(demand: Demand, n_range: Sequence[int], kinds: Sequence[str] = ("empty", "chain"),
              c0: float = 0.0) -> list[dict]:
    """Final price and dead-weight loss for empty and chain networks of each size.

    Linear and power demand use the closed form (n up to 20); other
    families use the generic solver (n up to 16).
    """
    closed = isinstance(demand, (Linear, Power))
    cap = LINEAR_SWEEP_CAP if closed else GENERIC_SWEEP_CAP
    rows = []
    for n in n_range:
        if not 0 <= n <= cap:
            raise InputError(f"network size {n} outside 0..{cap} for {demand.family} demand")
        for kind in kinds:
            model = sweep_model(demand, n, kind, c0)
            rep = equilibria.solve_linear_closed_form(model) if closed else equilibria.solve(model)
            rows.append({"n": n, "kind": kind, "P_star": rep.P_star, "dwl": rep.dwl})
    return rows


def gap_ratio(rows: list[dict]) -> float:
    """Largest ratio DWL(chain) / DWL(empty) over the sizes in a sweep."""
    by = {(r["n"], r["kind"]): r["dwl"] for r in rows}
    ratios = [by[(n, "chain")] / by[(n, "empty")] for (n, kind) in by
              if kind == "empty" and (n, "chain") in by and by[(n, "empty")] > 0]
    return max(ratios) if ratios else math.nan
