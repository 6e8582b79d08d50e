"""Equilibrium prices on an influence network.

The final-good price solves ``P - C = sum_k T_k g_k(P)`` where ``T_k`` is
the number of (k-1)-edge paths in the network, and each firm's markup is
the same sum restricted to paths starting at that firm.  The left side
minus the right side is strictly increasing under the demand regularity
conditions, so a bracketing root finder is enough.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import demandkit
from .demandkit import Demand, Linear, Logit, Power
from .errors import InputError, NoConvergence, NoGainsFromTrade, NonMonotoneKernel, WrongFamily
from .netcore import InfluenceNetwork

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
MAX_ITER = 500
_UPPER_CAP = 1e6


@dataclass(frozen=True, eq=False)
class MarketModel:
    """A full game instance: network, marginal costs, price-taker cost, demand."""

    net: InfluenceNetwork
    costs: np.ndarray
    c0: float
    demand: Demand

    def __post_init__(self):
        costs = np.array([float(c) for c in self.costs], dtype=float)
        if costs.shape != (self.net.n,):
            raise InputError(f"expected {self.net.n} firm costs, got {costs.shape[0]}")
        if (costs < 0).any() or self.c0 < 0:
            raise InputError("marginal costs must be non-negative")
        costs.setflags(write=False)
        object.__setattr__(self, "costs", costs)

    @property
    def n(self):
        return self.net.n

    @property
    def total_cost(self) -> float:
        return float(self.c0) + float(self.costs.sum())

    @property
    def labels(self):
        return self.net.labels

    def with_c0(self, c0):
        return replace(self, c0=c0)

    def with_demand(self, demand):
        return replace(self, demand=demand)


@dataclass(eq=False)
class EquilibriumReport:
    labels: tuple
    P_star: float
    prices: np.ndarray
    markups: np.ndarray
    quantity: float
    profits: np.ndarray
    influentiality: np.ndarray
    total_profit: float
    cs: float
    dwl: float
    sw: float
    residual: float
    iterations: int
    total_cost: float = 0.0
    exact: dict | None = field(default=None)

    FIELDS = ("P_star", "prices", "markups", "quantity", "profits", "influentiality",
              "total_profit", "cs", "dwl", "sw", "residual", "iterations", "total_cost")

    def to_dict(self, digits: int | None = None) -> dict:
        def fmt(x):
            x = float(x)
            return float(f"{x:.{digits}g}") if digits else x

        out = {"firms": list(self.labels)}
        for name in self.FIELDS:
            val = getattr(self, name)
            if name == "iterations":
                out[name] = int(val)
            elif isinstance(val, np.ndarray):
                out[name] = [fmt(v) for v in val]
            else:
                out[name] = fmt(val)
        if self.exact is not None:
            out["exact"] = {k: [str(x) for x in v] if isinstance(v, (list, tuple)) else str(v)
                            for k, v in self.exact.items()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "EquilibriumReport":
        kwargs = {"labels": tuple(data["firms"])}
        for name in cls.FIELDS:
            val = data[name]
            kwargs[name] = np.asarray(val, dtype=float) if isinstance(val, list) else val
        if "exact" in data:
            kwargs["exact"] = {k: tuple(Fraction(x) for x in v) if isinstance(v, list) else Fraction(v)
                               for k, v in data["exact"].items()}
        return cls(**kwargs)

    def firm(self, label):
        return self.labels.index(str(label))


def _counts(net: InfluenceNetwork):
    pc = net.path_counts
    K = max(net.depth, 1)
    return pc.totals[:K].astype(float), pc.per_firm[:, :K].astype(float), K


def gk_weights(demand: Demand, P: float, K: int, with_derivs=False):
    return demandkit.gk_table(demand, P, K, with_derivs)


def excess(model: MarketModel, P: float) -> float:
    """``f(P) = P - C - sum_k T_k g_k(P)``; strictly increasing, zero at P*."""
    if model.n == 0:
        return P - model.total_cost
    totals, _, K = _counts(model.net)
    return P - model.total_cost - float(totals @ gk_weights(model.demand, P, K).values)


def _bracket(model: MarketModel):
    f = lambda P: excess(model, P)
    C = model.total_cost
    p_bar = model.demand.p_bar
    margin = 1e-12 * max(1.0, p_bar if math.isfinite(p_bar) else 1.0)
    lo = C + margin
    flo = f(lo)
    if flo >= 0:
        raise NonMonotoneKernel(f"f({lo:.6g}) = {flo:.3g} >= 0: kernel is not positive above cost")
    if math.isfinite(p_bar):
        hi = p_bar - margin
        fhi = f(hi)
        if fhi <= 0:
            raise NonMonotoneKernel(f"f({hi:.6g}) = {fhi:.3g} <= 0 just below saturation")
        return lo, flo, hi, fhi
    offset = max(model.n * demandkit.g_derivs(model.demand, C + 1.0, 0)[0], margin)
    while True:
        hi = C + offset
        fhi = f(hi)
        if fhi > 0:
            return lo, flo, hi, fhi
        offset *= 2.0
        if offset > _UPPER_CAP:
            raise NoConvergence("could not find an upper bracket below 1e6")


def find_root(f, lo, flo, hi, fhi, tol, maxiter=MAX_ITER):
    """Safeguarded secant/bisection on an increasing function.

    Returns ``(x, f(x), iterations)``.  Any evaluation that contradicts
    monotonicity with respect to the current bracket raises.
    """
    side = 0
    # wlo/whi are the Illinois-weighted values used only for interpolation
    wlo, whi = flo, fhi
    for it in range(1, maxiter + 1):
        x = hi - whi * (hi - lo) / (whi - wlo)
        if not (lo < x < hi) or it % 4 == 0:
            x = 0.5 * (lo + hi)
        fx = f(x)
        if not (flo <= fx <= fhi):
            raise NonMonotoneKernel(f"f is not increasing near P = {x:.6g}")
        if abs(fx) <= tol * max(1.0, abs(x)):
            return x, fx, it
        if fx < 0:
            lo, flo, wlo = x, fx, fx
            if side == -1:
                whi *= 0.5
            side = -1
        else:
            hi, fhi, whi = x, fx, fx
            if side == 1:
                wlo *= 0.5
            side = 1
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(x)):
            return (lo, flo, it) if abs(flo) <= abs(fhi) else (hi, fhi, it)
    raise NoConvergence(f"no convergence after {maxiter} iterations")


def _check_gains(model):
    if model.total_cost >= model.demand.p_bar:
        raise NoGainsFromTrade(
            f"total cost {model.total_cost:.6g} is not below the saturation price {model.demand.p_bar:.6g}")


def _assemble(model, P, residual, iterations, exact=None):
    demand = model.demand
    n = model.n
    if n:
        _, per_firm, K = _counts(model.net)
        weights = gk_weights(demand, P, K).values
        markups = per_firm @ weights
    else:
        markups = np.zeros(0)
    prices = model.costs + markups
    q = demand.demand(P)
    profits = markups * q
    cs_ = demand.cs(P)
    total_profit = float(profits.sum())
    return EquilibriumReport(
        labels=model.labels,
        P_star=float(P),
        prices=prices,
        markups=markups,
        quantity=q,
        profits=profits,
        influentiality=markups.copy(),
        total_profit=total_profit,
        cs=cs_,
        dwl=demandkit.dwl(demand, P, model.total_cost),
        sw=cs_ + total_profit,
        residual=float(residual),
        iterations=int(iterations),
        total_cost=model.total_cost,
        exact=exact,
    )


def solve(model: MarketModel, tol: float = DEFAULT_TOL) -> EquilibriumReport:
    """Solve for the unique equilibrium of ``model``.

    Raises:
        NoGainsFromTrade: total cost at or above the saturation price.
        NonMonotoneKernel: the kernel breaks the monotonicity assumption.
        NoConvergence: iteration or bracket limits exceeded.
    """
    _check_gains(model)
    if model.n == 0:
        return _assemble(model, model.total_cost, 0.0, 0)
    f = lambda P: excess(model, P)
    lo, flo, hi, fhi = _bracket(model)
    P, res, it = find_root(f, lo, flo, hi, fhi, tol)
    log.debug("solved P*=%.15g residual=%.3g in %d iterations", P, res, it)
    return _assemble(model, P, res, it)


def _rational(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


def _beta(demand):
    if isinstance(demand, Linear):
        return 1
    if isinstance(demand, Power):
        return demand.beta
    raise WrongFamily(f"closed form needs linear or power demand, got {demand.family}")


def bonacich(net: InfluenceNetwork, beta=1.0) -> np.ndarray:
    """``B_i = sum_k beta^k (paths of length k-1 from i)``; any beta > 0."""
    per_firm = net.path_counts.per_firm
    weights = np.array([beta ** (k + 1) for k in range(net.n)], dtype=object)
    vals = per_firm.dot(weights) if net.n else np.zeros(0, dtype=object)
    if isinstance(beta, Fraction):
        return vals
    return vals.astype(float)


def degree(net: InfluenceNetwork) -> np.ndarray:
    return net.adjacency.sum(axis=1).astype(int)


def influentiality(report: EquilibriumReport) -> np.ndarray:
    return report.influentiality


def solve_linear_closed_form(model: MarketModel, exact: bool = False) -> EquilibriumReport:
    """Closed form for linear and power demand.

    With ``exact=True`` every input is read as a rational (floats through
    their decimal representation) and ``report.exact`` carries the exact
    ``P_star`` and ``prices``, plus ``cs``/``dwl``/``sw`` for linear demand.
    """
    demand = model.demand
    beta = _beta(demand)
    _check_gains(model)
    if exact:
        beta = _rational(beta)
        p_bar = _rational(demand.a) / _rational(demand.b)
        costs = [_rational(c) for c in model.costs] if model.n else []
        C = _rational(model.c0) + sum(costs, Fraction(0))
        B_i = list(bonacich(model.net, beta)) if model.n else []
        B = sum(B_i, Fraction(0))
        P = (C + p_bar * B) / (1 + B)
        prices = tuple(c + b / (1 + B) * (p_bar - C) for c, b in zip(costs, B_i))
        exact_vals = {"P_star": P, "prices": prices}
        if isinstance(demand, Linear):
            a, b = _rational(demand.a), _rational(demand.b)
            cs_of = lambda x: (a - b * x) ** 2 / (2 * b)
            q = a - b * P
            profit = sum((p - c) * q for p, c in zip(prices, costs))
            exact_vals["cs"] = cs_of(P)
            exact_vals["dwl"] = cs_of(C) - cs_of(P) - (P - C) * q
            exact_vals["sw"] = exact_vals["cs"] + profit
        report = _assemble(model, float(P), 0.0, 0, exact=exact_vals)
        report.prices = np.array([float(p) for p in prices])
        report.markups = report.prices - model.costs
        report.influentiality = report.markups.copy()
        return report
    beta = float(beta)
    p_bar = demand.p_bar
    C = model.total_cost
    B_i = bonacich(model.net, beta) if model.n else np.zeros(0)
    B = float(B_i.sum())
    P = (C + p_bar * B) / (1.0 + B)
    report = _assemble(model, P, 0.0, 0)
    # prices from the closed form directly; avoids cancellation in p_bar - P
    report.markups = B_i / (1.0 + B) * (p_bar - C)
    report.prices = model.costs + report.markups
    report.influentiality = report.markups.copy()
    report.profits = report.markups * report.quantity
    report.total_profit = float(report.profits.sum())
    report.sw = report.cs + report.total_profit
    report.residual = excess(model, P) if model.n else 0.0
    return report


def welfare(report: EquilibriumReport, model: MarketModel) -> dict:
    cs_ = model.demand.cs(report.P_star)
    total = float(np.sum(report.profits))
    return {
        "cs": cs_,
        "dwl": demandkit.dwl(model.demand, report.P_star, model.total_cost),
        "sw": cs_ + total,
        "total_profit": total,
    }


def logit_bounds(model: MarketModel, report: EquilibriumReport | None = None) -> dict:
    """Lower bounds ``C + n/alpha`` and ``c_i + 1/alpha`` and the gaps above them."""
    demand = model.demand
    if not isinstance(demand, Logit):
        raise WrongFamily(f"logit bounds need logit demand, got {demand.family}")
    if report is None:
        report = solve(model)
    inv_alpha = 1.0 / float(demand.alpha)
    lower_P = model.total_cost + model.n * inv_alpha
    lower_prices = model.costs + inv_alpha
    return {
        "lower_P": lower_P,
        "lower_prices": lower_prices,
        "P_star": report.P_star,
        "gap": report.P_star - lower_P,
        "price_gaps": report.prices - lower_prices,
        "P_bound_holds": bool(report.P_star > lower_P),
        "price_bounds_hold": bool(np.all(report.prices > lower_prices)),
    }


def dP_dC(model: MarketModel, report: EquilibriumReport) -> float:
    """Pass-through of total cost into the final price, ``1 / (1 - sum T_k g_k')``."""
    if model.n == 0:
        return 1.0
    totals, _, K = _counts(model.net)
    table = gk_weights(model.demand, report.P_star, K, with_derivs=True)
    return 1.0 / (1.0 - float(totals @ table.derivs))
