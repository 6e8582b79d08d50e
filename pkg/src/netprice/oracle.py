"""Independent checks of solved equilibria.

* :func:`deviation_check` scans unilateral deviations of one firm while the
  firms it influences re-optimise along their reaction functions.
* :func:`chain_backward_induction` solves fully sequential networks by
  nested one-dimensional profit maximisation, without using the kernel.
* :func:`diamond_linear_oracle` redoes the four-firm linear example
  (1 -> 3, 1 -> 4, 2 -> 4) symbolically from the firms' first-order conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from . import demandkit
from .equilibria import EquilibriumReport, MarketModel
from .errors import DepthTooLarge, NetPriceError, OutOfDomain, RootNotBracketed
from .netcore import canonical

PROFIT_RTOL = 1e-6
PROFIT_ATOL = 1e-12


@dataclass
class DeviationCurve:
    firm: int
    grid: np.ndarray
    induced_price: np.ndarray
    profit: np.ndarray
    argmax: float
    equilibrium_profit: float
    passed: bool
    dropped: list = field(default_factory=list)

    def rows(self):
        return zip(self.grid, self.induced_price, self.profit)


def _reaction(model: MarketModel, j: int, P: float) -> float:
    """Price of firm ``j`` consistent with final price ``P`` on its reaction path."""
    _, per_firm, K = _counts_float(model)
    weights = demandkit.gk_table(model.demand, P, K).values
    return model.costs[j] + float(per_firm[j] @ weights)


def _counts_float(model):
    pc = model.net.path_counts
    K = max(model.net.depth, 1)
    return pc.totals[:K].astype(float), pc.per_firm[:, :K].astype(float), K


def induced_price(model: MarketModel, report: EquilibriumReport, firm: int, p_i: float) -> float:
    """Final price when ``firm`` charges ``p_i`` and everyone else reacts.

    Firms influenced by ``firm`` follow their reaction functions; the rest
    hold their reported prices.

    Raises:
        RootNotBracketed: no final price in the demand domain is consistent.
    """
    followers = model.net.influenced(firm)
    fixed = model.c0 + p_i + sum(report.prices[j] for j in range(model.n)
                                 if j != firm and j not in set(followers))

    def h(P):
        return P - fixed - sum(_reaction(model, j, P) for j in followers)

    if len(followers) == 0:
        return fixed
    p_bar = model.demand.p_bar
    lo = 1e-12
    hi = p_bar * (1 - 1e-12) if math.isfinite(p_bar) else max(2 * fixed, 1.0)
    try:
        hlo = h(lo)
        if hlo > 0:
            raise RootNotBracketed(f"deviation {p_i:.6g} implies a negative final price")
        hhi = h(hi)
        while hhi < 0 and not math.isfinite(p_bar) and hi < 1e6:
            hi *= 2.0
            hhi = h(hi)
    except OutOfDomain as exc:
        raise RootNotBracketed(str(exc)) from exc
    if hhi < 0:
        raise RootNotBracketed(f"deviation {p_i:.6g} pushes the final price past saturation")
    return brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def deviation_check(model: MarketModel, report: EquilibriumReport, firm: int,
                    half_width: float | None = None, size: int = 201) -> DeviationCurve:
    """Grid search over deviations of ``firm`` around its reported price.

    Passes iff no grid point beats the reported profit by more than a
    relative 1e-6.  Grid points with no consistent final price are dropped
    and listed in ``dropped``.
    """
    if size < 101:
        raise ValueError("grid size must be at least 101")
    p_star = report.prices[firm]
    c = model.costs[firm]
    if half_width is None:
        half_width = 0.5 * (p_star - c)
    if half_width <= 0:
        raise ValueError("half width must be positive")
    grid = np.linspace(p_star - half_width, p_star + half_width, size)
    grid = grid[grid > c]
    pi_star = (p_star - c) * model.demand.demand(report.P_star)
    kept, induced, profits, dropped = [], [], [], []
    for p in grid:
        try:
            P = induced_price(model, report, firm, float(p))
        except RootNotBracketed:
            dropped.append(float(p))
            continue
        kept.append(p)
        induced.append(P)
        profits.append((p - c) * model.demand.demand(P))
    profits = np.array(profits)
    best = int(np.argmax(profits)) if len(profits) else 0
    passed = bool(len(profits)) and profits.max() <= pi_star * (1 + PROFIT_RTOL) + PROFIT_ATOL
    return DeviationCurve(firm, np.array(kept), np.array(induced), profits,
                          float(kept[best]) if kept else math.nan, pi_star, passed, dropped)


def verify(model: MarketModel, report: EquilibriumReport, **kwargs) -> list[DeviationCurve]:
    return [deviation_check(model, report, i, **kwargs) for i in range(model.n)]


_STENCIL = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])


def _slope(func, x, h):
    """Fourth-order central difference."""
    return float(_STENCIL @ np.array([func(x + o * h) for o in _OFFSETS])) / h


def _predict(history, s):
    """Linear extrapolation of a firm's optimum from its two latest solves."""
    if not history:
        return None
    if len(history) == 1 or history[0][0] == history[1][0]:
        return history[-1][1]
    (s0, p0), (s1, p1) = history
    return p1 + (p1 - p0) * (s - s1) / (s1 - s0)


def _secant(func, x, h, xtol, lo, hi, max_iter=12):
    """Secant iteration for a root of ``func`` near ``x``; None if it strays."""
    if not lo <= x <= hi:
        return None
    x_prev, f_prev = x, func(x)
    x = x + min(1e-3 * h, hi - x) if x + 1e-3 * h <= hi else x - 1e-3 * h
    for _ in range(max_iter):
        fx = func(x)
        if fx == 0.0:
            return x
        if fx == f_prev:
            return None
        x_new = x - fx * (x - x_prev) / (fx - f_prev)
        if not lo <= x_new <= hi:
            return None
        if abs(x_new - x) <= xtol:
            return x_new
        x_prev, f_prev, x = x, fx, x_new
    return None


def chain_backward_induction(model: MarketModel, tol: float = 1e-8, step: float = 1e-2) -> dict:
    """Subgame-perfect prices of a fully sequential network, n <= 4.

    Firm ``k`` (in order) sees the running total ``s`` of c0 plus all earlier
    prices and maximises ``(p - c_k) D(final price)``, where the final price
    adds the optimal responses of the later firms, themselves computed by the
    same procedure.  Each firm's optimum is the root of a finite-difference
    derivative of its realised profit; nothing here uses the demand kernel.
    Work grows geometrically with ``n``.

    Inner firms are solved to tighter tolerances (``tol * step**level``)
    because each nesting level divides their error by ``step``.

    Returns ``{"prices": [...], "P": float}`` in network order.
    """
    n = model.n
    if n > 4:
        raise DepthTooLarge(f"backward induction is limited to 4 firms, got {n}")
    if not np.array_equal(model.net.adjacency, canonical("chain", n).adjacency):
        raise NetPriceError("backward induction needs a chain network in sequential order")
    demand = model.demand
    costs = [float(c) for c in model.costs]
    p_bar = demand.p_bar
    xtols = [max(tol * step**k, 1e-13) for k in range(n)]
    history = [[] for _ in range(n)]  # recent (s, p) solves per level, for warm starts

    def quantity(P):
        return demand.demand(P) if P < p_bar else 0.0

    def argmax(k, s):
        c = costs[k]
        room = p_bar - s - c  # own markup at which the final price saturates
        if room <= 0:
            return c
        h = step * min(max(1.0, abs(c)), room)

        def profit(p):
            P = s + p + sum(play(k + 1, s + p))
            return (p - c) * quantity(P)

        foc = lambda p: _slope(profit, p, h)
        solve = lambda a, b: brentq(foc, a, b, xtol=xtols[k], rtol=4 * np.finfo(float).eps, maxiter=200)
        top = c + room - 2 * h
        guess = _predict(history[k], s)
        if guess is not None:
            p = _secant(foc, guess, h, xtols[k], c + 2 * h, top)
            if p is not None:
                return p
        if math.isfinite(p_bar):
            # coarse scan of the profit itself, then refine inside the best cell
            grid = c + room * np.linspace(0.0, 1.0, 33)[1:-1]
            values = [profit(p) for p in grid]
            j = int(np.argmax(values))
            a = grid[j - 1] if j > 0 else c + 2 * h
            b = grid[j + 1] if j + 1 < len(grid) else top
            a, b = max(a, c + 2 * h), min(b, top)
            if a < b and foc(a) > 0 > foc(b):
                return solve(a, b)
            return float(grid[j])
        hi = c + 4.0
        while foc(hi) >= 0.0:
            if hi > 1e6:
                raise NetPriceError("no interior optimum found for a chain firm")
            hi = c + 2.0 * (hi - c)
        lo = c + 2 * h
        return c if foc(lo) <= 0 else solve(lo, hi)

    def play(k, s):
        """Prices chosen by firms k.. given the running total ``s``."""
        if k == n:
            return []
        p = argmax(k, s)
        history[k][:] = history[k][-1:] + [(s, p)]
        return [p] + play(k + 1, s + p)

    prices = play(0, float(model.c0))
    return {"prices": prices, "P": float(model.c0) + sum(prices)}


def diamond_linear_oracle() -> dict:
    """Backward induction for ``D = 1 - P`` on the network 1->3, 1->4, 2->4.

    Works symbolically: firms 3 and 4 best-respond to what they observe,
    firm 3 forms an equilibrium conjecture about firm 2, then firms 1 and 2
    optimise against those reaction functions.
    """
    import sympy as sp

    p1, p2, p3, p4, p1s, p2s = sp.symbols("p1 p2 p3 p4 p1s p2s")
    # 3 and 4 jointly, when 4 sees p2 = p2s: both FOCs of p*(1 - P)
    eq3 = sp.diff(p3 * (1 - p1 - p2s - p3 - p4), p3)
    eq4 = sp.diff(p4 * (1 - p1 - p2s - p3 - p4), p4)
    on_path = sp.solve([eq3, eq4], [p3, p4], dict=True)[0]
    br3 = on_path[p3]  # p3*(p1), uses the conjecture p2s
    # firm 4 off path: sees p1 and p2, takes p3*(p1)
    br4 = sp.solve(sp.diff(p4 * (1 - p1 - p2 - br3 - p4), p4), p4)[0]
    # firm 2: sees nothing, moves p4 only
    pi2 = p2 * (1 - p1s - p2 - br3.subs(p1, p1s) - br4.subs(p1, p1s))
    foc2 = sp.diff(pi2, p2).subs(p2, p2s)
    # firm 1: moves p3 and p4, conjectures p2s
    pi1 = p1 * (1 - p1 - p2s - br3 - br4.subs(p2, p2s))
    foc1 = sp.diff(pi1, p1).subs(p1, p1s)
    sol = sp.solve([foc1, foc2], [p1s, p2s], dict=True)[0]
    subs = {p1s: sol[p1s], p2s: sol[p2s]}
    q1, q2 = sol[p1s], sol[p2s]
    q3 = br3.subs(p1, q1).subs(subs)
    q4 = br4.subs({p1: q1, p2: q2}).subs(subs)
    prices = tuple(Fraction(int(sp.fraction(x)[0]), int(sp.fraction(x)[1])) for x in (q1, q2, q3, q4))
    br3_eq = sp.expand(br3.subs(subs))
    br4_eq = sp.expand(br4.subs(subs))
    coeff = lambda expr, sym: Fraction(str(expr.coeff(sym))) if sym is not None else Fraction(str(expr.subs({p1: 0, p2: 0})))
    return {
        "prices": prices,
        "P": sum(prices, Fraction(0)),
        "foc1": sp.simplify(foc1),
        "foc2": sp.simplify(foc2),
        "br3": {"const": coeff(br3_eq, None), "p1": coeff(br3_eq, p1)},
        "br4": {"const": coeff(br4_eq, None), "p1": coeff(br4_eq, p1), "p2": coeff(br4_eq, p2)},
    }
