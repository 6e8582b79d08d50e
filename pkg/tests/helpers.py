"""Shared test utilities: fixture paths, network generators, independent formulas."""

import copy
import itertools
import math
from pathlib import Path

import numpy as np
from hypothesis import strategies as st

from netprice import demandkit as dk
from netprice import netcore as nc
from netprice import oracle
from netprice.equilibria import MarketModel

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

SIX_FIRM_LABELS = ("L", "T", "F", "C", "D", "R")
SIX_FIRM_EDGES = [("L", "T"), ("L", "F"), ("L", "C"), ("D", "F"), ("R", "F"), ("R", "D")]
DIAMOND_EDGES = [("1", "3"), ("1", "4"), ("2", "4")]
MERGER_EDGES = [("1", "2"), ("1", "4"), ("3", "4")]


def six_firm():
    return nc.from_edges(SIX_FIRM_LABELS, SIX_FIRM_EDGES)


def diamond():
    return nc.from_edges("1234", DIAMOND_EDGES)


def model(net, demand, costs=None, c0=0.0):
    costs = np.zeros(net.n) if costs is None else costs
    return MarketModel(net, costs, c0, demand)


def posets(n):
    """Every transitive DAG on n labelled nodes, as boolean matrices."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    seen, out = set(), []
    for mask in range(1 << len(pairs)):
        adj = np.zeros((n, n), dtype=bool)
        for b, (i, j) in enumerate(pairs):
            if mask >> b & 1:
                adj[i, j] = True
        if not np.array_equal(nc.transitive_closure(adj), adj):
            continue
        for perm in itertools.permutations(range(n)):
            p = adj[np.ix_(perm, perm)]
            if p.tobytes() not in seen:
                seen.add(p.tobytes())
                out.append(p)
    return out


def enumerate_paths(adj):
    """Brute-force list of all directed paths (as node tuples), including single nodes."""
    n = adj.shape[0]
    paths = [(i,) for i in range(n)]
    frontier = list(paths)
    while frontier:
        nxt = [p + (j,) for p in frontier for j in range(n) if adj[p[-1], j]]
        paths += nxt
        frontier = nxt
    return paths


@st.composite
def dag_matrices(draw, max_n=6, min_n=0):
    """Random valid influence networks: closed upper triangle, then relabelled."""
    n = draw(st.integers(min_n, max_n))
    bits = draw(st.lists(st.booleans(), min_size=n * n, max_size=n * n))
    adj = np.triu(np.array(bits, dtype=bool).reshape(n, n), k=1)
    adj = nc.transitive_closure(adj)
    perm = draw(st.permutations(range(n)))
    return adj[np.ix_(perm, perm)]


def demand_slope(demand, P):
    """D'(P) written out per family, independent of the kernel code."""
    if isinstance(demand, dk.Linear):
        return -float(demand.b)
    if isinstance(demand, dk.Power):
        base = float(demand.a) - float(demand.b) * P
        beta = float(demand.beta)
        return -float(demand.d) * float(demand.b) / beta * base ** (1 / beta - 1)
    if isinstance(demand, dk.Logit):
        a = float(demand.alpha)
        return -float(demand.d) * a * math.exp(-a * P) / (1 + math.exp(-a * P)) ** 2
    if isinstance(demand, dk.Exponential):
        return -float(demand.b) * float(demand.alpha) * math.exp(float(demand.alpha) * P)
    raise TypeError(demand)


FAMILY_SAMPLES = [
    dk.Linear(1.0, 1.0),
    dk.Linear(3.0, 0.5),
    dk.Power(1.0, 1.0, 1.0, 0.5),
    dk.Power(2.0, 2.0, 1.0, 3.0),
    dk.Logit(1.0, 1.0),
    dk.Logit(5.0, 0.4),
    dk.Exponential(3.0, 1.0, 1.0),
    dk.Exponential(2.0, 0.5, 2.0),
]


def sample_prices(demand, count=100):
    top = demand.p_bar * 0.999 if math.isfinite(demand.p_bar) else 20.0
    return np.linspace(top / count, top, count)


def perturbed(m, rep, firm, delta):
    """Report claiming ``firm`` charges ``p* + delta`` with followers reacting."""
    bad = copy.deepcopy(rep)
    p = rep.prices[firm] + delta
    P = oracle.induced_price(m, rep, firm, p)
    bad.prices[firm] = p
    for j in m.net.influenced(firm):
        bad.prices[j] = oracle._reaction(m, j, P)
    bad.P_star = P
    return bad
