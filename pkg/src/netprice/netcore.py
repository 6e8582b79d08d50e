"""Influence networks: validation, path counting and structural transforms.

An influence network is a dense boolean adjacency matrix over the
monopolist firms.  Entry ``(i, j)`` is true when firm ``i`` influences
firm ``j``, i.e. ``j`` observes ``p_i`` before choosing its own price.
Valid networks have a zero diagonal and are acyclic and transitive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import NetworkValidationError, ResultCyclic


@dataclass(frozen=True)
class NonZeroDiagonal:
    i: int
    label: str = ""

    def __str__(self):
        return f"NonZeroDiagonal: {self.label or self.i} influences itself"


@dataclass(frozen=True)
class Cycle:
    nodes: tuple
    labels: tuple = ()

    def __str__(self):
        names = self.labels or tuple(str(i) for i in self.nodes)
        return "Cycle: " + "→".join(names + names[:1])


@dataclass(frozen=True)
class IntransitiveTriple:
    i: int
    j: int
    k: int
    labels: tuple = ()

    def __str__(self):
        a, b, c = self.labels or (self.i, self.j, self.k)
        return f"IntransitiveTriple: {a}→{b}→{c} without {a}→{c}"


@dataclass(frozen=True)
class PathCounts:
    """Counts of directed paths by length.

    ``totals[k-1]`` is the number of (k-1)-edge paths in the whole network
    and ``per_firm[i, k-1]`` the number starting at firm ``i``.  Entries are
    Python ints (object arrays) so large chains never overflow.
    """

    totals: np.ndarray
    per_firm: np.ndarray

    def as_float(self):
        return self.totals.astype(float), self.per_firm.astype(float)


@dataclass(frozen=True, eq=False)
class InfluenceNetwork:
    """A validated influence network.  Build it with :func:`validate`."""

    adjacency: np.ndarray
    labels: tuple = field(default=())

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def index(self, label) -> int:
        """Position of a firm given its label (or an integer index)."""
        if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
            if not 0 <= label < self.n:
                raise KeyError(f"firm index {label} out of range")
            return int(label)
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(f"unknown firm {label!r}") from None

    def edges(self) -> list[tuple[str, str]]:
        rows, cols = np.nonzero(self.adjacency)
        return [(self.labels[i], self.labels[j]) for i, j in zip(rows, cols)]

    def influenced(self, i: int) -> np.ndarray:
        """Indices of the firms that ``i`` influences."""
        return np.flatnonzero(self.adjacency[i])

    @cached_property
    def path_counts(self) -> PathCounts:
        n = self.n
        a = self.adjacency.astype(int).astype(object)
        per_firm = np.zeros((n, n), dtype=object)
        v = np.ones(n, dtype=object)
        for k in range(n):
            per_firm[:, k] = v
            v = a.dot(v) if n else v
        totals = per_firm.sum(axis=0) if n else np.zeros(0, dtype=object)
        return PathCounts(totals=np.asarray(totals, dtype=object), per_firm=per_firm)

    @cached_property
    def depth(self) -> int:
        return int(sum(1 for t in self.path_counts.totals if t > 0))

    def __eq__(self, other):
        if not isinstance(other, InfluenceNetwork):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash((self.labels, self.adjacency.tobytes()))

    def __repr__(self):
        return f"InfluenceNetwork(n={self.n}, edges={self.edges()})"


def _find_cycle(adj: np.ndarray):
    """Return one directed cycle as a node list, or None."""
    n = adj.shape[0]
    state = [0] * n  # 0 new, 1 on stack, 2 done
    parent = [-1] * n
    for root in range(n):
        if state[root]:
            continue
        stack = [(root, iter(np.flatnonzero(adj[root])))]
        state[root] = 1
        while stack:
            node, children = stack[-1]
            for child in children:
                child = int(child)
                if child == node:
                    continue  # self loops are reported separately
                if state[child] == 1:
                    cycle = [node]
                    while cycle[-1] != child:
                        cycle.append(parent[cycle[-1]])
                    return cycle[::-1]
                if state[child] == 0:
                    state[child] = 1
                    parent[child] = node
                    stack.append((child, iter(np.flatnonzero(adj[child]))))
                    break
            else:
                state[node] = 2
                stack.pop()
    return None


def violations(adjacency, labels: Sequence[str] | None = None) -> list:
    """All rule violations of ``adjacency`` (empty list when valid)."""
    adj = np.asarray(adjacency, dtype=bool)
    n = adj.shape[0]
    labels = tuple(labels) if labels else tuple(str(i + 1) for i in range(n))
    found = []
    for i in np.flatnonzero(np.diag(adj)):
        found.append(NonZeroDiagonal(int(i), labels[i]))
    off = adj & ~np.eye(n, dtype=bool)
    cycle = _find_cycle(off)
    if cycle is not None:
        found.append(Cycle(tuple(cycle), tuple(labels[c] for c in cycle)))
    two_step = (off.astype(int) @ off.astype(int)) > 0
    for i, k in zip(*np.nonzero(two_step & ~off)):
        if i == k:
            continue
        for j in np.flatnonzero(off[i] & off[:, k]):
            found.append(IntransitiveTriple(int(i), int(j), int(k), (labels[i], labels[j], labels[k])))
    return found


def validate(adjacency, labels: Sequence[str] | None = None) -> InfluenceNetwork:
    """Check the network rules and return an immutable network.

    Raises:
        NetworkValidationError: listing every violated rule.
    """
    adj = np.array(adjacency, dtype=bool)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {adj.shape}")
    n = adj.shape[0]
    if labels is None:
        labels = tuple(str(i + 1) for i in range(n))
    labels = tuple(str(x) for x in labels)
    if len(labels) != n:
        raise ValueError(f"{len(labels)} labels for {n} firms")
    if len(set(labels)) != n:
        raise ValueError("firm labels must be unique")
    found = violations(adj, labels)
    if found:
        raise NetworkValidationError(found)
    adj.setflags(write=False)
    return InfluenceNetwork(adj, labels)


def from_edges(labels: Sequence[str], edges: Iterable[tuple]) -> InfluenceNetwork:
    labels = [str(x) for x in labels]
    pos = {name: i for i, name in enumerate(labels)}
    adj = np.zeros((len(labels), len(labels)), dtype=bool)
    for a, b in edges:
        adj[pos[str(a)], pos[str(b)]] = True
    return validate(adj, labels)


def path_counts(net: InfluenceNetwork) -> PathCounts:
    return net.path_counts


def depth(net: InfluenceNetwork) -> int:
    """Length of the longest path counted in nodes: smallest d with A^d = 0."""
    return net.depth


def canonical(kind: str, n: int) -> InfluenceNetwork:
    """``empty`` (simultaneous moves) or ``chain`` (fully sequential) network."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if kind == "empty":
        adj = np.zeros((n, n), dtype=bool)
    elif kind == "chain":
        adj = np.triu(np.ones((n, n), dtype=bool), k=1)
    else:
        raise ValueError(f"unknown network kind {kind!r}")
    return validate(adj)


def transitive_closure(adjacency) -> np.ndarray:
    adj = np.array(adjacency, dtype=bool)
    for k in range(adj.shape[0]):
        adj |= np.outer(adj[:, k], adj[k])
    return adj


def merge_nodes(net: InfluenceNetwork, i, j, extra_edges: Iterable[tuple] = ()) -> InfluenceNetwork:
    """Contract firms ``i`` and ``j`` into one firm labelled ``"i+j"``.

    The merged firm keeps the union of both firms' in- and out-edges, the
    edges between the pair disappear, ``extra_edges`` (given by surviving
    labels) are added, and the result is transitively closed.  The merged
    node takes the position of the earlier of the two firms.

    Raises:
        ResultCyclic: if the closed network contains a cycle.
    """
    a, b = net.index(i), net.index(j)
    if a == b:
        raise ValueError("cannot merge a firm with itself")
    first, second = sorted((a, b))
    merged_label = f"{net.labels[a]}+{net.labels[b]}"
    adj = net.adjacency.copy()
    adj[first] |= adj[second]
    adj[:, first] |= adj[:, second]
    keep = [k for k in range(net.n) if k != second]
    adj = adj[np.ix_(keep, keep)]
    np.fill_diagonal(adj, False)
    labels = [net.labels[k] for k in keep]
    labels[first] = merged_label
    pos = {name: k for k, name in enumerate(labels)}
    for src, dst in extra_edges:
        try:
            adj[pos[str(src)], pos[str(dst)]] = True
        except KeyError as exc:
            raise KeyError(f"extra edge references unknown firm {exc.args[0]!r}") from None
    adj = transitive_closure(adj)
    if np.diag(adj).any():
        bad = violations(adj & ~np.eye(len(labels), dtype=bool), labels)
        raise ResultCyclic([v for v in bad if isinstance(v, Cycle)] or bad)
    return validate(adj, labels)
