"""Weighted graphs ``G = (V, w, m)``, birth-death chains and sphere data.

Vertices are dense integer indices ``0..n-1``.  Edge weights live in a dense
symmetric matrix, which keeps the LP assembly in :mod:`curvelab.curvature`
cheap for the desk-scale graphs this package targets (a few hundred vertices).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DisconnectedGraph,
    GraphError,
    NonPositiveMeasure,
    NonPositiveWeight,
    SelfLoop,
    TruncationExceeded,
)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class WeightedGraph:
    """Finite connected graph with symmetric weights ``w`` and measure ``m``.

    Instances are immutable; derived data (adjacency lists, the distance
    matrix) is computed lazily and cached.
    """

    def __init__(self, w, m, labels: Sequence[str] | None = None):
        w = np.array(w, dtype=float)
        m = np.array(m, dtype=float).ravel()
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise GraphError("weight matrix must be square")
        n = w.shape[0]
        if m.shape != (n,):
            raise GraphError("measure must have one entry per vertex")
        if n == 0:
            raise GraphError("graph must have at least one vertex")
        if np.any(np.diag(w) != 0):
            raise SelfLoop("w(x, x) must vanish")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise NonPositiveWeight("weights must be finite and nonnegative")
        if not np.array_equal(w, w.T):
            raise GraphError("weight matrix must be symmetric")
        if np.any(m <= 0) or not np.all(np.isfinite(m)):
            raise NonPositiveMeasure("vertex measures must be positive")
        if labels is not None:
            labels = tuple(str(s) for s in labels)
            if len(labels) != n:
                raise GraphError("one label per vertex required")
        self.n = n
        self.w = _frozen(w)
        self.m = _frozen(m)
        self.labels = labels
        if not self._connected():
            raise DisconnectedGraph("graph is not connected")

    def _connected(self):
        seen = np.zeros(self.n, dtype=bool)
        seen[0] = True
        stack = [0]
        while stack:
            x = stack.pop()
            for y in self.neighbors(x):
                if not seen[y]:
                    seen[y] = True
                    stack.append(y)
        return bool(seen.all())

    def __repr__(self):
        return f"WeightedGraph(n={self.n}, edges={len(self.edges)})"

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.w, other.w)
            and np.array_equal(self.m, other.m)
        )

    __hash__ = None

    @cached_property
    def _adjacency(self):
        return tuple(tuple(int(y) for y in np.nonzero(row)[0]) for row in self.w)

    def neighbors(self, x: int) -> tuple:
        return self._adjacency[x]

    @cached_property
    def edges(self) -> tuple:
        """All edges ``(u, v)`` with ``u < v``, in lexicographic order."""
        iu, iv = np.nonzero(np.triu(self.w))
        return tuple((int(u), int(v)) for u, v in zip(iu, iv))

    def adjacent(self, x: int, y: int) -> bool:
        return bool(self.w[x, y] > 0)

    @cached_property
    def weighted_degree(self) -> np.ndarray:
        """Row sums ``sum_y w(x, y)``."""
        return _frozen(self.w.sum(axis=1))

    @cached_property
    def deg(self) -> np.ndarray:
        """Vertex degrees ``Deg(x) = sum_y w(x, y) / m(x)``."""
        return _frozen(self.weighted_degree / self.m)

    @cached_property
    def laplacian_matrix(self) -> np.ndarray:
        L = (self.w - np.diag(self.weighted_degree)) / self.m[:, None]
        return _frozen(L)

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        D = np.array([self._bfs(x) for x in range(self.n)], dtype=np.int64)
        D.setflags(write=False)
        return D

    def _bfs(self, x):
        dist = [-1] * self.n
        dist[x] = 0
        queue = deque([x])
        while queue:
            u = queue.popleft()
            for v in self._adjacency[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def ball(self, x: int, r: int = 1) -> tuple:
        return tuple(int(v) for v in np.nonzero(self.distance_matrix[x] <= r)[0])

    @property
    def is_combinatorial(self) -> bool:
        return bool(np.all((self.w == 0) | (self.w == 1)) and np.all(self.m == 1))

    def scaled(self, lam: float) -> "WeightedGraph":
        """The graph ``(lam * w, lam * m)``; its Laplacian is unchanged."""
        return WeightedGraph(lam * self.w, lam * self.m, self.labels)

    def with_weights(self, w=None, m=None) -> "WeightedGraph":
        return WeightedGraph(self.w if w is None else w, self.m if m is None else m, self.labels)


def build_graph(edges: Iterable, measures, n: int | None = None) -> WeightedGraph:
    """Build a graph from ``(u, v, weight)`` triples and per-vertex measures.

    Vertex ids may be arbitrary hashables.  They are indexed densely in order
    of first appearance (measures first, when given as a mapping) and kept as
    labels.  ``measures`` is either a mapping ``id -> m`` or a sequence
    indexed by integer ids ``0..n-1``.
    """
    edges = list(edges)
    if isinstance(measures, dict):
        ids = list(measures)
        mvals = [measures[k] for k in ids]
    else:
        mvals = list(measures)
        ids = list(range(len(mvals)))
    index = {k: i for i, k in enumerate(ids)}
    for u, v, _ in edges:
        for k in (u, v):
            if k not in index:
                raise GraphError(f"vertex {k!r} has no measure")
    size = len(ids) if n is None else n
    w = np.zeros((size, size))
    for u, v, wt in edges:
        if u == v:
            raise SelfLoop(f"self-loop at {u!r}")
        if not wt > 0:
            raise NonPositiveWeight(f"edge ({u!r}, {v!r}) has weight {wt}")
        i, j = index[u], index[v]
        w[i, j] = w[j, i] = float(wt)
    if any(not mv > 0 for mv in mvals):
        raise NonPositiveMeasure("vertex measures must be positive")
    labels = None
    if any(not isinstance(k, (int, np.integer)) or k != i for i, k in enumerate(ids)):
        labels = [str(k) for k in ids]
    return WeightedGraph(w, mvals, labels)


def laplacian_apply(G: WeightedGraph, f) -> np.ndarray:
    """``Delta f(x) = (1/m(x)) sum_y w(x,y) (f(y) - f(x))``."""
    f = np.asarray(f, dtype=float)
    if f.shape != (G.n,):
        raise ValueError(f"expected a vector of length {G.n}, got shape {f.shape}")
    return (G.w @ f - G.weighted_degree * f) / G.m


def degree(G: WeightedGraph, x: int) -> float:
    return float(G.deg[x])


def degree_max(G: WeightedGraph) -> float:
    return float(G.deg.max())


def distances(G: WeightedGraph, x: int) -> np.ndarray:
    """Hop-count distances from ``x`` (breadth-first search)."""
    return np.array(G.distance_matrix[x])


@dataclass(frozen=True)
class SphereDecomposition:
    root: int
    spheres: tuple
    dist: np.ndarray
    deg_plus: np.ndarray
    deg_minus: np.ndarray
    deg_within: np.ndarray

    @property
    def eccentricity(self) -> int:
        return len(self.spheres) - 1


def sphere_decomposition(G: WeightedGraph, x0: int) -> SphereDecomposition:
    dist = distances(G, x0)
    R = int(dist.max())
    spheres = tuple(tuple(int(v) for v in np.nonzero(dist == r)[0]) for r in range(R + 1))
    diff = dist[None, :] - dist[:, None]  # diff[x, y] = d(y) - d(x)
    plus = (G.w * (diff == 1)).sum(axis=1) / G.m
    minus = (G.w * (diff == -1)).sum(axis=1) / G.m
    within = (G.w * (diff == 0)).sum(axis=1) / G.m
    return SphereDecomposition(x0, spheres, dist, plus, minus, within)


@dataclass(frozen=True)
class BirthDeathChain:
    """Weighted path on ``{0, ..., N}`` with rates ``w(r, r+1) = w_up[r]``.

    A chain is a truncation of a chain on the nonnegative integers unless
    ``closed`` is set, in which case ``w(N, N+1) = 0`` is genuine (the chain
    is a finite path graph, e.g. the associated chain of a finite graph).
    Quantities needing ``w(R, R+1)`` raise :class:`TruncationExceeded` for
    ``R >= N`` on truncated chains.
    """

    w_up: tuple
    m: tuple
    closed: bool = False
    origin: int = 0
    labels: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        w_up = tuple(float(x) for x in self.w_up)
        m = tuple(float(x) for x in self.m)
        object.__setattr__(self, "w_up", w_up)
        object.__setattr__(self, "m", m)
        if len(m) != len(w_up) + 1:
            raise GraphError("need N rates and N+1 measures")
        if any(not x > 0 or not np.isfinite(x) for x in w_up):
            raise NonPositiveWeight("birth-death rates must be positive")
        if any(not x > 0 or not np.isfinite(x) for x in m):
            raise NonPositiveMeasure("birth-death measures must be positive")

    @property
    def N(self) -> int:
        return len(self.w_up)

    def _check(self, r, need_up=True):
        if r < 0 or r > self.N:
            raise TruncationExceeded(f"vertex {r} outside 0..{self.N}")
        if need_up and r >= self.N and not self.closed:
            raise TruncationExceeded(f"w({r}, {r + 1}) lies beyond the truncation N={self.N}")

    def up(self, r: int) -> float:
        """``w(r, r+1)``."""
        self._check(r)
        return self.w_up[r] if r < self.N else 0.0

    def down(self, r: int) -> float:
        """``w(r, r-1)``, zero at the root."""
        self._check(r, need_up=False)
        return self.w_up[r - 1] if r > 0 else 0.0

    def deg_plus(self, r: int) -> float:
        return self.up(r) / self.m[r]

    def deg(self, r: int) -> float:
        return (self.up(r) + self.down(r)) / self.m[r]

    def lap_distance(self, r: int) -> float:
        """``Delta d(0, .)(r) = (w(r, r+1) - w(r, r-1)) / m(r)``."""
        return (self.up(r) - self.down(r)) / self.m[r]

    def ball_measure(self, r: int) -> float:
        return float(np.sum(self.m[: r + 1]))


def to_graph(chain: BirthDeathChain) -> WeightedGraph:
    n = chain.N + 1
    w = np.zeros((n, n))
    idx = np.arange(chain.N)
    w[idx, idx + 1] = chain.w_up
    w[idx + 1, idx] = chain.w_up
    return WeightedGraph(w, chain.m, chain.labels)
