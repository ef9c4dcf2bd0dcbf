"""Graph and birth-death chain generators."""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidConstruction
from .graph import BirthDeathChain, WeightedGraph


def path(n: int, weight: float = 1.0, measure: float = 1.0) -> WeightedGraph:
    if n < 1:
        raise InvalidConstruction("path needs at least one vertex")
    w = np.zeros((n, n))
    i = np.arange(n - 1)
    w[i, i + 1] = w[i + 1, i] = weight
    return WeightedGraph(w, np.full(n, float(measure)))


def cycle(n: int) -> WeightedGraph:
    if n < 3:
        raise InvalidConstruction("cycle needs at least three vertices")
    w = np.zeros((n, n))
    i = np.arange(n)
    w[i, (i + 1) % n] = w[(i + 1) % n, i] = 1.0
    return WeightedGraph(w, np.ones(n))


def complete(n: int) -> WeightedGraph:
    if n < 1:
        raise InvalidConstruction("complete graph needs at least one vertex")
    return WeightedGraph(np.ones((n, n)) - np.eye(n), np.ones(n))


def star(leaves: int) -> WeightedGraph:
    """Star with center 0 and ``leaves`` leaves."""
    if leaves < 1:
        raise InvalidConstruction("star needs at least one leaf")
    n = leaves + 1
    w = np.zeros((n, n))
    w[0, 1:] = w[1:, 0] = 1.0
    return WeightedGraph(w, np.ones(n))


def hypercube(dim: int) -> WeightedGraph:
    if dim < 1:
        raise InvalidConstruction("hypercube dimension must be positive")
    n = 1 << dim
    w = np.zeros((n, n))
    for x in range(n):
        for b in range(dim):
            w[x, x ^ (1 << b)] = 1.0
    return WeightedGraph(w, np.ones(n))


def random_graph(
    n: int,
    p: float = 0.1,
    *,
    seed=None,
    weights: tuple | None = None,
    measures: tuple | None = None,
    max_degree: int | None = None,
) -> WeightedGraph:
    """Connected random graph: a random recursive tree plus Erdős–Rényi edges.

    Extra edges are drawn independently with probability ``p``; an edge is
    skipped if it would push an endpoint above ``max_degree`` neighbors.
    ``weights``/``measures`` are ``(low, high)`` ranges for uniform draws;
    ``None`` means all ones.
    """
    if n < 1:
        raise InvalidConstruction("random graph needs at least one vertex")
    if max_degree is not None and max_degree < 2 and n > 2:
        raise InvalidConstruction("max_degree < 2 cannot connect more than two vertices")
    rng = np.random.default_rng(seed)
    adj = np.zeros((n, n), dtype=bool)
    count = np.zeros(n, dtype=int)
    for v in range(1, n):
        cand = np.arange(v)
        if max_degree is not None:
            cand = cand[count[:v] < max_degree]
        u = int(rng.choice(cand))
        adj[u, v] = adj[v, u] = True
        count[u] += 1
        count[v] += 1
    for u, v in itertools.combinations(range(n), 2):
        if adj[u, v] or rng.random() >= p:
            continue
        if max_degree is not None and (count[u] >= max_degree or count[v] >= max_degree):
            continue
        adj[u, v] = adj[v, u] = True
        count[u] += 1
        count[v] += 1
    w = np.zeros((n, n))
    iu, iv = np.nonzero(np.triu(adj))
    vals = np.ones(iu.size) if weights is None else rng.uniform(*weights, size=iu.size)
    w[iu, iv] = w[iv, iu] = vals
    m = np.ones(n) if measures is None else rng.uniform(*measures, size=n)
    return WeightedGraph(w, m)


def random_tree(n: int, *, seed=None, weights=None, measures=None) -> WeightedGraph:
    return random_graph(n, 0.0, seed=seed, weights=weights, measures=measures)


def bdc_from_rates(w_up: Sequence[float], m: Sequence[float]) -> BirthDeathChain:
    return BirthDeathChain(tuple(w_up), tuple(m))


def random_chain(N: int, *, seed=None, weights=(0.5, 2.0), measures=(0.5, 2.0)) -> BirthDeathChain:
    rng = np.random.default_rng(seed)
    return BirthDeathChain(tuple(rng.uniform(*weights, N)), tuple(rng.uniform(*measures, N + 1)))


def two_sided_geometric(N: int) -> BirthDeathChain:
    """Chain on ``{-N, ..., N}`` with ``w(z, z+1) = m(z) = 2**z``.

    Index ``i`` corresponds to ``z = i - N``; ``origin`` is the index of 0.
    Both ends are truncations; only pairs away from index 0 and ``2N`` carry
    the curvature of the two-sided chain.
    """
    if N < 1:
        raise InvalidConstruction("need N >= 1")
    z = np.arange(-N, N + 1)
    return BirthDeathChain(
        tuple(2.0 ** z[:-1]),
        tuple(2.0 ** z),
        origin=N,
        labels=tuple(str(int(k)) for k in z),
    )


def g_epsilon(eps: float, N: int) -> BirthDeathChain:
    """``m = 1``, ``w(R, R+1) = 1 + sum_{r<=R} sum_{k<=r} (log k)**(1+eps)``."""
    if not eps > 0:
        raise InvalidConstruction("eps must be positive")
    if N < 1:
        raise InvalidConstruction("need N >= 1")
    k = np.arange(1, N + 1, dtype=float)
    inner = np.cumsum(np.log(k) ** (1.0 + eps))   # inner[r-1] = sum_{k<=r}
    outer = np.cumsum(inner)                      # outer[R-1] = sum_{r<=R} inner
    w_up = np.concatenate([[1.0], 1.0 + outer[: N - 1]])
    return BirthDeathChain(tuple(w_up), tuple(np.ones(N + 1)))


def _tail_sums(k: Callable[[int], float], N: int, ratio: float | None):
    """``tails[r] = sum_{i > r} k_i`` for ``r = 0..N``."""
    if ratio is not None:
        return [k(r + 1) / (1.0 - ratio) for r in range(N + 1)]
    terms = []
    total = 0.0
    i = 1
    while True:
        t = float(k(i))
        if not t > 0:
            raise InvalidConstruction(f"k_{i} = {t} is not positive")
        terms.append(t)
        total += t
        # a neglected remainder shifts every tail equally, so kappa(r) is unaffected
        if i > N + 1 and (t < 1e-17 * total or i > 10**6):
            break
        i += 1
    terms = np.array(terms)
    rev = np.cumsum(terms[::-1])[::-1]  # rev[j] = sum_{i >= j+1} k_i
    return [float(rev[r]) for r in range(N + 1)]


def finite_optimal(k, N: int) -> BirthDeathChain:
    """Bounded-degree chain whose sphere curvatures dominate a summable ``k_r``.

    ``k`` is a callable ``r -> k_r`` (``r >= 1``) or ``("geometric", q)``
    meaning ``k_r = q**r``.  ``m(0) = 1``, ``w(0,1) = 2 sum_{i>0} k_i`` and for
    ``r >= 1``: ``m(r) = w(r, r-1) / k_{r+1}``, ``w(r, r+1) = 2 m(r) sum_{i>r} k_i``.
    """
    ratio = None
    if isinstance(k, tuple) and k[0] == "geometric":
        q = float(k[1])
        if not 0 < q < 1:
            raise InvalidConstruction("geometric ratio must lie in (0, 1)")
        ratio = q
        k = lambda r, q=q: q**r  # noqa: E731
    tails = _tail_sums(k, N, ratio)
    m = [1.0]
    w_up = [2.0 * tails[0]]
    for r in range(1, N + 1):
        m.append(w_up[r - 1] / k(r + 1))
        if r < N:
            w_up.append(2.0 * m[r] * tails[r])
    if any(not x > 0 or not math.isfinite(x) for x in m + w_up):
        raise InvalidConstruction("construction left the positive reals (try a smaller N)")
    return BirthDeathChain(tuple(w_up), tuple(m))


def positive_curv_infinite(K: float, rates: Sequence[float] | None = None, N: int = 50,
                           m0: float | None = None) -> BirthDeathChain:
    """Chain with ``kappa(r-1, r) = K`` for every truncated step.

    ``rates`` are strictly decreasing ``w(r, r+1)`` for ``r = 0..N`` (``N+1``
    values; the last one only fixes ``m(N)``).  Default ``1/(r+1)``.  The
    root measure defaults to ``2 w(0,1) / K`` and must exceed ``w(0,1) / K``.
    """
    if not K > 0:
        raise InvalidConstruction("K must be positive")
    if rates is None:
        rates = [1.0 / (r + 1) for r in range(N + 1)]
    rates = [float(x) for x in rates]
    N = len(rates) - 1
    if N < 1:
        raise InvalidConstruction("need at least two rates")
    if any(not x > 0 for x in rates):
        raise InvalidConstruction("rates must be positive")
    if any(b >= a for a, b in zip(rates, rates[1:])):
        raise InvalidConstruction("rates must be strictly decreasing")
    if m0 is None:
        m0 = 2.0 * rates[0] / K
    if not m0 > rates[0] / K:
        raise InvalidConstruction("m(0) must exceed w(0,1)/K")
    deg0 = rates[0] / m0
    m = [m0]
    for r in range(1, N + 1):
        mr = (rates[r - 1] - rates[r]) / (K * r - deg0)
        if not mr > 0:
            raise InvalidConstruction(f"m({r}) = {mr} is not positive")
        m.append(mr)
    return BirthDeathChain(tuple(rates[:N]), tuple(m))


def intrinsic_example(eps: float, N: int) -> BirthDeathChain:
    """``m(r) = 2**r``, ``w(r-1, r) = (log r)**(1+eps) * r * 2**r``.

    The formula vanishes at ``r = 1``; the root edge uses ``w(0, 1) = 2``
    (the formula without its log factor) to keep the chain connected.
    """
    if not eps > 0:
        raise InvalidConstruction("eps must be positive")
    if N < 1:
        raise InvalidConstruction("need N >= 1")
    r = np.arange(1, N + 1, dtype=float)
    w_up = np.log(r) ** (1.0 + eps) * r * 2.0**r
    w_up[0] = 2.0
    return BirthDeathChain(tuple(w_up), tuple(2.0 ** np.arange(N + 1, dtype=float)))


GENERATORS = {
    "path": path,
    "cycle": cycle,
    "complete": complete,
    "star": star,
    "hypercube": hypercube,
    "random": random_graph,
    "bdc_from_rates": bdc_from_rates,
    "two_sided_geometric": two_sided_geometric,
    "g_epsilon": g_epsilon,
    "finite_optimal": finite_optimal,
    "positive_curv_infinite": positive_curv_infinite,
    "intrinsic_example": intrinsic_example,
}


def generate(kind: str, **params):
    """Dispatch to a named generator; returns a graph or a birth-death chain."""
    try:
        fn = GENERATORS[kind]
    except KeyError:
        raise InvalidConstruction(f"unknown generator {kind!r}") from None
    return fn(**params)
