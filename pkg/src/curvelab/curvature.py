"""Curvature engines and closed forms.

Four independent routes to ``kappa(x, y)``:

``ollivier_dual``
    LP over 1-Lipschitz potentials on ``B_1(x) | B_1(y)`` minimizing
    ``grad_xy Delta f`` subject to ``f(y) - f(x) = d(x, y)``.
``ollivier_transport``
    LP over couplings on ``B_1(x) x B_1(y)`` whose marginals are prescribed
    only on the unit spheres.
``ollivier_combinatorial``
    Assignment formulation for combinatorial graphs.
``ollivier_bruteforce``
    Exhaustive search over integer-valued Lipschitz potentials.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .assignment import lex_min_assignment
from .errors import (
    EpsTooLarge,
    LpInfeasible,
    NotAdjacent,
    NotCombinatorial,
    ShortCyclePresent,
    TooLarge,
)
from .graph import BirthDeathChain, WeightedGraph, sphere_decomposition
from .lp import linprog
from .transport import Coupling, lipschitz_pairs, wasserstein

BRUTEFORCE_MAX_VERTICES = 20
BRUTEFORCE_MAX_CANDIDATES = 4_000_000

METHODS = ("dual_lp", "transport_lp", "combinatorial", "bruteforce", "bdc_closed_form")


@dataclass(frozen=True)
class CurvatureReport:
    kappa: float
    method: str
    x: int
    y: int
    witness_potential: Optional[Dict[int, float]] = None
    witness_coupling: Optional[Coupling] = None
    solver_stats: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EpsCurvature:
    eps: float
    kappa_eps: float

    @property
    def normalized(self) -> float:
        return self.kappa_eps / self.eps


def _check_pair(G: WeightedGraph, x: int, y: int):
    if not (0 <= x < G.n and 0 <= y < G.n):
        raise IndexError(f"vertex pair ({x}, {y}) outside 0..{G.n - 1}")
    if x == y:
        raise ValueError("curvature needs two distinct vertices")


def _ball_union(G, x, y):
    D = G.distance_matrix
    return np.nonzero((D[x] <= 1) | (D[y] <= 1))[0]


def grad_laplacian(G: WeightedGraph, f: Dict[int, float], x: int, y: int) -> float:
    """``(Delta f(x) - Delta f(y)) / d(x, y)`` for ``f`` given on the unit balls."""
    def lap(v):
        return sum(G.w[v, z] * (f[z] - f[v]) for z in G.neighbors(v)) / G.m[v]
    return (lap(x) - lap(y)) / G.distance_matrix[x, y]


# ---------------------------------------------------------------- dual LP

def ollivier_dual(G: WeightedGraph, x: int, y: int) -> CurvatureReport:
    """``kappa(x, y)`` as the minimum of ``grad_xy Delta f`` over Lipschitz ``f``.

    The potential lives on ``U = B_1(x) | B_1(y)`` with ``f(x) = 0`` and
    ``f(y) = d(x, y)``.  Free values are shifted by the Lipschitz function
    ``L = max(-d(., x), d0 - d(., y))`` so the slack basis is feasible.
    Pairwise constraints implied by the triangle inequality inside ``U`` are
    dropped.
    """
    _check_pair(G, x, y)
    U = _ball_union(G, x, y)
    D = G.distance_matrix[np.ix_(U, U)].astype(float)
    ix = int(np.searchsorted(U, x))
    iy = int(np.searchsorted(U, y))
    d0 = D[ix, iy]
    k = U.size
    L = np.maximum(-D[:, ix], d0 - D[:, iy])
    fixed = np.zeros(k, dtype=bool)
    fixed[[ix, iy]] = True
    fval = np.zeros(k)
    fval[iy] = d0
    L[ix], L[iy] = 0.0, d0
    free = np.nonzero(~fixed)[0]
    col = -np.ones(k, dtype=int)
    col[free] = np.arange(free.size)

    # with f(x) = 0: grad_xy Delta f = a @ f + Deg(y), a_z = (w(x,z)/m(x) - w(y,z)/m(y)) / d0
    a = (G.w[x, U] / G.m[x] - G.w[y, U] / G.m[y]) / d0

    n_var = free.size
    rows, rhs = [], []
    if n_var:
        for i, j in lipschitz_pairs(D):
            for s, t in ((i, j), (j, i)):
                if fixed[s] and fixed[t]:
                    continue
                if fixed[s]:
                    continue    # -g_t <= ... is implied by g_t >= 0 (see docstring)
                r = np.zeros(n_var)
                r[col[s]] = 1.0
                if fixed[t]:
                    rhs.append(fval[t] + D[s, t] - L[s])
                else:
                    r[col[t]] = -1.0
                    rhs.append(D[s, t] - L[s] + L[t])
                rows.append(r)
        c = a[free]
        try:
            res = linprog(c, A_ub=np.array(rows).reshape(-1, n_var), b_ub=np.array(rhs))
        except LpInfeasible as exc:
            raise LpInfeasible(f"dual LP infeasible for ({x}, {y}); this is a solver bug") from exc
        g = res.x
        nit = res.nit
    else:
        g = np.zeros(0)
        nit = 0
    f = fval.copy()
    f[free] = g + L[free]
    kappa = float(a @ f + G.deg[y])
    pot = {int(U[i]): float(f[i]) for i in range(k)}
    return CurvatureReport(
        kappa, "dual_lp", x, y, witness_potential=pot,
        solver_stats={"iterations": nit, "variables": n_var, "constraints": len(rows)},
    )


# ----------------------------------------------------------- transport LP

def ollivier_transport(G: WeightedGraph, x0: int, y0: int) -> CurvatureReport:
    """``kappa = sup sum rho(x, y) (1 - d(x, y) / d0)`` over sphere-marginal couplings.

    Rows of ``rho`` over ``x in S_1(x0)`` sum to ``w(x0, x) / m(x0)``, columns
    over ``y in S_1(y0)`` to ``w(y0, y) / m(y0)``; the row of ``x0`` and the
    column of ``y0`` are unconstrained.  Those entries are eliminated as
    slacks (``rho(x0, y0)`` has zero profit and is set to 0), leaving an LP
    over ``S_1(x0) x S_1(y0)`` with ``<=`` marginals.
    """
    _check_pair(G, x0, y0)
    D = G.distance_matrix
    d0 = float(D[x0, y0])
    X = np.array(G.neighbors(x0), dtype=int)
    Y = np.array(G.neighbors(y0), dtype=int)
    a = G.w[x0, X] / G.m[x0]
    b = G.w[y0, Y] / G.m[y0]
    profit = lambda R, C: 1.0 - D[np.ix_(R, C)] / d0  # noqa: E731
    cXY = profit(X, Y)
    cXy0 = profit(X, [y0])[:, 0]
    cx0Y = profit([x0], Y)[0]
    p, q = X.size, Y.size
    red = cXY - cXy0[:, None] - cx0Y[None, :]
    const = float(a @ cXy0 + b @ cx0Y)
    A = np.zeros((p + q, p * q))
    for i in range(p):
        A[i, i * q:(i + 1) * q] = 1.0
    for j in range(q):
        A[p + j, j::q] = 1.0
    res = linprog(-red.ravel(), A_ub=A, b_ub=np.concatenate([a, b]))
    rho_in = res.x.reshape(p, q)
    kappa = float(const + np.sum(red * rho_in))

    rows = tuple(G.ball(x0))
    cols = tuple(G.ball(y0))
    ri = {v: i for i, v in enumerate(rows)}
    ci = {v: j for j, v in enumerate(cols)}
    rho = np.zeros((len(rows), len(cols)))
    for i, u in enumerate(X):
        for j, v in enumerate(Y):
            rho[ri[u], ci[v]] += rho_in[i, j]
        rho[ri[u], ci[y0]] += max(a[i] - rho_in[i].sum(), 0.0)
    for j, v in enumerate(Y):
        rho[ri[x0], ci[v]] += max(b[j] - rho_in[:, j].sum(), 0.0)
    return CurvatureReport(
        kappa, "transport_lp", x0, y0, witness_coupling=Coupling(rows, cols, rho),
        solver_stats={"iterations": res.nit, "variables": p * q, "constraints": p + q},
    )


def transport_objective(G: WeightedGraph, coupling: Coupling, x0: int, y0: int) -> float:
    D = G.distance_matrix[np.ix_(coupling.rows, coupling.cols)]
    return float(np.sum(coupling.mass * (1.0 - D / G.distance_matrix[x0, y0])))


def sphere_marginal_residual(G: WeightedGraph, coupling: Coupling, x0: int, y0: int) -> float:
    """Largest violation of the sphere-marginal constraints (and of ``rho >= 0``)."""
    rs = dict(zip(coupling.rows, coupling.row_sums()))
    cs = dict(zip(coupling.cols, coupling.col_sums()))
    err = max(0.0, -float(coupling.mass.min(initial=0.0)))
    for x in G.neighbors(x0):
        err = max(err, abs(rs.get(x, 0.0) - G.w[x0, x] / G.m[x0]))
    for y in G.neighbors(y0):
        err = max(err, abs(cs.get(y, 0.0) - G.w[y0, y] / G.m[y0]))
    return err


# ------------------------------------------------------- combinatorial

def _require_combinatorial(G, x0, y0):
    if not G.is_combinatorial:
        raise NotCombinatorial("graph must have unit weights and unit measure")
    if not G.adjacent(x0, y0):
        raise NotAdjacent(f"vertices {x0} and {y0} are not adjacent")


def ollivier_combinatorial(G: WeightedGraph, x0: int, y0: int) -> CurvatureReport:
    """Integer curvature from a min-cost partial bijection between ball sides.

    ``kappa = #B_{x0y0} - min(#unmatched + sum over matched (d(x, phi x) - 1))``
    with ``B_{x0y0} = B_1(x0) & B_1(y0)``.  Solved as a square assignment with
    a dummy partner (cost 1) for every vertex; the lexicographically smallest
    optimal matching is returned as a 0/1 coupling witness.
    """
    _check_pair(G, x0, y0)
    _require_combinatorial(G, x0, y0)
    D = G.distance_matrix
    b1x, b1y = set(G.ball(x0)), set(G.ball(y0))
    common = sorted(b1x & b1y)
    A = sorted(b1x - b1y)
    B = sorted(b1y - b1x)
    p, q = len(A), len(B)
    n = p + q
    cost = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i < p and j < q:
                cost[i][j] = int(D[A[i], B[j]]) - 1
            elif i < p or j < q:
                cost[i][j] = 1 if (i < p) != (j < q) else 0
            # dummy row x dummy column costs 0
    assign, total = lex_min_assignment(cost)
    kappa = len(common) - total

    rows, cols = tuple(sorted(b1x)), tuple(sorted(b1y))
    ri = {v: i for i, v in enumerate(rows)}
    ci = {v: j for j, v in enumerate(cols)}
    rho = np.zeros((len(rows), len(cols)))
    for z in common:
        rho[ri[z], ci[z]] = 1.0
    matched_cols = set()
    for i in range(p):
        j = assign[i]
        if j < q:
            rho[ri[A[i]], ci[B[j]]] = 1.0
            matched_cols.add(j)
        else:
            rho[ri[A[i]], ci[y0]] = 1.0
    for j in range(q):
        if j not in matched_cols:
            rho[ri[x0], ci[B[j]]] = 1.0
    matching = {A[i]: B[assign[i]] for i in range(p) if assign[i] < q}
    return CurvatureReport(
        float(kappa), "combinatorial", x0, y0,
        witness_coupling=Coupling(rows, cols, rho),
        solver_stats={"assignment_size": n, "matching": matching, "cost": total},
    )


# ------------------------------------------------------------ brute force

def ollivier_bruteforce(G: WeightedGraph, x0: int, y0: int) -> CurvatureReport:
    """Exact minimum of ``grad_{x0y0} Delta f`` over integer Lipschitz potentials.

    ``f(x0) = 0`` and ``f(y0) = d0``; every other value ranges over the
    integers allowed by the Lipschitz constraints to ``x0`` and ``y0``,
    intersected with ``[-D, D]`` (``D`` the diameter of the ball union).
    Candidates are grown one vertex at a time and pruned against all
    previously assigned vertices.
    """
    _check_pair(G, x0, y0)
    if not G.is_combinatorial:
        raise NotCombinatorial("brute force needs a combinatorial graph")
    U = _ball_union(G, x0, y0)
    if U.size > BRUTEFORCE_MAX_VERTICES:
        raise TooLarge(f"ball union has {U.size} vertices (limit {BRUTEFORCE_MAX_VERTICES})")
    Dfull = G.distance_matrix
    D = Dfull[np.ix_(U, U)]
    ix = int(np.searchsorted(U, x0))
    iy = int(np.searchsorted(U, y0))
    d0 = int(D[ix, iy])
    diam = int(D.max())
    lo = np.maximum(np.maximum(-D[:, ix], d0 - D[:, iy]), -diam)
    hi = np.minimum(np.minimum(D[:, ix], d0 + D[:, iy]), diam)
    lo[ix] = hi[ix] = 0
    lo[iy] = hi[iy] = d0
    # greedy order: next the vertex with the tightest links (d = 1) to those placed
    order = [ix, iy]
    rest = [i for i in range(U.size) if i not in (ix, iy)]
    while rest:
        links = [int((D[i, order] == 1).sum()) for i in rest]
        k = min(range(len(rest)), key=lambda j: (-links[j], hi[rest[j]] - lo[rest[j]], rest[j]))
        order.append(rest.pop(k))
    cand = np.array([[0, d0]], dtype=np.int8)
    for pos in range(2, len(order)):
        v = order[pos]
        vals = np.arange(lo[v], hi[v] + 1, dtype=np.int8)
        grown = np.repeat(cand, vals.size, axis=0)
        newcol = np.tile(vals, cand.shape[0])
        ok = np.ones(newcol.size, dtype=bool)
        for k, u in enumerate(order[:pos]):
            # skip pairs whose value ranges can never violate the constraint
            if max(hi[v] - lo[u], hi[u] - lo[v]) > D[v, u]:
                ok &= np.abs(grown[:, k] - newcol) <= D[v, u]
        cand = np.empty((int(ok.sum()), pos + 1), dtype=np.int8)
        cand[:, :pos] = grown[ok]
        cand[:, pos] = newcol[ok]
        if cand.shape[0] > BRUTEFORCE_MAX_CANDIDATES:
            raise TooLarge("integer enumeration exceeded the candidate limit")
    verts = U[order]
    # grad Delta f = sum_z a_z f(z) + Deg(y0) with f(x0) = 0
    a = (G.w[x0, verts] - G.w[y0, verts]) / d0
    vals = cand.astype(float) @ a + G.deg[y0]
    best = int(np.argmin(vals))
    kappa_raw = float(vals[best])
    kappa = float(round(kappa_raw))
    pot = {int(verts[i]): float(cand[best, i]) for i in range(len(order))}
    pot = dict(sorted(pot.items()))
    return CurvatureReport(
        kappa, "bruteforce", x0, y0, witness_potential=pot,
        solver_stats={"candidates": int(cand.shape[0]), "raw": kappa_raw},
    )


# ---------------------------------------------------------- eps family

def ollivier_eps(G: WeightedGraph, x: int, y: int, eps: float) -> EpsCurvature:
    """``kappa_eps = 1 - W(m_x^eps, m_y^eps) / d(x, y)``."""
    from .heat import markov_kernel

    _check_pair(G, x, y)
    bound = 1.0 / max(G.deg[x], G.deg[y])
    if not 0 < eps <= bound * (1 + 1e-12):
        raise EpsTooLarge(f"eps must lie in (0, {bound!r}]")
    mx = markov_kernel(G, x, eps)
    my = markov_kernel(G, y, eps)
    W, _ = wasserstein(G, mx, my)
    return EpsCurvature(float(eps), 1.0 - W / float(G.distance_matrix[x, y]))


# -------------------------------------------------------- closed forms

def _shortest_cycle_through_edge(G, x, y, limit):
    """Length of the shortest cycle through edge ``xy`` if it is ``<= limit``."""
    dist = {x: 0}
    frontier = [x]
    for step in range(1, limit):
        nxt = []
        for u in frontier:
            for v in G.neighbors(u):
                if u == x and v == y:
                    continue
                if v == y:
                    return step + 1
                if v not in dist:
                    dist[v] = step
                    nxt.append(v)
        frontier = nxt
    return None


def no_cycle_formula(G: WeightedGraph, x: int, y: int) -> float:
    """``2 w(x,y) (1/m(x) + 1/m(y)) - Deg(x) - Deg(y)`` for edges on no short cycle.

    Raises :class:`ShortCyclePresent` if ``xy`` lies on a 3-, 4- or 5-cycle.
    """
    _check_pair(G, x, y)
    if not G.adjacent(x, y):
        raise NotAdjacent(f"vertices {x} and {y} are not adjacent")
    L = _shortest_cycle_through_edge(G, x, y, 5)
    if L is not None:
        raise ShortCyclePresent(f"edge ({x}, {y}) lies on a {L}-cycle")
    w = G.w[x, y]
    return float(2 * w * (1 / G.m[x] + 1 / G.m[y]) - G.deg[x] - G.deg[y])


def bdc_curvature(chain: BirthDeathChain, r: int, R: int) -> float:
    """Closed-form ``kappa(r, R)`` on a birth-death chain, ``r < R``."""
    if not 0 <= r < R:
        raise ValueError("need 0 <= r < R")
    return float(chain.lap_distance(r) / (R - r) - chain.lap_distance(R) / (R - r))


def bdc_average_identity(chain: BirthDeathChain, r: int):
    """``(kappa(0, r), mean of kappa(n, n+1) over n < r)``."""
    lhs = bdc_curvature(chain, 0, r)
    steps = [bdc_curvature(chain, n, n + 1) for n in range(r)]
    return lhs, float(math.fsum(steps) / r)


def bdc_sphere_curvatures(chain: BirthDeathChain, R: int | None = None) -> list:
    """``[kappa(1), ..., kappa(R)]`` for the chain rooted at 0 (``kappa(r-1, r)``)."""
    if R is None:
        R = chain.N if chain.closed else chain.N - 1
    return [bdc_curvature(chain, r - 1, r) for r in range(1, R + 1)]


# ------------------------------------------------------- sphere curvature

ENGINES = {
    "dual_lp": ollivier_dual,
    "transport_lp": ollivier_transport,
    "combinatorial": ollivier_combinatorial,
    "bruteforce": ollivier_bruteforce,
}


def curvature(G: WeightedGraph, x: int, y: int, method: str = "dual_lp") -> CurvatureReport:
    try:
        engine = ENGINES[method]
    except KeyError:
        raise ValueError(f"unknown curvature method {method!r}") from None
    return engine(G, x, y)


def sphere_curvatures(G: WeightedGraph, x0: int, R: int | None = None, cache: dict | None = None) -> list:
    """``[kappa(1), ..., kappa(R)]`` around ``x0``; ``R`` defaults to the eccentricity.

    ``cache`` maps sorted vertex pairs to curvature values and may be shared
    between roots of the same graph.
    """
    sd = sphere_decomposition(G, x0)
    if R is None:
        R = sd.eccentricity
    if cache is None:
        cache = {}
    out = []
    for r in range(1, R + 1):
        best = np.inf
        for yv in sd.spheres[r]:
            inner = [xv for xv in G.neighbors(yv) if sd.dist[xv] == r - 1]
            vals = []
            for xv in inner:
                key = (min(xv, yv), max(xv, yv))
                if key not in cache:
                    cache[key] = ollivier_dual(G, xv, yv).kappa
                vals.append(cache[key])
            best = min(best, max(vals))
        out.append(float(best))
    return out


def sphere_curvature(G: WeightedGraph, x0: int, r: int) -> float:
    """``kappa(r) = min_{y in S_r} max_{x in S_{r-1}, x ~ y} kappa(x, y)``."""
    sd = sphere_decomposition(G, x0)
    if not 1 <= r <= sd.eccentricity:
        raise ValueError(f"radius {r} outside 1..{sd.eccentricity}")
    return sphere_curvatures(G, x0, r)[-1]


def edge_curvatures(G: WeightedGraph, method: str = "dual_lp") -> dict:
    """``{(u, v): kappa(u, v)}`` over all edges ``u < v`` in canonical order."""
    return {(u, v): curvature(G, u, v, method).kappa for (u, v) in G.edges}


def ric_lower_bound(G: WeightedGraph) -> float:
    """``min kappa(x, y)`` over adjacent pairs (which suffices for ``Ric >= K``)."""
    return float(min(edge_curvatures(G).values()))


# ------------------------------------------------------ intrinsic metric

def _sigma_steps(chain: BirthDeathChain, upto: int):
    return [chain.deg_plus(k) ** -0.5 for k in range(upto)]


def verify_intrinsic(chain: BirthDeathChain, k: int) -> bool:
    """``sum_y w(k, y) sigma(k, y)**2 <= 2 m(k)`` at vertex ``k``."""
    s = _sigma_steps(chain, k + 1)
    total = chain.up(k) * s[k] ** 2
    if k > 0:
        total += chain.down(k) * s[k - 1] ** 2
    return bool(total <= 2 * chain.m[k] * (1 + 1e-12))


def intrinsic_curvature_bdc(chain: BirthDeathChain, r: int):
    """``(sigma(0, r), kappa_sigma(r, r+1))`` for the intrinsic path metric.

    ``sigma(k, k+1) = Deg_+(k)**-0.5`` and
    ``kappa_sigma(r, r+1) = (Delta s(r) - Delta s(r+1)) / sigma(r, r+1)`` with
    ``s = sigma(0, .)``.  A warning is issued if the intrinsic condition fails
    at ``r`` or ``r + 1``.
    """
    if not 0 <= r:
        raise ValueError("r must be nonnegative")
    chain.up(r + 1)  # raises TruncationExceeded unless r <= N-2
    steps = _sigma_steps(chain, r + 2)
    sig = np.concatenate([[0.0], np.cumsum(steps)])  # sig[k] = sigma(0, k)

    def lap(k):
        out = chain.up(k) * (sig[k + 1] - sig[k])
        if k > 0:
            out += chain.down(k) * (sig[k - 1] - sig[k])
        return out / chain.m[k]

    for k in (r, r + 1):
        if not verify_intrinsic(chain, k):
            warnings.warn(f"intrinsic condition fails at vertex {k}", stacklevel=2)
    return float(sig[r]), float((lap(r) - lap(r + 1)) / steps[r])
