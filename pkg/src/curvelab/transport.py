"""Wasserstein-1 distance on the hop-count metric.

The primal transportation problem is solved by successive shortest augmenting
paths with node potentials; the dual (Lipschitz potential) problem by the
dense simplex in :mod:`curvelab.lp`.  Both work on finitely supported
measures only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import NotProbability, SolverFailure
from .graph import WeightedGraph
from .lp import linprog

PROB_TOL = 1e-10
FEAS_TOL = 1e-9
_ZERO = 1e-15


@dataclass(frozen=True)
class FiniteMeasure:
    """Nonnegative mass on finitely many vertices, sorted by vertex index."""

    support: tuple
    mass: tuple

    def __post_init__(self):
        support = tuple(int(v) for v in self.support)
        mass = tuple(float(x) for x in self.mass)
        if len(support) != len(mass):
            raise ValueError("support and mass lengths differ")
        if len(set(support)) != len(support):
            raise ValueError("repeated support vertex")
        if any(x < 0 or not np.isfinite(x) for x in mass):
            raise ValueError("mass must be finite and nonnegative")
        order = sorted(range(len(support)), key=support.__getitem__)
        object.__setattr__(self, "support", tuple(support[i] for i in order))
        object.__setattr__(self, "mass", tuple(mass[i] for i in order))

    @classmethod
    def from_dict(cls, d: Mapping[int, float]) -> "FiniteMeasure":
        """Measure with the positive entries of ``d`` as support."""
        items = [(v, x) for v, x in d.items() if x != 0]
        return cls(tuple(v for v, _ in items), tuple(x for _, x in items))

    @classmethod
    def from_vector(cls, vec, tol: float = 0.0) -> "FiniteMeasure":
        """Measure with the entries of ``vec`` exceeding ``tol`` as support."""
        vec = np.asarray(vec, dtype=float)
        idx = np.nonzero(vec > tol)[0]
        return cls(tuple(int(i) for i in idx), tuple(vec[idx]))

    @classmethod
    def dirac(cls, x: int) -> "FiniteMeasure":
        return cls((x,), (1.0,))

    def total(self) -> float:
        return float(np.sum(self.mass))

    def is_probability(self) -> bool:
        return abs(self.total() - 1.0) <= PROB_TOL

    def to_vector(self, n: int) -> np.ndarray:
        v = np.zeros(n)
        v[list(self.support)] = self.mass
        return v

    def __getitem__(self, x: int) -> float:
        try:
            return self.mass[self.support.index(x)]
        except ValueError:
            return 0.0


@dataclass(frozen=True)
class Coupling:
    """Joint mass ``rho(x, y)`` on ``rows x cols``."""

    rows: tuple
    cols: tuple
    mass: np.ndarray

    def row_sums(self) -> np.ndarray:
        return self.mass.sum(axis=1)

    def col_sums(self) -> np.ndarray:
        return self.mass.sum(axis=0)

    def cost(self, G: WeightedGraph) -> float:
        D = G.distance_matrix[np.ix_(self.rows, self.cols)]
        return float(np.sum(self.mass * D))

    def is_coupling_of(self, mu: FiniteMeasure, nu: FiniteMeasure, tol: float = FEAS_TOL) -> bool:
        rs = dict(zip(self.rows, self.row_sums()))
        cs = dict(zip(self.cols, self.col_sums()))
        verts_r = set(self.rows) | set(mu.support)
        verts_c = set(self.cols) | set(nu.support)
        return (
            bool(np.all(self.mass >= -tol))
            and all(abs(rs.get(v, 0.0) - mu[v]) <= tol for v in verts_r)
            and all(abs(cs.get(v, 0.0) - nu[v]) <= tol for v in verts_c)
        )


def lipschitz_pairs(D: np.ndarray) -> np.ndarray:
    """Index pairs ``(i, j)``, ``i < j``, whose Lipschitz constraint is not implied.

    ``|f_i - f_j| <= D[i, j]`` follows from the constraints along ``i, z, j``
    whenever some other index ``z`` has ``D[i, z] + D[z, j] == D[i, j]``.
    """
    k = D.shape[0]
    if k < 2:
        return np.zeros((0, 2), dtype=int)
    Dz = D.astype(float).copy()
    np.fill_diagonal(Dz, np.inf)
    via = (Dz[:, :, None] + Dz[None, :, :]).min(axis=1)
    keep = np.triu(via > D, k=1)
    return np.argwhere(keep)


def _dijkstra(ra, rb, F, C, pot_s, pot_t, pot_S, pot_T):
    """Shortest path from S to T in the residual network (reduced costs).

    Nodes: S, sources 0..p-1, sinks 0..q-1, T.  Returns distances and parents.
    """
    p, q = C.shape
    inf = np.inf
    ds = np.full(p, inf)
    dt = np.full(q, inf)
    par_s = np.full(p, -1)      # sink index feeding a source (via reverse arc), -2 = from S
    par_t = np.full(q, -1)      # source index feeding a sink
    live = ra > _ZERO
    ds[live] = np.maximum(pot_S - pot_s[live], 0.0)
    par_s[live] = -2
    done_s = np.zeros(p, dtype=bool)
    done_t = np.zeros(q, dtype=bool)
    dT, par_T = inf, -1
    open_t = rb > _ZERO
    while True:
        cs = np.where(done_s, inf, ds)
        ct = np.where(done_t, inf, dt)
        i = int(np.argmin(cs)) if p else 0
        j = int(np.argmin(ct)) if q else 0
        vi = cs[i] if p else inf
        vj = ct[j] if q else inf
        best = min(vi, vj)
        if best == inf or best >= dT:
            break
        if vi <= vj:
            done_s[i] = True
            red = np.maximum(C[i] + pot_s[i] - pot_t, 0.0)
            cand = vi + red
            upd = (~done_t) & (cand < dt)
            dt[upd] = cand[upd]
            par_t[upd] = i
        else:
            done_t[j] = True
            if open_t[j]:
                cand = vj + max(pot_t[j] - pot_T, 0.0)
                if cand < dT:
                    dT, par_T = cand, j
            back = F[:, j] > _ZERO
            red = np.maximum(-C[:, j] + pot_t[j] - pot_s, 0.0)
            cand = vj + red
            upd = back & (~done_s) & (cand < ds)
            ds[upd] = cand[upd]
            par_s[upd] = j
    return ds, dt, dT, par_s, par_t, par_T


def transport_ssp(a, b, C):
    """Min-cost transportation plan from supplies ``a`` to demands ``b``.

    Successive shortest augmenting paths with Johnson potentials.  ``a`` and
    ``b`` must have equal totals; ``C`` must be nonnegative.
    Returns ``(plan, n_augmentations)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    C = np.asarray(C, dtype=float)
    p, q = C.shape
    F = np.zeros((p, q))
    ra, rb = a.copy(), b.copy()
    pot_s, pot_t = np.zeros(p), np.zeros(q)
    pot_S = pot_T = 0.0
    scale = max(a.sum(), 1.0)
    it = 0
    while ra.sum() > 1e-13 * scale and rb.sum() > 1e-13 * scale:
        it += 1
        if it > 50 * (p + q + 1) ** 2:
            raise SolverFailure("augmenting path iteration limit reached")
        ds, dt, dT, par_s, par_t, par_T = _dijkstra(ra, rb, F, C, pot_s, pot_t, pot_S, pot_T)
        if dT == np.inf:
            raise SolverFailure("no augmenting path left")
        pot_s += np.minimum(ds, dT)
        pot_t += np.minimum(dt, dT)
        pot_T += dT
        # walk back T <- sink <- source <- sink ... <- source <- S
        path = []
        j = par_T
        while True:
            i = par_t[j]
            path.append((i, j))
            if par_s[i] == -2:
                break
            j = par_s[i]
        delta = min(ra[path[-1][0]], rb[path[0][1]])
        for k in range(len(path) - 1):
            i = path[k][0]
            jb = path[k + 1][1]
            delta = min(delta, F[i, jb])
        for k, (i, j) in enumerate(path):
            F[i, j] += delta
            if k + 1 < len(path):
                jb = path[k + 1][1]
                F[i, jb] -= delta
                if F[i, jb] < _ZERO * scale:
                    F[i, jb] = 0.0
        ra[path[-1][0]] -= delta
        rb[path[0][1]] -= delta
        ra[ra < _ZERO * scale] = 0.0
        rb[rb < _ZERO * scale] = 0.0
    return F, it


def transport_simplex(a, b, C):
    """Dense-simplex solution of the same transportation problem."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    C = np.asarray(C, dtype=float)
    p, q = C.shape
    A = np.zeros((p + q - 1, p * q))
    for i in range(p):
        A[i, i * q:(i + 1) * q] = 1.0
    for j in range(q - 1):
        A[p + j, j::q] = 1.0
    res = linprog(C.ravel(), A_eq=A, b_eq=np.concatenate([a, b[:-1]]))
    return res.x.reshape(p, q), res.nit


def _check_probability(mu, nu):
    for name, meas in (("mu", mu), ("nu", nu)):
        if not meas.is_probability():
            raise NotProbability(f"{name} has total mass {meas.total()!r}")


def wasserstein(G: WeightedGraph, mu: FiniteMeasure, nu: FiniteMeasure):
    """``W(mu, nu)`` and an optimal coupling on ``supp(mu) x supp(nu)``.

    Mass common to both measures stays in place (optimal for a metric cost);
    the excess ``(mu - nu)+`` is routed to ``(mu - nu)-`` by augmenting paths.
    """
    _check_probability(mu, nu)
    rows, cols = mu.support, nu.support
    union = sorted(set(rows) | set(cols))
    vm = np.array([mu[v] for v in union])
    vn = np.array([nu[v] for v in union])
    diff = vm - vn
    src = [k for k in range(len(union)) if diff[k] > 0]
    snk = [k for k in range(len(union)) if diff[k] < 0]
    a, b = diff[src], -diff[snk]
    # equalize totals exactly so the augmenting loop terminates cleanly
    if a.size and b.size:
        b *= a.sum() / b.sum()
    D = G.distance_matrix
    C = D[np.ix_([union[k] for k in src], [union[k] for k in snk])].astype(float)
    plan = np.zeros((len(src), len(snk)))
    if a.size and b.size:
        plan, _ = transport_ssp(a, b, C)
        if (np.abs(plan.sum(axis=1) - a).max() > FEAS_TOL
                or np.abs(plan.sum(axis=0) - b).max() > FEAS_TOL):
            plan, _ = transport_simplex(a, b, C)
    rho = np.zeros((len(rows), len(cols)))
    ri = {v: k for k, v in enumerate(rows)}
    ci = {v: k for k, v in enumerate(cols)}
    for k, v in enumerate(union):
        if v in ri and v in ci:
            rho[ri[v], ci[v]] = min(vm[k], vn[k])
    for s, k in enumerate(src):
        for t, l in enumerate(snk):
            if plan[s, t]:
                rho[ri[union[k]], ci[union[l]]] += plan[s, t]
    coupling = Coupling(rows, cols, rho)
    return float(np.sum(plan * C)), coupling


def wasserstein_dual(G: WeightedGraph, mu: FiniteMeasure, nu: FiniteMeasure, extra=()):
    """Kantorovich dual: ``sup f (mu - nu)`` over 1-Lipschitz ``f``.

    The potential lives on ``supp(mu) | supp(nu)`` (plus optional ``extra``
    vertices); its value at the smallest such vertex is pinned to 0.
    Returns ``(value, potential)`` with ``potential`` a dict vertex -> value.
    """
    _check_probability(mu, nu)
    U = sorted(set(mu.support) | set(nu.support) | set(int(v) for v in extra))
    if len(U) == 1:
        return 0.0, {U[0]: 0.0}
    D = G.distance_matrix[np.ix_(U, U)].astype(float)
    k = len(U)
    diff = np.array([mu[v] - nu[v] for v in U])
    L = -D[:, 0]                        # 1-Lipschitz, zero at U[0]
    pairs = lipschitz_pairs(D)
    var = np.arange(k) - 1              # U[0] is fixed; others are variables 0..k-2
    rows, rhs = [], []
    for i, j in pairs:
        for s, t in ((i, j), (j, i)):
            # f_s - f_t <= D  <=>  g_s - g_t <= D - L_s + L_t
            r = np.zeros(k - 1)
            if s:
                r[var[s]] += 1.0
            if t:
                r[var[t]] -= 1.0
            if not r.any() or (r <= 0).all():
                continue                # only -g <= nonneg: implied by g >= 0
            rows.append(r)
            rhs.append(D[s, t] - L[s] + L[t])
    res = linprog(-diff[1:], A_ub=np.array(rows).reshape(-1, k - 1), b_ub=np.array(rhs))
    f = np.concatenate([[0.0], res.x + L[1:]])
    return float(diff @ f), dict(zip(U, f))


def duality_gap(G: WeightedGraph, mu: FiniteMeasure, nu: FiniteMeasure) -> float:
    primal, _ = wasserstein(G, mu, nu)
    dual, _ = wasserstein_dual(G, mu, nu)
    return abs(primal - dual)
