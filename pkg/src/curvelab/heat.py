"""Heat semigroup, Dirichlet and cutoff semigroups, and the gradient checks.

On a finite graph ``P_t = exp(t Delta)``.  We diagonalize the symmetric
conjugate ``M^{1/2} Delta M^{-1/2}`` once per graph, after which every
``P_t`` is a couple of dense products.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .curvature import ollivier_dual, ric_lower_bound
from .errors import (
    CurvaturePreconditionFailed,
    EigenFailure,
    EmptySubset,
    EpsTooLarge,
    NegativePhi,
    NegativeTime,
)
from .graph import WeightedGraph, laplacian_apply
from .transport import FiniteMeasure, wasserstein

CHECK_TOL = 1e-8
PRECONDITION_TOL = 1e-9


def _sym_eigh(S):
    try:
        lam, U = scipy.linalg.eigh(S)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenFailure(str(exc)) from exc
    if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(U))):
        raise EigenFailure("non-finite spectral data")
    return np.minimum(lam, 0.0), U


class HeatPropagator:
    """Spectral data of ``Delta`` for repeated evaluation of ``P_t``."""

    def __init__(self, G: WeightedGraph):
        self.graph = G
        self.sqrt_m = np.sqrt(G.m)
        S = self.sqrt_m[:, None] * G.laplacian_matrix / self.sqrt_m[None, :]
        S = 0.5 * (S + S.T)
        self.eigenvalues, self.eigenvectors = _sym_eigh(S)

    def apply(self, t: float, f) -> np.ndarray:
        if t < 0:
            raise NegativeTime(f"t = {t} is negative")
        f = np.asarray(f, dtype=float)
        U = self.eigenvectors
        coef = U.T @ (self.sqrt_m * f)
        return (U @ (np.exp(t * self.eigenvalues) * coef)) / self.sqrt_m

    def matrix(self, t: float) -> np.ndarray:
        """``P_t`` as a matrix: ``(P_t f)(x) = sum_y P[x, y] f(y)``."""
        if t < 0:
            raise NegativeTime(f"t = {t} is negative")
        U = self.eigenvectors
        core = (U * np.exp(t * self.eigenvalues)) @ U.T
        return core / self.sqrt_m[:, None] * self.sqrt_m[None, :]


def propagator(G: WeightedGraph) -> HeatPropagator:
    return HeatPropagator(G)


def semigroup_apply(P: HeatPropagator, t: float, f) -> np.ndarray:
    return P.apply(t, f)


def heat_kernel(P: HeatPropagator, t: float, x: int) -> FiniteMeasure:
    """``p_t^x(y) = P_t 1_y(x)``.  Round-off negatives are clipped to zero."""
    if t < 0:
        raise NegativeTime(f"t = {t} is negative")
    if t == 0:
        return FiniteMeasure.dirac(x)
    row = P.matrix(t)[x]
    return FiniteMeasure.from_vector(np.maximum(row, 0.0))


def markov_kernel(G: WeightedGraph, x: int, eps: float) -> FiniteMeasure:
    """``m_x^eps = 1_x + eps * Delta 1_.(x)``: stay with ``1 - eps Deg(x)``."""
    if not eps > 0 or eps * G.deg[x] > 1.0 + 1e-12:
        raise EpsTooLarge(f"eps must lie in (0, 1/Deg({x})] = (0, {1.0 / G.deg[x]!r}]")
    nbrs = G.neighbors(x)
    out = {y: eps * G.w[x, y] / G.m[x] for y in nbrs}
    out[x] = max(1.0 - sum(out.values()), 0.0)
    return FiniteMeasure.from_dict(out)


# ------------------------------------------------------------- Dirichlet

def dirichlet_semigroup(G: WeightedGraph, W, t: float, f) -> np.ndarray:
    """``exp(t Delta_W) f`` with ``Delta_W g = 1_W Delta (1_W g)``; zero off ``W``."""
    W = np.array(sorted(set(int(v) for v in W)), dtype=int)
    if W.size == 0:
        raise EmptySubset("W must be nonempty")
    if t < 0:
        raise NegativeTime(f"t = {t} is negative")
    f = np.asarray(f, dtype=float)
    outside = np.ones(G.n, dtype=bool)
    outside[W] = False
    if np.any(f[outside] != 0):
        raise ValueError("f must vanish outside W")
    sm = np.sqrt(G.m[W])
    S = sm[:, None] * G.laplacian_matrix[np.ix_(W, W)] / sm[None, :]
    lam, U = _sym_eigh(0.5 * (S + S.T))
    out = np.zeros(G.n)
    out[W] = (U @ (np.exp(t * lam) * (U.T @ (sm * f[W])))) / sm
    return out


# ---------------------------------------------------------------- cutoff

@dataclass(frozen=True)
class CutoffState:
    phi: np.ndarray
    f: np.ndarray
    t: float
    n_steps: int
    values: np.ndarray
    converged: bool = True
    extrapolation_delta: float = 0.0


def _cutoff_inputs(phi, f):
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 0):
        raise NegativePhi("cutoff function must be nonnegative")
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("initial datum must be nonnegative")
    return phi, np.minimum(f, phi)


def _q_power(Pm, phi, f, n):
    v = f.copy()
    for _ in range(n):
        np.minimum(Pm @ v, phi, out=v)
    return v


def cutoff_semigroup(G: WeightedGraph, phi, t: float, f, n_steps: int, P: HeatPropagator | None = None) -> CutoffState:
    """``(Q_{t/n})^n (f ^ phi)`` with ``Q_s g = P_s g ^ phi`` on a uniform partition."""
    if t < 0:
        raise NegativeTime(f"t = {t} is negative")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    phi, f = _cutoff_inputs(phi, f)
    P = P or propagator(G)
    vals = _q_power(P.matrix(t / n_steps), phi, f, n_steps)
    return CutoffState(phi, f, float(t), int(n_steps), vals)


def cutoff_limit(G: WeightedGraph, phi, t: float, f, *, tol: float = 1e-8, max_log2: int = 18,
                 min_log2: int = 8, P: HeatPropagator | None = None) -> CutoffState:
    """Approximate ``P_t^phi f`` by refining uniform partitions.

    ``n = 1, 2, 4, ...``; each doubling forms the first-order extrapolation
    ``2 v(2n) - v(n)``.  Stops once three successive extrapolations agree to
    ``tol`` in sup norm and ``n >= 2**min_log2``, or at ``n = 2**max_log2``.
    The floor matters: while the cap only binds between coarse grid times the
    sequence is flat and would look converged.  The result is clipped to
    ``[0, phi]``.
    """
    if t < 0:
        raise NegativeTime(f"t = {t} is negative")
    phi, f = _cutoff_inputs(phi, f)
    if t == 0:
        return CutoffState(phi, f, 0.0, 1, f.copy())
    P = P or propagator(G)
    prev_v = _q_power(P.matrix(t), phi, f, 1)
    prev_x = None
    delta = last = np.inf
    for k in range(1, max_log2 + 1):
        n = 1 << k
        v = _q_power(P.matrix(t / n), phi, f, n)
        x = 2.0 * v - prev_v
        if prev_x is not None:
            last, delta = delta, float(np.abs(x - prev_x).max())
            if k >= min_log2 and max(delta, last) <= tol:
                break
        prev_v, prev_x = v, x
    vals = np.clip(x, 0.0, phi)
    return CutoffState(phi, f, float(t), n, vals, converged=delta <= tol, extrapolation_delta=delta)


@dataclass
class SuiteReport:
    """Named checks with their observed defect, tolerance and verdict."""

    checks: list = field(default_factory=list)

    def add(self, name, defect, tol):
        self.checks.append({"name": name, "defect": float(defect), "tol": float(tol),
                            "passed": bool(defect <= tol)})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def failures(self) -> list:
        return [c["name"] for c in self.checks if not c["passed"]]

    def by_name(self, name):
        return [c for c in self.checks if c["name"].startswith(name)]


def _mnorm1(G, v):
    return float(np.sum(G.m * np.abs(v)))


def cutoff_property_suite(G: WeightedGraph, phi, f, g, s: float, t: float, *,
                          W=None, refine=(1, 2, 4, 8, 16, 32, 64), seed=0) -> SuiteReport:
    """Numerical checks of the cutoff semigroup properties.

    Limits use :func:`cutoff_limit`.  Contraction, the sandwich and
    monotonicity in ``(phi, f)`` are also checked on raw partitions, where
    they hold exactly.  Derivative properties use one-sided differences with
    step ``1e-4`` and tolerance ``1e-3``.  If ``W`` is given, the Dirichlet
    identity is checked with cutoff ``1_W`` and datum ``f 1_W``, rescaled to
    stay below 1.
    """
    P = propagator(G)
    phi, f = _cutoff_inputs(phi, f)
    _, g = _cutoff_inputs(phi, g)
    rep = SuiteReport()
    lim = lambda tt, ff, pp=phi: cutoff_limit(G, pp, tt, ff, P=P).values  # noqa: E731

    # (i) semigroup property
    Ps = lim(s, f)
    rep.add("i_semigroup", np.abs(lim(t, Ps) - lim(s + t, f)).max(), 1e-6)
    # (ii) contraction in sup and (m-weighted) 1-norm
    Pf, Pg = lim(t, f), lim(t, g)
    rep.add("ii_contraction_sup", np.abs(Pf - Pg).max() - np.abs(f - g).max(), CHECK_TOL)
    rep.add("ii_contraction_l1", _mnorm1(G, Pf - Pg) - _mnorm1(G, f - g), CHECK_TOL)
    for n in refine:
        vf = cutoff_semigroup(G, phi, t, f, n, P).values
        vg = cutoff_semigroup(G, phi, t, g, n, P).values
        rep.add(f"ii_contraction_sup_n{n}", np.abs(vf - vg).max() - np.abs(f - g).max(), CHECK_TOL)
        rep.add(f"ii_contraction_l1_n{n}", _mnorm1(G, vf - vg) - _mnorm1(G, f - g), CHECK_TOL)
    # (iii) identity at t = 0
    rep.add("iii_identity", np.abs(lim(0.0, f) - f).max(), 1e-12)
    # (iv) monotonicity: phi >= psi >= f' >= g'
    rng = np.random.default_rng(seed)
    psi = phi * rng.uniform(0.5, 1.0, size=G.n)
    f2 = np.minimum(f, psi)
    g2 = f2 * rng.uniform(0.0, 1.0, size=G.n)
    rep.add("iv_monotone", np.max(lim(t, g2, psi) - lim(t, f2, phi)), CHECK_TOL)
    for n in refine:
        hi = cutoff_semigroup(G, phi, t, f2, n, P).values
        lo = cutoff_semigroup(G, psi, t, g2, n, P).values
        rep.add(f"iv_monotone_n{n}", np.max(lo - hi), 1e-12)
    # (v) sandwich
    low = np.exp(-t * G.deg) * f
    up = P.apply(t, f)
    rep.add("v_sandwich_lower", np.max(low - Pf), CHECK_TOL)
    rep.add("v_sandwich_upper", np.max(Pf - up), CHECK_TOL)
    for n in refine:
        v = cutoff_semigroup(G, phi, t, f, n, P).values
        rep.add(f"v_sandwich_n{n}", max(np.max(low - v), np.max(v - up)), 1e-12)
    # refinement: doubling never increases the composition
    prev = None
    for n in refine:
        v = cutoff_semigroup(G, phi, t, f, n, P).values
        if prev is not None and n == 2 * prev[0]:
            rep.add(f"refine_n{n}", np.max(v - prev[1]), 1e-12)
        prev = (n, v)
    # (vi)-(viii) by one-sided differences
    h = 1e-4
    Pfh = lim(t + h, f)
    lap = laplacian_apply(G, Pf)
    dt = (Pfh - Pf) / h
    lip = 2.0 * float(G.deg.max()) * float(phi.max(initial=0.0))
    rep.add("vi_lipschitz", np.abs(dt).max() - lip, 1e-3)
    rep.add("vii_upper_derivative", np.max(dt - lap), 1e-3)
    free = Pf < phi - 1e-3
    rep.add("viii_heat_equation", np.abs(dt - lap)[free].max(initial=0.0), 1e-3)
    # (ix) Dirichlet identity
    if W is not None:
        W = sorted(set(int(v) for v in W))
        ind = np.zeros(G.n)
        ind[W] = 1.0
        fw = f * ind
        if fw.max(initial=0.0) >= 1.0:
            fw = fw / (fw.max() + 1.0)
        rep.add("ix_dirichlet", np.abs(lim(t, fw, ind) - dirichlet_semigroup(G, W, t, fw)).max(), 1e-6)
    return rep


# --------------------------------------------------------- gradient checks

def gradient_norm(G: WeightedGraph, g) -> float:
    """``max_{x ~ y} |g(x) - g(y)|``."""
    g = np.asarray(g, dtype=float)
    if not G.edges:
        return 0.0
    e = np.array(G.edges)
    return float(np.abs(g[e[:, 0]] - g[e[:, 1]]).max())


def _require_ric(G, K, ric):
    if ric is None:
        ric = ric_lower_bound(G)
    if K > ric + PRECONDITION_TOL:
        raise CurvaturePreconditionFailed(f"K = {K} exceeds the curvature lower bound {ric}")
    return ric


@dataclass(frozen=True)
class DecayReport:
    K: float
    rows: tuple     # (t, observed, bound, holds)

    @property
    def passed(self) -> bool:
        return all(r[3] for r in self.rows)


def gradient_decay_check(G: WeightedGraph, f, K: float, times, *, ric: float | None = None,
                         P: HeatPropagator | None = None, tol: float = CHECK_TOL) -> DecayReport:
    """``||grad P_t f|| <= exp(-K t) ||grad f||`` for each ``t``."""
    _require_ric(G, K, ric)
    P = P or propagator(G)
    g0 = gradient_norm(G, f)
    rows = []
    for t in times:
        obs = gradient_norm(G, P.apply(t, f))
        bound = np.exp(-K * t) * g0
        rows.append((float(t), obs, float(bound), bool(obs <= bound + tol)))
    return DecayReport(float(K), tuple(rows))


def kernel_contraction_check(G: WeightedGraph, x: int, y: int, K: float, times, *,
                             ric: float | None = None, P: HeatPropagator | None = None,
                             tol: float = CHECK_TOL) -> DecayReport:
    """``W(p_t^x, p_t^y) <= exp(-K t) d(x, y)`` for each ``t``."""
    _require_ric(G, K, ric)
    P = P or propagator(G)
    d = float(G.distance_matrix[x, y])
    rows = []
    for t in times:
        Wt, _ = wasserstein(G, heat_kernel(P, t, x), heat_kernel(P, t, y))
        bound = np.exp(-K * t) * d
        rows.append((float(t), Wt, float(bound), bool(Wt <= bound + tol)))
    return DecayReport(float(K), tuple(rows))


def richardson(values, ratio: float = 2.0, levels: int | None = None):
    """Repeated Richardson elimination for ``v(t) = v0 + c1 t + c2 t^2 + ...``.

    ``values`` are taken at ``t, t / ratio, t / ratio**2, ...``.  Returns the
    most refined entry of the table.
    """
    row = list(values)
    if levels is None:
        levels = len(row) - 1
    for j in range(1, levels + 1):
        fac = ratio**j
        row = [(fac * b - a) / (fac - 1) for a, b in zip(row, row[1:])]
    return row[-1]


@dataclass(frozen=True)
class RecoveryReport:
    times: tuple
    estimates: tuple
    limit: float
    kappa_ref: float
    wpm_ratios: tuple       # (t, W(p_x^t, m_x^t) / t^2) for admissible t
    order: float

    @property
    def error(self) -> float:
        return abs(self.limit - self.kappa_ref)

    @property
    def wpm_max(self) -> float:
        return max((r for _, r in self.wpm_ratios), default=0.0)


def curvature_recovery(G: WeightedGraph, x: int, y: int, times=None, *, levels: int = 2,
                       P: HeatPropagator | None = None) -> RecoveryReport:
    """Estimate ``kappa(x, y)`` from ``(1/t)(1 - W(p_x^t, p_y^t)/d)`` as ``t -> 0``.

    ``times`` must halve at each step (default ``2**-3 .. 2**-12``).  The limit
    is a ``levels``-deep Richardson extrapolation over the smallest times.
    Also reports ``W(p_x^t, m_x^t) / t**2`` for the times with
    ``t <= 1 / Deg(x)`` and the observed convergence order of the raw
    estimates over the smaller half of the times.
    """
    if times is None:
        times = [2.0**-k for k in range(3, 13)]
    times = [float(t) for t in times]
    P = P or propagator(G)
    d = float(G.distance_matrix[x, y])
    est = []
    for t in times:
        Wt, _ = wasserstein(G, heat_kernel(P, t, x), heat_kernel(P, t, y))
        est.append((1.0 - Wt / d) / t)
    limit = float(richardson(est[-(levels + 1):], levels=levels))
    kref = ollivier_dual(G, x, y).kappa
    ratios = []
    for t in times:
        if t * G.deg[x] <= 1.0:
            Wpm, _ = wasserstein(G, heat_kernel(P, t, x), markov_kernel(G, x, t))
            ratios.append((t, Wpm / t**2))
    # slope of log|error| against log t over the smaller half of the times,
    # where the first-order term dominates; errors near round-off are skipped
    err = np.abs(np.array(est) - kref)
    tt = np.array(times)
    ok = (err > 1e-9) & (tt <= np.median(tt))
    order = float("nan")
    if ok.sum() >= 2:
        order = float(np.polyfit(np.log(tt[ok]), np.log(err[ok]), 1)[0])
    return RecoveryReport(tuple(times), tuple(est), limit, float(kref), tuple(ratios), order)


def subharmonic_bound_check(G: WeightedGraph, x0: int, K: float, t: float, *,
                            ric: float | None = None, P: HeatPropagator | None = None,
                            tol: float = CHECK_TOL):
    """``P_t d(x0, .) <= exp(K t) (d(x0, .) + Deg(x0) / K)`` under ``Ric >= -K``.

    Returns ``(holds, max_excess)``.
    """
    if not K > 0:
        raise CurvaturePreconditionFailed("K must be positive")
    if ric is None:
        ric = ric_lower_bound(G)
    if -K > ric + PRECONDITION_TOL:
        raise CurvaturePreconditionFailed(f"Ric >= -{K} fails (lower bound {ric})")
    P = P or propagator(G)
    f = G.distance_matrix[x0].astype(float)
    excess = float(np.max(P.apply(t, f) - np.exp(K * t) * (f + G.deg[x0] / K)))
    return bool(excess <= tol), excess
