"""Laplacian comparison, associated chains, diameter bounds, completeness verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .curvature import bdc_curvature, bdc_sphere_curvatures, ollivier_dual, sphere_curvatures
from .errors import CurvaturePreconditionFailed, NonPositiveCurvature, TruncationExceeded
from .graph import BirthDeathChain, WeightedGraph, laplacian_apply, sphere_decomposition

TOL = 1e-7
DIAM_TOL = 1e-9


def _lap_distance(G, x0):
    return laplacian_apply(G, G.distance_matrix[x0].astype(float))


def _pair_kappa(G, x, y, cache):
    key = (min(x, y), max(x, y))
    if cache is None:
        return ollivier_dual(G, *key).kappa
    if key not in cache:
        cache[key] = ollivier_dual(G, *key).kappa
    return cache[key]


def min_curvature_from(G: WeightedGraph, x0: int, radius: int | None = None, cache: dict | None = None) -> float:
    """``min kappa(x0, y)`` over ``y != x0`` within ``radius`` (default: all)."""
    D = G.distance_matrix[x0]
    ys = [y for y in range(G.n) if y != x0 and (radius is None or D[y] <= radius)]
    return min(_pair_kappa(G, x0, y, cache) for y in ys)


def laplacian_comparison(G: WeightedGraph, x0: int, K: float, *, radius: int | None = None,
                         cache: dict | None = None, tol: float = TOL):
    """Check ``Delta d(x0, .) <= Deg(x0) - K d(x0, .)``; returns ``(holds, max_excess)``.

    The hypothesis ``kappa(x0, y) >= K`` is verified for all ``y`` within
    ``radius`` first.  ``cache`` maps sorted pairs to curvatures (curvature is
    symmetric) and may be shared across roots.
    """
    if G.n > 1:
        kmin = min_curvature_from(G, x0, radius, cache)
        if K > kmin + tol:
            raise CurvaturePreconditionFailed(f"K = {K} exceeds min kappa(x0, .) = {kmin}")
    d = G.distance_matrix[x0].astype(float)
    sel = np.ones(G.n, dtype=bool) if radius is None else d <= radius
    excess = _lap_distance(G, x0) - (G.deg[x0] - K * d)
    mx = float(excess[sel].max())
    return bool(mx <= tol), mx


@dataclass(frozen=True)
class ComparisonProfile:
    root: int
    R_max: int
    kappa: tuple            # kappa(1..R_max)
    phi: tuple              # Phi(0..R_max)
    lap_values: np.ndarray  # Delta d(x0, .)
    violations: tuple       # (vertex, excess)

    def sharpness_defect(self, G: WeightedGraph) -> float:
        """``max |Delta f(x) - Phi(d(x0, x))|`` over vertices within ``R_max``."""
        d = G.distance_matrix[self.root]
        sel = d <= self.R_max
        phi = np.array(self.phi)[d[sel]]
        return float(np.abs(self.lap_values[sel] - phi).max())


def phi_from_kappa(deg0: float, kappas) -> list:
    return [float(deg0)] + [float(deg0 - s) for s in np.cumsum(kappas)]


def comparison_profile(G: WeightedGraph, x0: int, R_max: int | None = None, *,
                       cache: dict | None = None, tol: float = TOL) -> ComparisonProfile:
    """``Phi(R) = Deg(x0) - sum_{r<=R} kappa(r)`` and the check ``Delta f <= Phi(f)``."""
    sd = sphere_decomposition(G, x0)
    if R_max is None:
        R_max = sd.eccentricity
    if not 0 <= R_max <= sd.eccentricity:
        raise ValueError(f"R_max must lie in 0..{sd.eccentricity}")
    kap = sphere_curvatures(G, x0, R_max, cache) if R_max else []
    phi = phi_from_kappa(G.deg[x0], kap)
    lap = _lap_distance(G, x0)
    viol = []
    for x in range(G.n):
        r = int(sd.dist[x])
        if r <= R_max:
            ex = lap[x] - phi[r]
            if ex > tol * max(1.0, abs(phi[r])):
                viol.append((x, float(ex)))
    return ComparisonProfile(x0, int(R_max), tuple(kap), tuple(phi), lap, tuple(viol))


def associated_bdc(G: WeightedGraph, x0: int) -> BirthDeathChain:
    """Chain with ``m~(r) = m(S_r)`` and ``w~(r, r+1) = w(S_r, S_{r+1})``.

    The result is closed: ``w~(R, R+1) = 0`` at the eccentricity is genuine.
    """
    sd = sphere_decomposition(G, x0)
    R = sd.eccentricity
    m = [float(math.fsum(G.m[list(S)])) for S in sd.spheres]
    w = [float(G.w[np.ix_(sd.spheres[r], sd.spheres[r + 1])].sum()) for r in range(R)]
    labels = None
    if G.labels is not None:
        labels = tuple(str(r) for r in range(R + 1))
    return BirthDeathChain(tuple(w), tuple(m), closed=True, labels=labels)


def chain_lap_distance(chain: BirthDeathChain, R: int | None = None) -> list:
    if R is None:
        R = chain.N if chain.closed else chain.N - 1
    return [chain.lap_distance(r) for r in range(R + 1)]


def bdc_comparison_transfer(G: WeightedGraph, x0: int, phi, tol: float = TOL) -> bool:
    """Whether ``Delta~ f~ <= Phi(f~)`` holds on the associated chain.

    ``phi`` is a sequence over ``0..R`` (``R`` at most the eccentricity).
    Radii beyond ``len(phi) - 1`` are not checked.
    """
    chain = associated_bdc(G, x0)
    R = min(len(phi) - 1, chain.N)
    lap = chain_lap_distance(chain, R)
    return all(lap[r] <= phi[r] + tol * max(1.0, abs(phi[r])) for r in range(R + 1))


def graph_side_holds(G: WeightedGraph, x0: int, phi, tol: float = TOL) -> bool:
    d = G.distance_matrix[x0]
    lap = _lap_distance(G, x0)
    R = len(phi) - 1
    return all(lap[x] <= phi[d[x]] + tol * max(1.0, abs(phi[d[x]])) for x in range(G.n) if d[x] <= R)


def curvature_comparison(G: WeightedGraph, x0: int, R: int, *, cache: dict | None = None):
    """``(sum_{r<=R} kappa~(r), sum_{r<=R} kappa(r))`` for the associated chain and ``G``."""
    chain = associated_bdc(G, x0)
    if R > chain.N:
        raise TruncationExceeded(f"R = {R} exceeds the eccentricity {chain.N}")
    kt = [bdc_curvature(chain, r - 1, r) for r in range(1, R + 1)]
    kg = sphere_curvatures(G, x0, R, cache)
    return float(math.fsum(kt)), float(math.fsum(kg))


# ------------------------------------------------------------- diameter

def simple_diameter_bound(G: WeightedGraph, x: int, y: int, kappa: float | None = None):
    """``(bound, holds)`` with ``bound = (Deg(x) + Deg(y)) / kappa(x, y)``."""
    if kappa is None:
        kappa = ollivier_dual(G, x, y).kappa
    if not kappa > 0:
        raise NonPositiveCurvature(f"kappa({x}, {y}) = {kappa} is not positive")
    bound = float((G.deg[x] + G.deg[y]) / kappa)
    return bound, bool(G.distance_matrix[x, y] <= bound + DIAM_TOL)


@dataclass(frozen=True)
class RadiusRecord:
    R: int
    curvature_sum: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.curvature_sum

    @property
    def holds(self) -> bool:
        return self.slack >= -DIAM_TOL


@dataclass(frozen=True)
class DiameterReport:
    root: int
    records: tuple
    derived_bound: float | None   # 2 (Deg(x0) + M) / K when every kappa(r) >= K > 0

    @property
    def holds(self) -> bool:
        return all(r.holds for r in self.records)


def improved_diameter_check(G: WeightedGraph, x0: int, *, cache: dict | None = None) -> DiameterReport:
    """Per-radius check of ``sum kappa(r) <= Deg(x0) + min_{S_R} (Deg_- - Deg_+)``."""
    sd = sphere_decomposition(G, x0)
    kap = sphere_curvatures(G, x0, None, cache)
    recs = []
    mins = []
    s = 0.0
    for R in range(1, sd.eccentricity + 1):
        s += kap[R - 1]
        S = list(sd.spheres[R])
        mn = float((sd.deg_minus[S] - sd.deg_plus[S]).min())
        mins.append(mn)
        recs.append(RadiusRecord(R, s, float(G.deg[x0] + mn)))
    derived = None
    if kap and min(kap) > 0:
        derived = 2.0 * (G.deg[x0] + max(mins)) / min(kap)
    return DiameterReport(x0, tuple(recs), derived)


@dataclass(frozen=True)
class FiniteMeasureReport:
    partial_sums: tuple
    threshold: float
    m_total: float

    @property
    def exceeds(self) -> tuple:
        return tuple(s > self.threshold for s in self.partial_sums)


def finite_measure_check(G: WeightedGraph, x0: int, *, cache: dict | None = None) -> FiniteMeasureReport:
    kap = sphere_curvatures(G, x0, None, cache)
    return FiniteMeasureReport(tuple(float(s) for s in np.cumsum(kap)), float(G.deg[x0]),
                               float(math.fsum(G.m)))


# ------------------------------------------------- stochastic completeness

FIT_DEAD_ZONE = 0.1
MIN_FIT_N = 50


@dataclass(frozen=True)
class CompletenessVerdict:
    status: str             # complete | incomplete | inconclusive
    criterion: str          # curvature_decay | bdc_sum
    evidence: dict = field(default_factory=dict)
    passed: bool | None = None
    caveat: str | None = None


def completeness_summands(chain: BirthDeathChain) -> np.ndarray:
    """``m(B_r) / w(r, r+1)`` for ``r = 0..N-1``."""
    ball = np.cumsum(chain.m)[: chain.N]
    return ball / np.asarray(chain.w_up)


def _fit_tail(r, s):
    """Least squares for ``log s = c + alpha log r + beta log log r`` (two stage)."""
    lr, ls = np.log(r), np.log(s)
    alpha = float(np.polyfit(lr, ls, 1)[0])
    beta = None
    if abs(alpha + 1.0) <= FIT_DEAD_ZONE:
        # alpha pinned at -1; log r and log log r are too collinear to fit jointly
        y = ls + lr
        beta = float(np.polyfit(np.log(lr), y, 1)[0])
    return alpha, beta


def _fit_regime(alpha, beta):
    if alpha < -1.0 - FIT_DEAD_ZONE:
        return "convergent"
    if alpha > -1.0 + FIT_DEAD_ZONE:
        return "divergent"
    if beta is not None:
        if beta < -1.0 - FIT_DEAD_ZONE:
            return "convergent"
        if beta > -1.0 + FIT_DEAD_ZONE:
            return "divergent"
    return "undecided"


def stochastic_completeness_bdc(chain: BirthDeathChain, mode: str = "fit", *,
                                witness: Callable[[np.ndarray], np.ndarray] | None = None) -> CompletenessVerdict:
    """Verdict from the summability of ``m(B_r) / w(r, r+1)``.

    The sum diverges (complete) or converges (incomplete).  On a truncation
    the tail ``r >= N/2`` is fitted to ``c r**alpha (log r)**beta``; see
    :func:`_fit_regime` for the decision rule.  With ``mode="witness"`` the
    caller supplies ``witness(r)``, a lower bound with divergent sum; the
    chain is declared complete if the summands dominate it over the tail.
    Truncations with ``N < 50`` are inconclusive.
    """
    if mode not in ("fit", "witness"):
        raise ValueError("mode must be 'fit' or 'witness'")
    if mode == "witness" and witness is None:
        raise ValueError("witness mode needs a witness function")
    s = completeness_summands(chain)
    partial = np.cumsum(s)
    r = np.arange(chain.N)
    evidence = {"r": r.tolist(), "summand": s.tolist(), "partial_sum": partial.tolist()}
    if chain.N < MIN_FIT_N:
        return CompletenessVerdict("inconclusive", "bdc_sum", evidence,
                                   caveat=f"truncation N = {chain.N} below {MIN_FIT_N}")
    tail = r >= max(chain.N // 2, 2)
    alpha, beta = _fit_tail(r[tail].astype(float), s[tail])
    regime = _fit_regime(alpha, beta)
    evidence.update({"alpha": alpha, "beta": beta, "regime": regime,
                     "tail_start": int(r[tail][0])})
    if mode == "witness":
        lower = np.asarray(witness(r[tail].astype(float)), dtype=float)
        dominated = bool(np.all(s[tail] >= lower))
        evidence["witness_holds"] = dominated
        if dominated:
            return CompletenessVerdict("complete", "bdc_sum", evidence,
                                       caveat="divergence witness checked on the tail only")
    if regime == "convergent":
        return CompletenessVerdict("incomplete", "bdc_sum", evidence,
                                   caveat="tail extrapolated from a finite truncation")
    if regime == "divergent" and mode == "fit":
        return CompletenessVerdict("complete", "bdc_sum", evidence,
                                   caveat="tail extrapolated from a finite truncation")
    return CompletenessVerdict("inconclusive", "bdc_sum", evidence)


def curvature_decay_verdict(G, x0: int = 0, C: float = 1.0, *, cache: dict | None = None) -> CompletenessVerdict:
    """Check ``kappa(r) >= -C log r`` at every computed radius.

    ``G`` is a graph or a birth-death chain (rooted at 0, ``x0`` ignored).
    Only radii in the upper half of the range count as "large r"; failures
    below it are reported as early failures.  Passing gives ``complete`` with
    a caveat that finitely many radii were checked; a failure on the tail
    gives ``inconclusive`` (this criterion never certifies incompleteness).
    """
    if not C > 0:
        raise ValueError("C must be positive")
    if isinstance(G, BirthDeathChain):
        kap = bdc_sphere_curvatures(G)
    else:
        kap = sphere_curvatures(G, x0, None, cache)
    R = len(kap)
    radii = np.arange(1, R + 1)
    bound = -C * np.log(radii)
    fail = np.array(kap) < bound - TOL
    tail = radii > R // 2
    early = [int(r) for r in radii[fail & ~tail]]
    late = [int(r) for r in radii[fail & tail]]
    evidence = {"r": radii.tolist(), "kappa": [float(k) for k in kap], "bound": bound.tolist(),
                "early_failures": early, "tail_failures": late}
    caveat = f"checked radii 1..{R} only"
    if late:
        return CompletenessVerdict("inconclusive", "curvature_decay", evidence, passed=False, caveat=caveat)
    return CompletenessVerdict("complete", "curvature_decay", evidence, passed=True, caveat=caveat)
