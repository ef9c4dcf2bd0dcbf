"""Acceptance criteria 1-10 at their stated tolerances.

Each test records one PASS/FAIL line (shown in the terminal summary) and
then asserts.  ``python3 tests/test_acceptance.py`` runs them standalone.
"""
import time

import numpy as np
import pytest

from curvelab import generators as gen
from curvelab.comparison import (
    associated_bdc, bdc_comparison_transfer, comparison_profile, curvature_comparison,
    curvature_decay_verdict, improved_diameter_check, laplacian_comparison,
    min_curvature_from, simple_diameter_bound, stochastic_completeness_bdc,
)
from curvelab.curvature import (
    bdc_average_identity, bdc_curvature, bdc_sphere_curvatures, no_cycle_formula,
    ollivier_bruteforce, ollivier_combinatorial, ollivier_dual, ollivier_eps,
    ollivier_transport, ric_lower_bound, sphere_curvatures,
)
from curvelab.graph import BirthDeathChain, to_graph
from curvelab.heat import (
    cutoff_property_suite, curvature_recovery, gradient_decay_check, gradient_norm,
    kernel_contraction_check, propagator,
)


def _record(log, num, ok, detail):
    log[num] = (bool(ok), detail)
    assert ok, f"criterion {num}: {detail}"


# ------------------------------------------------------------------ 1

def test_criterion_01_engine_agreement(acceptance_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst, mismatch, pairs = 0.0, 0, 0
    for i in range(200):
        n = int(rng.integers(5, 41))
        G = gen.random_graph(n, 2.0 / n, seed=1000 + i, max_degree=6)
        for x, y in G.edges:
            a = ollivier_dual(G, x, y).kappa
            b = ollivier_transport(G, x, y).kappa
            c = ollivier_combinatorial(G, x, y).kappa
            d = ollivier_bruteforce(G, x, y).kappa
            worst = max(worst, abs(a - b), abs(a - c), abs(a - d))
            if not (c == d and float(c).is_integer()):
                mismatch += 1
            pairs += 1
    dt = time.perf_counter() - t0
    ok = worst <= 1e-7 and mismatch == 0 and dt <= 60
    _record(acceptance_log, 1, ok,
            f"{pairs} edges, max spread {worst:.1e}, integer mismatches {mismatch}, {dt:.1f}s")


# ------------------------------------------------------------------ 2

def test_criterion_02_closed_forms(acceptance_log):
    tree_err = 0.0
    for i in range(100):
        n = int(np.random.default_rng(i).integers(2, 30))
        G = gen.random_tree(n, seed=200 + i, weights=(0.2, 3.0), measures=(0.2, 3.0))
        for x, y in G.edges:
            tree_err = max(tree_err, abs(no_cycle_formula(G, x, y) - ollivier_dual(G, x, y).kappa))
    line_err, avg_err = 0.0, 0.0
    for s in range(5):
        ch = gen.random_chain(30, seed=300 + s)
        G = to_graph(ch)
        # interior: both balls avoid the truncated end N
        for r in range(0, 29):
            for R in range(r + 1, 30):
                line_err = max(line_err, abs(bdc_curvature(ch, r, R) - ollivier_dual(G, r, R).kappa))
        for r in range(1, 30):
            lhs, rhs = bdc_average_identity(ch, r)
            avg_err = max(avg_err, abs(lhs - rhs))
    ok = tree_err <= 1e-8 and line_err <= 1e-8 and avg_err <= 1e-10
    _record(acceptance_log, 2, ok,
            f"trees {tree_err:.1e}, chain pairs {line_err:.1e}, averaging {avg_err:.1e}")


# ------------------------------------------------------------------ 3

def test_criterion_03_paper_examples(acceptance_log):
    t0 = time.perf_counter()
    errs = {}
    K2 = gen.complete(2)
    errs["K2"] = max(abs(e(K2, 0, 1).kappa - 2.0) for e in
                     (ollivier_dual, ollivier_transport, ollivier_combinatorial, ollivier_bruteforce))

    ch = gen.g_epsilon(1.0, 52)
    G = to_graph(ch)
    lp = sphere_curvatures(G, 0, 50)
    cf = bdc_sphere_curvatures(ch, 50)
    errs["g_eps"] = max(max(abs(lp[r - 1] + np.log(r) ** 2), abs(cf[r - 1] + np.log(r) ** 2))
                        for r in range(2, 51))

    N = 10
    ts = gen.two_sided_geometric(N)
    G = to_graph(ts)
    # pairs (i-1, i) whose degrees are untouched by the truncation
    errs["two_sided"] = max(max(abs(ollivier_dual(G, i - 1, i).kappa), abs(bdc_curvature(ts, i - 1, i)))
                            for i in range(2, 2 * N))
    kt2 = bdc_curvature(associated_bdc(G, ts.origin), 1, 2)

    fo = gen.finite_optimal(("geometric", 0.5), 30)
    G = to_graph(fo)
    k = [None] + [2.0**-r for r in range(1, 32)]
    e_fo = max(abs(bdc_curvature(fo, r - 1, r) - (k[r] + k[r + 1])) for r in range(2, 30))
    e_fo = max(e_fo, max(abs(ollivier_dual(G, r - 1, r).kappa - (k[r] + k[r + 1])) for r in range(2, 20)))
    # the construction gives 2 k_1 + k_2 at the root step
    e_fo = max(e_fo, abs(bdc_curvature(fo, 0, 1) - (2 * k[1] + k[2])))
    errs["finite_optimal"] = e_fo
    deg_fo = float(G.deg[:-1].max())

    e_pc = 0.0
    for K in (0.5, 1.0, 2.0):
        pc = gen.positive_curv_infinite(K, N=40)
        G = to_graph(pc)
        e_pc = max(e_pc, max(abs(bdc_curvature(pc, r - 1, r) - K) for r in range(1, pc.N)))
        e_pc = max(e_pc, max(abs(ollivier_dual(G, r - 1, r).kappa - K) for r in range(1, pc.N)))
    errs["positive_curv"] = e_pc
    dt = time.perf_counter() - t0

    ok = (errs["K2"] == 0.0 and errs["g_eps"] <= 1e-9 and errs["two_sided"] <= 1e-9 and kt2 < 0
          and e_fo <= 1e-9 and deg_fo <= 3.0 and e_pc <= 1e-9 and dt <= 30)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    _record(acceptance_log, 3, ok, f"{detail}, assoc kappa~(2) {kt2:.3f}, Deg {deg_fo:.3f}, {dt:.1f}s")


# ------------------------------------------------------------------ 4

def _comparison_suite(G, x0, cache):
    """Number of violated comparison statements at root ``x0``."""
    bad = 0
    K = min_curvature_from(G, x0, cache=cache)
    holds, _ = laplacian_comparison(G, x0, K, cache=cache)
    bad += not holds
    prof = comparison_profile(G, x0, cache=cache)
    bad += len(prof.violations)
    bad += not bdc_comparison_transfer(G, x0, prof.phi)
    for R in range(1, prof.R_max + 1):
        st, sg = curvature_comparison(G, x0, R, cache=cache)
        bad += st < sg - 1e-7 * max(1.0, abs(sg))
    return bad


def test_criterion_04_laplacian_comparison(acceptance_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    bad, roots = 0, 0
    for i in range(100):
        n = int(rng.integers(4, 61))
        G = gen.random_graph(n, 2.5 / n, seed=4000 + i, weights=(0.3, 3.0), measures=(0.3, 3.0))
        cache = {}
        all_roots = i < 10
        for x0 in (range(G.n) if all_roots else [int(rng.integers(G.n))]):
            bad += _comparison_suite(G, x0, cache)
            roots += 1
    sharp = 0.0
    for s in range(10):
        G = to_graph(gen.random_chain(int(rng.integers(3, 30)), seed=450 + s))
        prof = comparison_profile(G, 0, G.n - 2)
        sharp = max(sharp, prof.sharpness_defect(G))
    dt = time.perf_counter() - t0
    ok = bad == 0 and sharp <= 1e-10 and dt <= 120
    _record(acceptance_log, 4, ok, f"{roots} roots, violations {bad}, chain sharpness {sharp:.1e}, {dt:.1f}s")


# ------------------------------------------------------------------ 5

def test_criterion_05_diameter_bounds(acceptance_log):
    rng = np.random.default_rng(505)
    positive, fails = 0, 0
    for i in range(100):
        n = int(rng.integers(3, 15))
        G = gen.random_graph(n, float(rng.uniform(0.3, 0.9)), seed=5000 + i,
                             weights=(0.5, 2.0), measures=(0.5, 2.0))
        for x in range(n):
            for y in range(x + 1, n):
                kap = ollivier_dual(G, x, y).kappa
                if kap > 0:
                    positive += 1
                    _, holds = simple_diameter_bound(G, x, y, kap)
                    fails += not holds
    records = 0
    for i in range(20):
        G = gen.random_graph(int(rng.integers(4, 25)), 0.15, seed=5500 + i,
                             weights=(0.5, 2.0), measures=(0.5, 2.0))
        cache = {}
        for x0 in range(G.n):
            rep = improved_diameter_check(G, x0, cache=cache)
            records += len(rep.records)
            fails += sum(not r.holds for r in rep.records)
    ok = fails == 0 and positive > 0
    _record(acceptance_log, 5, ok, f"{positive} positive pairs, {records} radius records, failures {fails}")


# ------------------------------------------------------------------ 6

def test_criterion_06_gradient_decay(acceptance_log):
    rng = np.random.default_rng(606)
    times = (0.05, 0.1, 0.5, 1.0, 5.0)
    fails, checks = 0, 0
    for i in range(50):
        n = int(rng.integers(3, 41))
        G = gen.random_graph(n, 3.0 / n, seed=6000 + i, weights=(0.5, 2.0), measures=(0.5, 2.0))
        K = ric_lower_bound(G)
        P = propagator(G)
        f = rng.uniform(0, 1, n)
        rep = gradient_decay_check(G, f, K, times, ric=K, P=P)
        fails += not rep.passed
        checks += len(rep.rows)
        for _ in range(10):
            x, y = (int(v) for v in rng.choice(n, 2, replace=False))
            rep = kernel_contraction_check(G, x, y, K, times, ric=K, P=P)
            fails += not rep.passed
            checks += len(rep.rows)
    K2 = gen.complete(2)
    P = propagator(K2)
    tight = 0.0
    for t in times:
        g = gradient_norm(K2, P.apply(t, np.array([1.0, 0.0])))
        tight = max(tight, abs(g - np.exp(-2 * t)))
        for row in kernel_contraction_check(K2, 0, 1, 2.0, [t], P=P).rows:
            tight = max(tight, abs(row[1] - row[2]))
    ok = fails == 0 and tight <= 1e-10
    _record(acceptance_log, 6, ok, f"{checks} checks, failures {fails}, K_2 equality {tight:.1e}")


# ------------------------------------------------------------------ 7

def _paper_example_graphs():
    return {
        "K2": gen.complete(2),
        "C5": gen.cycle(5),
        "star4": gen.star(4),
        "g_eps(1)": to_graph(gen.g_epsilon(1.0, 8)),
        "g_eps(0.5)": to_graph(gen.g_epsilon(0.5, 8)),
        "two_sided": to_graph(gen.two_sided_geometric(4)),
        "finite_optimal": to_graph(gen.finite_optimal(("geometric", 0.5), 8)),
        "positive_curv": to_graph(gen.positive_curv_infinite(1.0, N=8)),
        "intrinsic(1)": to_graph(gen.intrinsic_example(1.0, 6)),
    }


def test_criterion_07_curvature_recovery(acceptance_log):
    rng = np.random.default_rng(707)
    worst, wpm, cases = 0.0, 0.0, 0
    graphs = list(_paper_example_graphs().values())
    graphs += [gen.random_graph(int(rng.integers(3, 16)), 0.25, seed=7000 + i,
                                weights=(0.5, 2.0), measures=(0.5, 2.0)) for i in range(20)]
    for G in graphs:
        P = propagator(G)
        edges = G.edges
        pick = edges if len(edges) <= 8 else [edges[j] for j in rng.choice(len(edges), 3, replace=False)]
        for x, y in pick:
            rep = curvature_recovery(G, x, y, levels=2, P=P)
            worst = max(worst, rep.error)
            wpm = max(wpm, rep.wpm_max)
            cases += 1
    ok = worst <= 1e-3 and np.isfinite(wpm)
    _record(acceptance_log, 7, ok, f"{cases} pairs, max error {worst:.1e}, max W(p,m)/t^2 {wpm:.3g}")


# ------------------------------------------------------------------ 8

def test_criterion_08_cutoff_semigroup(acceptance_log):
    rng = np.random.default_rng(808)
    failures = []
    dirichlet = 0.0
    for i in range(20):
        n = int(rng.integers(2, 13))
        G = gen.random_graph(n, 0.3, seed=8000 + i, weights=(0.5, 2.0), measures=(0.5, 2.0))
        phi = rng.uniform(0.2, 1.0, n)
        phi[rng.random(n) < 0.3] = 0.0
        f = phi * rng.uniform(0, 1, n)
        g = phi * rng.uniform(0, 1, n)
        W = [int(v) for v in np.nonzero(rng.random(n) < 0.6)[0]] or [0]
        s, t = (float(v) for v in rng.uniform(0.1, 1.0, 2))
        rep = cutoff_property_suite(G, phi, f, g, s, t, W=W, seed=i)
        failures += [(i, name) for name in rep.failures()]
        dirichlet = max([dirichlet] + [c["defect"] for c in rep.by_name("ix_dirichlet")])
    ok = not failures and dirichlet <= 1e-6
    _record(acceptance_log, 8, ok, f"20 graphs, failed checks {failures or 0}, Dirichlet {dirichlet:.1e}")


# ------------------------------------------------------------------ 9

def test_criterion_09_stochastic_completeness(acceptance_log):
    t0 = time.perf_counter()
    N = 200
    half_line = BirthDeathChain(tuple([1.0] * N), tuple([1.0] * (N + 1)))
    verdicts = {
        "half_line": stochastic_completeness_bdc(half_line).status,
        "g_eps(0.5)": stochastic_completeness_bdc(gen.g_epsilon(0.5, N)).status,
        "g_eps(1)": stochastic_completeness_bdc(gen.g_epsilon(1.0, N)).status,
        "intrinsic(1)": stochastic_completeness_bdc(gen.intrinsic_example(1.0, N)).status,
    }
    decay_half = curvature_decay_verdict(half_line, C=1.0).passed
    decay_geps = curvature_decay_verdict(gen.g_epsilon(1.0, N), C=1.0).passed
    dt = time.perf_counter() - t0
    ok = (verdicts["half_line"] == "complete"
          and all(verdicts[k] == "incomplete" for k in ("g_eps(0.5)", "g_eps(1)", "intrinsic(1)"))
          and decay_half is True and decay_geps is False and dt <= 10)
    _record(acceptance_log, 9, ok,
            f"{verdicts}, decay half-line {decay_half}, decay g_eps {decay_geps}, {dt:.2f}s")


# ----------------------------------------------------------------- 10

def test_criterion_10_eps_convergence(acceptance_log):
    rng = np.random.default_rng(1010)
    drops, worst, pairs = 0.0, 0.0, 0
    for i in range(20):
        n = int(rng.integers(3, 21))
        # weights <= 1, m = 1 and at most 4 neighbours keep Deg <= 4, so eps = 1/4 is admissible
        G = gen.random_graph(n, 0.3, seed=10000 + i, weights=(0.5, 1.0), max_degree=4)
        edges = G.edges
        for j in rng.choice(len(edges), min(3, len(edges)), replace=False):
            x, y = edges[j]
            seq = [ollivier_eps(G, x, y, 2.0**-k).normalized for k in range(2, 11)]
            drops = max(drops, max(a - b for a, b in zip(seq, seq[1:])))
            worst = max(worst, abs(seq[-1] - ollivier_dual(G, x, y).kappa))
            pairs += 1
    ok = drops <= 1e-9 and worst <= 1e-2
    _record(acceptance_log, 10, ok, f"{pairs} pairs, max decrease {max(drops, 0.0):.1e}, error at k=10 {worst:.1e}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
