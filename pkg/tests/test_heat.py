import numpy as np
import pytest
from hypothesis import given, strategies as st

from curvelab import generators as gen
from curvelab.curvature import ollivier_dual, ric_lower_bound
from curvelab.errors import (
    CurvaturePreconditionFailed, EmptySubset, EpsTooLarge, NegativePhi, NegativeTime,
)
from curvelab.graph import build_graph, laplacian_apply
from curvelab.heat import (
    cutoff_limit, cutoff_property_suite, cutoff_semigroup, curvature_recovery,
    dirichlet_semigroup, gradient_decay_check, gradient_norm, heat_kernel,
    kernel_contraction_check, markov_kernel, propagator, richardson,
    subharmonic_bound_check,
)

from strategies import graph_with_pair, weighted_graphs


def _k2_closed(t):
    e = np.exp(-2 * t)
    return np.array([(1 + e) / 2, (1 - e) / 2])


# -- propagator

def test_spectra():
    assert np.allclose(sorted(propagator(gen.complete(2)).eigenvalues), [-2, 0], atol=1e-12)
    assert np.allclose(sorted(propagator(gen.cycle(4)).eigenvalues), [-4, -2, -2, 0], atol=1e-12)


@pytest.mark.parametrize("t", [0.0, 0.1, 0.5, 1.0, 3.0])
def test_k2_closed_forms(t):
    P = propagator(gen.complete(2))
    assert np.allclose(P.apply(t, [1.0, 0.0]), _k2_closed(t), atol=1e-14)
    assert np.allclose(heat_kernel(P, t, 0).to_vector(2), _k2_closed(t), atol=1e-14)


def test_negative_time_and_small_time():
    G = gen.cycle(5)
    P = propagator(G)
    with pytest.raises(NegativeTime):
        P.apply(-1.0, np.ones(G.n))
    p = heat_kernel(P, 1e-8, 2).to_vector(G.n)
    assert 0.5 * np.abs(p - np.eye(G.n)[2]).sum() <= 1e-6


def test_markov_kernel():
    K2 = gen.complete(2)
    mk = markov_kernel(K2, 0, 0.25)
    assert mk[0] == pytest.approx(0.75) and mk[1] == pytest.approx(0.25)
    assert markov_kernel(gen.star(3), 0, 1.0 / 3)[0] == 0.0
    with pytest.raises(EpsTooLarge):
        markov_kernel(K2, 0, 1.5)


@given(weighted_graphs(), st.integers(0, 2**31 - 1))
def test_markov_kernel_integrates_laplacian(G, seed):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=G.n)
    x = int(rng.integers(G.n))
    eps = 0.5 / G.deg[x]
    mk = markov_kernel(G, x, eps)
    assert sum(mk[v] * f[v] for v in mk.support) == pytest.approx(f[x] + eps * laplacian_apply(G, f)[x], abs=1e-10)


@given(weighted_graphs(), st.floats(0.0, 3.0), st.floats(0.0, 3.0), st.integers(0, 2**31 - 1))
def test_semigroup_axioms(G, s, t, seed):
    rng = np.random.default_rng(seed)
    P = propagator(G)
    f = rng.uniform(0, 1, G.n)
    assert np.allclose(P.apply(0.0, f), f, atol=1e-10)
    assert np.allclose(P.apply(s, P.apply(t, f)), P.apply(s + t, f), atol=1e-9)
    Pt = P.apply(t, f)
    assert Pt.min() >= -1e-10
    assert np.abs(Pt).max() <= np.abs(f).max() + 1e-9
    assert np.dot(G.m, Pt) == pytest.approx(np.dot(G.m, f), abs=1e-9)
    assert np.allclose(P.apply(t, np.ones(G.n)), 1.0, atol=1e-9)
    assert P.eigenvalues.max() == pytest.approx(0.0, abs=1e-9)
    assert np.sum(np.abs(P.eigenvalues) < 1e-9) == 1


@given(weighted_graphs(), st.floats(0.01, 3.0))
def test_detailed_balance(G, t):
    M = propagator(G).matrix(t)
    A = G.m[:, None] * M
    assert np.allclose(A, A.T, atol=1e-9)


# -- Dirichlet

def test_dirichlet_values():
    K2 = gen.complete(2)
    out = dirichlet_semigroup(K2, [0], 0.7, [1.0, 0.0])
    assert out[0] == pytest.approx(np.exp(-0.7)) and out[1] == 0.0
    G = gen.cycle(5)
    f = np.linspace(0.1, 0.5, 5)
    assert np.allclose(dirichlet_semigroup(G, range(5), 0.4, f), propagator(G).apply(0.4, f))
    with pytest.raises(EmptySubset):
        dirichlet_semigroup(G, [], 0.1, np.zeros(5))
    with pytest.raises(ValueError):
        dirichlet_semigroup(G, [0], 0.1, np.ones(5))


@given(weighted_graphs(min_n=3), st.integers(0, 2**31 - 1), st.floats(0.05, 2.0))
def test_dirichlet_domain_monotone(G, seed, t):
    rng = np.random.default_rng(seed)
    W2 = [v for v in range(G.n) if rng.random() < 0.7] or [0]
    W1 = [v for v in W2 if rng.random() < 0.6] or W2[:1]
    f = np.zeros(G.n)
    f[W1] = rng.uniform(0, 1, len(W1))
    assert np.all(dirichlet_semigroup(G, W1, t, f) <= dirichlet_semigroup(G, W2, t, f) + 1e-12)


# -- cutoff

def test_cutoff_constant_phi_is_heat_flow():
    G = gen.cycle(5)
    f = np.array([0.9, 0.1, 0.3, 0.0, 0.5])
    phi = np.full(5, f.max())
    assert np.allclose(cutoff_limit(G, phi, 0.6, f).values, propagator(G).apply(0.6, f), atol=1e-9)


def test_cutoff_dirichlet_limit():
    G = gen.random_graph(7, 0.3, seed=4, weights=(0.5, 2.0), measures=(0.5, 2.0))
    W = [0, 2, 3, 5]
    phi = np.zeros(7)
    phi[W] = 1.0
    f = np.zeros(7)
    f[W] = [0.4, 0.8, 0.2, 0.6]
    lim = cutoff_limit(G, phi, 0.8, f)
    assert lim.converged
    assert np.abs(lim.values - dirichlet_semigroup(G, W, 0.8, f)).max() <= 1e-6


def test_cutoff_errors():
    G = gen.cycle(4)
    with pytest.raises(NegativePhi):
        cutoff_semigroup(G, -np.ones(4), 1.0, np.zeros(4), 4)
    with pytest.raises(NegativeTime):
        cutoff_limit(G, np.ones(4), -1.0, np.zeros(4))


@given(weighted_graphs(max_n=7), st.integers(0, 2**31 - 1), st.floats(0.1, 2.0))
def test_cutoff_refinement_monotone_and_bounded(G, seed, t):
    rng = np.random.default_rng(seed)
    phi = rng.uniform(0, 1, G.n) * (rng.random(G.n) < 0.8)
    f = phi * rng.uniform(0, 1, G.n)
    P = propagator(G)
    prev = None
    for n in (1, 2, 4, 8, 16, 32):
        v = cutoff_semigroup(G, phi, t, f, n, P).values
        assert np.all(v >= 0) and np.all(v <= phi)
        lower = np.exp(-t * G.deg) * f
        assert np.all(v >= lower - 1e-12) and np.all(v <= P.apply(t, f) + 1e-12)
        if prev is not None:
            assert np.all(v <= prev + 1e-12)
        prev = v


def test_property_suite_passes_and_equal_data():
    G = gen.random_graph(9, 0.3, seed=11, weights=(0.5, 2.0), measures=(0.5, 2.0))
    rng = np.random.default_rng(0)
    phi = rng.uniform(0.2, 1.0, 9)
    phi[[1, 4]] = 0.0
    f = phi * rng.uniform(0, 1, 9)
    rep = cutoff_property_suite(G, phi, f, f, 0.3, 0.6, W=[0, 2, 3, 7])
    assert rep.passed, rep.failures()
    assert rep.by_name("ii_contraction_sup")[0]["defect"] <= 1e-8
    assert rep.by_name("ix_dirichlet")[0]["defect"] <= 1e-6


# -- gradient estimates

def test_gradient_norm():
    assert gradient_norm(gen.path(3), [0.0, 2.0, 1.0]) == 2.0


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0])
def test_k2_gradient_tight(t):
    K2 = gen.complete(2)
    rep = gradient_decay_check(K2, [1.0, 0.0], 2.0, [t])
    _, obs, bound, holds = rep.rows[0]
    assert holds and abs(obs - np.exp(-2 * t)) <= 1e-12 and abs(bound - np.exp(-2 * t)) <= 1e-15
    _, W, b, holds = kernel_contraction_check(K2, 0, 1, 2.0, [t]).rows[0]
    assert holds and abs(W - np.exp(-2 * t)) <= 1e-12


def test_decay_checks_basic():
    C4 = gen.cycle(4)
    f = np.eye(4)[0]
    assert gradient_decay_check(C4, f, 2.0, [0.1, 0.5, 1.0]).passed
    rep = gradient_decay_check(C4, np.ones(4), 2.0, [0.5])
    assert rep.rows[0][1] <= 1e-14 and rep.rows[0][2] == 0.0
    Q3 = gen.hypercube(3)
    K = ric_lower_bound(Q3)
    assert kernel_contraction_check(Q3, 0, 1, K, [0.1, 1.0, 5.0]).passed
    row = kernel_contraction_check(Q3, 0, 7, K, [0.0]).rows[0]
    assert row[1] == row[2] == 3.0
    with pytest.raises(CurvaturePreconditionFailed):
        gradient_decay_check(C4, f, 2.5, [0.1])


@given(weighted_graphs(max_n=10), st.integers(0, 2**31 - 1))
def test_decay_under_ric_bound(G, seed):
    rng = np.random.default_rng(seed)
    K = ric_lower_bound(G)
    times = [0.05, 0.5, 2.0]
    assert gradient_decay_check(G, rng.uniform(0, 1, G.n), K, times, ric=K).passed
    x, y = (int(v) for v in rng.choice(G.n, 2, replace=False))
    assert kernel_contraction_check(G, x, y, K, times, ric=K).passed


@given(graph_with_pair(adjacent=True, max_n=8))
def test_gradient_derivative_reproduces_kappa(data):
    # d/dt grad_xy P_t f at t = 0 equals grad_xy Delta f = kappa for the LP witness
    G, x, y = data
    rep = ollivier_dual(G, x, y)
    D = G.distance_matrix
    pot = rep.witness_potential
    f = np.array([min(pot[s] + D[s, v] for s in pot) for v in range(G.n)])
    P = propagator(G)
    h = 1e-6
    g0 = (f[x] - f[y]) / D[x, y]
    Ph = P.apply(h, f)
    deriv = ((Ph[x] - Ph[y]) / D[x, y] - g0) / h
    assert deriv == pytest.approx(rep.kappa, abs=1e-3)


def test_subharmonic_bound():
    ok, _ = subharmonic_bound_check(gen.path(5), 0, 1.0, 0.7)
    assert ok
    ok, excess = subharmonic_bound_check(gen.cycle(6), 0, 2.0, 0.0)
    assert ok and excess <= 0
    with pytest.raises(CurvaturePreconditionFailed):
        subharmonic_bound_check(gen.cycle(4), 0, 0.0, 1.0)


# -- recovery

def test_richardson_removes_linear_term():
    ts = [0.1 / 2**k for k in range(3)]
    vals = [2.0 + 3.0 * t + 5.0 * t * t for t in ts]
    assert richardson(vals) == pytest.approx(2.0, abs=1e-12)


def test_recovery_k2_and_c4():
    rep = curvature_recovery(gen.complete(2), 0, 1)
    for t, est in zip(rep.times, rep.estimates):
        assert est == pytest.approx((1 - np.exp(-2 * t)) / t, abs=1e-9)
    assert rep.error <= 1e-3
    c4 = curvature_recovery(gen.cycle(4), 0, 1)
    assert abs(c4.limit - 2.0) <= 1e-3
    assert c4.wpm_max < np.inf


@given(graph_with_pair(adjacent=True, max_n=10))
def test_recovery_first_order(data):
    G, x, y = data
    rep = curvature_recovery(G, x, y)
    assert rep.error <= 1e-3
    # the fitted slope of log|error| is 1 - O(t) when the first-order term is present
    assert np.isnan(rep.order) or rep.order >= 0.95
