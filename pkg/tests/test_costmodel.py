import math

import numpy as np
import pytest
from _oracles import path_graph, random_graph
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qspectral.costmodel import (
    classical_cost,
    crossover_n,
    eta,
    kappa,
    loglog_slope,
    mu,
    mu_normalized_incidence,
    qram_time,
    quantum_cost,
    quantum_cost_general,
)
from qspectral.datasets import make_circles, rescale_min_norm
from qspectral.graph import IncidenceView, SimilarityGraph, build_adjacency, materialize_incidence

UNIT = dict(T_S=1, eta_S=1, eps_dist=1, eps_B=1, mu_B=1, kappa_Lk=1, eps_lambda=1, k=1, eta_Lk=1, delta=1)


def test_mu_identity():
    for n in (1, 3, 8):
        assert mu(np.eye(n)) == pytest.approx(1.0, abs=1e-9)


def test_mu_all_ones():
    assert mu(np.ones((2, 2))) == pytest.approx(2.0, abs=1e-9)


def test_mu_path_incidence_by_hand():
    # unit rows; at p = 1 the columns have at most two nonzeros, so mu = sqrt(1 * 2)
    v = IncidenceView(SimilarityGraph(path_graph(3), 1.0), 0.0)
    assert mu_normalized_incidence(v) == pytest.approx(math.sqrt(2), abs=1e-9)
    assert mu(materialize_incidence(v, normalized=True)) == pytest.approx(math.sqrt(2), abs=1e-9)


def test_mu_path_incidence_with_eps_is_frozen():
    v = IncidenceView(SimilarityGraph(path_graph(3), 1.0), 0.1)
    assert mu_normalized_incidence(v) == pytest.approx(1.6029035134004974, rel=1e-9)


def test_analytic_mu_matches_materialized():
    rng = np.random.default_rng(0)
    for _ in range(20):
        A = random_graph(rng, int(rng.integers(3, 12)), connected_only=True)
        for eps_B in (0.0, 0.1):
            v = IncidenceView(SimilarityGraph(A, 1.0), eps_B)
            direct = mu(materialize_incidence(v, normalized=True))
            assert mu_normalized_incidence(v) == pytest.approx(direct, rel=1e-6)
            assert mu_normalized_incidence(v) <= A.shape[0]


def test_mu_circles_graph_below_n():
    S = rescale_min_norm(make_circles(300))
    G = build_adjacency(S, 0.6 / make_circles(300).row_norms.min())
    assert mu_normalized_incidence(IncidenceView(G, 0.1)) <= 300


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=st.floats(-10, 10)))
def test_mu_bounded_by_frobenius(M):
    if not np.any(M):
        with pytest.raises(ValueError):
            mu(M)
        return
    assert mu(M) <= np.linalg.norm(M) * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (4, 3), elements=st.floats(0.1, 10)), st.permutations(range(4)))
def test_parameters_invariant_under_row_permutation(M, perm):
    P = M[list(perm)]
    assert mu(P) == pytest.approx(mu(M), rel=1e-9)
    assert eta(P) == eta(M)
    assert kappa(P) == pytest.approx(kappa(M), rel=1e-9)


def test_eta_examples():
    assert eta(np.eye(3)) == 1
    assert eta(np.array([[1.0, 0.0], [0.0, 2.0]])) == 4


def test_eta_of_rescaled_circles():
    assert eta(rescale_min_norm(make_circles(600, noise_sd=0.0)).points) == pytest.approx(4.0, rel=1e-12)
    # noise moves the extreme norms by a few standard deviations at most
    sd = 0.05
    value = eta(rescale_min_norm(make_circles(600, noise_sd=sd)).points)
    assert 4.0 < value <= ((2 + 4 * sd) / (1 - 4 * sd)) ** 2


def test_eta_rejects_zero_rows():
    with pytest.raises(ValueError):
        eta(np.array([[0.0], [1.0]]))


def test_kappa_examples():
    assert kappa(np.diag([3.0, 1.0])) == pytest.approx(3.0)
    assert kappa(np.diag([5.0, 0.0])) == 1.0
    assert kappa(np.array([0.5, 2.0])) == 4.0
    with pytest.raises(ValueError):
        kappa(np.zeros(3))


def test_quantum_cost_unit_and_scaling():
    assert quantum_cost(**UNIT) == 1
    base = quantum_cost(**{**UNIT, "eps_lambda": 0.9})
    assert quantum_cost(**{**UNIT, "eps_lambda": 1.8}) == pytest.approx(base / 2)
    assert quantum_cost(**{**UNIT, "k": 2, "eta_Lk": 4, "delta": 0.5}) == pytest.approx(8 * 32 * 8)


@pytest.mark.parametrize("name", ["eps_dist", "eps_B", "eps_lambda", "delta"])
def test_quantum_cost_nonincreasing_in_precisions(name):
    vals = [quantum_cost(**{**UNIT, name: x}) for x in (0.1, 0.3, 0.9, 2.0)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("name", ["mu_B", "kappa_Lk", "eta_Lk", "eta_S", "k"])
def test_quantum_cost_nondecreasing_in_parameters(name):
    vals = [quantum_cost(**{**UNIT, name: x}) for x in (1, 2, 3, 5)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_quantum_cost_rejects_zero_precision():
    with pytest.raises(ValueError):
        quantum_cost(**{**UNIT, "eps_lambda": 0})


def test_general_branch_by_hand():
    # k = dim = 1, all ones: 1 * (1 + 1) + 1 = 3
    assert quantum_cost_general(**UNIT, mu_Lk=1) == pytest.approx(3.0)


def test_classical_cost():
    assert classical_cost(1, 2, 3, 2, 5) == 2 + 3 + 1 + 20
    assert classical_cost(10, 1, 0, 1, 1, c=(0, 0, 2, 0)) == 2000
    ns = np.array([300, 500, 800, 1000])
    slope, _ = loglog_slope(ns, [classical_cost(n, 2, 20 * n, 2, 10) for n in ns])
    assert slope == pytest.approx(3.0, abs=0.05)


def test_qram_time():
    assert qram_time(512, 2) == 10
    assert qram_time(512, 2, c_qram=3) == 30


def test_loglog_fit_and_crossover():
    x = np.array([10, 100, 1000])
    c_fit = loglog_slope(x, 2 * x**3.0)
    q_fit = loglog_slope(x, 2000 * x)
    assert c_fit[0] == pytest.approx(3.0)
    assert q_fit[0] == pytest.approx(1.0)
    assert crossover_n(c_fit, q_fit) == pytest.approx(math.sqrt(1000))
    assert math.isnan(loglog_slope([1, 2], [1, float("nan")])[0])
    assert crossover_n((1, 0), (1, 2)) == math.inf
