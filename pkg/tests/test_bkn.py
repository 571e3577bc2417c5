import numpy as np
import pytest

from lcnet import (FitConfig, Graph, apply_mask, auc, bkn_estep, bkn_fit,
                   bkn_log_likelihood, bkn_predict, bkn_rate, bkn_rates, bkn_step)

from conftest import random_graph


def brute_bkn_step(theta, g):
    """Dense-loop transcription of the impute + E + M sweep."""
    n, nk = theta.shape
    lam = theta @ theta.T
    data = np.zeros((n, n))
    for i in range(n):
        for j in g.neighbors(i):
            data[i, j] = 1.0
        for j in g.masked_neighbors(i):
            data[i, j] = lam[i, j]
    numer = np.zeros((n, nk))
    for i in range(n):
        for j in range(n):
            if i == j or data[i, j] == 0.0:
                continue
            q = theta[i] * theta[j] / lam[i, j]
            numer[i] += data[i, j] * q
    denom = numer.sum(axis=0)
    out = np.zeros_like(theta)
    for k in range(nk):
        if denom[k] > 0:
            out[:, k] = numer[:, k] / np.sqrt(denom[k])
    return out


class TestRate:
    def test_zero_row(self):
        theta = np.array([[0.0, 0.0], [1.0, 2.0]])
        assert bkn_rate(theta, 0, 1) == 0.0

    def test_single_channel_unit(self):
        assert bkn_rate(np.array([[1.0], [1.0]]), 0, 1) == 1.0

    def test_hand_dot_product(self):
        theta = np.array([[1.0, 2.0], [3.0, 0.5]])
        brute = sum(theta[0, k] * theta[1, k] for k in range(2))
        assert brute == 4.0
        assert bkn_rate(theta, 0, 1) == pytest.approx(brute, abs=1e-15)

    def test_self_pair_rejected(self):
        with pytest.raises(ValueError, match="self-pair"):
            bkn_rate(np.ones((2, 2)), 0, 0)

    def test_vectorized_matches_scalar(self, rng):
        theta = rng.random((6, 3)) * 2
        pairs = [(i, j) for i in range(6) for j in range(i + 1, 6)]
        vec = bkn_rates(theta, pairs)
        for (i, j), v in zip(pairs, vec):
            assert v == pytest.approx(bkn_rate(theta, i, j), rel=1e-15)


class TestEstep:
    def test_single_channel_is_one(self):
        assert bkn_estep(np.array([[0.4], [0.9]]), 0, 1, 0) == 1.0

    def test_symmetric_channels_split_evenly(self):
        theta = np.array([[0.7, 0.7], [0.2, 0.2]])
        q = bkn_estep(theta, 0, 1)
        assert q == pytest.approx([0.5, 0.5], abs=1e-15)

    def test_hand_computed_responsibilities(self):
        theta = np.array([[1.0, 2.0], [3.0, 0.5]])
        q = bkn_estep(theta, 0, 1)
        assert q == pytest.approx([3.0 / 4.0, 1.0 / 4.0], abs=1e-15)

    def test_sums_to_one(self, rng):
        for _ in range(100):
            theta = rng.random((5, int(rng.integers(1, 6)))) * 3
            i, j = rng.choice(5, size=2, replace=False)
            assert abs(bkn_estep(theta, int(i), int(j)).sum() - 1.0) <= 1e-12

    def test_zero_rate_rejected(self):
        with pytest.raises(ValueError, match="rate 0"):
            bkn_estep(np.zeros((2, 2)), 0, 1)


class TestStep:
    def test_matches_brute_force_no_masks(self, rng):
        g = Graph.from_edge_pairs(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)])
        theta = rng.random((5, 2)) + 0.1
        assert np.abs(bkn_step(theta, g) - brute_bkn_step(theta, g)).max() < 1e-12

    def test_matches_brute_force_with_masks(self, rng):
        g = Graph.from_edge_pairs(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 3)])
        g, _ = apply_mask(g, seed=4, n_edges=2, n_nonedges=2)
        for trial in range(5):
            theta = rng.random((6, 3)) + 0.05
            assert np.abs(bkn_step(theta, g) - brute_bkn_step(theta, g)).max() < 1e-12

    def test_nonnegativity_preserved(self, rng):
        for _ in range(100):
            n = int(rng.integers(4, 20))
            g = random_graph(rng, n, 0.4)
            theta = rng.random((n, int(rng.integers(1, 5)))) * 2
            assert bkn_step(theta, g).min() >= 0.0

    def test_zero_column_stays_zero(self, rng):
        g = random_graph(rng, 8, 0.5)
        theta = rng.random((8, 3))
        theta[:, 2] = 0.0
        assert np.all(bkn_step(theta, g)[:, 2] == 0.0)

    def test_isolated_node_decays_to_zero(self):
        g = Graph.from_edge_pairs(4, [(0, 1), (1, 2), (0, 2)])
        theta = np.full((4, 2), 0.5)
        assert np.all(bkn_step(theta, g)[3] == 0.0)

    def test_zero_rate_observed_edge_rejected(self):
        g = Graph.from_edge_pairs(2, [(0, 1)])
        with pytest.raises(RuntimeError, match="rate 0"):
            bkn_step(np.zeros((2, 2)), g)


class TestMonotonicity:
    def test_objective_nondecreasing_no_masks(self, rng):
        for trial in range(10):
            n = int(rng.integers(5, 20))
            g = random_graph(rng, n, float(rng.uniform(0.15, 0.6)))
            theta = rng.random((n, int(rng.integers(1, 4))))
            ll = bkn_log_likelihood(theta, g)
            for _ in range(60):
                theta = bkn_step(theta, g)
                ll2 = bkn_log_likelihood(theta, g)
                assert ll2 >= ll - 1e-8 * abs(ll)
                ll = ll2

    def test_objective_nondecreasing_fixed_imputations(self, rng):
        for trial in range(5):
            g = random_graph(rng, 14, 0.4, n_mask_edges=3, n_mask_nonedges=3)
            theta = rng.random((14, 2))
            for _ in range(40):
                imputed = bkn_rates(theta, g.masked_pairs())
                nxt = bkn_step(theta, g)
                before = bkn_log_likelihood(theta, g, imputed=imputed)
                after = bkn_log_likelihood(nxt, g, imputed=imputed)
                assert after >= before - 1e-8 * abs(before)
                theta = nxt

    def test_bare_likelihood_can_decrease_but_penalized_rises(self):
        # two nodes, one edge: the update moves theta to (1/sqrt2, 1/sqrt2),
        # lowering A log(lam) - lam while the self-rate-penalized objective rises
        g = Graph.from_edge_pairs(2, [(0, 1)])
        theta = np.array([[0.9], [0.7]])
        nxt = bkn_step(theta, g)
        assert nxt == pytest.approx(np.full((2, 1), 2 ** -0.5), abs=1e-12)
        bare = lambda t: bkn_log_likelihood(t, g, include_self_rate=False)
        penal = lambda t: bkn_log_likelihood(t, g, include_self_rate=True)
        assert bare(nxt) < bare(theta)
        assert penal(nxt) > penal(theta)


class TestFit:
    def test_deterministic_across_threads(self, rng):
        g = random_graph(rng, 25, 0.3)
        base = dict(num_channels=3, seed=6, max_iters=50, tol=1e-9)
        a, _ = bkn_fit(g, FitConfig(threads=1, **base))
        b, _ = bkn_fit(g, FitConfig(threads=2, **base))
        assert np.array_equal(a.values, b.values)

    def test_report_and_convergence(self, rng):
        g = random_graph(rng, 15, 0.4)
        theta, rep = bkn_fit(g, FitConfig(num_channels=2, seed=1, tol=1e-5))
        assert rep.converged
        assert theta.values.min() >= 0.0

    def test_predict_scaling_leaves_auc_unchanged(self, rng):
        g = random_graph(rng, 20, 0.3)
        theta, _ = bkn_fit(g, FitConfig(num_channels=2, seed=2, max_iters=60))
        pairs = np.array([(i, j) for i in range(10) for j in range(i + 1, 10)])
        labels = np.array([1 if g.has_edge(int(i), int(j)) else 0 for i, j in pairs])
        if labels.min() == labels.max():
            pytest.skip("degenerate label draw")
        s1 = bkn_predict(theta.values, pairs)
        s2 = bkn_predict(theta.values * 3.0, pairs)
        assert np.allclose(s2, 9.0 * s1, rtol=1e-12)
        assert auc(s1, labels) == auc(s2, labels)

    def test_zero_scores_for_zero_matrix(self):
        assert np.all(bkn_predict(np.zeros((4, 2)), [(0, 1), (2, 3)]) == 0.0)
