import numpy as np
import pytest

from lcnet import (FitConfig, Graph, apply_mask, estep_edge, estep_nonedge,
                   fit_efficient, fit_naive, init_params, mask_pairs, predict)
from lcnet.em import lcn_step_efficient, lcn_step_naive

from conftest import mc_latent_reach, random_graph


def manual_update_entry(p, g, i, k):
    """Single-entry oracle: average the per-pair expectations over known pairs."""
    masked = set(int(x) for x in g.masked_neighbors(i))
    nbrs = set(int(x) for x in g.neighbors(i))
    total, count = 0.0, 0
    for j in range(g.num_nodes):
        if j == i or j in masked:
            continue
        count += 1
        total += estep_edge(p, i, j, k) if j in nbrs else estep_nonedge(p, i, j, k)
    return total / count


class TestEstepEdge:
    def test_certain_single_channel(self):
        p = np.array([[1.0], [1.0]])
        assert estep_edge(p, 0, 1, 0) == 1.0

    def test_zero_entry_gives_zero(self):
        p = np.array([[0.0, 0.6], [0.5, 0.5]])
        assert estep_edge(p, 0, 1, 0) == 0.0

    def test_half_half_frozen_value(self):
        # (0.25 + 0.5*0.5*0.25) / 0.4375, Monte-Carlo checked below
        p = np.array([[0.5, 0.5], [0.5, 0.5]])
        assert estep_edge(p, 0, 1, 0) == pytest.approx(0.3125 / 0.4375, abs=1e-15)

    def test_conditional_monte_carlo(self):
        p = np.array([[0.5, 0.5], [0.5, 0.5]])
        edge, reach_i, _ = mc_latent_reach(p[0], p[1], ndraws=2 * 10**6, seed=555)
        freq = reach_i[edge, 0].mean()
        se = np.sqrt(freq * (1 - freq) / edge.sum())
        assert abs(estep_edge(p, 0, 1, 0) - freq) < 3 * se

    def test_saturated_channel_limit(self):
        p = np.array([[1.0, 0.3], [1.0, 0.4]])
        assert estep_edge(p, 0, 1, 0) == 1.0

    def test_zero_probability_pair_rejected(self):
        with pytest.raises(ValueError, match="probability 0"):
            estep_edge(np.zeros((2, 2)), 0, 1, 0)


class TestEstepNonedge:
    def test_saturated_neighbour_gives_zero(self):
        p = np.array([[0.7], [1.0]])
        assert estep_nonedge(p, 0, 1, 0) == 0.0

    def test_detached_neighbour_gives_own_probability(self):
        p = np.array([[0.7], [0.0]])
        assert estep_nonedge(p, 0, 1, 0) == pytest.approx(0.7)

    def test_half_half_formula_value(self):
        p = np.array([[0.5], [0.5]])
        assert estep_nonedge(p, 0, 1, 0) == pytest.approx(0.25, abs=1e-15)

    def test_linear_form_differs_from_conditional(self):
        # The update weight is the joint P(reach, link absent); the true
        # conditional given a missing edge is p(1-q)/(1-pq) = 1/3 here.
        p = np.array([[0.5], [0.5]])
        edge, reach_i, _ = mc_latent_reach(p[0], p[1], ndraws=10**6, seed=556)
        freq = reach_i[~edge, 0].mean()
        assert abs(freq - 1.0 / 3.0) < 0.002
        assert estep_nonedge(p, 0, 1, 0) == pytest.approx(0.25)


class TestStepOracle:
    def test_both_steps_match_manual_average(self, rng):
        for trial in range(10):
            n = int(rng.integers(5, 15))
            g = random_graph(rng, n, 0.4)
            if trial % 2 == 0 and g.num_edges > 3:
                g, _ = apply_mask(g, seed=trial, n_edges=2, n_nonedges=2)
            p = rng.random((n, 3))
            naive = lcn_step_naive(p, g)
            eff = lcn_step_efficient(p, g, skip_tol=0.0)
            for _ in range(5):
                i = int(rng.integers(n))
                k = int(rng.integers(3))
                want = manual_update_entry(p, g, i, k)
                assert naive[i, k] == pytest.approx(want, abs=1e-12)
                assert eff[i, k] == pytest.approx(want, abs=1e-12)

    def test_masked_denominator(self):
        # row 0 has one masked pair: its update averages over N - 1 - 1 pairs
        g = Graph.from_edge_pairs(4, [(0, 1), (0, 2), (1, 2), (2, 3)])
        g_masked, _ = mask_pairs(g, [(0, 3, 0)])
        p = np.full((4, 2), 0.5)
        expected = (estep_edge(p, 0, 1, 0) + estep_edge(p, 0, 2, 0)) / 2.0
        got = lcn_step_efficient(p, g_masked, 0.0)[0, 0]
        assert got == pytest.approx(expected, abs=1e-13)


class TestFixedPoints:
    def test_zero_column_stays_zero_exactly(self, rng):
        g = random_graph(rng, 12, 0.4)
        p = rng.random((12, 3))
        p[:, 1] = 0.0
        cfg = FitConfig(num_channels=3, max_iters=40, tol=1e-12, init=p, skip_tol=0.0)
        for fitter in (fit_naive, fit_efficient):
            fitted, _ = fitter(g, cfg)
            assert np.all(fitted.values[:, 1] == 0.0)

    def test_zero_entry_stays_zero_exactly(self, rng):
        g = random_graph(rng, 10, 0.5)
        p = rng.random((10, 2))
        p[3, 0] = 0.0
        stepped = lcn_step_efficient(p, g, skip_tol=0.0)
        assert stepped[3, 0] == 0.0
        assert lcn_step_naive(p, g)[3, 0] == 0.0

    def test_complete_graph_saturated_converges_first_iteration(self):
        n = 5
        g = Graph.from_edge_pairs(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
        cfg = FitConfig(num_channels=2, init=np.ones((n, 2)), tol=1e-4)
        fitted, rep = fit_efficient(g, cfg)
        assert rep.iterations == 1 and rep.converged
        assert np.all(fitted.values == 1.0)


class TestTwoNodeProblem:
    def test_converges_to_grid_search_maximum(self):
        # single edge, one channel: the likelihood log(p0 p1) is maximized on
        # the boundary p0 = p1 = 1; a coarse grid confirms, and EM lands there
        g = Graph.from_edge_pairs(2, [(0, 1)])
        grid = np.linspace(0.0, 1.0, 101)
        best = max(
            (np.log(a * b) if a * b > 0 else -np.inf, a, b)
            for a in grid for b in grid)
        assert best[1] == 1.0 and best[2] == 1.0
        cfg = FitConfig(num_channels=1, seed=3, tol=1e-10, track_loglik=True)
        fitted, rep = fit_efficient(g, cfg)
        assert fitted.values == pytest.approx(np.ones((2, 1)), abs=1e-9)
        trace = np.array(rep.loglik_trace)
        assert np.all(np.diff(trace) >= -1e-12)
        assert trace[-1] == pytest.approx(best[0], abs=1e-9)


class TestOracleEquivalence:
    def test_iterates_match_over_100_sweeps(self, rng):
        for trial in range(4):
            n = int(rng.integers(10, 30))
            g = random_graph(rng, n, 0.3)
            p_a = init_params(n, 4, seed=trial)
            p_b = p_a.copy()
            for _ in range(100):
                p_a = np.clip(lcn_step_naive(p_a, g), 0.0, 1.0)
                p_b = np.clip(lcn_step_efficient(p_b, g, 0.0), 0.0, 1.0)
                assert np.abs(p_a - p_b).max() < 1e-10


class TestSkipRule:
    def test_entries_below_skip_tol_frozen(self, rng):
        g = random_graph(rng, 10, 0.4)
        p = rng.random((10, 2))
        p[2, 1] = 5e-11
        frozen = lcn_step_efficient(p, g, skip_tol=1e-10)
        assert frozen[2, 1] == 5e-11
        updated = lcn_step_efficient(p, g, skip_tol=0.0)
        assert updated[2, 1] != 5e-11

    def test_skip_tol_against_disabled_at_tol_level(self, rng):
        g = random_graph(rng, 25, 0.3)
        base = dict(num_channels=4, seed=9, tol=1e-6, max_iters=5000)
        with_skip, _ = fit_efficient(g, FitConfig(skip_tol=1e-10, **base))
        without, _ = fit_efficient(g, FitConfig(skip_tol=0.0, **base))
        assert np.abs(with_skip.values - without.values).max() < 1e-4


class TestRangePreservation:
    def test_single_steps_stay_in_unit_interval(self, rng):
        worst_low, worst_high = 0.0, 1.0
        for trial in range(100):
            n = int(rng.integers(4, 30))
            g = random_graph(rng, n, float(rng.uniform(0.1, 0.7)))
            p = rng.random((n, int(rng.integers(1, 6))))
            stepped = lcn_step_efficient(p, g, skip_tol=0.0)
            worst_low = min(worst_low, float(stepped.min()))
            worst_high = max(worst_high, float(stepped.max()))
        assert worst_low >= -1e-12 and worst_high <= 1.0 + 1e-12


class TestDeterminism:
    def test_thread_count_does_not_change_result(self, rng):
        g = random_graph(rng, 40, 0.2)
        base = dict(num_channels=4, seed=11, max_iters=60, tol=1e-9)
        one, _ = fit_efficient(g, FitConfig(threads=1, **base))
        two, _ = fit_efficient(g, FitConfig(threads=2, **base))
        assert np.array_equal(one.values, two.values)

    def test_same_seed_same_result(self, rng):
        g = random_graph(rng, 20, 0.3)
        cfg = FitConfig(num_channels=2, seed=5, max_iters=40)
        a, _ = fit_efficient(g, cfg)
        b, _ = fit_efficient(g, cfg)
        assert np.array_equal(a.values, b.values)


class TestDegenerateNodes:
    def test_fully_masked_node_left_at_init_with_warning(self):
        g = Graph.from_edge_pairs(3, [(0, 1), (1, 2), (0, 2)])
        g_masked, _ = mask_pairs(g, [(0, 2, 1), (1, 2, 1)])
        assert g_masked.num_known_pairs(2) == 0
        init = np.array([[0.3], [0.4], [0.6]])
        cfg = FitConfig(num_channels=1, init=init, max_iters=30, tol=1e-9)
        with pytest.warns(UserWarning, match="left at initialization"):
            fitted, rep = fit_efficient(g_masked, cfg)
        assert rep.degenerate_nodes == (2,)
        assert fitted.values[2, 0] == 0.6


class TestPredict:
    def test_zero_matrix_scores_zero(self):
        assert np.all(predict(np.zeros((4, 2)), [(0, 1), (2, 3)]) == 0.0)

    def test_saturated_rows_score_one(self):
        assert np.all(predict(np.ones((3, 2)), [(0, 1), (1, 2)]) == 1.0)

    def test_self_pair_rejected(self):
        with pytest.raises(ValueError, match="self-pair"):
            predict(np.ones((3, 2)), [(1, 1)])


class TestFitConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            FitConfig(num_channels=0)
        with pytest.raises(ValueError):
            FitConfig(num_channels=1, tol=0.0)
        with pytest.raises(ValueError):
            FitConfig(num_channels=1, skip_tol=-1.0)

    def test_warm_start_used(self, rng):
        g = random_graph(rng, 8, 0.5)
        init = rng.random((8, 2))
        cfg = FitConfig(num_channels=2, init=init, max_iters=1, tol=1e-12, skip_tol=0.0)
        fitted, _ = fit_efficient(g, cfg)
        assert np.allclose(fitted.values, np.clip(lcn_step_efficient(init, g, 0.0), 0, 1))

    def test_report_fields(self, rng):
        g = random_graph(rng, 10, 0.4)
        cfg = FitConfig(num_channels=2, seed=0, max_iters=7, tol=1e-12, track_loglik=True)
        _, rep = fit_efficient(g, cfg)
        assert rep.iterations == 7 and not rep.converged
        assert rep.wall_time_sec >= 0.0
        assert len(rep.loglik_trace) == rep.iterations + 1
