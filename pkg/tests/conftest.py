"""Shared fixtures and independent oracles used across the test suite.

The Monte-Carlo helpers sample the latent channel story directly (each node
draws reach indicators toward the other per channel; an edge needs some
channel reached from both sides), so they are independent witnesses for the
closed-form expressions under test.
"""

import numpy as np
import pytest

from lcnet import Graph


def random_graph(rng, n, density, n_mask_edges=0, n_mask_nonedges=0):
    """Erdos-Renyi style test graph with an optional masked holdout."""
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < density
    pairs = np.column_stack([iu[keep], ju[keep]])
    if pairs.shape[0] == 0:
        pairs = np.array([[0, 1]])
    g = Graph.from_edge_pairs(n, pairs)
    if n_mask_edges or n_mask_nonedges:
        from lcnet import apply_mask
        g, _ = apply_mask(g, seed=int(rng.integers(2**31)),
                          n_edges=min(n_mask_edges, g.num_edges),
                          n_nonedges=n_mask_nonedges)
    return g


def exhaustive_auc(scores, labels):
    """O(P*N) pair enumeration with half credit for ties."""
    scores = list(scores)
    labels = list(labels)
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                total += 1.0
            elif sp == sn:
                total += 0.5
    return total / (len(pos) * len(neg))


def mc_latent_reach(p_i, p_j, ndraws, seed):
    """Sample the latent reach indicators for one pair.

    Returns (edge, reach_i, both) boolean arrays of shape (ndraws,),
    (ndraws, K), (ndraws, K): whether the pair got an edge, whether node i
    reached toward j through each channel, and whether both sides reached.
    """
    rng = np.random.default_rng(seed)
    k = len(p_i)
    reach_i = rng.random((ndraws, k)) < np.asarray(p_i)
    reach_j = rng.random((ndraws, k)) < np.asarray(p_j)
    both = reach_i & reach_j
    edge = both.any(axis=1)
    return edge, reach_i, both


def mc_edge_probability(p_i, p_j, ndraws, seed):
    """Monte-Carlo edge probability and its standard error."""
    edge, _, _ = mc_latent_reach(p_i, p_j, ndraws, seed)
    freq = edge.mean()
    se = np.sqrt(max(freq * (1 - freq), 1e-12) / ndraws)
    return freq, se


def brute_log_likelihood(p, g):
    """Direct per-pair evaluation of the observed log-likelihood."""
    import math
    n = g.num_nodes
    total = 0.0
    for i in range(n):
        masked = set(int(x) for x in g.masked_neighbors(i))
        nbrs = set(int(x) for x in g.neighbors(i))
        for j in range(i + 1, n):
            if j in masked:
                continue
            prod = 1.0
            for k in range(p.shape[1]):
                prod *= 1.0 - p[i, k] * p[j, k]
            pi = 1.0 - prod
            if j in nbrs:
                total += math.log(pi) if pi > 0 else float("-inf")
            else:
                total += math.log(prod) if prod > 0 else float("-inf")
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
