"""Latent channel network probability model.

Node i attaches to channel k with probability p[i, k]; a pair shares an
observed edge when the two nodes connect through at least one channel, so

    pi_ij = 1 - prod_k (1 - p[i, k] * p[j, k]).

Products are evaluated in linear space (entries live in [0, 1], so underflow
to exactly 0 is a legitimate limit). All functions here are pure and safe to
call concurrently.
"""

from __future__ import annotations

import numpy as np

from .graph import Graph
from .matrices import as_param_array

# Row-block size used to keep pairwise computations at O(block * N) memory.
_PAIR_CHUNK = 1 << 16


def edge_probability(p, i: int, j: int) -> float:
    """Probability that nodes i and j share an edge: 1 - prod_k(1 - p_ik p_jk)."""
    arr = as_param_array(p)
    if i == j:
        raise ValueError(f"edge probability undefined for self-pair ({i}, {j})")
    prod = float(np.prod(1.0 - arr[i] * arr[j]))
    return 1.0 - prod


def pair_probabilities(p, pairs) -> np.ndarray:
    """Vectorized edge probabilities for an (M, 2) array of node pairs."""
    arr = as_param_array(p)
    pr = np.asarray(pairs, dtype=np.int64)
    if pr.ndim != 2 or pr.shape[1] != 2:
        raise ValueError("pairs must be an (M, 2) array")
    if pr.size and (pr[:, 0] == pr[:, 1]).any():
        bad = pr[(pr[:, 0] == pr[:, 1]).argmax()]
        raise ValueError(f"self-pair ({bad[0]}, {bad[1]}) rejected")
    out = np.empty(pr.shape[0], dtype=np.float64)
    for start in range(0, pr.shape[0], _PAIR_CHUNK):
        sl = slice(start, min(pr.shape[0], start + _PAIR_CHUNK))
        prod = np.prod(1.0 - arr[pr[sl, 0]] * arr[pr[sl, 1]], axis=1)
        out[sl] = 1.0 - prod
    return out


def log_likelihood(p, g: Graph) -> float:
    """Observed-data log-likelihood over known pairs.

    Sums e_ij log(pi_ij) + (1 - e_ij) log(1 - pi_ij) over unordered pairs with
    known status; masked pairs contribute nothing. Returns -inf when a known
    edge has probability 0 (or a known non-edge probability 1), which is a
    representable outcome rather than an error. Cost is O(N^2 K).
    """
    arr = as_param_array(p)
    n = g.num_nodes
    if arr.shape[0] != n:
        raise ValueError(f"matrix has {arr.shape[0]} rows for a {n}-node graph")
    k = arr.shape[1]
    total = 0.0
    block = max(1, int(4_000_000 // max(1, n)))
    for start in range(0, n, block):
        stop = min(n, start + block)
        rows = np.arange(start, stop)
        om = np.ones((stop - start, n), dtype=np.float64)
        for kk in range(k):
            om *= 1.0 - np.outer(arr[rows, kk], arr[:, kk])
        known = np.zeros((stop - start, n), dtype=bool)
        edge = np.zeros((stop - start, n), dtype=bool)
        for bi, i in enumerate(rows):
            known[bi, i + 1:] = True
            known[bi, g.masked_neighbors(i)] = False
            edge[bi, g.neighbors(i)] = True
        with np.errstate(divide="ignore"):
            e_terms = np.log(1.0 - om[known & edge])
            ne_terms = np.log(om[known & ~edge])
        total += float(e_terms.sum()) + float(ne_terms.sum())
    return total


def channel_posterior(p, i: int, j: int, k: int | None = None):
    """Probability that an observed edge (i, j) is carried by channel k.

    theta_ijk = p_ik p_jk / pi_ij. The per-channel values sum to at least 1
    because an edge pair connects through at least one channel but may
    connect through several. Undefined (raises) when pi_ij = 0.
    """
    arr = as_param_array(p)
    if i == j:
        raise ValueError(f"channel posterior undefined for self-pair ({i}, {j})")
    contrib = arr[i] * arr[j]
    pi = 1.0 - float(np.prod(1.0 - contrib))
    if pi <= 0.0:
        raise ValueError(f"pair ({i}, {j}) has edge probability 0; channel posterior undefined")
    theta = contrib / pi
    return theta if k is None else float(theta[k])


def channel_size(p, k: int | None = None):
    """Column sum S_k = sum_i p_ik: expected connections for a fully attached newcomer."""
    arr = as_param_array(p)
    sums = arr.sum(axis=0)
    return sums if k is None else float(sums[k])


def expected_connections(p, g: Graph, i: int, k: int | None = None):
    """Expected number of node i's observed edges carried by each channel.

    C_ik = sum over known neighbours j of channel_posterior(p, i, j, k); the
    total over channels is at least degree(i). Raises if any incident known
    edge has model probability 0, listing the offending pair.
    """
    arr = as_param_array(p)
    nbrs = g.neighbors(i)
    out = np.zeros(arr.shape[1], dtype=np.float64)
    for j in nbrs:
        contrib = arr[i] * arr[j]
        pi = 1.0 - float(np.prod(1.0 - contrib))
        if pi <= 0.0:
            raise ValueError(f"observed edge ({i}, {int(j)}) has model probability 0")
        out += contrib / pi
    return out if k is None else float(out[k])


def channel_usage(p, threshold: float) -> np.ndarray:
    """Per-node count of channels with attachment strictly above threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    arr = as_param_array(p)
    return (arr > threshold).sum(axis=1)


def sparsity(p) -> float:
    """Fraction of exactly-zero entries in the parameter matrix."""
    arr = as_param_array(p)
    if arr.size == 0:
        return 0.0
    return float((arr == 0.0).mean())
