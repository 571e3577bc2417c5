"""Synthetic graph generators and the closed-form block-model AUC ceiling.

generate_sbm draws a stochastic block model with equal-size contiguous
blocks; generate_lcn draws a parameter matrix from the main/background
channel recipe and then samples the graph through the latent channel story
itself (each node independently reaches toward the other through each
channel, and an edge appears when some channel is reached from both sides).
Sampling through the latent indicators keeps the generator an independent
witness for the closed-form edge probability.
"""

from __future__ import annotations

import dataclasses
import logging
from typing import Callable

import numpy as np

from .graph import Graph, NodeMetadata
from .matrices import ParamMatrix

logger = logging.getLogger(__name__)

# Generative recipe constants: skewed main-channel counts are
# 1 + BetaBinomial(a, b, n); dense background strengths are Beta(a, b).
MAIN_COUNT_BETA = (1.0, 10.0)
MAIN_COUNT_TRIALS = 15
UNIFORM_MAIN_COUNT = 3
BACKGROUND_BETA = (1.0, 20.0)


@dataclasses.dataclass(frozen=True)
class SbmSpec:
    """Equal-block stochastic block model settings."""

    num_blocks: int
    block_size: int
    p_in: float
    p_out: float
    seed: int = 0

    def __post_init__(self):
        if self.num_blocks < 1 or self.block_size < 1:
            raise ValueError("num_blocks and block_size must be at least 1")
        for name in ("p_in", "p_out"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    @property
    def num_nodes(self) -> int:
        return self.num_blocks * self.block_size

    def block_of(self, i: int) -> int:
        return int(i) // self.block_size

    def true_edge_probability(self, i: int, j: int) -> float:
        if i == j:
            raise ValueError("no self-pairs")
        return self.p_in if self.block_of(i) == self.block_of(j) else self.p_out


def generate_sbm(spec: SbmSpec) -> tuple[Graph, Callable[[int, int], float]]:
    """Draw a graph where each pair is independently Bernoulli by block
    co-membership; returns the graph and the true edge-probability accessor."""
    rng = np.random.default_rng(spec.seed)
    n = spec.num_nodes
    rows = []
    for i in range(n - 1):
        m = n - 1 - i
        probs = np.full(m, spec.p_out)
        block_end = (spec.block_of(i) + 1) * spec.block_size
        same = block_end - (i + 1)
        if same > 0:
            probs[:same] = spec.p_in
        hits = np.flatnonzero(rng.random(m) < probs)
        if hits.size:
            pair = np.empty((hits.size, 2), dtype=np.int64)
            pair[:, 0] = i
            pair[:, 1] = i + 1 + hits
            rows.append(pair)
    edges = np.concatenate(rows) if rows else np.empty((0, 2), dtype=np.int64)
    return Graph.from_edge_pairs(n, edges), spec.true_edge_probability


def block_metadata(spec: SbmSpec) -> NodeMetadata:
    """Per-node block labels, usable as heatmap grouping metadata."""
    return NodeMetadata({i: str(spec.block_of(i)) for i in range(spec.num_nodes)})


@dataclasses.dataclass(frozen=True)
class LcnGenSpec:
    """Generative latent channel settings.

    Each node gets a handful of main channels with Uniform(0, 1) strengths;
    the remaining channels are 0 (sparse) or Beta(1, 20) draws (dense). The
    main-channel count is 3 for the uniform degree profile and
    1 + BetaBinomial(1, 10, 15) for the skewed profile.
    """

    num_nodes: int
    num_channels: int
    sparsity: str = "sparse"
    degree_profile: str = "skewed"
    seed: int = 0

    def __post_init__(self):
        if self.num_nodes < 1 or self.num_channels < 1:
            raise ValueError("num_nodes and num_channels must be at least 1")
        if self.sparsity not in ("sparse", "dense"):
            raise ValueError("sparsity must be 'sparse' or 'dense'")
        if self.degree_profile not in ("skewed", "uniform"):
            raise ValueError("degree_profile must be 'skewed' or 'uniform'")
        if self.degree_profile == "uniform" and self.num_channels < UNIFORM_MAIN_COUNT:
            raise ValueError(f"uniform profile needs at least {UNIFORM_MAIN_COUNT} channels")


def _draw_true_params(spec: LcnGenSpec, rng: np.random.Generator) -> np.ndarray:
    n, k = spec.num_nodes, spec.num_channels
    if spec.degree_profile == "skewed":
        a, b = MAIN_COUNT_BETA
        counts = 1 + rng.binomial(MAIN_COUNT_TRIALS, rng.beta(a, b, size=n))
        over = counts > k
        if over.any():
            logger.warning("capped main-channel count at %d for %d nodes", k, int(over.sum()))
            counts = np.minimum(counts, k)
    else:
        counts = np.full(n, UNIFORM_MAIN_COUNT)
    p = np.zeros((n, k), dtype=np.float64)
    if spec.sparsity == "dense":
        a, b = BACKGROUND_BETA
        p[:] = rng.beta(a, b, size=(n, k))
    for i in range(n):
        chans = rng.choice(k, size=int(counts[i]), replace=False)
        p[i, chans] = rng.random(int(counts[i]))
    return p


def _sample_latent_graph(p: np.ndarray, rng: np.random.Generator) -> Graph:
    """Sample a graph by drawing the per-pair latent reach indicators."""
    n, k = p.shape
    rows = []
    for i in range(n - 1):
        m = n - 1 - i
        reach_i = rng.random((m, k)) < p[i]
        reach_j = rng.random((m, k)) < p[i + 1:]
        hit = (reach_i & reach_j).any(axis=1)
        js = np.flatnonzero(hit)
        if js.size:
            pair = np.empty((js.size, 2), dtype=np.int64)
            pair[:, 0] = i
            pair[:, 1] = i + 1 + js
            rows.append(pair)
    edges = np.concatenate(rows) if rows else np.empty((0, 2), dtype=np.int64)
    return Graph.from_edge_pairs(n, edges)


def generate_lcn(spec: LcnGenSpec) -> tuple[Graph, ParamMatrix]:
    """Draw the true parameter matrix and a graph sampled from it."""
    rng = np.random.default_rng(spec.seed)
    p = _draw_true_params(spec, rng)
    return _sample_latent_graph(p, rng), ParamMatrix(p)


def sbm_bayes_auc(spec: SbmSpec) -> float:
    """AUC of the optimal block-co-membership predictor, in closed form.

    With pi_B the probability that a uniformly drawn pair is within-block and
    q_* the complements, the tie-aware AUC of scoring by co-membership is

        [p_in q_out pi_B q_B + (p_in q_in pi_B^2 + p_out q_out q_B^2) / 2]
        / [p_in q_out pi_B q_B + p_in q_in pi_B^2 + p_out q_out q_B^2
           + p_out q_in q_B pi_B].

    Degenerate settings where no edge/non-edge pair exists return 0.5.
    """
    if spec.num_nodes < 2:
        raise ValueError("need at least two nodes")
    pi_b = (spec.block_size - 1) / (spec.num_nodes - 1)
    q_b = 1.0 - pi_b
    p_in, p_out = spec.p_in, spec.p_out
    q_in, q_out = 1.0 - p_in, 1.0 - p_out
    num = p_in * q_out * pi_b * q_b + 0.5 * (p_in * q_in * pi_b ** 2
                                             + p_out * q_out * q_b ** 2)
    den = (p_in * q_out * pi_b * q_b + p_in * q_in * pi_b ** 2
           + p_out * q_out * q_b ** 2 + p_out * q_in * q_b * pi_b)
    if den == 0.0:
        return 0.5
    return num / den
