"""EM fitting of the latent channel model.

Two fitters share one fixed-point map. fit_naive is the dense reference: it
evaluates the per-pair expectation formulas directly and costs
O(N_e K^2 + N^2 K) per sweep. fit_efficient computes the identical update in
O(K (N_n + N_e + N_m)) per sweep by caching the per-edge non-edge products
and the column means, and runs row-parallel through a compiled kernel. Both
use synchronized sweeps: every row of the next iterate is computed from the
frozen previous iterate, so results do not depend on row order or thread
count.

The per-pair expectations for a pair (i, j) and channel k are

    known edge:     [p_ik p_jk + p_ik (1 - p_jk) (1 - prod_{k' != k} (1 - p_ik' p_jk'))] / pi_ij
    known non-edge: p_ik - p_ik p_jk

and the M-step averages them over the known pairs of node i, that is
divides by N - 1 - |masked_i|. Masked pairs enter neither sums nor
denominators. An entry that is exactly 0 is a fixed point and stays 0.

A caveat worth knowing: the non-edge quantity is the joint probability that
i reaches j through k while the channel-k link is absent, not the
conditional given the missing edge (which carries an extra
1 / (1 - p_ik p_jk) factor). The linear form is what makes the cached
column-mean update possible, and it coincides with the conditional as
p_ik p_jk -> 0, but it means the sweep is not an exact
expectation-maximization step and the observed log-likelihood can dip
slightly on dense instances before settling.
"""

from __future__ import annotations

import dataclasses
import time
import warnings

import numpy as np

from . import _kernels
from .graph import Graph
from .matrices import ParamMatrix, as_param_array
from .model import log_likelihood, pair_probabilities

# Dense reference fitter allocates O(N^2 K) temporaries; refuse beyond this.
_NAIVE_ELEMENT_LIMIT = 40_000_000


@dataclasses.dataclass
class FitConfig:
    """EM hyperparameters.

    tol is the max-abs-change stopping threshold between successive iterates;
    skip_tol freezes entries already below it (0 disables skipping); init
    accepts a warm-start matrix in place of the uniform random draw.
    """

    num_channels: int
    max_iters: int = 10_000
    tol: float = 1e-4
    skip_tol: float = 1e-10
    seed: int = 0
    threads: int = 1
    init: np.ndarray | None = None
    track_loglik: bool = False

    def __post_init__(self):
        if self.num_channels < 1:
            raise ValueError("num_channels must be at least 1")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.skip_tol < 0.0:
            raise ValueError("skip_tol must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclasses.dataclass
class FitReport:
    """Convergence trace of one EM run."""

    iterations: int
    final_max_change: float
    converged: bool
    wall_time_sec: float
    loglik_trace: list[float] | None = None
    degenerate_nodes: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_max_change": self.final_max_change,
            "converged": self.converged,
            "wall_time_sec": self.wall_time_sec,
            "degenerate_nodes": list(self.degenerate_nodes),
        }


def init_params(num_nodes: int, num_channels: int, seed: int) -> np.ndarray:
    """Entrywise Uniform(0, 1) initialization, deterministic per seed."""
    rng = np.random.default_rng(seed)
    return rng.random((num_nodes, num_channels))


def estep_edge(p, i: int, j: int, k: int) -> float:
    """P(node i reaches j through channel k | the pair shares an edge).

    The leave-one-out product over other channels is recovered from the
    cached pair probability as (1 - pi_ij) / (1 - p_ik p_jk); when
    p_ik p_jk = 1 the edge is certainly carried by channel k, so the value
    is the analytic limit 1.
    """
    arr = as_param_array(p)
    if i == j:
        raise ValueError("self-pair has no E-step")
    one_minus = 1.0 - arr[i] * arr[j]
    prod = float(np.prod(one_minus))
    pi = 1.0 - prod
    if pi <= 0.0:
        raise ValueError(f"pair ({i}, {j}) has edge probability 0; conditional undefined")
    q = float(arr[i, k] * arr[j, k])
    if 1.0 - q <= 0.0:
        return 1.0
    loo = prod / (1.0 - q)
    return (q + arr[i, k] * (1.0 - arr[j, k]) * (1.0 - loo)) / pi


def estep_nonedge(p, i: int, j: int, k: int) -> float:
    """Non-edge update weight p_ik (1 - p_jk) for channel k.

    This is the joint probability that i reaches j through k while the
    channel-k link is absent; see the module docstring for why the linear
    form is used instead of the conditional given the missing edge.
    """
    arr = as_param_array(p)
    if i == j:
        raise ValueError("self-pair has no E-step")
    return float(arr[i, k] - arr[i, k] * arr[j, k])


def _dense_masks(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    n = g.num_nodes
    edge = np.zeros((n, n), dtype=bool)
    masked = np.zeros((n, n), dtype=bool)
    for i in range(n):
        edge[i, g.neighbors(i)] = True
        masked[i, g.masked_neighbors(i)] = True
    return edge, masked


def lcn_step_naive(p: np.ndarray, g: Graph) -> np.ndarray:
    """One synchronized EM sweep via direct evaluation of the E-step formulas.

    Reference implementation: materializes all pairwise quantities, computes
    each leave-one-out product over channels explicitly, and averages. Kept
    deliberately independent of the cached algebra in lcn_step_efficient so
    the two can cross-check each other.
    """
    n, nk = p.shape
    if n * n * nk > _NAIVE_ELEMENT_LIMIT:
        raise ValueError("graph too large for the dense reference fitter; use fit_efficient")
    edge, masked = _dense_masks(g)
    known = ~masked & ~np.eye(n, dtype=bool)

    q = p[:, None, :] * p[None, :, :]
    one_minus = 1.0 - q
    full = one_minus.prod(axis=2)
    pi = 1.0 - full
    if (edge & (pi <= 0.0)).any():
        i, j = np.argwhere(edge & (pi <= 0.0))[0]
        raise RuntimeError(f"observed edge ({i}, {j}) has model probability 0")

    etilde = np.empty_like(q)
    cols = np.arange(nk)
    with np.errstate(divide="ignore", invalid="ignore"):
        for k in range(nk):
            loo = one_minus[:, :, cols != k].prod(axis=2)
            e1 = (q[:, :, k] + p[:, None, k] * (1.0 - p[None, :, k]) * (1.0 - loo)) / pi
            e0 = p[:, None, k] - q[:, :, k]
            etilde[:, :, k] = np.where(edge, e1, e0)
    etilde[~known] = 0.0

    counts = known.sum(axis=1)
    pnew = np.empty_like(p)
    live = counts > 0
    pnew[live] = etilde[live].sum(axis=1) / counts[live, None]
    pnew[~live] = p[~live]
    return pnew


def lcn_step_efficient(p: np.ndarray, g: Graph, skip_tol: float = 0.0,
                       threads: int = 1) -> np.ndarray:
    """One synchronized EM sweep via the cached row-parallel kernel."""
    n = g.num_nodes
    if p.shape[0] != n:
        raise ValueError("matrix row count does not match graph")
    eptr, eidx = g.edge_csr()
    mptr, midx = g.mask_csr()
    pnew = np.empty_like(p)
    err = np.zeros(n, dtype=np.int64)
    _kernels.set_threads(threads)
    _kernels.lcn_update(p, p.mean(axis=0), eptr, eidx, mptr, midx,
                        float(skip_tol), pnew, err)
    if err.any():
        i = int(np.flatnonzero(err)[0])
        raise RuntimeError(f"observed edge ({i}, {int(err[i]) - 1}) has model probability 0")
    return pnew


def _degenerate_nodes(g: Graph) -> tuple[int, ...]:
    return tuple(int(i) for i in range(g.num_nodes) if g.num_known_pairs(i) == 0)


def _run_fit(g: Graph, cfg: FitConfig, step) -> tuple[ParamMatrix, FitReport]:
    n = g.num_nodes
    if cfg.init is not None:
        p = np.array(cfg.init, dtype=np.float64)
        if p.shape != (n, cfg.num_channels):
            raise ValueError(f"warm start shape {p.shape} does not match "
                             f"({n}, {cfg.num_channels})")
        if p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("warm start entries must lie in [0, 1]")
    else:
        p = init_params(n, cfg.num_channels, cfg.seed)
    degenerate = _degenerate_nodes(g)
    if degenerate:
        warnings.warn(f"nodes with no known pairs are left at initialization: "
                      f"{list(degenerate)}", stacklevel=3)
    trace = [log_likelihood(p, g)] if cfg.track_loglik else None
    t0 = time.perf_counter()
    iterations = 0
    max_change = np.inf
    for _ in range(cfg.max_iters):
        iterations += 1
        pnew = step(p)
        np.clip(pnew, 0.0, 1.0, out=pnew)
        max_change = float(np.max(np.abs(pnew - p))) if p.size else 0.0
        p = pnew
        if trace is not None:
            trace.append(log_likelihood(p, g))
        if max_change < cfg.tol:
            break
    wall = time.perf_counter() - t0
    report = FitReport(iterations=iterations,
                       final_max_change=max_change,
                       converged=max_change < cfg.tol,
                       wall_time_sec=wall,
                       loglik_trace=trace,
                       degenerate_nodes=degenerate)
    return ParamMatrix(p), report


def fit_naive(g: Graph, cfg: FitConfig) -> tuple[ParamMatrix, FitReport]:
    """Fit by the dense reference EM (suitable for small graphs only)."""
    return _run_fit(g, cfg, lambda p: lcn_step_naive(p, g))


def fit_efficient(g: Graph, cfg: FitConfig) -> tuple[ParamMatrix, FitReport]:
    """Fit by the cached, row-parallel EM; same fixed-point map as fit_naive."""
    return _run_fit(g, cfg, lambda p: lcn_step_efficient(p, g, cfg.skip_tol, cfg.threads))


def predict(p, pairs) -> np.ndarray:
    """Edge probabilities for the given node pairs (used on masked pairs)."""
    return pair_probabilities(p, pairs)
