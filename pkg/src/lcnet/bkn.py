"""Poisson factorization baseline (BKN) with unknown-edge imputation.

Edges are modeled as independent Poisson counts with rate
lambda_ij = sum_k theta_ik theta_jk. The EM step computes channel
responsibilities q_ijk = theta_ik theta_jk / lambda_ij for every known edge
and updates

    theta_ik <- (sum_j A_ij q_ijk) / sqrt(sum_ij A_ij q_ijk),

with the denominator accumulated over ordered pairs (self-pairs carry
A_ii = 0 and drop out). Unknown pairs are handled by imputing
A~_ij = lambda_ij once per sweep and treating the imputed value as data for
that sweep, which keeps the per-iteration cost at O(K (N_n + N_e + N_m)).

Note the closed-form update ascends the Poisson objective that includes the
self-pair rate penalty, sum over known pairs of (A_ij log lambda_ij -
lambda_ij) minus half of sum_i lambda_ii; bkn_log_likelihood exposes that
objective (the penalty can be switched off for reporting).
"""

from __future__ import annotations

import time

import numpy as np

from . import _kernels
from .em import FitConfig, FitReport, init_params
from .graph import Graph
from .matrices import BknParams, as_param_array


def bkn_rate(theta, i: int, j: int) -> float:
    """Poisson rate lambda_ij = sum_k theta_ik theta_jk."""
    arr = as_param_array(theta)
    if i == j:
        raise ValueError(f"rate undefined for self-pair ({i}, {j})")
    return float(arr[i] @ arr[j])


def bkn_rates(theta, pairs) -> np.ndarray:
    """Vectorized rates for an (M, 2) array of node pairs."""
    arr = as_param_array(theta)
    pr = np.asarray(pairs, dtype=np.int64)
    if pr.ndim != 2 or pr.shape[1] != 2:
        raise ValueError("pairs must be an (M, 2) array")
    if pr.size and (pr[:, 0] == pr[:, 1]).any():
        bad = pr[(pr[:, 0] == pr[:, 1]).argmax()]
        raise ValueError(f"self-pair ({bad[0]}, {bad[1]}) rejected")
    return np.einsum("mk,mk->m", arr[pr[:, 0]], arr[pr[:, 1]])


def bkn_estep(theta, i: int, j: int, k: int | None = None):
    """Channel responsibilities q_ijk = theta_ik theta_jk / lambda_ij."""
    arr = as_param_array(theta)
    if i == j:
        raise ValueError("self-pair has no E-step")
    contrib = arr[i] * arr[j]
    lam = float(contrib.sum())
    if lam <= 0.0:
        raise ValueError(f"pair ({i}, {j}) has rate 0; responsibilities undefined")
    q = contrib / lam
    return q if k is None else float(q[k])


def bkn_step(theta: np.ndarray, g: Graph, threads: int = 1) -> np.ndarray:
    """One synchronized impute + E + M sweep of the factorization EM."""
    n = g.num_nodes
    if theta.shape[0] != n:
        raise ValueError("matrix row count does not match graph")
    eptr, eidx = g.edge_csr()
    mptr, midx = g.mask_csr()
    numer = np.empty_like(theta)
    err = np.zeros(n, dtype=np.int64)
    _kernels.set_threads(threads)
    _kernels.bkn_accumulate(theta, eptr, eidx, mptr, midx, numer, err)
    if err.any():
        i = int(np.flatnonzero(err)[0])
        raise RuntimeError(f"observed edge ({i}, {int(err[i]) - 1}) has rate 0")
    denom = numer.sum(axis=0)
    new = np.zeros_like(theta)
    live = denom > 0.0
    new[:, live] = numer[:, live] / np.sqrt(denom[live])
    return new


def bkn_fit(g: Graph, cfg: FitConfig) -> tuple[BknParams, FitReport]:
    """Fit intensities by EM with per-sweep imputation of unknown edges.

    Initialization is entrywise Uniform(0, 1) from the seed, and the stopping
    rule is max-abs change below cfg.tol, mirroring the latent channel
    fitters so model comparisons share their configuration. skip_tol is not
    used here (a zero entry is already a fixed point of the update).
    """
    n = g.num_nodes
    if cfg.init is not None:
        theta = np.array(cfg.init, dtype=np.float64)
        if theta.shape != (n, cfg.num_channels):
            raise ValueError(f"warm start shape {theta.shape} does not match "
                             f"({n}, {cfg.num_channels})")
        if theta.min() < 0.0:
            raise ValueError("warm start intensities must be nonnegative")
    else:
        theta = init_params(n, cfg.num_channels, cfg.seed)
    trace = [bkn_log_likelihood(theta, g)] if cfg.track_loglik else None
    t0 = time.perf_counter()
    iterations = 0
    max_change = np.inf
    for _ in range(cfg.max_iters):
        iterations += 1
        new = bkn_step(theta, g, cfg.threads)
        max_change = float(np.max(np.abs(new - theta))) if theta.size else 0.0
        theta = new
        if trace is not None:
            trace.append(bkn_log_likelihood(theta, g))
        if max_change < cfg.tol:
            break
    wall = time.perf_counter() - t0
    report = FitReport(iterations=iterations,
                       final_max_change=max_change,
                       converged=max_change < cfg.tol,
                       wall_time_sec=wall,
                       loglik_trace=trace)
    return BknParams(theta), report


def bkn_predict(theta, pairs) -> np.ndarray:
    """Edge scores for ranking: the Poisson rates of the given pairs.

    Rates have no unique probability interpretation, but AUC evaluation only
    uses their order, which is invariant to rescaling theta.
    """
    return bkn_rates(theta, pairs)


def bkn_log_likelihood(theta, g: Graph, imputed: np.ndarray | None = None,
                       include_self_rate: bool = True) -> float:
    """Poisson log-likelihood sum_ij (A_ij log lambda_ij - lambda_ij).

    Runs over unordered known pairs; masked pairs are excluded unless
    `imputed` supplies fixed pseudo-counts aligned with g.masked_pairs().
    With include_self_rate the half self-rate penalty, minus one half of
    sum_i lambda_ii, is included; that variant is the objective the EM update
    ascends. Constant terms that do not depend on theta are dropped.
    Cost is O(N^2 K).

    A pseudo-count below 1e-12 whose rate underflows to exactly 0 contributes
    its vanishing-limit bound -745 * count instead of -inf: for iterates of
    this EM a positive pseudo-count implies a mathematically positive rate,
    and |count * log(rate)| <= 745 * count for any representable positive
    rate, so the bound is tight at the numeric floor. Larger pseudo-counts
    against a zero rate still yield -inf.
    """
    arr = as_param_array(theta)
    n = g.num_nodes
    if arr.shape[0] != n:
        raise ValueError(f"matrix has {arr.shape[0]} rows for a {n}-node graph")
    total = 0.0
    block = max(1, int(4_000_000 // max(1, n)))
    with np.errstate(divide="ignore"):
        for start in range(0, n, block):
            stop = min(n, start + block)
            rows = np.arange(start, stop)
            lam = arr[rows] @ arr.T
            known = np.zeros((stop - start, n), dtype=bool)
            edge = np.zeros((stop - start, n), dtype=bool)
            for bi, i in enumerate(rows):
                known[bi, i + 1:] = True
                known[bi, g.masked_neighbors(i)] = False
                edge[bi, g.neighbors(i)] = True
            e_known = known & edge
            total += float(np.log(lam[e_known]).sum()) - float(lam[known].sum())
        if imputed is not None:
            mp = g.masked_pairs()
            imputed = np.asarray(imputed, dtype=np.float64)
            if imputed.shape != (mp.shape[0],):
                raise ValueError("imputed values must align with g.masked_pairs()")
            lam_m = np.einsum("mk,mk->m", arr[mp[:, 0]], arr[mp[:, 1]])
            log_terms = np.zeros_like(lam_m)
            pos = imputed > 0.0
            live = pos & (lam_m > 0.0)
            log_terms[live] = imputed[live] * np.log(lam_m[live])
            underflow = pos & (lam_m == 0.0)
            tiny = underflow & (imputed < 1e-12)
            log_terms[tiny] = -745.0 * imputed[tiny]
            log_terms[underflow & ~tiny] = -np.inf
            total += float(log_terms.sum()) - float(lam_m.sum())
    if include_self_rate:
        total -= 0.5 * float((arr * arr).sum())
    return total
