"""Compiled inner loops for the row-parallel EM updates.

Each kernel reads a frozen previous iterate and writes disjoint rows of the
next one, so results are bitwise identical for any thread count. Kernels set
an error code per row instead of raising; callers translate codes into
exceptions.
"""

from __future__ import annotations

import numba
import numpy as np

# The default TBB layer warns on this platform's TBB version; workqueue is
# always available and sufficient for row-parallel loops.
numba.config.THREADING_LAYER = "workqueue"

from numba import njit, prange  # noqa: E402


def set_threads(n: int) -> None:
    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(max(1, min(int(n), limit)))


@njit(parallel=True, cache=True)
def lcn_update(p, pbar, eptr, eidx, mptr, midx, skip_tol, pnew, err):
    """One synchronized latent-channel EM sweep into pnew.

    For each incident edge the kernel computes the non-edge product
    prod_k (1 - p_ik p_jk) once, then recovers every channel's leave-one-out
    product through the cached identity prod / (1 - p_ik p_jk) and adds the
    edge term p_ik (1 - (1 - p_jk) loo_k) / pi_ij (channels innermost, so
    the neighbour row is read contiguously). The non-edge side uses the
    cached column means pbar; masked pairs are excluded from both the sums
    and the denominator. Entries below skip_tol are carried over unchanged.
    err[i] is set to j + 1 if an observed edge (i, j) has model
    probability 0.
    """
    n, nk = p.shape
    for i in prange(n):
        e0 = eptr[i]
        ne = eptr[i + 1] - e0
        m0 = mptr[i]
        nm = mptr[i + 1] - m0
        err[i] = 0
        denom = n - nm - 1
        active = np.empty(nk, dtype=np.int64)
        n_act = 0
        for k in range(nk):
            pnew[i, k] = p[i, k]
            if p[i, k] >= skip_tol:
                active[n_act] = k
                n_act += 1
        if denom <= 0:
            continue
        acc = np.zeros(n_act, dtype=np.float64)  # edge-term sums per active channel
        sub = np.zeros(n_act, dtype=np.float64)  # sum of (1 - p_jk) over E_i and M_i
        om = np.empty(nk, dtype=np.float64)      # per-channel factors 1 - p_ik p_jk
        for ii in range(ne):
            j = eidx[e0 + ii]
            prod = 1.0
            for k in range(nk):
                f = 1.0 - p[i, k] * p[j, k]
                om[k] = f
                prod *= f
            if prod >= 1.0:
                err[i] = j + 1
                break
            inv_ep = 1.0 / (1.0 - prod)
            for kk in range(n_act):
                k = active[kk]
                pjk = p[j, k]
                rem = om[k]
                if rem <= 0.0:
                    # p_ik p_jk = 1 forces the edge through channel k
                    acc[kk] += 1.0
                else:
                    acc[kk] += p[i, k] * inv_ep * (1.0 - (1.0 - pjk) * prod / rem)
                sub[kk] += 1.0 - pjk
        if err[i] != 0:
            continue
        for ii in range(nm):
            j = midx[m0 + ii]
            for kk in range(n_act):
                sub[kk] += 1.0 - p[j, active[kk]]
        for kk in range(n_act):
            k = active[kk]
            pik = p[i, k]
            no_edge = n * pik * (1.0 - pbar[k]) - pik * (1.0 - pik) - pik * sub[kk]
            pnew[i, k] = (acc[kk] + no_edge) / denom


@njit(parallel=True, cache=True)
def bkn_accumulate(theta, eptr, eidx, mptr, midx, numer, err):
    """Per-row numerators sum_j A_ij q_ijk of the Poisson factorization M-step.

    Known edges contribute theta_ik theta_jk / lambda_ij; masked pairs use the
    imputed count lambda_ij, whose contribution collapses to theta_ik theta_jk.
    err[i] is set to j + 1 if an observed edge (i, j) has rate 0.
    """
    n, nk = theta.shape
    for i in prange(n):
        err[i] = 0
        for k in range(nk):
            numer[i, k] = 0.0
        for ii in range(eptr[i], eptr[i + 1]):
            j = eidx[ii]
            lam = 0.0
            for k in range(nk):
                lam += theta[i, k] * theta[j, k]
            if lam <= 0.0:
                err[i] = j + 1
                continue
            inv_lam = 1.0 / lam
            for k in range(nk):
                numer[i, k] += theta[i, k] * theta[j, k] * inv_lam
        for ii in range(mptr[i], mptr[i + 1]):
            j = midx[ii]
            for k in range(nk):
                numer[i, k] += theta[i, k] * theta[j, k]
