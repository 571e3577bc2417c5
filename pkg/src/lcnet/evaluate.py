"""Tie-aware AUC and the repeated masked-holdout experiment harness.

The AUC uses average ranks, so ties between a positive and a negative score
receive exactly half credit; this equals the mean over all positive-negative
score pairs. The harness repeats draw -> mask -> fit -> score sweeps over
models and channel counts and reports per-cell results plus mean and
standard error summaries, all deterministic from the base seed.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from typing import Callable, Sequence

import numpy as np

from .bkn import bkn_fit, bkn_predict
from .em import FitConfig, fit_efficient, predict
from .graph import Graph, apply_mask, sample_pair_classes
from .matrices import FLOAT_FMT
from .model import edge_probability
from .synth import LcnGenSpec, SbmSpec, generate_lcn, generate_sbm

MODELS = ("lcn", "bkn")
_MODEL_CODES = {"lcn": 0, "bkn": 1}


def auc(scores, labels) -> float:
    """Area under the ROC curve with exact half credit for ties.

    Computed from average ranks (the rank-sum statistic), which equals
    P(s+ > s-) + P(s+ = s-) / 2 over positive-negative pairs.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.ndim != 1 or y.shape != s.shape:
        raise ValueError("scores and labels must be matching 1-D sequences")
    if not np.isfinite(s).all():
        raise ValueError("scores must be finite")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    npos = int((y == 1).sum())
    nneg = y.size - npos
    if npos == 0 or nneg == 0:
        raise ValueError("need at least one positive and one negative label")
    order = np.argsort(s, kind="stable")
    sorted_s = s[order]
    # average 1-based ranks within tie groups
    boundaries = np.flatnonzero(np.diff(sorted_s) != 0.0) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [s.size]))
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(s.size, dtype=np.float64)
    ranks[order] = np.repeat(avg, ends - starts)
    u = ranks[y == 1].sum() - npos * (npos + 1) / 2.0
    return float(u / (npos * nneg))


def mse_true_probs(predicted: Callable[[int, int], float],
                   truth: Callable[[int, int], float], pairs) -> float:
    """Mean squared difference between two pair-probability accessors."""
    pr = np.asarray(pairs, dtype=np.int64)
    if pr.size == 0:
        raise ValueError("need at least one pair")
    diffs = [predicted(int(i), int(j)) - truth(int(i), int(j)) for i, j in pr]
    return float(np.mean(np.square(diffs)))


@dataclasses.dataclass(frozen=True)
class ExperimentSpec:
    """One masked-holdout experiment: source, models, channel sweep, reps."""

    source: SbmSpec | LcnGenSpec | Graph
    channels: tuple[int, ...]
    models: tuple[str, ...] = ("lcn",)
    mask_edges: int = 500
    mask_nonedges: int = 500
    repetitions: int = 10
    base_seed: int = 0
    tol: float = 1e-4
    max_iters: int = 10_000
    skip_tol: float = 1e-10
    threads: int = 1
    compute_mse: bool = False

    def __post_init__(self):
        if not self.channels or min(self.channels) < 1:
            raise ValueError("channel sweep values must be at least 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        for m in self.models:
            if m not in MODELS:
                raise ValueError(f"unknown model {m!r}; expected one of {MODELS}")


@dataclasses.dataclass
class CellResult:
    """One (model, channels, repetition) fit and its scores."""

    model: str
    channels: int
    rep: int
    auc_in: float | None
    auc_out: float | None
    mse: float | None
    converged: bool | None
    iterations: int | None
    error: str | None = None


@dataclasses.dataclass
class SummaryRow:
    model: str
    channels: int
    reps: int
    auc_in_mean: float
    auc_in_se: float
    auc_out_mean: float
    auc_out_se: float
    mse_mean: float | None
    mse_se: float | None


@dataclasses.dataclass
class ExperimentResult:
    cells: list[CellResult]
    summary: list[SummaryRow]

    def write_cells_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["model", "channels", "rep", "auc_in", "auc_out", "mse",
                        "converged", "iterations", "error"])
            for c in self.cells:
                w.writerow([c.model, c.channels, c.rep, _fmt(c.auc_in), _fmt(c.auc_out),
                            _fmt(c.mse), _fmt_bool(c.converged),
                            "" if c.iterations is None else c.iterations,
                            c.error or ""])

    def write_summary_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["model", "channels", "reps", "auc_in_mean", "auc_in_se",
                        "auc_out_mean", "auc_out_se", "mse_mean", "mse_se"])
            for r in self.summary:
                w.writerow([r.model, r.channels, r.reps, _fmt(r.auc_in_mean),
                            _fmt(r.auc_in_se), _fmt(r.auc_out_mean), _fmt(r.auc_out_se),
                            _fmt(r.mse_mean), _fmt(r.mse_se)])


def _fmt(v) -> str:
    return "" if v is None else FLOAT_FMT % v


def _fmt_bool(v) -> str:
    return "" if v is None else ("true" if v else "false")


def derived_seed(*parts: int) -> int:
    """Stable seed derivation so every cell is independently reproducible."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def _realize_source(source, seed: int):
    """Materialize the graph for one repetition plus a truth accessor if any."""
    if isinstance(source, SbmSpec):
        g, truth = generate_sbm(dataclasses.replace(source, seed=seed))
        return g, truth
    if isinstance(source, LcnGenSpec):
        g, true_p = generate_lcn(dataclasses.replace(source, seed=seed))
        return g, lambda i, j: edge_probability(true_p, i, j)
    if isinstance(source, Graph):
        return source, None
    raise TypeError(f"unsupported experiment source: {type(source).__name__}")


_FITTERS = {
    "lcn": (fit_efficient, predict),
    "bkn": (bkn_fit, bkn_predict),
}


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run the full sweep and aggregate means and standard errors.

    Each repetition draws (or reuses) the graph, masks the holdout pairs, and
    samples the in-sample scoring pairs from the pairs that remain known to
    the fitters; every (model, channels) cell then fits from its own derived
    seed and is scored on both pair sets. Fitter failures are recorded in the
    cell instead of aborting the sweep. The mean-squared-error column is
    filled only for the probability model on synthetic sources (rate scores
    have no probability interpretation).
    """
    cells: list[CellResult] = []
    for rep in range(spec.repetitions):
        g, truth = _realize_source(spec.source, derived_seed(spec.base_seed, 101, rep))
        masked_g, holdout = apply_mask(g, derived_seed(spec.base_seed, 102, rep),
                                       spec.mask_edges, spec.mask_nonedges)
        insample = sample_pair_classes(masked_g, derived_seed(spec.base_seed, 103, rep),
                                       spec.mask_edges, spec.mask_nonedges)
        in_pairs = np.array([(i, j) for i, j, _ in insample], dtype=np.int64)
        in_labels = np.array([s for _, _, s in insample], dtype=np.int64)
        out_pairs = holdout.pair_array()
        out_labels = holdout.labels()
        for model in spec.models:
            fitter, scorer = _FITTERS[model]
            for k in spec.channels:
                seed = derived_seed(spec.base_seed, 104, rep, _MODEL_CODES[model], k)
                cfg = FitConfig(num_channels=k, max_iters=spec.max_iters, tol=spec.tol,
                                skip_tol=spec.skip_tol, seed=seed, threads=spec.threads)
                try:
                    params, report = fitter(masked_g, cfg)
                    auc_out = auc(scorer(params, out_pairs), out_labels)
                    auc_in = auc(scorer(params, in_pairs), in_labels)
                    mse = None
                    if spec.compute_mse and truth is not None and model == "lcn":
                        mse = mse_true_probs(
                            lambda i, j: edge_probability(params, i, j), truth, out_pairs)
                    cells.append(CellResult(model, k, rep, auc_in, auc_out, mse,
                                            report.converged, report.iterations))
                except Exception as exc:  # record the cell, keep sweeping
                    cells.append(CellResult(model, k, rep, None, None, None,
                                            None, None, error=str(exc)))
    return ExperimentResult(cells, summarize(cells))


def summarize(cells: Sequence[CellResult]) -> list[SummaryRow]:
    """Mean and standard error per (model, channels) over successful cells."""
    out = []
    keys = sorted({(c.model, c.channels) for c in cells},
                  key=lambda mk: (_MODEL_CODES[mk[0]], mk[1]))
    for model, k in keys:
        ok = [c for c in cells if c.model == model and c.channels == k and c.error is None]
        if not ok:
            continue
        a_in = np.array([c.auc_in for c in ok])
        a_out = np.array([c.auc_out for c in ok])
        mses = [c.mse for c in ok if c.mse is not None]
        out.append(SummaryRow(
            model=model, channels=k, reps=len(ok),
            auc_in_mean=float(a_in.mean()), auc_in_se=_stderr(a_in),
            auc_out_mean=float(a_out.mean()), auc_out_se=_stderr(a_out),
            mse_mean=float(np.mean(mses)) if mses else None,
            mse_se=_stderr(np.array(mses)) if mses else None))
    return out


def _stderr(values: np.ndarray) -> float:
    if values.size <= 1:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(values.size))
