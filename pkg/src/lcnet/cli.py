"""Command-line interface: fit, predict, evaluate, simulate, stats, heatmap.

Artifacts are written under --out-dir with fixed names; human-readable
messages go to stderr only. Every subcommand is deterministic given --seed
(wall-time lives in its own report field). Flags take precedence over
--config key=value files, which take precedence over defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bkn as bkn_mod
from . import em, evaluate, graph as graph_mod, model, report, synth
from .matrices import FLOAT_FMT, BknParams, ParamMatrix, save_matrix_tsv

_FIT_DEFAULTS = {"tol": 1e-4, "max_iters": 10_000, "skip_tol": 1e-10,
                 "seed": 0, "threads": 1}


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _read_config(path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = stripped.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _resolve(args, key: str, default, cast):
    """Flag > config file > default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    cfg = getattr(args, "_config", {})
    if key in cfg:
        return cast(cfg[key])
    return default


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_graph(args) -> graph_mod.Graph:
    g = graph_mod.load_edge_list(args.edges, num_nodes=args.num_nodes)
    if getattr(args, "mask", None):
        pairs = graph_mod.load_mask_file(args.mask)
        g, _ = graph_mod.mask_pairs(g, pairs)
        _log(f"applied mask file with {len(pairs)} pairs")
    return g


def _fit_config(args, channels: int) -> em.FitConfig:
    init = None
    if getattr(args, "init", None):
        init = ParamMatrix.load(args.init).values if args.model == "lcn" \
            else BknParams.load(args.init).values
    return em.FitConfig(
        num_channels=channels,
        max_iters=_resolve(args, "max_iters", _FIT_DEFAULTS["max_iters"], int),
        tol=_resolve(args, "tol", _FIT_DEFAULTS["tol"], float),
        skip_tol=_resolve(args, "skip_tol", _FIT_DEFAULTS["skip_tol"], float),
        seed=_resolve(args, "seed", _FIT_DEFAULTS["seed"], int),
        threads=_resolve(args, "threads", _FIT_DEFAULTS["threads"], int),
        init=init,
        track_loglik=bool(getattr(args, "trace_llk", False)),
    )


def cmd_fit(args) -> int:
    out = _out_dir(args)
    g = _load_graph(args)
    cfg = _fit_config(args, args.channels)
    if args.model == "lcn":
        params, rep = em.fit_efficient(g, cfg)
    else:
        params, rep = bkn_mod.bkn_fit(g, cfg)
    params.save(out / "params.tsv")
    record = {"model": args.model, "channels": args.channels, "seed": cfg.seed,
              "threads": cfg.threads, "tol": cfg.tol, "skip_tol": cfg.skip_tol,
              "max_iters": cfg.max_iters, **rep.to_dict()}
    with open(out / "fit_report.json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(record) + "\n")
    if cfg.track_loglik:
        with open(out / "loglik_trace.csv", "w", encoding="utf-8") as fh:
            fh.write("iteration,log_likelihood\n")
            for it, v in enumerate(rep.loglik_trace):
                fh.write(f"{it},{FLOAT_FMT % v}\n")
    _log(f"fit {args.model} K={args.channels}: iterations={rep.iterations} "
         f"converged={rep.converged} final_change={rep.final_max_change:.3g}")
    return 0


def cmd_predict(args) -> int:
    out = _out_dir(args)
    pairs = graph_mod._parse_int_table(args.pairs, 2, "pair")
    if args.model == "lcn":
        scores = em.predict(ParamMatrix.load(args.params), pairs)
    else:
        scores = bkn_mod.bkn_predict(BknParams.load(args.params), pairs)
    with open(out / "scores.tsv", "w", encoding="utf-8") as fh:
        for (i, j), s in zip(pairs, scores):
            fh.write(f"{i}\t{j}\t{FLOAT_FMT % s}\n")
    _log(f"scored {len(pairs)} pairs with the {args.model} model")
    return 0


def _generator_spec(args):
    kind = _resolve(args, "generator", None, str)
    if kind is None:
        raise ValueError("no generator given: pass --generator sbm|lcn (or set it in --config)")
    seed = _resolve(args, "seed", 0, int)
    if kind == "sbm":
        return synth.SbmSpec(
            num_blocks=_resolve(args, "blocks", 8, int),
            block_size=_resolve(args, "block_size", 32, int),
            p_in=_resolve(args, "p_in", 0.5, float),
            p_out=_resolve(args, "p_out", 0.02, float),
            seed=seed)
    if kind == "lcn":
        return synth.LcnGenSpec(
            num_nodes=_resolve(args, "nodes", 1000, int),
            num_channels=_resolve(args, "gen_channels", 16, int),
            sparsity=_resolve(args, "sparsity", "sparse", str),
            degree_profile=_resolve(args, "degrees", "skewed", str),
            seed=seed)
    raise ValueError(f"unknown generator {kind!r}; expected sbm or lcn")


def cmd_simulate(args) -> int:
    out = _out_dir(args)
    spec = _generator_spec(args)
    if isinstance(spec, synth.SbmSpec):
        g, _ = synth.generate_sbm(spec)
        graph_mod.save_metadata(synth.block_metadata(spec), out / "labels.txt")
        _log(f"simulated SBM: {g.num_nodes} nodes, {g.num_edges} edges")
    else:
        g, true_p = synth.generate_lcn(spec)
        true_p.save(out / "true_params.tsv")
        _log(f"simulated latent channel graph: {g.num_nodes} nodes, {g.num_edges} edges")
    graph_mod.save_edge_list(g, out / "edges.txt")
    return 0


def cmd_evaluate(args) -> int:
    out = _out_dir(args)
    if args.edges:
        source = graph_mod.load_edge_list(args.edges, num_nodes=args.num_nodes)
    else:
        source = _generator_spec(args)
    models = ("lcn", "bkn") if args.model == "both" else (args.model,)
    channels = tuple(int(tok) for tok in args.channels.split(","))
    spec = evaluate.ExperimentSpec(
        source=source,
        channels=channels,
        models=models,
        mask_edges=args.mask_edges,
        mask_nonedges=args.mask_nonedges,
        repetitions=args.reps,
        base_seed=_resolve(args, "seed", 0, int),
        tol=_resolve(args, "tol", _FIT_DEFAULTS["tol"], float),
        max_iters=_resolve(args, "max_iters", _FIT_DEFAULTS["max_iters"], int),
        skip_tol=_resolve(args, "skip_tol", _FIT_DEFAULTS["skip_tol"], float),
        threads=_resolve(args, "threads", _FIT_DEFAULTS["threads"], int),
        compute_mse=args.mse)
    result = evaluate.run_experiment(spec)
    result.write_cells_csv(out / "cells.csv")
    result.write_summary_csv(out / "summary.csv")
    from . import figures
    figures.save_auc_figure(result.summary, out / "auc_vs_channels.png")
    failed = sum(1 for c in result.cells if c.error)
    _log(f"evaluate: {len(result.cells)} cells ({failed} failed), "
         f"{len(result.summary)} summary rows")
    return 0


def cmd_stats(args) -> int:
    out = _out_dir(args)
    params = ParamMatrix.load(args.params)
    sizes = model.channel_size(params)
    with open(out / "channel_stats.tsv", "w", encoding="utf-8") as fh:
        fh.write("channel\tsize\n")
        for k, s in enumerate(sizes):
            fh.write(f"{k}\t{FLOAT_FMT % s}\n")
    usage = model.channel_usage(params, args.threshold)
    summary = {
        "num_nodes": params.num_nodes,
        "num_channels": params.num_channels,
        "threshold": args.threshold,
        "mean_channels_used": float(usage.mean()),
        "sparsity": model.sparsity(params),
    }
    with open(out / "stats.json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(summary, sort_keys=True) + "\n")
    if args.metadata:
        meta = graph_mod.load_metadata(args.metadata)
        rows = report.usage_table(params, meta, args.threshold)
        report.write_usage_csv(rows, out / "usage_by_group.csv")
    if args.graph:
        g = graph_mod.load_edge_list(args.graph, num_nodes=params.num_nodes)
        conns = np.vstack([model.expected_connections(params, g, i)
                           for i in range(g.num_nodes)])
        save_matrix_tsv(conns, out / "expected_connections.tsv")
    _log(f"stats: sparsity={summary['sparsity']:.4f} "
         f"mean_usage={summary['mean_channels_used']:.3f}")
    return 0


def cmd_heatmap(args) -> int:
    out = _out_dir(args)
    params = ParamMatrix.load(args.params)
    meta = graph_mod.load_metadata(args.metadata)
    row_order, col_order = report.order_for_heatmap(params, meta)
    report.write_permutation(row_order, out / "row_order.txt")
    report.write_permutation(col_order, out / "col_order.txt")
    ordered = params.values[np.ix_(row_order, col_order)]
    save_matrix_tsv(ordered, out / "ordered.tsv")
    image = report.render_heatmap(params, row_order, col_order)
    report.write_pgm(image, out / "heatmap.pgm")
    from . import figures
    figures.save_heatmap_figure(image, out / "heatmap.png")
    _log(f"heatmap: {image.shape[0]}x{image.shape[1]} raster and figure written")
    return 0


def _add_common(sp, out_dir=True):
    if out_dir:
        sp.add_argument("--out-dir", default=".", help="directory for artifacts")


def _add_fit_flags(sp):
    sp.add_argument("--tol", type=float, default=None,
                    help="max-abs-change convergence threshold (default 1e-4)")
    sp.add_argument("--max-iters", type=int, default=None, help="iteration cap (default 10000)")
    sp.add_argument("--skip-tol", type=float, default=None,
                    help="freeze entries below this value (default 1e-10)")
    sp.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    sp.add_argument("--threads", type=int, default=None, help="worker threads (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lcnet",
        description="Latent channel network models: EM fitting, masking, link "
                    "prediction, and synthetic benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model to an edge list")
    p.add_argument("edges", help="edge-list file ('i j' per line)")
    p.add_argument("--model", choices=("lcn", "bkn"), default="lcn")
    p.add_argument("--channels", type=int, required=True, help="number of latent channels")
    p.add_argument("--mask", help="mask file ('i j status' per line) of unknown pairs")
    p.add_argument("--num-nodes", type=int, default=None)
    p.add_argument("--init", help="warm-start matrix TSV")
    p.add_argument("--trace-llk", action="store_true",
                   help="record per-iteration log-likelihood (costly on large graphs)")
    p.add_argument("--config", help="key=value settings file (flags win)")
    _add_fit_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="score node pairs with a fitted matrix")
    p.add_argument("params", help="fitted matrix TSV")
    p.add_argument("pairs", help="pair file ('i j' per line)")
    p.add_argument("--model", choices=("lcn", "bkn"), default="lcn")
    _add_common(p)
    p.set_defaults(func=cmd_predict, _config={})

    p = sub.add_parser("simulate", help="draw a synthetic graph")
    p.add_argument("--generator", choices=("sbm", "lcn"), default=None)
    p.add_argument("--blocks", type=int, default=None)
    p.add_argument("--block-size", type=int, default=None)
    p.add_argument("--p-in", type=float, default=None)
    p.add_argument("--p-out", type=float, default=None)
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--gen-channels", type=int, default=None)
    p.add_argument("--sparsity", choices=("sparse", "dense"), default=None)
    p.add_argument("--degrees", choices=("skewed", "uniform"), default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", help="key=value settings file (flags win)")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="run the masked-holdout experiment sweep")
    p.add_argument("--edges", help="input edge-list file (otherwise use a generator)")
    p.add_argument("--num-nodes", type=int, default=None)
    p.add_argument("--generator", choices=("sbm", "lcn"), default=None)
    p.add_argument("--blocks", type=int, default=None)
    p.add_argument("--block-size", type=int, default=None)
    p.add_argument("--p-in", type=float, default=None)
    p.add_argument("--p-out", type=float, default=None)
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--gen-channels", type=int, default=None)
    p.add_argument("--sparsity", choices=("sparse", "dense"), default=None)
    p.add_argument("--degrees", choices=("skewed", "uniform"), default=None)
    p.add_argument("--model", choices=("lcn", "bkn", "both"), default="lcn")
    p.add_argument("--channels", default="1,2,4,8",
                   help="comma-separated channel sweep, e.g. 1,2,4,8,16")
    p.add_argument("--mask-edges", type=int, default=500)
    p.add_argument("--mask-nonedges", type=int, default=500)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--mse", action="store_true",
                   help="record MSE against true probabilities (synthetic sources)")
    p.add_argument("--config", help="key=value settings file (flags win)")
    _add_fit_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", help="channel sizes, usage, and sparsity of a fit")
    p.add_argument("params", help="fitted matrix TSV")
    p.add_argument("--graph", help="edge-list file for expected-connection stats")
    p.add_argument("--metadata", help="node label file for per-group usage")
    p.add_argument("--threshold", type=float, default=0.01,
                   help="a channel counts as used above this value")
    _add_common(p)
    p.set_defaults(func=cmd_stats, _config={})

    p = sub.add_parser("heatmap", help="ordered matrix, permutations, and rasters")
    p.add_argument("params", help="fitted matrix TSV")
    p.add_argument("--metadata", required=True, help="node label file for row grouping")
    _add_common(p)
    p.set_defaults(func=cmd_heatmap, _config={})

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        args._config = _read_config(args.config)
    elif not hasattr(args, "_config"):
        args._config = {}
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
