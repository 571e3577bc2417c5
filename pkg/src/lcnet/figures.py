"""Matplotlib renderings written next to the delimited outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def save_heatmap_figure(image: np.ndarray, path, title: str | None = None) -> None:
    """Render a quantized parameter heatmap (rows: nodes, columns: channels)."""
    h, w = image.shape
    fig, ax = plt.subplots(figsize=(max(3.0, min(8.0, w * 0.25)), 6.0))
    ax.imshow(image, cmap="gray", vmin=0, vmax=255, aspect="auto", interpolation="nearest")
    ax.set_xlabel("channel (ordered)")
    ax.set_ylabel("node (grouped)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_auc_figure(summary, path, title: str | None = None) -> None:
    """Mean AUC with standard-error bars versus channel count, per model.

    `summary` is a sequence of rows with model, channels, auc_in_mean,
    auc_in_se, auc_out_mean, auc_out_se attributes.
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    models = sorted({r.model for r in summary})
    colors = {m: c for m, c in zip(models, plt.rcParams["axes.prop_cycle"].by_key()["color"])}
    for model in models:
        rows = sorted((r for r in summary if r.model == model), key=lambda r: r.channels)
        ks = [r.channels for r in rows]
        ax.errorbar(ks, [r.auc_out_mean for r in rows],
                    yerr=[r.auc_out_se for r in rows],
                    marker="o", color=colors[model], label=f"{model} out-of-sample")
        ax.errorbar(ks, [r.auc_in_mean for r in rows],
                    yerr=[r.auc_in_se for r in rows],
                    marker="s", linestyle="--", color=colors[model], alpha=0.6,
                    label=f"{model} in-sample")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("channels")
    ax.set_ylabel("AUC")
    ax.axhline(0.5, color="gray", linewidth=0.8, linestyle=":")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
