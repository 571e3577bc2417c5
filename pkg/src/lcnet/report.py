"""Interpretation outputs: heatmap-ready orderings, usage tables, rasters.

Rows are grouped by node metadata; columns are sorted by how strongly a
channel separates the groups, measured by the one-way ANOVA variance ratio
(between-group mean square over within-group mean square). A column that is
constant within every group separates perfectly and ranks first. The raster
export is an 8-bit ASCII portable graymap so it stays language-neutral and
diffable; publication rendering is handled by the figure helpers.
"""

from __future__ import annotations

import csv
import numpy as np

from .graph import NodeMetadata
from .matrices import FLOAT_FMT, as_param_array
from .model import channel_usage


def _group_sort_key(labels: set[str]):
    """Ascending label order, numeric when every label parses as an integer."""
    try:
        keyed = {lab: int(lab) for lab in labels}
        return lambda lab: keyed[lab]
    except ValueError:
        return lambda lab: lab


def _grouped_nodes(meta: NodeMetadata, num_nodes: int) -> list[tuple[str, list[int]]]:
    missing = meta.missing_nodes(num_nodes)
    if missing:
        raise ValueError(f"nodes without metadata labels: {missing}")
    groups: dict[str, list[int]] = {}
    for i in range(num_nodes):
        groups.setdefault(meta.labels[i], []).append(i)
    key = _group_sort_key(set(groups))
    return [(lab, groups[lab]) for lab in sorted(groups, key=key)]


def variance_ratio(column: np.ndarray, groups: list[list[int]]) -> float:
    """Between-group over within-group mean square of one column's entries.

    Returns 0 for a single group (no between-group variance) and +inf when
    the within-group variance is exactly zero.
    """
    if len(groups) <= 1:
        return 0.0
    overall = float(column.mean())
    ssb = 0.0
    ssw = 0.0
    n = column.size
    for idx in groups:
        vals = column[idx]
        gm = float(vals.mean())
        ssb += vals.size * (gm - overall) ** 2
        ssw += float(((vals - gm) ** 2).sum())
    msb = ssb / (len(groups) - 1)
    if ssw == 0.0 or n == len(groups):
        return float("inf")
    msw = ssw / (n - len(groups))
    if msw == 0.0:
        return float("inf")
    return msb / msw


def order_for_heatmap(p, meta: NodeMetadata) -> tuple[np.ndarray, np.ndarray]:
    """Row and column permutations for displaying a fitted matrix.

    Rows are grouped by label (ascending label order, stable by node id
    within a group); columns are sorted descending by variance ratio, ties
    broken by column index.
    """
    arr = as_param_array(p)
    grouped = _grouped_nodes(meta, arr.shape[0])
    row_order = np.array([i for _, idx in grouped for i in idx], dtype=np.int64)
    groups = [idx for _, idx in grouped]
    ratios = [variance_ratio(arr[:, k], groups) for k in range(arr.shape[1])]
    col_order = np.array(sorted(range(arr.shape[1]), key=lambda k: (-ratios[k], k)),
                         dtype=np.int64)
    return row_order, col_order


def usage_table(p, meta: NodeMetadata, threshold: float) -> list[tuple[str, float, int]]:
    """Mean channels-used per node for each metadata group plus all nodes.

    Returns (label, mean usage, group size) rows in ascending label order,
    with a final ("all", overall mean, N) row.
    """
    arr = as_param_array(p)
    usage = channel_usage(arr, threshold)
    grouped = _grouped_nodes(meta, arr.shape[0])
    rows = [(lab, float(usage[idx].mean()), len(idx)) for lab, idx in grouped]
    rows.append(("all", float(usage.mean()), arr.shape[0]))
    return rows


def write_usage_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["group", "mean_channels_used", "nodes"])
        for lab, mean, n in rows:
            w.writerow([lab, FLOAT_FMT % mean, n])


def render_heatmap(p, row_order, col_order) -> np.ndarray:
    """Quantize the permuted matrix to an 8-bit grayscale image.

    One pixel per cell; intensity maps 0 to black and 1 to white linearly
    (values are clipped into [0, 1] first).
    """
    arr = as_param_array(p)
    rows = np.asarray(row_order, dtype=np.int64)
    cols = np.asarray(col_order, dtype=np.int64)
    for perm, size, what in ((rows, arr.shape[0], "row"), (cols, arr.shape[1], "column")):
        if sorted(perm.tolist()) != list(range(size)):
            raise ValueError(f"{what} order is not a permutation of 0..{size - 1}")
    ordered = np.clip(arr[np.ix_(rows, cols)], 0.0, 1.0)
    return np.rint(ordered * 255.0).astype(np.uint8)


def write_pgm(image: np.ndarray, path) -> None:
    """Write an 8-bit grayscale image as an ASCII portable graymap (P2)."""
    img = np.asarray(image)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError("expected a 2-D uint8 image")
    h, w = img.shape
    if h == 0 or w == 0 or h > 65_535 or w > 65_535:
        raise ValueError(f"unsupported raster dimensions {h}x{w}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"P2\n{w} {h}\n255\n")
        for row in img:
            fh.write(" ".join(str(int(v)) for v in row))
            fh.write("\n")


def read_pgm(path) -> np.ndarray:
    """Read an ASCII portable graymap back into a uint8 array."""
    with open(path, "r", encoding="ascii") as fh:
        tokens = []
        for line in fh:
            hash_pos = line.find("#")
            if hash_pos != -1:
                line = line[:hash_pos]
            tokens.extend(line.split())
    if not tokens or tokens[0] != "P2":
        raise ValueError(f"{path}: not an ASCII portable graymap")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError(f"{path}: expected 8-bit graymap, maxval={maxval}")
    data = np.array(tokens[4:], dtype=np.int64)
    if data.size != w * h or data.size and (data.min() < 0 or data.max() > 255):
        raise ValueError(f"{path}: malformed pixel data")
    return data.reshape(h, w).astype(np.uint8)


def write_permutation(order, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in np.asarray(order, dtype=np.int64):
            fh.write(f"{v}\n")
