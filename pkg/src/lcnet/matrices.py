"""Node-by-channel parameter matrices and their TSV persistence.

Both model families store an N x K nonnegative matrix: attachment
probabilities in [0, 1] for the latent channel model, unbounded intensities
for the Poisson factorization baseline. Matrices persist as TSV with one row
per node and 17 significant digits so float64 values round-trip exactly.
"""

from __future__ import annotations

import numpy as np

FLOAT_FMT = "%.17g"


def save_matrix_tsv(values, path) -> None:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("matrix must be 2-D")
    with open(path, "w", encoding="utf-8") as fh:
        for row in arr:
            fh.write("\t".join(FLOAT_FMT % v for v in row))
            fh.write("\n")


def load_matrix_tsv(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = stripped.split("\t") if "\t" in stripped else stripped.split()
            try:
                row = [float(t) for t in tokens]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric token") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(f"{path}:{lineno}: ragged row ({len(row)} vs {width} columns)")
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    return np.asarray(rows, dtype=np.float64)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


class ParamMatrix:
    """Channel-attachment probabilities, entries constrained to [0, 1]."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("parameter matrix must be 2-D (nodes x channels)")
        if not np.isfinite(arr).all():
            raise ValueError("parameter matrix contains non-finite entries")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("attachment probabilities must lie in [0, 1]")
        object.__setattr__(self, "values", _freeze(arr.copy()))

    @property
    def num_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def num_channels(self) -> int:
        return self.values.shape[1]

    def save(self, path) -> None:
        save_matrix_tsv(self.values, path)

    @classmethod
    def load(cls, path) -> "ParamMatrix":
        return cls(load_matrix_tsv(path))

    def __repr__(self):
        return f"ParamMatrix(num_nodes={self.num_nodes}, num_channels={self.num_channels})"


class BknParams:
    """Poisson factorization intensities, nonnegative and unbounded above."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("intensity matrix must be 2-D (nodes x channels)")
        if not np.isfinite(arr).all():
            raise ValueError("intensity matrix contains non-finite entries")
        if arr.size and arr.min() < 0.0:
            raise ValueError("intensities must be nonnegative")
        object.__setattr__(self, "values", _freeze(arr.copy()))

    @property
    def num_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def num_channels(self) -> int:
        return self.values.shape[1]

    def save(self, path) -> None:
        save_matrix_tsv(self.values, path)

    @classmethod
    def load(cls, path) -> "BknParams":
        return cls(load_matrix_tsv(path))

    def __repr__(self):
        return f"BknParams(num_nodes={self.num_nodes}, num_channels={self.num_channels})"


def as_param_array(p) -> np.ndarray:
    """Accept a ParamMatrix, BknParams, or bare 2-D array and return ndarray."""
    if isinstance(p, (ParamMatrix, BknParams)):
        return p.values
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D nodes x channels matrix")
    return arr
