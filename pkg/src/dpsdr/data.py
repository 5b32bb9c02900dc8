"""Sample storage, response slicing, and CSV I/O.

A :class:`Dataset` holds the response ``y``, the reducible predictors ``x``
and the shielded predictors ``w`` as immutable arrays.  A
:class:`SlicePartition` carries the response thresholds that discretize ``y``
into ``H`` slices; every estimator downstream works on the slice labels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """Immutable (y, x, w) sample of n rows.

    Parameters
    ----------
    y : (n,) response vector.
    x : (n, p) reducible predictors.
    w : (n, q) shielded predictors.  A 1-d array is treated as q = 1.
    """

    y: np.ndarray
    x: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        w = np.asarray(self.w, dtype=float)
        if w.ndim == 1:
            w = w[:, None]
        if x.shape[0] != y.size or w.shape[0] != y.size:
            raise ValueError(
                f"row mismatch: y has {y.size}, x has {x.shape[0]}, w has {w.shape[0]}"
            )
        if y.size < 2:
            raise ValueError("need at least 2 rows")
        if x.shape[1] < 1 or w.shape[1] < 1:
            raise ValueError("x and w must each have at least one column")
        for name, arr in (("y", y), ("x", x), ("w", w)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {name}")
        for arr in (y, x, w):
            arr.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def q(self) -> int:
        return self.w.shape[1]


@dataclass(frozen=True)
class SlicePartition:
    """H response intervals delimited by strictly increasing cut points.

    Intervals are left-closed/right-open; the first extends to -inf and the
    last to +inf, so every real value maps to exactly one slice in 1..H.
    """

    cut_points: np.ndarray

    def __post_init__(self):
        cuts = np.asarray(self.cut_points, dtype=float).ravel()
        # zero cut points is the single-slice partition (H = 1)
        if not np.all(np.isfinite(cuts)):
            raise ValueError("non-finite cut point")
        if not np.all(np.diff(cuts) > 0):
            raise ValueError("cut points must be strictly increasing")
        cuts.setflags(write=False)
        object.__setattr__(self, "cut_points", cuts)

    @property
    def n_slices(self) -> int:
        return self.cut_points.size + 1

    def assign(self, y) -> np.ndarray:
        """Vectorized slice labels in 1..H for the given response values."""
        y = np.asarray(y, dtype=float)
        return np.searchsorted(self.cut_points, y, side="right") + 1


def discretize(y_value: float, partition: SlicePartition) -> int:
    """Slice index l with ``y_value`` in J_l (boundary values go up)."""
    return int(partition.assign(np.asarray(y_value)))


def make_slices(y, n_slices: int) -> SlicePartition:
    """Equal-frequency partition of the response into ``n_slices`` slices.

    Cut points sit midway between the order statistics that separate blocks
    of floor(n/H) or ceil(n/H) samples.  When a tie block straddles a target
    boundary the cut shifts to the nearest tie-block edge, keeping counts as
    balanced as the ties allow.

    Raises
    ------
    ValueError
        If H < 2, n < H, or fewer than H distinct values exist (no H
        non-empty slices can be formed).
    """
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    H = int(n_slices)
    if H < 2:
        raise ValueError("need at least 2 slices")
    if n < H:
        raise ValueError(f"cannot form {H} slices from {n} samples")
    if np.unique(y).size < H:
        raise ValueError(
            f"fewer distinct response values ({np.unique(y).size}) than slices ({H})"
        )
    ys = np.sort(y)
    base, extra = divmod(n, H)
    sizes = np.full(H, base)
    sizes[:extra] += 1
    cuts = []
    prev = 0  # rank where the previous slice ended
    for t in np.cumsum(sizes)[:-1]:
        t = max(int(t), prev + 1)
        if t >= n:
            raise ValueError("cannot form non-empty slices: response too tied")
        if ys[t - 1] == ys[t]:
            # tie across the target rank: shift to the nearest tie-block edge
            left = int(np.searchsorted(ys, ys[t], side="left"))
            right = int(np.searchsorted(ys, ys[t], side="right"))
            candidates = [r for r in (left, right) if prev < r < n]
            if not candidates:
                raise ValueError("cannot form non-empty slices: response too tied")
            t = min(candidates, key=lambda r: (abs(r - t), r))
        cuts.append(0.5 * (ys[t - 1] + ys[t]))
        prev = t
    cuts = np.asarray(cuts)
    if cuts.size != H - 1 or np.any(np.diff(cuts) <= 0):
        raise ValueError("cannot form non-empty slices: response too tied")
    partition = SlicePartition(cut_points=cuts)
    counts = np.bincount(partition.assign(y), minlength=H + 1)[1:]
    if np.any(counts == 0):
        raise ValueError("cannot form non-empty slices: response too tied")
    return partition


def _parse_cell(text: str, row: int, column: str) -> float:
    text = text.strip()
    try:
        value = float(text)
    except ValueError:
        raise ValueError(
            f"non-numeric value {text!r} at data row {row}, column {column!r}"
        ) from None
    if text == "" or not np.isfinite(value):
        raise ValueError(
            f"non-numeric value {text!r} at data row {row}, column {column!r}"
        )
    return value


def load_dataset(path, y_col: str, x_cols, w_cols) -> Dataset:
    """Load a headered CSV into a Dataset given the column roles.

    Raises
    ------
    FileNotFoundError
        If the file does not exist.
    ValueError
        On unknown columns, non-numeric/missing cells, or fewer than 2 rows.
    """
    path = Path(path)
    x_cols = list(x_cols)
    w_cols = list(w_cols)
    if not x_cols or not w_cols:
        raise ValueError("need at least one x column and one w column")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [c.strip() for c in header]
        index = {}
        for col in [y_col, *x_cols, *w_cols]:
            if col not in header:
                raise ValueError(f"unknown column {col!r}; file has {header}")
            index[col] = header.index(col)
        rows_y, rows_x, rows_w = [], [], []
        for i, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            rows_y.append(_parse_cell(row[index[y_col]], i, y_col))
            rows_x.append([_parse_cell(row[index[c]], i, c) for c in x_cols])
            rows_w.append([_parse_cell(row[index[c]], i, c) for c in w_cols])
    if len(rows_y) < 2:
        raise ValueError(f"{path}: need at least 2 data rows, found {len(rows_y)}")
    return Dataset(y=np.array(rows_y), x=np.array(rows_x), w=np.array(rows_w))


def default_columns(p: int, q: int) -> tuple[str, list[str], list[str]]:
    """Column names used by generated datasets: y, w1..wq, x1..xp."""
    return (
        "y",
        [f"x{j}" for j in range(1, p + 1)],
        [f"w{j}" for j in range(1, q + 1)],
    )


def save_dataset(data: Dataset, path, y_col=None, x_cols=None, w_cols=None) -> None:
    """Write a Dataset as CSV with round-trip float formatting."""
    default_y, default_x, default_w = default_columns(data.p, data.q)
    y_col = y_col or default_y
    x_cols = list(x_cols) if x_cols is not None else default_x
    w_cols = list(w_cols) if w_cols is not None else default_w
    if len(x_cols) != data.p or len(w_cols) != data.q:
        raise ValueError("column name counts do not match dataset shape")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([y_col, *w_cols, *x_cols])
        for i in range(data.n):
            writer.writerow(
                [repr(float(data.y[i]))]
                + [repr(float(v)) for v in data.w[i]]
                + [repr(float(v)) for v in data.x[i]]
            )
