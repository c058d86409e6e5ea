"""Dataset container and the CSV formats shared by the CLI, benchmarks and metrics.

Data CSV: header row of column names, one comma-separated row of decimals per
sample.  Matrix CSV (adjacency or scores): header row of the variable names,
then ``d`` rows of ``d`` values in the same order.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass
class Dataset:
    values: np.ndarray
    names: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DataError("dataset values must be a 2-D array")
        if not self.names:
            self.names = [f"X{i + 1}" for i in range(self.values.shape[1])]
        if len(self.names) != self.values.shape[1]:
            raise DataError(f"{len(self.names)} names for {self.values.shape[1]} columns")

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]

    def standardized(self):
        return Dataset(standardize(self.values), list(self.names))


def standardize(X):
    """Zero mean, unit (population) variance per column."""
    X = np.asarray(X, dtype=np.float64)
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    if np.any(sd == 0):
        bad = np.flatnonzero(sd == 0).tolist()
        raise DataError(f"columns {bad} have zero variance")
    Z = (X - mu) / sd
    # second pass removes the rounding residue of the first
    Z -= Z.mean(axis=0)
    Z /= Z.std(axis=0)
    return Z


def fmt(x):
    """Round-trippable decimal (17 significant digits)."""
    return format(float(x), ".17g")


def read_data_csv(path, max_columns=None):
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    names = [c.strip() for c in rows[0]]
    if len(names) < 2:
        raise DataError(f"{path}: need at least 2 columns, found {len(names)}")
    if max_columns is not None and len(names) > max_columns:
        raise DataError(f"{path}: {len(names)} columns exceed the limit of {max_columns}")
    values, bad = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(names):
            bad.append(lineno)
            continue
        try:
            vals = [float(c) for c in row]
        except ValueError:
            bad.append(lineno)
            continue
        if not all(np.isfinite(vals)):
            bad.append(lineno)
            continue
        values.append(vals)
    if bad:
        shown = ", ".join(map(str, bad[:20]))
        raise DataError(f"{path}: non-numeric or malformed rows at lines {shown}")
    if len(values) < 2:
        raise DataError(f"{path}: need at least 2 data rows")
    return Dataset(np.array(values), names)


def write_data_csv(path, dataset):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(dataset.names)
        for row in dataset.values:
            w.writerow([fmt(v) for v in row])


def write_matrix_csv(path, matrix, names, integer=False):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in np.asarray(matrix):
            w.writerow([str(int(v)) for v in row] if integer else [fmt(v) for v in row])


def read_matrix_csv(path):
    """Return (matrix, names) from a square matrix CSV."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    names = [c.strip() for c in rows[0]]
    body = rows[1:]
    if len(body) != len(names) or any(len(r) != len(names) for r in body):
        raise DataError(f"{path}: expected a {len(names)}x{len(names)} matrix under the header")
    try:
        mat = np.array([[float(c) for c in r] for r in body])
    except ValueError:
        raise DataError(f"{path}: non-numeric matrix entry") from None
    return mat, names
