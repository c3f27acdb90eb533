"""Synthetic data generators and CSV ingestion.

Two synthetic families: an isotropic Gaussian cloud with a controlled
fraction of far-away outliers, and stochastic block model graphs turned
into row-normalized spectral features, with ground-truth labels in both
cases. ``load_csv``/``save_csv`` cover everything else.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import CsvFormatError, DegenerateDataError, ParameterError
from .validation import check_points, check_rng

# Outliers sit on a spherical shell this many standard deviations out,
# visually well separated from the unit-variance bulk.
OUTLIER_SHELL = (8.0, 12.0)


def gaussian_with_outliers(n: int, dim: int, outlier_fraction: float = 0.0, rng=None):
    """Standard isotropic Gaussian points plus a fraction of shell outliers.

    Returns ``(X, labels)`` with label 1 marking outliers. floor(q * n)
    points are placed uniformly on a spherical shell far from the origin;
    the remaining ceil((1-q) * n) are N(0, I).
    """
    n, dim = int(n), int(dim)
    if n < 1 or dim < 1:
        raise ParameterError("n and dim must be positive")
    q = float(outlier_fraction)
    if not 0.0 <= q < 1.0:
        raise ParameterError(f"outlier_fraction must lie in [0, 1), got {q}")
    rng = check_rng(rng)
    n_out = int(np.floor(q * n))
    n_in = n - n_out
    X = np.empty((n, dim))
    X[:n_in] = rng.normal(size=(n_in, dim))
    if n_out:
        direction = rng.normal(size=(n_out, dim))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = rng.uniform(OUTLIER_SHELL[0], OUTLIER_SHELL[1], size=n_out)
        X[n_in:] = direction * radius[:, None]
    labels = np.zeros(n, dtype=np.intp)
    labels[n_in:] = 1
    return X, labels


@dataclass(frozen=True)
class SbmSpec:
    """Stochastic block model given block sizes, q2/q1 ratio, and mean degree."""

    block_sizes: tuple
    zeta: float
    avg_degree: float

    def __post_init__(self):
        sizes = tuple(int(b) for b in self.block_sizes)
        if len(sizes) < 1 or any(b < 1 for b in sizes):
            raise ParameterError("block_sizes must be positive integers")
        object.__setattr__(self, "block_sizes", sizes)
        if not 0.0 <= self.zeta <= 1.0:
            raise ParameterError(f"zeta must lie in [0, 1], got {self.zeta}")
        if self.avg_degree <= 0:
            raise ParameterError("avg_degree must be positive")

    @property
    def n_nodes(self) -> int:
        return sum(self.block_sizes)

    @property
    def n_blocks(self) -> int:
        return len(self.block_sizes)

    def edge_probabilities(self):
        """(q1, q2) from the balanced-blocks mean-degree identity
        c = q1 (N/k - 1) + q2 (N - N/k)."""
        n, k = self.n_nodes, self.n_blocks
        denom = (n / k - 1.0) + self.zeta * (n - n / k)
        if denom <= 0:
            raise ParameterError("too few nodes per block for the requested degree")
        q1 = self.avg_degree / denom
        q2 = self.zeta * q1
        if q1 > 1.0:
            raise ParameterError(
                f"infeasible model: intra-block probability {q1:.3g} exceeds 1"
            )
        return q1, q2


def sbm_critical_zeta(avg_degree: float, blocks: int) -> float:
    """Detectability threshold (c - sqrt(c)) / (c + sqrt(c) (k - 1)).

    Above this ratio the community structure of a balanced model becomes
    undetectable in the large-N limit.
    """
    c = float(avg_degree)
    k = int(blocks)
    if c <= 1.0:
        raise ParameterError(f"avg_degree must exceed 1, got {c}")
    if k < 2:
        warnings.warn("blocks < 2 makes the detectability threshold meaningless",
                      stacklevel=2)
    return (c - np.sqrt(c)) / (c + np.sqrt(c) * (k - 1))


def sbm_graph(spec: SbmSpec, rng=None):
    """Sample an undirected simple graph; returns (adjacency, block labels).

    Intra-block pairs connect with probability q1, inter-block pairs with
    q2, both derived from (zeta, avg_degree).
    """
    rng = check_rng(rng)
    q1, q2 = spec.edge_probabilities()
    n = spec.n_nodes
    labels = np.repeat(np.arange(spec.n_blocks), spec.block_sizes)
    same = labels[:, None] == labels[None, :]
    prob = np.where(same, q1, q2)
    upper = np.triu(rng.random((n, n)) < prob, k=1)
    adjacency = (upper | upper.T).astype(np.int8)
    return adjacency, labels


def spectral_features(adjacency, k: int, on_isolated: str = "error") -> np.ndarray:
    """Row-normalized eigenvectors of the normalized Laplacian, one row per node.

    Takes the k eigenvectors with smallest eigenvalues of
    I - D^{-1/2} A D^{-1/2}. Isolated vertices either raise or are dropped
    (``on_isolated`` in {"error", "drop"}); when dropping, rows of the
    result follow the non-isolated nodes in order.
    """
    A = np.asarray(adjacency, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ParameterError("adjacency must be square")
    if on_isolated not in ("error", "drop"):
        raise ParameterError("on_isolated must be 'error' or 'drop'")
    degrees = A.sum(axis=1)
    isolated = degrees <= 0
    if isolated.any():
        if on_isolated == "error":
            raise DegenerateDataError(
                f"{int(isolated.sum())} isolated vertices; drop them or resample the graph"
            )
        keep = ~isolated
        A = A[np.ix_(keep, keep)]
        degrees = degrees[keep]
    n = A.shape[0]
    k = int(k)
    if not 1 <= k <= n:
        raise ParameterError(f"k must lie in [1, {n}], got {k}")
    inv_sqrt = 1.0 / np.sqrt(degrees)
    lap = np.eye(n) - inv_sqrt[:, None] * A * inv_sqrt[None, :]
    _, vectors = scipy.linalg.eigh(0.5 * (lap + lap.T), subset_by_index=[0, k - 1])
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms <= 0):
        raise DegenerateDataError("a node has an all-zero spectral feature vector")
    return vectors / norms[:, None]


def load_csv(path, header: bool = False, labels: bool = False):
    """Read a numeric CSV into (X, labels-or-None); one point per row.

    With ``labels`` the final column is parsed as integer class labels.
    Ragged or non-numeric rows raise CsvFormatError with their location
    (1-based, counting the header if present).
    """
    rows = []
    label_col = []
    width = None
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise CsvFormatError(f"cannot open {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # blank line
            if width is None:
                width = len(row)
                if labels and width < 2:
                    raise CsvFormatError("need at least one feature column plus labels",
                                         row=lineno)
            elif len(row) != width:
                raise CsvFormatError(
                    f"ragged row: expected {width} fields, got {len(row)}", row=lineno
                )
            values = []
            for col, cell in enumerate(row, start=1):
                if labels and col == width:
                    try:
                        label_col.append(int(cell.strip()))
                    except ValueError as exc:
                        raise CsvFormatError(f"bad label {cell!r}", row=lineno, column=col) from exc
                    continue
                try:
                    values.append(float(cell))
                except ValueError as exc:
                    raise CsvFormatError(f"bad number {cell!r}", row=lineno, column=col) from exc
            rows.append(values)
    if not rows:
        raise CsvFormatError(f"no data rows in {path}")
    X = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(X)):
        raise CsvFormatError("non-finite value in data")
    y = np.asarray(label_col, dtype=np.intp) if labels else None
    return X, y


def save_csv(path, X, labels=None, header=None) -> None:
    """Write points (and optional integer labels as a final column) to CSV.

    Floats are written with full round-trip precision.
    """
    X = check_points(X)
    if labels is not None:
        labels = np.asarray(labels).ravel()
        if labels.size != X.shape[0]:
            raise ParameterError("labels must have one entry per point")
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        if header:
            writer.writerow(header)
        for i, row in enumerate(X):
            out = [repr(float(v)) for v in row]
            if labels is not None:
                out.append(str(int(labels[i])))
            writer.writerow(out)
