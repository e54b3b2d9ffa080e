"""Co-occurrence network handling and graph convolution.

The network is a symmetric, non-negative, zero-diagonal weighted adjacency
over the taxa of an abundance matrix.  It is either loaded from a file
(matrix or edge list) or inferred from the data by per-column non-negative
elastic-net regressions.  The convolution smooths abundances over the
network with the symmetric-normalized operator built from the adjacency
plus self-loops.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ._kernels import enet_coordinate_descent
from .errors import NumericError, ParseError, ValidationError
from .ingest import AbundanceMatrix
from .tables import fmt, parse_cell, read_table, write_table

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class CoOccurrenceNetwork:
    """Weighted undirected co-occurrence graph over taxa.

    The adjacency is symmetric within 1e-12, has a zero diagonal and only
    finite non-negative weights; labels are in abundance column order.
    """

    adjacency: np.ndarray
    taxon_labels: tuple[str, ...]

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=np.float64)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "taxon_labels", tuple(self.taxon_labels))
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValidationError("adjacency must be square")
        if len(self.taxon_labels) != adj.shape[0]:
            raise ValidationError("taxon label count does not match adjacency size")
        if not np.isfinite(adj).all():
            raise ValidationError("adjacency contains non-finite weights")
        if (adj < 0).any():
            raise ValidationError("adjacency contains negative weights")
        if np.abs(adj - adj.T).max(initial=0.0) > SYMMETRY_TOL:
            raise ValidationError("adjacency is not symmetric within 1e-12")
        if np.abs(np.diag(adj)).max(initial=0.0) != 0.0:
            raise ValidationError("adjacency has nonzero diagonal entries")

    @property
    def n_taxa(self) -> int:
        return self.adjacency.shape[0]


@dataclass(frozen=True)
class NetworkInferenceConfig:
    """Penalties and stopping rule for network inference."""

    mu1: float = 0.1
    mu2: float = 0.01
    max_iterations: int = 500
    tolerance: float = 1e-8

    def __post_init__(self):
        if self.mu1 < 0 or self.mu2 < 0:
            raise ValidationError("penalties mu1 and mu2 must be >= 0")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be positive")
        if self.tolerance <= 0:
            raise ValidationError("tolerance must be > 0")


@dataclass(frozen=True)
class TopologicalAbundance:
    """Convolved abundance matrix and its column-centered form."""

    values: np.ndarray
    centered: np.ndarray


def identity_network(labels) -> CoOccurrenceNetwork:
    """Zero adjacency: the convolution becomes the identity (the no-graph baseline)."""
    p = len(labels)
    return CoOccurrenceNetwork(np.zeros((p, p)), tuple(labels))


def load_adjacency(path, labels) -> CoOccurrenceNetwork:
    """Load an adjacency from a labeled square matrix or an edge-list file.

    Edge lists are recognized by the exact header (source, target, weight).
    Rows/columns are reordered to match ``labels``; asymmetric matrices are
    symmetrized as (A + A^T)/2 with a warning, nonzero diagonals are zeroed
    with a warning.
    """
    labels = tuple(labels)
    header, rows, _ = read_table(path)
    if [h.strip().lower() for h in header] == ["source", "target", "weight"]:
        adj = _adjacency_from_edges(path, rows, labels)
    else:
        adj = _adjacency_from_matrix(path, header, rows, labels)
    if np.abs(adj - adj.T).max(initial=0.0) > SYMMETRY_TOL:
        warnings.warn(f"{path}: asymmetric adjacency symmetrized as (A+A^T)/2")
    adj = (adj + adj.T) / 2.0
    if np.abs(np.diag(adj)).max(initial=0.0) > 0.0:
        warnings.warn(f"{path}: nonzero diagonal zeroed (no self-loops)")
        np.fill_diagonal(adj, 0.0)
    if (adj < 0).any():
        raise ValidationError(f"{path}: negative edge weights are not allowed")
    return CoOccurrenceNetwork(adj, labels)


def _adjacency_from_matrix(path, header, rows, labels) -> np.ndarray:
    file_cols = header[1:]
    file_rows = [cells[0] for cells in rows]
    if file_cols != file_rows:
        raise ParseError(f"{path}: matrix row labels do not match column labels")
    _check_label_match(path, file_cols, labels)
    order = {lab: i for i, lab in enumerate(file_cols)}
    perm = [order[lab] for lab in labels]
    raw = np.empty((len(file_rows), len(file_cols)))
    for i, cells in enumerate(rows):
        for j, cell in enumerate(cells[1:]):
            raw[i, j] = parse_cell(cell, path, row=i + 2, col=j + 2)
    return raw[np.ix_(perm, perm)]


def _adjacency_from_edges(path, rows, labels) -> np.ndarray:
    index = {lab: i for i, lab in enumerate(labels)}
    unknown = sorted({c for cells in rows for c in cells[:2] if c not in index})
    if unknown:
        raise ValidationError(f"{path}: edge labels not in taxon list: {unknown}")
    adj = np.zeros((len(labels), len(labels)))
    seen: set[tuple[int, int]] = set()
    for r, (src, dst, w) in enumerate(rows):
        i, j = index[src], index[dst]
        weight = parse_cell(w, path, row=r + 2, col=3)
        if i == j:
            warnings.warn(f"{path}: self-edge on {src!r} ignored")
            continue
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValidationError(f"{path}: duplicate edge {src!r}-{dst!r}")
        seen.add(key)
        adj[i, j] = adj[j, i] = weight
    return adj


def _check_label_match(path, file_labels, labels) -> None:
    missing = sorted(set(labels) - set(file_labels))
    extra = sorted(set(file_labels) - set(labels))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing from file: {missing}")
        if extra:
            parts.append(f"unknown in file: {extra}")
        raise ValidationError(f"{path}: label mismatch; " + "; ".join(parts))


def write_adjacency(net: CoOccurrenceNetwork, path, delimiter: str = ",") -> None:
    header = ["taxon", *net.taxon_labels]
    rows = [
        [lab, *(fmt(v) for v in net.adjacency[i])]
        for i, lab in enumerate(net.taxon_labels)
    ]
    write_table(path, header, rows, delimiter)


def write_edge_list(net: CoOccurrenceNetwork, path, min_weight: float = 0.0, delimiter: str = ",") -> None:
    """Write the upper-triangle edges with weight > min_weight (display export)."""
    rows = []
    p = net.n_taxa
    for i in range(p):
        for j in range(i + 1, p):
            w = net.adjacency[i, j]
            if w > min_weight:
                rows.append([net.taxon_labels[i], net.taxon_labels[j], fmt(w)])
    write_table(path, ["source", "target", "weight"], rows, delimiter)


def infer_network(m: AbundanceMatrix, cfg: NetworkInferenceConfig = NetworkInferenceConfig()) -> CoOccurrenceNetwork:
    """Infer co-occurrence weights by multi-regression on standardized columns.

    Each taxon column is regressed on all other columns with non-negative
    coefficients under an l1 penalty ``mu1`` and a squared-norm penalty
    ``mu2`` (coordinate descent on the correlation-scale Gram matrix).  The
    coefficient matrix is symmetrized as (B + B^T)/2.

    Columns are standardized (zero mean, unit variance) first so the
    penalties act on partial-correlation scale regardless of the data's
    units; constant columns take no part and get zero weights.
    """
    n, p = m.values.shape
    if p < 2:
        raise ValidationError("network inference needs at least 2 taxa")
    X = m.values
    sd = X.std(axis=0)
    active = sd > 0.0
    Xs = (X[:, active] - X[:, active].mean(axis=0)) / sd[active]
    gram = Xs.T @ Xs / n
    gram = (gram + gram.T) / 2.0
    B_act, last_delta, _ = enet_coordinate_descent(
        gram, cfg.mu1, cfg.mu2, cfg.max_iterations, cfg.tolerance
    )
    bad = last_delta >= cfg.tolerance
    if bad.any():
        active_labels = [lab for lab, a in zip(m.taxon_labels, active) if a]
        worst = int(np.argmax(last_delta))
        raise NumericError(
            f"network inference did not converge for {int(bad.sum())} column(s) "
            f"after {cfg.max_iterations} iterations; worst residual change "
            f"{last_delta[worst]:.3e} on column {active_labels[worst]!r}"
        )
    B = np.zeros((p, p))
    idx = np.flatnonzero(active)
    B[np.ix_(idx, idx)] = B_act
    W = (B + B.T) / 2.0
    np.fill_diagonal(W, 0.0)
    return CoOccurrenceNetwork(W, m.taxon_labels)


def convolution_operator(adjacency: np.ndarray) -> np.ndarray:
    """Symmetric-normalized operator: D^{-1/2} (A + I) D^{-1/2}.

    D is the diagonal weighted degree of A + I; with a zero adjacency the
    operator is exactly the identity.
    """
    p = adjacency.shape[0]
    a_tilde = adjacency + np.eye(p)
    degree = a_tilde.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(degree)
    return a_tilde * np.outer(inv_sqrt, inv_sqrt)


def convolve(m: AbundanceMatrix, net: CoOccurrenceNetwork) -> TopologicalAbundance:
    """Propagate abundances over the network: M = H (D^{-1/2} (A+I) D^{-1/2})."""
    if net.n_taxa != m.n_taxa:
        raise ValidationError(
            f"network has {net.n_taxa} taxa, abundance matrix has {m.n_taxa}"
        )
    if net.taxon_labels != m.taxon_labels:
        raise ValidationError("network taxon labels do not match abundance matrix")
    op = convolution_operator(net.adjacency)
    values = m.values @ op
    centered = values - values.mean(axis=0)
    return TopologicalAbundance(values, centered)
