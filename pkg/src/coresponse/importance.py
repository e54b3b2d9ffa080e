"""Per-taxon importance from repeated full-data searches.

Each run contributes its correlation-weighted membership vector: the taxon
importance I is the mean of r*x over runs, and the pair importance L is the
mean of r*x*x^T.  Because x is binary, diag(x x^T) = x, so L's diagonal
equals I exactly — the aggregation below accumulates both in the same
order to keep that equality bitwise.  Runs with negative r contribute with
their sign; excluding them would bias I upward.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .ga import GroupChromosome, OptimizerConfig, run_ga
from .utils import child_int, parallel_map, pearson

DEFAULT_RUNS = 10

#: pair weights below this magnitude are omitted from graph files (not tables)
DISPLAY_THRESHOLD = 0.05

NODE_COLUMNS = ("taxon", "importance", "mean_relative_abundance")
EDGE_COLUMNS = ("taxon_a", "taxon_b", "weight")


@dataclass(frozen=True)
class ImportanceResult:
    """Aggregated importance vector I and pair matrix L over t runs."""

    taxon_importance: np.ndarray
    pair_importance: np.ndarray
    runs: int
    per_run: tuple

    def __post_init__(self):
        I = np.asarray(self.taxon_importance, dtype=np.float64)
        L = np.asarray(self.pair_importance, dtype=np.float64)
        p = I.shape[0]
        if I.ndim != 1 or L.shape != (p, p):
            raise ValidationError("importance vector/matrix shapes disagree")
        if self.runs < 1:
            raise ValidationError("runs must be >= 1")
        if not np.array_equal(L, L.T):
            raise ValidationError("pair importance must be symmetric")
        if not np.array_equal(np.diag(L), I):
            raise ValidationError("diag(L) must equal I exactly")
        if np.abs(I).max(initial=0.0) > 1.0 + 1e-12:
            raise ValidationError("importance entries must lie within [-1, 1]")
        object.__setattr__(self, "taxon_importance", I)
        object.__setattr__(self, "pair_importance", L)

    @property
    def n_taxa(self) -> int:
        return self.taxon_importance.shape[0]

    def top_indices(self, top_k: int) -> np.ndarray:
        """Indices of the top_k most important taxa (ties to lower index)."""
        if not 1 <= top_k <= self.n_taxa:
            raise ValidationError("top_k must be in [1, n_taxa]")
        return np.argsort(-self.taxon_importance, kind="stable")[:top_k]


@dataclass(frozen=True)
class DiscoveryReport:
    """Importance aggregation plus the posthoc top-group check."""

    importance: ImportanceResult
    top_k: int
    top_indices: np.ndarray
    top_group_r: float


def aggregate_importance(runs) -> ImportanceResult:
    """Average (chromosome, r) pairs into I and L."""
    runs = [(x if isinstance(x, GroupChromosome) else GroupChromosome(np.asarray(x)), float(r))
            for x, r in runs]
    if not runs:
        raise ValidationError("cannot aggregate an empty run list")
    p = runs[0][0].bits.shape[0]
    if any(x.bits.shape[0] != p for x, _ in runs):
        raise ValidationError("all chromosomes must have the same length")

    I = np.zeros(p)
    L = np.zeros((p, p))
    for x, r in runs:
        xf = x.bits.astype(np.float64)
        I += r * xf
        L += r * np.outer(xf, xf)
    t = len(runs)
    I /= t
    L /= t
    # diag(outer(x, x)) = x for binary x and the diagonal accumulates the
    # same terms in the same order as I, so diag(L) == I holds bitwise
    return ImportanceResult(I, L, t, tuple(runs))


def discover_importance(H, A, y, cfg: OptimizerConfig, runs: int = DEFAULT_RUNS,
                        *, top_k: int | None = None,
                        threads: int = 1) -> DiscoveryReport:
    """Repeat the full-data search and aggregate importances.

    Run j uses the seed derived from (cfg.seed, j).  ``top_k`` defaults to
    the size cap when one is set, otherwise to the rounded mean size of the
    per-run best groups.  The report includes the full-data correlation of
    the top_k taxa taken together as a posthoc check (0.0 if degenerate).
    """
    from .evaluation import _as_vector, convolved_matrix

    if runs < 1:
        raise ValidationError("runs must be >= 1")
    M = convolved_matrix(H, A)
    yv = _as_vector(y)
    if yv.shape[0] != M.shape[0]:
        raise ValidationError("sample counts of abundance and y differ")
    M0 = M - M.mean(axis=0)
    y0 = yv - yv.mean()

    def one(j: int):
        result = run_ga(M0, y0, replace(cfg, seed=child_int(cfg.seed, j)))
        return result.best, result.best_eval.pearson_r

    importance = aggregate_importance(parallel_map(one, range(runs), threads))

    if top_k is None:
        if cfg.mode == "size_cap":
            top_k = min(cfg.k_opt, importance.n_taxa)
        else:
            sizes = [x.size() for x, _ in importance.per_run]
            top_k = max(1, round(float(np.mean(sizes))))
    top = importance.top_indices(top_k)
    s_top = M[:, top].sum(axis=1)
    try:
        top_r = pearson(s_top, yv)
    except ValidationError:
        top_r = 0.0
    return DiscoveryReport(importance, int(top_k), top, top_r)


def mean_relative_abundance(H) -> np.ndarray:
    """Per-taxon mean of the row-normalized abundance matrix."""
    from .evaluation import _as_matrix

    values = _as_matrix(H)
    row_sums = values.sum(axis=1)
    if (row_sums <= 0).any():
        raise ValidationError("relative abundance undefined for all-zero samples")
    return (values / row_sums[:, None]).mean(axis=0)


def write_group_network(importance: ImportanceResult, labels, H,
                        nodes_path, edges_path, graph_path=None, *,
                        display_threshold: float = DISPLAY_THRESHOLD,
                        delimiter: str = ",") -> None:
    """Export the functional group as node/edge tables and a GraphML file.

    Tables keep every taxon and every nonzero pair weight; the graph file
    drops edges with \\|L\\| below ``display_threshold`` (display-only cut).
    """
    from .tables import fmt, write_table

    labels = tuple(str(label) for label in labels)
    if len(labels) != importance.n_taxa:
        raise ValidationError("label count does not match importance length")
    mra = mean_relative_abundance(H)
    I, L = importance.taxon_importance, importance.pair_importance

    node_rows = [[labels[i], fmt(I[i]), fmt(mra[i])]
                 for i in range(importance.n_taxa)]
    write_table(nodes_path, list(NODE_COLUMNS), node_rows, delimiter)

    ia, ja = np.nonzero(np.triu(L, k=1))
    edge_rows = [[labels[i], labels[j], fmt(L[i, j])] for i, j in zip(ia, ja)]
    write_table(edges_path, list(EDGE_COLUMNS), edge_rows, delimiter)

    if graph_path is not None:
        import networkx as nx

        graph = nx.Graph()
        for i, label in enumerate(labels):
            graph.add_node(label, importance=float(I[i]),
                           mean_relative_abundance=float(mra[i]))
        for i, j in zip(ia, ja):
            if abs(L[i, j]) >= display_threshold:
                graph.add_edge(labels[i], labels[j], weight=float(L[i, j]))
        nx.write_graphml(graph, graph_path)
