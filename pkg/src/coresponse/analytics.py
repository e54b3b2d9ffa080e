"""Community structure and centrality context for important taxa.

Clustering is Louvain over the weighted co-occurrence network, restarted
with several seeds and keeping the partition whose modularity — recomputed
here from its definition — is highest.  Shortest-path lengths use 1/weight
(stronger co-occurrence means closer), and closeness is harmonic so
disconnected networks stay finite.
"""

from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import ValidationError
from .network import CoOccurrenceNetwork
from .utils import child_int

LOUVAIN_RESTARTS = 10

CLUSTER_COLUMNS = ("taxon", "cluster")
CENTRALITY_COLUMNS = ("taxon", "degree", "closeness")
LOCATION_COLUMNS = ("taxon", "importance", "cluster", "degree_rank",
                    "closeness_rank", "linked_to_top")


@dataclass(frozen=True)
class ClusterResult:
    """Node partition with its weighted modularity."""

    assignment: np.ndarray
    modularity_q: float
    n_clusters: int

    def __post_init__(self):
        assignment = np.asarray(self.assignment, dtype=np.int64)
        if assignment.ndim != 1 or assignment.shape[0] == 0:
            raise ValidationError("assignment must be a non-empty vector")
        ids = np.unique(assignment)
        if not np.array_equal(ids, np.arange(self.n_clusters)):
            raise ValidationError("cluster ids must be contiguous from 0")
        object.__setattr__(self, "assignment", assignment)


@dataclass(frozen=True)
class CentralityReport:
    """Weighted degree and harmonic closeness per node."""

    degree: np.ndarray
    closeness: np.ndarray

    def __post_init__(self):
        degree = np.asarray(self.degree, dtype=np.float64)
        closeness = np.asarray(self.closeness, dtype=np.float64)
        if degree.shape != closeness.shape or degree.ndim != 1:
            raise ValidationError("degree and closeness must be equal-length vectors")
        if not (np.isfinite(degree).all() and np.isfinite(closeness).all()):
            raise ValidationError("centralities must be finite")
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "closeness", closeness)


@dataclass(frozen=True)
class LocationReport:
    """Where the top taxa sit inside the full network."""

    top_indices: np.ndarray
    cluster_ids: np.ndarray
    n_clusters_spanned: int
    n_linked_to_top: int
    n_common_neighbors: int
    linked_flags: np.ndarray
    degree_ranks: np.ndarray
    closeness_ranks: np.ndarray
    clusters: ClusterResult
    centralities: CentralityReport


def modularity(adjacency: np.ndarray, assignment: np.ndarray,
               resolution: float = 1.0) -> float:
    """Weighted modularity Q = (1/2m) sum_ij (A_ij - k_i k_j / 2m) delta_ij.

    Self-weights (the i = j terms) participate like any others; an edgeless
    network has Q = 0 by convention.
    """
    A = np.asarray(adjacency, dtype=np.float64)
    assignment = np.asarray(assignment, dtype=np.int64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or assignment.shape[0] != A.shape[0]:
        raise ValidationError("adjacency and assignment sizes disagree")
    two_m = float(A.sum())
    if two_m == 0.0:
        return 0.0
    deg = A.sum(axis=1)
    q = 0.0
    for c in np.unique(assignment):
        members = assignment == c
        q += A[np.ix_(members, members)].sum() / two_m
        q -= resolution * (float(deg[members].sum()) / two_m) ** 2
    return float(q)


def _assignment_from_partition(partition, p: int) -> np.ndarray:
    # contiguous ids ordered by each community's smallest member index
    communities = sorted((sorted(c) for c in partition), key=lambda c: c[0])
    assignment = np.full(p, -1, dtype=np.int64)
    for cid, members in enumerate(communities):
        assignment[members] = cid
    if (assignment < 0).any():
        raise ValidationError("partition does not cover all nodes")
    return assignment


def _graph(net: CoOccurrenceNetwork) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(range(net.n_taxa))
    ia, ja = np.nonzero(np.triu(net.adjacency, k=1))
    graph.add_weighted_edges_from(
        (int(i), int(j), float(net.adjacency[i, j])) for i, j in zip(ia, ja)
    )
    return graph


def louvain(net: CoOccurrenceNetwork, resolution: float = 1.0,
            seed: int = 0) -> ClusterResult:
    """Best-of-10 Louvain partitions by recomputed modularity.

    Louvain is order-sensitive, so it runs once per derived seed; ties keep
    the earliest restart.
    """
    if net.n_taxa == 0:
        raise ValidationError("cannot cluster an empty network")
    graph = _graph(net)
    best = None
    for s in range(LOUVAIN_RESTARTS):
        partition = nx.community.louvain_communities(
            graph, weight="weight", resolution=resolution,
            seed=child_int(seed, s))
        assignment = _assignment_from_partition(partition, net.n_taxa)
        q = modularity(net.adjacency, assignment, resolution)
        if best is None or q > best[0]:
            best = (q, assignment)
    q, assignment = best
    return ClusterResult(assignment, q, int(assignment.max()) + 1)


def centralities(net: CoOccurrenceNetwork) -> CentralityReport:
    """Weighted degree and harmonic closeness for every node.

    closeness_i = (1/(p-1)) * sum over reachable j != i of 1/d(i, j), with
    d from shortest paths over edge lengths 1/weight; isolated nodes score
    0 on both.
    """
    A = net.adjacency
    p = net.n_taxa
    degree = A.sum(axis=1)
    if p <= 1:
        return CentralityReport(degree, np.zeros(p))
    ia, ja = np.nonzero(A)
    lengths = csr_matrix((1.0 / A[ia, ja], (ia, ja)), shape=(p, p))
    dist = dijkstra(lengths, directed=False)
    np.fill_diagonal(dist, np.inf)
    with np.errstate(divide="ignore"):
        inv = np.where(np.isfinite(dist), 1.0 / dist, 0.0)
    return CentralityReport(degree, inv.sum(axis=1) / (p - 1))


def _ordinal_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks, 1 = largest; ties broken toward the lower index."""
    order = np.argsort(-values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=np.int64)
    ranks[order] = np.arange(1, values.shape[0] + 1)
    return ranks


def locate_group(net: CoOccurrenceNetwork, importance, top_k: int, *,
                 clusters: ClusterResult | None = None,
                 cent: CentralityReport | None = None,
                 seed: int = 0) -> LocationReport:
    """Describe the network position of the top_k most important taxa.

    Reports how many clusters they span, how many are directly linked to
    another top taxon, how many other taxa neighbor at least two of them,
    and their whole-network centrality ranks.
    """
    ivec = (importance.taxon_importance
            if hasattr(importance, "taxon_importance")
            else np.asarray(importance, dtype=np.float64))
    p = net.n_taxa
    if ivec.shape != (p,):
        raise ValidationError("importance length does not match the network")
    if not 1 <= top_k <= p:
        raise ValidationError("top_k must be in [1, n_taxa]")
    if clusters is None:
        clusters = louvain(net, seed=seed)
    if cent is None:
        cent = centralities(net)

    top = np.argsort(-ivec, kind="stable")[:top_k]
    is_top = np.zeros(p, dtype=bool)
    is_top[top] = True
    linked = net.adjacency[:, top] > 0

    cluster_ids = clusters.assignment[top]
    linked_flags = linked[top].any(axis=1)
    n_common = int((linked[~is_top].sum(axis=1) >= 2).sum())
    return LocationReport(
        top_indices=top,
        cluster_ids=cluster_ids,
        n_clusters_spanned=int(np.unique(cluster_ids).shape[0]),
        n_linked_to_top=int(linked_flags.sum()),
        n_common_neighbors=n_common,
        linked_flags=linked_flags,
        degree_ranks=_ordinal_ranks(cent.degree)[top],
        closeness_ranks=_ordinal_ranks(cent.closeness)[top],
        clusters=clusters,
        centralities=cent,
    )


def write_clusters(result: ClusterResult, labels, path,
                   delimiter: str = ",") -> None:
    from .tables import write_table

    rows = [[str(label), str(int(c))]
            for label, c in zip(labels, result.assignment)]
    write_table(path, list(CLUSTER_COLUMNS), rows, delimiter)


def write_centralities(report: CentralityReport, labels, path,
                       delimiter: str = ",") -> None:
    from .tables import fmt, write_table

    rows = [[str(label), fmt(d), fmt(c)]
            for label, d, c in zip(labels, report.degree, report.closeness)]
    write_table(path, list(CENTRALITY_COLUMNS), rows, delimiter)


def write_location(report: LocationReport, labels, importance, path,
                   delimiter: str = ",") -> None:
    """One row per top taxon; the aggregate counts live in the report."""
    from .tables import fmt, write_table

    ivec = (importance.taxon_importance
            if hasattr(importance, "taxon_importance")
            else np.asarray(importance, dtype=np.float64))
    rows = [
        [str(labels[i]), fmt(ivec[i]), str(int(report.cluster_ids[pos])),
         str(int(report.degree_ranks[pos])),
         str(int(report.closeness_ranks[pos])),
         "yes" if report.linked_flags[pos] else "no"]
        for pos, i in enumerate(report.top_indices)
    ]
    write_table(path, list(LOCATION_COLUMNS), rows, delimiter)


def write_annotated_graph(net: CoOccurrenceNetwork, path, *,
                          clusters: ClusterResult | None = None,
                          cent: CentralityReport | None = None,
                          importance=None, mean_abundance=None,
                          min_weight: float = 0.0) -> None:
    """GraphML of the full network with analysis attributes on nodes."""
    graph = nx.Graph()
    for i, label in enumerate(net.taxon_labels):
        attrs = {}
        if clusters is not None:
            attrs["cluster"] = int(clusters.assignment[i])
        if cent is not None:
            attrs["degree"] = float(cent.degree[i])
            attrs["closeness"] = float(cent.closeness[i])
        if importance is not None:
            attrs["importance"] = float(importance[i])
        if mean_abundance is not None:
            attrs["mean_relative_abundance"] = float(mean_abundance[i])
        graph.add_node(label, **attrs)
    ia, ja = np.nonzero(np.triu(net.adjacency, k=1))
    for i, j in zip(ia, ja):
        w = float(net.adjacency[i, j])
        if w >= min_weight and w > 0:
            graph.add_edge(net.taxon_labels[i], net.taxon_labels[j], weight=w)
    nx.write_graphml(graph, path)
