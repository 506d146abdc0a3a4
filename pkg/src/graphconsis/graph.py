"""In-memory multi-relation graph with node features and binary fraud labels.

Edges are undirected, stored once in canonical (min, max) order, and kept
per relation. Graphs are immutable after construction; arrays are marked
read-only so shared use across threads is safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .validation import (
    check_feature_matrix,
    check_labels,
    check_node,
    check_relation,
)

UNLABELED = -1


def _canonical_edges(pairs, num_nodes: int, relation: int) -> np.ndarray:
    """Validate, canonicalize, and deduplicate one relation's edge list."""
    arr = np.asarray(list(pairs), dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"relation {relation}: edges must be (u, v) pairs")
    if arr.min() < 0 or arr.max() >= num_nodes:
        bad = arr[(arr < 0).any(axis=1) | (arr >= num_nodes).any(axis=1)][0]
        raise ValueError(
            f"relation {relation}: edge endpoint {tuple(bad)} out of range for {num_nodes} nodes"
        )
    if np.any(arr[:, 0] == arr[:, 1]):
        v = int(arr[arr[:, 0] == arr[:, 1]][0, 0])
        raise ValueError(f"relation {relation}: self-loop at node {v} not allowed")
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    canon = np.unique(np.stack([lo, hi], axis=1), axis=0)
    return canon


class MultiRelationGraph:
    """Nodes with features/labels plus one undirected edge set per relation.

    Use :func:`build_graph` to construct; direct construction skips no
    validation but is considered internal.
    """

    def __init__(self, features: np.ndarray, labels: np.ndarray, edges: list[np.ndarray]):
        self.features = features
        self.labels = labels
        self.edges = edges
        for a in (self.features, self.labels, *self.edges):
            a.setflags(write=False)
        self._adjacency: list[list[np.ndarray]] | None = None
        self._candidates: list[tuple[np.ndarray, np.ndarray]] | None = None

    @property
    def num_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def num_relations(self) -> int:
        return len(self.edges)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def label_known(self) -> np.ndarray:
        return self.labels != UNLABELED

    def num_edges(self, r: int) -> int:
        return self.edges[check_relation(r, self.num_relations)].shape[0]

    def _build_adjacency(self) -> list[list[np.ndarray]]:
        if self._adjacency is None:
            adj: list[list[list[int]]] = [
                [[] for _ in range(self.num_nodes)] for _ in range(self.num_relations)
            ]
            for r, e in enumerate(self.edges):
                for u, v in e:
                    adj[r][u].append(v)
                    adj[r][v].append(u)
            self._adjacency = [
                [np.sort(np.asarray(nbrs, dtype=np.int64)) for nbrs in rel]
                for rel in adj
            ]
        return self._adjacency

    def neighbors_of(self, v: int, r: int) -> np.ndarray:
        """All neighbors of ``v`` under relation ``r``, ascending."""
        v = check_node(v, self.num_nodes)
        r = check_relation(r, self.num_relations)
        return self._build_adjacency()[r][v]

    def candidates_of(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor entries of ``v`` across every relation, as (nodes, relations).

        A node adjacent under k relations appears k times, once per relation.
        Entries are ordered by relation, then ascending node id.
        """
        v = check_node(v, self.num_nodes)
        if self._candidates is None:
            adj = self._build_adjacency()
            cands = []
            for u in range(self.num_nodes):
                ids = [adj[r][u] for r in range(self.num_relations)]
                rels = [np.full(len(a), r, dtype=np.int64) for r, a in enumerate(ids)]
                cands.append((np.concatenate(ids), np.concatenate(rels)))
            self._candidates = cands
        return self._candidates[v]

    def merge_relations(self) -> "MultiRelationGraph":
        """Single-relation graph over the deduplicated union of all edge sets."""
        merged = np.unique(np.concatenate(self.edges, axis=0), axis=0)
        return MultiRelationGraph(self.features, self.labels, [merged])

    def stats(self) -> "GraphStats":
        return graph_stats(self)


def build_graph(num_nodes: int, features, labels, edge_lists) -> MultiRelationGraph:
    """Validate inputs and construct a :class:`MultiRelationGraph`.

    Duplicate edges within a relation and reversed duplicates collapse to a
    single undirected edge.
    """
    if num_nodes < 1:
        raise ValueError("graph needs at least one node")
    X = check_feature_matrix(features, num_nodes)
    y = check_labels(labels, num_nodes)
    edge_lists = list(edge_lists)
    if len(edge_lists) == 0:
        raise ValueError("graph needs at least one relation")
    edges = [_canonical_edges(pairs, num_nodes, r) for r, pairs in enumerate(edge_lists)]
    return MultiRelationGraph(X, y, edges)


@dataclass(frozen=True)
class RelationStats:
    relation: str
    num_nodes: int
    num_edges: int
    avg_degree: float
    fraud_fraction: float


@dataclass(frozen=True)
class GraphStats:
    per_relation: list[RelationStats] = field(default_factory=list)
    merged: RelationStats | None = None


def _relation_stats(g: MultiRelationGraph, edges: np.ndarray, name: str) -> RelationStats:
    n = g.num_nodes
    m = edges.shape[0]
    known = g.label_known
    frac = float((g.labels[known] == 1).mean()) if known.any() else float("nan")
    return RelationStats(name, n, m, 2.0 * m / n, frac)


def graph_stats(g: MultiRelationGraph) -> GraphStats:
    """Node/edge counts, average degree (2|E|/|V|), and fraud fraction."""
    per = [_relation_stats(g, e, str(r)) for r, e in enumerate(g.edges)]
    merged_edges = np.unique(np.concatenate(g.edges, axis=0), axis=0)
    return GraphStats(per, _relation_stats(g, merged_edges, "merged"))
