"""Graph inconsistency characteristics: label agreement and feature similarity.

Two scores are computed per relation. The context characteristic measures
how often an edge joins same-labeled nodes; the feature characteristic is
an RBF-kernel similarity averaged over edges. Each score has two printed
conventions whose readings disagree in the literature this follows, so
both are implemented and selectable:

* context: ``same-label`` counts label agreement (high = homophilous);
  ``formula-literal`` counts disagreement. The two sum to 1.
* feature: ``dim-normalized`` divides squared distances by the feature
  dimension inside the kernel; ``formula-literal`` divides the summed
  kernel values by ``|E| * d`` instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .graph import MultiRelationGraph
from .validation import check_relation

CONTEXT_CONVENTIONS = ("same-label", "formula-literal")
FEATURE_CONVENTIONS = ("dim-normalized", "formula-literal")

# accepted spelling variants for CLI/config inputs
_CONTEXT_ALIASES = {"same-label": "same-label", "formula-literal": "formula-literal"}
_FEATURE_ALIASES = {
    "dim-normalized": "dim-normalized",
    "dim-normalized-distance": "dim-normalized",
    "formula-literal": "formula-literal",
}


def _context_counts(g: MultiRelationGraph, edges: np.ndarray, on_masked: str) -> tuple[int, int, int]:
    """(same-label count, labeled edge count, skipped edge count)."""
    labels = g.labels
    known = (labels[edges[:, 0]] != -1) & (labels[edges[:, 1]] != -1)
    if not known.all():
        if on_masked == "error":
            bad = edges[~known][0]
            raise ValueError(
                f"edge ({bad[0]}, {bad[1]}) has an unlabeled endpoint; "
                "pass on_masked='skip' to exclude such edges"
            )
        edges = edges[known]
    if edges.shape[0] == 0:
        raise ValueError("no labeled edges to score")
    same = int((labels[edges[:, 0]] == labels[edges[:, 1]]).sum())
    return same, edges.shape[0], int((~known).sum())


def _context_from_counts(same: int, total: int, convention: str) -> float:
    if convention == "same-label":
        return same / total
    return (total - same) / total


def context_characteristic(
    g: MultiRelationGraph,
    r: int,
    convention: str = "same-label",
    on_masked: str = "error",
) -> float:
    """Label-agreement score of relation ``r``'s edges, in [0, 1]."""
    convention = _CONTEXT_ALIASES.get(convention)
    if convention is None:
        raise ValueError(f"unknown context convention; expected one of {CONTEXT_CONVENTIONS}")
    r = check_relation(r, g.num_relations)
    edges = g.edges[r]
    if edges.shape[0] == 0:
        raise ValueError(f"relation {r} has no edges")
    same, total, _ = _context_counts(g, edges, on_masked)
    return _context_from_counts(same, total, convention)


def _feature_kernel_sum(g: MultiRelationGraph, edges: np.ndarray, scale: float) -> float:
    X = g.features
    # accumulate in 64-bit, chunked so huge relations don't allocate E x d at once
    total = 0.0
    for start in range(0, edges.shape[0], 65536):
        e = edges[start : start + 65536]
        diff = X[e[:, 0]] - X[e[:, 1]]
        total += float(np.exp(-(diff * diff).sum(axis=1) / scale).sum())
    return total


def feature_characteristic(
    g: MultiRelationGraph,
    r: int,
    convention: str = "dim-normalized",
) -> float:
    """RBF feature-similarity score of relation ``r``'s edges, in (0, 1]."""
    convention = _FEATURE_ALIASES.get(convention)
    if convention is None:
        raise ValueError(f"unknown feature convention; expected one of {FEATURE_CONVENTIONS}")
    r = check_relation(r, g.num_relations)
    edges = g.edges[r]
    m = edges.shape[0]
    if m == 0:
        raise ValueError(f"relation {r} has no edges")
    d = g.feature_dim
    if convention == "dim-normalized":
        return _feature_kernel_sum(g, edges, float(d)) / m
    return _feature_kernel_sum(g, edges, 1.0) / (m * d)


@dataclass(frozen=True)
class RelationCharacteristics:
    relation: str
    num_nodes: int
    num_edges: int
    gamma_context: float
    gamma_feature: float
    skipped_edges: int = 0


@dataclass(frozen=True)
class CharacteristicReport:
    context_convention: str
    feature_convention: str
    rows: tuple[RelationCharacteristics, ...]

    def to_dict(self) -> dict:
        return {
            "context_convention": self.context_convention,
            "feature_convention": self.feature_convention,
            "rows": [asdict(r) for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        header = "relation,num_nodes,num_edges,gamma_context,gamma_feature,skipped_edges"
        lines = [header]
        for row in self.rows:
            lines.append(
                f"{row.relation},{row.num_nodes},{row.num_edges},"
                f"{row.gamma_context!r},{row.gamma_feature!r},{row.skipped_edges}"
            )
        return "\n".join(lines) + "\n"


def relation_report(
    g: MultiRelationGraph,
    context_convention: str = "same-label",
    feature_convention: str = "dim-normalized",
    on_masked: str = "error",
) -> CharacteristicReport:
    """Characteristic scores for every relation plus the merged graph."""
    context_convention = _CONTEXT_ALIASES.get(context_convention)
    feature_convention = _FEATURE_ALIASES.get(feature_convention)
    if context_convention is None:
        raise ValueError(f"unknown context convention; expected one of {CONTEXT_CONVENTIONS}")
    if feature_convention is None:
        raise ValueError(f"unknown feature convention; expected one of {FEATURE_CONVENTIONS}")
    rows = []
    merged = g.merge_relations()
    per = [(str(r), g, r) for r in range(g.num_relations)]
    per.append(("merged", merged, 0))
    for name, graph, r in per:
        edges = graph.edges[r]
        same, total, skipped = _context_counts(graph, edges, on_masked)
        rows.append(
            RelationCharacteristics(
                relation=name,
                num_nodes=graph.num_nodes,
                num_edges=int(edges.shape[0]),
                gamma_context=_context_from_counts(same, total, context_convention),
                gamma_feature=feature_characteristic(graph, r, feature_convention),
                skipped_edges=skipped,
            )
        )
    return CharacteristicReport(
        context_convention=_CONTEXT_ALIASES[context_convention],
        feature_convention=_FEATURE_ALIASES[feature_convention],
        rows=tuple(rows),
    )
