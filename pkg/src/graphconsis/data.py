"""Synthetic multi-relation fraud graphs, dataset files, and splits.

The generator emulates a review-fraud graph statistically: a small fraud
class, one sparse high-homophily relation, and dense relations where
fraudsters attach to benign nodes as camouflage. Per-relation knobs control
how strongly each mechanism shows up in the measured characteristics:

* ``camouflage``: chance a fraud-sourced edge ends at a benign node.
* ``homophily``: chance a benign-sourced edge stays benign-benign.
* ``fraud_source_fraction``: share of a relation's edges drawn from the
  fraud side, letting dense relations turn fraudsters into hubs.
* ``camouflage_concentration``: how strongly the fraud side's edge ends
  concentrate on the feature-camouflaged fraudsters (see below), so edge
  camouflage and feature camouflage coincide the way they do in real spam
  campaigns.

Features are class-conditional Gaussians: a class offset plus per-node
noise along one class axis (controls how separable the classes are for a
feature-only classifier), a per-node context-cluster offset, and small
isotropic noise. A ``fraud_feature_camouflage`` fraction of fraudsters
("shills") skip the class offset entirely: their features are drawn from
the benign distribution, so no feature-only classifier can rank them.

Context clusters can also shape the graph: ``cluster_fraud_skew``
concentrates fraud unevenly across clusters (spam campaigns target some
communities harder) and ``cluster_edge_affinity`` keeps edges local to
the source's cluster, which makes neighborhood compositions vary by
community instead of pinning them at class-wide averages.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import MultiRelationGraph, build_graph
from .validation import check_probability, check_positive_int

UNLABELED_TOKEN = "?"


@dataclass(frozen=True)
class RelationSpec:
    avg_degree: float
    camouflage: float
    homophily: float
    fraud_source_fraction: float = 0.145
    camouflage_concentration: float = 0.0

    def __post_init__(self):
        if self.avg_degree < 0:
            raise ValueError("avg_degree must be non-negative")
        check_probability(self.camouflage, "camouflage")
        check_probability(self.homophily, "homophily")
        check_probability(self.fraud_source_fraction, "fraud_source_fraction")
        check_probability(self.camouflage_concentration, "camouflage_concentration")


def _default_relations() -> tuple[RelationSpec, ...]:
    return (
        RelationSpec(avg_degree=4.0, camouflage=0.1, homophily=0.95),
        RelationSpec(avg_degree=50.0, camouflage=0.9, homophily=0.10,
                     fraud_source_fraction=0.25, camouflage_concentration=0.9),
        RelationSpec(avg_degree=120.0, camouflage=0.9, homophily=0.10,
                     fraud_source_fraction=0.25, camouflage_concentration=0.9),
    )


@dataclass(frozen=True)
class SyntheticSpec:
    num_nodes: int = 1000
    fraud_fraction: float = 0.145
    feature_dim: int = 100
    relations: tuple[RelationSpec, ...] = field(default_factory=_default_relations)
    class_separation: float = 1.3
    class_axis_noise: float = 0.8
    fraud_feature_camouflage: float = 0.6
    num_clusters: int = 6
    cluster_spread: float = 0.35
    cluster_fraud_skew: float = 0.0
    cluster_edge_affinity: float = 0.0
    noise_scale: float = 0.02
    mixing_jitter: float = 0.25
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "relations", tuple(self.relations))
        check_positive_int(self.num_nodes, "num_nodes")
        check_positive_int(self.feature_dim, "feature_dim")
        check_positive_int(self.num_clusters, "num_clusters")
        check_probability(self.fraud_fraction, "fraud_fraction")
        check_probability(self.fraud_feature_camouflage, "fraud_feature_camouflage")
        check_probability(self.cluster_edge_affinity, "cluster_edge_affinity")
        check_probability(self.mixing_jitter, "mixing_jitter")
        if self.cluster_fraud_skew < 0:
            raise ValueError("cluster_fraud_skew must be non-negative")
        if not self.relations:
            raise ValueError("need at least one relation spec")
        for r in self.relations:
            if r.avg_degree > self.num_nodes - 1:
                raise ValueError(
                    f"infeasible degree {r.avg_degree} for {self.num_nodes} nodes"
                )


def _assign_labels(
    spec: SyntheticSpec, clusters: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Exactly ``round(fraud_fraction * n)`` frauds, allocated across clusters.

    With zero skew every cluster gets its proportional share; skew tilts the
    allocation toward randomly chosen high-rate clusters (largest-remainder
    rounding keeps the total exact).
    """
    n = spec.num_nodes
    k = spec.num_clusters
    n_fraud = int(round(spec.fraud_fraction * n))
    sizes = np.bincount(clusters, minlength=k)
    weights = sizes * np.exp(spec.cluster_fraud_skew * rng.normal(size=k))
    quota = n_fraud * weights / weights.sum()
    quota = np.minimum(quota, sizes)
    # redistribute mass clipped off by full clusters, then round
    for _ in range(k):
        deficit = n_fraud - quota.sum()
        if deficit <= 1e-9:
            break
        room = sizes - quota
        open_k = room > 1e-9
        quota[open_k] += deficit * room[open_k] / room[open_k].sum()
        quota = np.minimum(quota, sizes)
    counts = np.floor(quota).astype(np.int64)
    remainder = quota - counts
    short = n_fraud - counts.sum()
    for idx in np.argsort(-remainder):
        if short == 0:
            break
        if counts[idx] < sizes[idx]:
            counts[idx] += 1
            short -= 1
    labels = np.zeros(n, dtype=np.int64)
    for c in range(k):
        members = np.flatnonzero(clusters == c)
        labels[rng.permutation(members)[: counts[c]]] = 1
    return labels


def _features(
    spec: SyntheticSpec,
    labels: np.ndarray,
    clusters: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix plus the shill mask (feature-camouflaged fraudsters)."""
    d = spec.feature_dim
    n = spec.num_nodes
    axis = rng.normal(size=d)
    axis /= np.linalg.norm(axis)
    fraud = np.flatnonzero(labels == 1)
    n_shill = int(round(spec.fraud_feature_camouflage * fraud.size))
    shill = np.zeros(n, dtype=bool)
    shill[rng.permutation(fraud)[:n_shill]] = True
    offsets = rng.normal(0.0, spec.cluster_spread / np.sqrt(d), size=(spec.num_clusters, d))
    eta = rng.normal(0.0, spec.class_axis_noise, size=n)
    proj = spec.class_separation * (labels & ~shill) + eta
    x = proj[:, None] * axis[None, :]
    x += offsets[clusters]
    x += rng.normal(0.0, spec.noise_scale, size=(n, d))
    return x, shill


def _fraud_end_weights(fraud: np.ndarray, shill: np.ndarray, concentration: float) -> np.ndarray:
    """Edge-end weights over the fraud class.

    At concentration 1 every fraud-side edge end lands on a shill; at 0 the
    class is sampled uniformly. Falls back to uniform when no shills exist.
    """
    if len(fraud) == 0:
        return np.empty(0)
    is_shill = shill[fraud]
    if concentration == 0.0 or not is_shill.any() or is_shill.all():
        return np.full(len(fraud), 1.0 / len(fraud))
    w = np.where(is_shill, 1.0, 1.0 - concentration)
    return w / w.sum()


class _ClassPools:
    """Per-class member/weight pools, global and per cluster."""

    def __init__(self, members: np.ndarray, weights: np.ndarray, clusters: np.ndarray, k: int):
        self.members = members
        self.weights = weights
        self.by_cluster: list[tuple[np.ndarray, np.ndarray]] = []
        for c in range(k):
            mask = clusters[members] == c
            sub_m = members[mask]
            sub_w = weights[mask]
            total = sub_w.sum()
            self.by_cluster.append((sub_m, sub_w / total if total > 0 else sub_w))

    def draw(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.members, size=count, p=self.weights)

    def draw_local(self, cluster: int, count: int, rng: np.random.Generator) -> np.ndarray:
        sub_m, sub_w = self.by_cluster[cluster]
        if sub_m.size == 0:
            return self.draw(count, rng)
        return rng.choice(sub_m, size=count, p=sub_w)


def _draw_targets(
    pools: _ClassPools,
    src: np.ndarray,
    sel: np.ndarray,
    clusters: np.ndarray,
    affinity: float,
    rng: np.random.Generator,
    out: np.ndarray,
) -> None:
    """Fill ``out[sel]`` with class-pool draws, cluster-local with prob affinity."""
    idx = np.flatnonzero(sel)
    if idx.size == 0:
        return
    local = rng.random(idx.size) < affinity
    glob = idx[~local]
    if glob.size:
        out[glob] = pools.draw(glob.size, rng)
    loc = idx[local]
    if loc.size:
        src_clusters = clusters[src[loc]]
        for c in np.unique(src_clusters):
            rows = loc[src_clusters == c]
            out[rows] = pools.draw_local(int(c), rows.size, rng)


def _relation_edges(
    spec: SyntheticSpec,
    rel: RelationSpec,
    labels: np.ndarray,
    shill: np.ndarray,
    clusters: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Label-aware configuration draw until the edge-count target is met.

    The realized average degree is exact up to the rounding of the target;
    duplicates and self-loops are rejected and redrawn.
    """
    n = spec.num_nodes
    target_edges = int(round(rel.avg_degree * n / 2.0))
    if target_edges == 0:
        return np.empty((0, 2), dtype=np.int64)
    fraud = np.flatnonzero(labels == 1)
    benign = np.flatnonzero(labels == 0)
    if len(fraud) == 0 or len(benign) == 0:
        fraud_frac = 1.0 if len(benign) == 0 else 0.0
    else:
        fraud_frac = rel.fraud_source_fraction
    jit = spec.mixing_jitter
    cam = np.clip(rel.camouflage + jit * rng.uniform(-1, 1, size=n), 0.0, 1.0)
    hom = np.clip(rel.homophily + jit * rng.uniform(-1, 1, size=n), 0.0, 1.0)
    k = spec.num_clusters
    fraud_pools = _ClassPools(
        fraud, _fraud_end_weights(fraud, shill, rel.camouflage_concentration), clusters, k
    )
    benign_pools = _ClassPools(
        benign, np.full(len(benign), 1.0 / max(len(benign), 1)), clusters, k
    )
    affinity = spec.cluster_edge_affinity

    seen: set[int] = set()
    edges = np.empty((target_edges, 2), dtype=np.int64)
    count = 0
    attempts = 0
    max_attempts = 400 * target_edges + 100000
    while count < target_edges:
        batch = min(4 * (target_edges - count) + 64, 4 * target_edges + 64)
        attempts += batch
        if attempts > max_attempts:
            raise ValueError(
                f"could not reach {target_edges} edges for relation "
                f"(avg_degree={rel.avg_degree}); infeasible for this label mix"
            )
        from_fraud = rng.random(batch) < fraud_frac
        src = np.empty(batch, dtype=np.int64)
        n_f = int(from_fraud.sum())
        if n_f and len(fraud):
            src[from_fraud] = fraud_pools.draw(n_f, rng)
        if batch - n_f and len(benign):
            src[~from_fraud] = benign_pools.draw(batch - n_f, rng)
        u = rng.random(batch)
        # fraud source: cross-class with prob camouflage; benign source:
        # same-class with prob homophily
        src_is_fraud = labels[src] == 1
        tgt_is_fraud = np.where(src_is_fraud, u >= cam[src], u < (1.0 - hom[src]))
        if len(fraud) == 0:
            tgt_is_fraud[:] = False
        if len(benign) == 0:
            tgt_is_fraud[:] = True
        dst = np.empty(batch, dtype=np.int64)
        _draw_targets(fraud_pools, src, tgt_is_fraud, clusters, affinity, rng, dst)
        _draw_targets(benign_pools, src, ~tgt_is_fraud, clusters, affinity, rng, dst)
        ok = np.flatnonzero(src != dst)
        lo = np.minimum(src[ok], dst[ok])
        hi = np.maximum(src[ok], dst[ok])
        for a, b in zip(lo, hi):
            key = int(a) * n + int(b)
            if key in seen:
                continue
            seen.add(key)
            edges[count, 0] = a
            edges[count, 1] = b
            count += 1
            if count == target_edges:
                break
    return edges


def generate_synthetic(spec: SyntheticSpec) -> MultiRelationGraph:
    """Deterministic synthetic graph hitting the spec's statistical targets."""
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    n = spec.num_nodes
    clusters = rng.integers(0, spec.num_clusters, size=n)
    labels = _assign_labels(spec, clusters, rng)
    features, shill = _features(spec, labels, clusters, rng)
    edges = [_relation_edges(spec, rel, labels, shill, clusters, rng) for rel in spec.relations]
    return build_graph(n, features, labels, edges)


# ---------------------------------------------------------------------------
# dataset files


def save_dataset(g: MultiRelationGraph, node_file, edge_files) -> None:
    """Write delimited node/edge files that :func:`load_dataset` round-trips.

    Floats are written with full round-trip precision, so loading restores
    bit-identical features.
    """
    edge_files = [Path(p) for p in edge_files]
    if len(edge_files) != g.num_relations:
        raise ValueError(f"need {g.num_relations} edge files, got {len(edge_files)}")
    node_file = Path(node_file)
    d = g.feature_dim
    header = ["node_id", "label"] + [f"f_{j}" for j in range(d)]
    with node_file.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for v in range(g.num_nodes):
            lab = g.labels[v]
            row = [str(v), UNLABELED_TOKEN if lab == -1 else str(int(lab))]
            row.extend(repr(float(x)) for x in g.features[v])
            w.writerow(row)
    for r, path in enumerate(edge_files):
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "v"])
            for u, v in g.edges[r]:
                w.writerow([str(int(u)), str(int(v))])


def _parse_error(path, line_no: int, message: str) -> ValueError:
    return ValueError(f"{path}, line {line_no}: {message}")


def load_dataset(node_file, edge_files) -> MultiRelationGraph:
    """Read node/edge files into a graph.

    Node ids must be dense in [0, N); labels are 0, 1 or ``?`` for unknown.
    Parse failures report the offending file and line.
    """
    node_file = Path(node_file)
    edge_files = [Path(p) for p in edge_files]
    if not edge_files:
        raise ValueError("need at least one edge file")

    rows: dict[int, tuple[int, list[float]]] = {}
    width = None
    with node_file.open(newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if line_no == 1 and row and row[0] == "node_id":
                continue
            if not row:
                continue
            if width is None:
                width = len(row)
            if len(row) != width:
                raise _parse_error(node_file, line_no, f"expected {width} fields, got {len(row)}")
            if len(row) < 3:
                raise _parse_error(node_file, line_no, "expected node_id,label,f_0,...")
            try:
                node_id = int(row[0])
            except ValueError:
                raise _parse_error(node_file, line_no, f"bad node id {row[0]!r}") from None
            if row[1] == UNLABELED_TOKEN:
                label = -1
            else:
                try:
                    label = int(row[1])
                except ValueError:
                    raise _parse_error(node_file, line_no, f"bad label {row[1]!r}") from None
                if label not in (0, 1):
                    raise _parse_error(node_file, line_no, f"label must be 0, 1 or ?, got {label}")
            try:
                feats = [float(x) for x in row[2:]]
            except ValueError:
                raise _parse_error(node_file, line_no, "bad feature value") from None
            if node_id in rows:
                raise _parse_error(node_file, line_no, f"duplicate node id {node_id}")
            rows[node_id] = (label, feats)
    if not rows:
        raise ValueError(f"{node_file}: no node rows")
    n = len(rows)
    if sorted(rows) != list(range(n)):
        raise ValueError(f"{node_file}: node ids must be dense in [0, {n})")
    labels = [rows[v][0] for v in range(n)]
    features = np.array([rows[v][1] for v in range(n)], dtype=np.float64)

    edge_lists = []
    for path in edge_files:
        pairs = []
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            for line_no, row in enumerate(reader, start=1):
                if line_no == 1 and row and row[0] == "u":
                    continue
                if not row:
                    continue
                if len(row) != 2:
                    raise _parse_error(path, line_no, f"expected u,v pair, got {len(row)} fields")
                try:
                    pairs.append((int(row[0]), int(row[1])))
                except ValueError:
                    raise _parse_error(path, line_no, f"bad endpoint in {row!r}") from None
        edge_lists.append(pairs)
    return build_graph(n, features, labels, edge_lists)


def dataset_paths(directory) -> tuple[Path, list[Path]]:
    """Conventional layout used by the CLI: nodes.csv plus edges_r*.csv."""
    directory = Path(directory)
    node_file = directory / "nodes.csv"
    edge_files = sorted(directory.glob("edges_r*.csv"))
    if not edge_files:
        raise ValueError(f"no edges_r*.csv files in {directory}")
    return node_file, edge_files


def save_dataset_dir(g: MultiRelationGraph, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    edge_files = [directory / f"edges_r{r}.csv" for r in range(g.num_relations)]
    save_dataset(g, directory / "nodes.csv", edge_files)


def load_dataset_dir(directory) -> MultiRelationGraph:
    node_file, edge_files = dataset_paths(directory)
    return load_dataset(node_file, edge_files)


# ---------------------------------------------------------------------------
# train/test splits


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


def split_dataset(g: MultiRelationGraph, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint train/test masks covering every labeled node.

    Stratified splits take ``round(fraction * count)`` training nodes per
    class and require both classes on both sides.
    """
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    labeled = np.flatnonzero(g.labels != -1)
    if labeled.size == 0:
        raise ValueError("graph has no labeled nodes")
    train = np.zeros(g.num_nodes, dtype=bool)
    test = np.zeros(g.num_nodes, dtype=bool)
    groups = (
        [labeled[g.labels[labeled] == c] for c in (0, 1)]
        if spec.stratified
        else [labeled]
    )
    for members in groups:
        if spec.stratified and members.size == 0:
            raise ValueError("stratified split requires both classes present")
        perm = members[rng.permutation(members.size)]
        k = int(round(spec.train_fraction * members.size))
        if spec.stratified and (k == 0 or k == members.size):
            raise ValueError(
                f"stratified split leaves a class empty on one side "
                f"(class size {members.size}, train fraction {spec.train_fraction})"
            )
        train[perm[:k]] = True
        test[perm[k:]] = True
    return train, test
