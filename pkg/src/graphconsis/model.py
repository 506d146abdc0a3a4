"""Consistency-aware GNN for fraud detection on multi-relation graphs.

The model stacks sampled-neighborhood aggregation layers. Three mechanisms
distinguish it from a vanilla sampled GNN, each switchable so ablation
baselines share this exact code path:

* a trainable per-node context embedding concatenated with raw features
  at the first layer;
* neighbor sampling driven by a consistency score
  ``s(u, v) = exp(-||h_u - h_v||^2)``: candidates below a threshold are
  filtered out and the rest are drawn with probability proportional to
  their score;
* per-relation embeddings with a learned attention vector that weights
  the drawn samples before aggregation.

Sampling is a stop-gradient boundary: gradients flow into the sampled
embeddings but never into sampling probabilities. A forward pass can
record its sample draws into a :class:`SamplingPlan` and replay them,
which keeps the loss a smooth function of parameters for finite-difference
checks and makes oracle comparisons exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tensor
from .graph import MultiRelationGraph
from .validation import check_mask, check_node

# rng stream tags so init/train/predict draws never collide
_INIT, _TRAIN, _PREDICT = 0, 1, 2


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent, reproducible stream for (seed, purpose, index...)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


@dataclass(frozen=True)
class LayerConfig:
    """Architecture and sampling configuration shared by all GNN variants."""

    num_layers: int = 2
    samples_per_layer: tuple[int, ...] = (10, 5)
    hidden_widths: tuple[int, ...] = (200, 100)
    epsilon: float = 0.01
    combine_mode: str = "concat"
    leaky_slope: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "samples_per_layer", tuple(int(q) for q in self.samples_per_layer))
        object.__setattr__(self, "hidden_widths", tuple(int(h) for h in self.hidden_widths))
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if len(self.samples_per_layer) != self.num_layers:
            raise ValueError("samples_per_layer must list one count per layer")
        if len(self.hidden_widths) != self.num_layers:
            raise ValueError("hidden_widths must list one width per layer")
        if any(q < 1 for q in self.samples_per_layer):
            raise ValueError("samples per layer must be >= 1")
        if any(h < 1 for h in self.hidden_widths):
            raise ValueError("hidden widths must be >= 1")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must be in [0, 1); 1 would filter all but exact duplicates")
        if self.combine_mode not in ("concat", "add"):
            raise ValueError("combine_mode must be 'concat' or 'add'")


@dataclass(frozen=True)
class ModelVariant:
    """Mechanism switches; baselines differ from the full model only here."""

    use_context: bool = True
    sampling: str = "consistency"  # consistency | uniform | full
    aggregation: str = "attention"  # attention | mean

    def __post_init__(self):
        if self.sampling not in ("consistency", "uniform", "full"):
            raise ValueError(f"unknown sampling mode {self.sampling!r}")
        if self.aggregation not in ("attention", "mean"):
            raise ValueError(f"unknown aggregation mode {self.aggregation!r}")


GRAPHCONSIS = ModelVariant()
UNIFORM_SAMPLE_GNN = ModelVariant(use_context=False, sampling="uniform", aggregation="mean")
FULL_MEAN_GNN = ModelVariant(use_context=False, sampling="full", aggregation="mean")


def layer_input_widths(feature_dim: int, cfg: LayerConfig, variant: ModelVariant) -> list[int]:
    """Embedding width flowing into each layer's sampler and aggregator."""
    first = 2 * feature_dim if variant.use_context else feature_dim
    return [first] + list(cfg.hidden_widths[:-1])


@dataclass
class ModelParams:
    """All trainable state.

    ``context`` is None for variants without context embeddings;
    ``relation_embeddings`` and ``attention`` are empty for variants
    without attention. One relation embedding matrix and one attention
    vector exist per layer because layer widths differ.
    """

    context: Parameter | None
    relation_embeddings: list[Parameter]
    attention: list[Parameter]
    layer_weights: list[Parameter]
    classifier: Parameter

    def all_parameters(self) -> list[Parameter]:
        out = []
        if self.context is not None:
            out.append(self.context)
        out.extend(self.relation_embeddings)
        out.extend(self.attention)
        out.extend(self.layer_weights)
        out.append(self.classifier)
        return out

    def groups(self) -> dict[str, list[Parameter]]:
        return {
            "context_embeddings": [self.context] if self.context is not None else [],
            "relation_embeddings": list(self.relation_embeddings),
            "attention_vectors": list(self.attention),
            "layer_weights": list(self.layer_weights),
            "classifier_weights": [self.classifier],
        }

    def zero_grads(self) -> None:
        for p in self.all_parameters():
            p.zero_grad()


def init_params(
    g: MultiRelationGraph,
    cfg: LayerConfig,
    seed: int,
    variant: ModelVariant = GRAPHCONSIS,
) -> ModelParams:
    """Seeded initialization: dense transforms uniform in +-1/sqrt(fan_in),
    context and relation embeddings from N(0, 0.01)."""
    rng = derive_rng(seed, _INIT)
    d = g.feature_dim
    widths = layer_input_widths(d, cfg, variant)

    def dense(fan_in: int, shape, name: str) -> Parameter:
        bound = 1.0 / np.sqrt(fan_in)
        return Parameter(rng.uniform(-bound, bound, size=shape), name)

    context = None
    if variant.use_context:
        context = Parameter(rng.normal(0.0, 0.01, size=(g.num_nodes, d)), "context")

    rel_embs: list[Parameter] = []
    att: list[Parameter] = []
    weights: list[Parameter] = []
    for l in range(cfg.num_layers):
        w_in = widths[l]
        if variant.aggregation == "attention":
            rel_embs.append(
                Parameter(rng.normal(0.0, 0.01, size=(g.num_relations, w_in)), f"relation_emb_{l}")
            )
            att.append(dense(2 * w_in, (2 * w_in,), f"attention_{l}"))
        comb_in = 2 * w_in if cfg.combine_mode == "concat" else w_in
        weights.append(dense(comb_in, (comb_in, cfg.hidden_widths[l]), f"layer_{l}"))
    classifier = dense(cfg.hidden_widths[-1], (cfg.hidden_widths[-1],), "classifier")
    return ModelParams(context, rel_embs, att, weights, classifier)


# ---------------------------------------------------------------------------
# consistency scoring and neighbor sampling


def consistency_scores(h: np.ndarray, v: int, candidates: np.ndarray) -> np.ndarray:
    """``exp(-||h_u - h_v||^2)`` per candidate ``u``; each value in (0, 1]."""
    h = np.asarray(h, dtype=np.float64)
    diff = h[np.asarray(candidates, dtype=np.int64)] - h[v]
    return np.exp(-(diff * diff).sum(axis=1))


@dataclass(frozen=True)
class SampledNeighborhood:
    """Filtered candidates of one node plus the Q draws made from them."""

    center: int
    filtered_nodes: np.ndarray
    filtered_relations: np.ndarray
    probabilities: np.ndarray
    sample_nodes: np.ndarray
    sample_relations: np.ndarray
    is_fallback: bool


def _draw(probabilities: np.ndarray, q: int, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(probabilities)
    idx = np.searchsorted(cum, rng.random(q), side="right")
    return np.minimum(idx, len(probabilities) - 1)


def _select_and_draw(
    center: int,
    nodes: np.ndarray,
    relations: np.ndarray,
    scores: np.ndarray | None,
    q: int,
    epsilon: float,
    rng: np.random.Generator,
) -> SampledNeighborhood:
    """Shared filter/normalize/draw step; ``scores=None`` means uniform."""
    if scores is None:
        keep = np.ones(len(nodes), dtype=bool)
    else:
        keep = scores >= epsilon
    if len(nodes) == 0 or not keep.any():
        self_nodes = np.full(q, center, dtype=np.int64)
        return SampledNeighborhood(
            center=center,
            filtered_nodes=np.empty(0, dtype=np.int64),
            filtered_relations=np.empty(0, dtype=np.int64),
            probabilities=np.empty(0, dtype=np.float64),
            sample_nodes=self_nodes,
            sample_relations=np.zeros(q, dtype=np.int64),
            is_fallback=True,
        )
    kept_nodes = nodes[keep]
    kept_rels = relations[keep]
    if scores is None:
        probs = np.full(len(kept_nodes), 1.0 / len(kept_nodes))
    else:
        kept_scores = scores[keep]
        total = kept_scores.sum()
        if total <= 0.0:  # all scores underflowed; weight survivors equally
            probs = np.full(len(kept_nodes), 1.0 / len(kept_nodes))
        else:
            probs = kept_scores / total
    idx = _draw(probs, q, rng)
    return SampledNeighborhood(
        center=center,
        filtered_nodes=kept_nodes,
        filtered_relations=kept_rels,
        probabilities=probs,
        sample_nodes=kept_nodes[idx],
        sample_relations=kept_rels[idx],
        is_fallback=False,
    )


def filter_and_sample(
    g: MultiRelationGraph,
    h: np.ndarray,
    v: int,
    q: int,
    epsilon: float,
    rng: np.random.Generator,
    mode: str = "consistency",
) -> SampledNeighborhood:
    """Threshold-filter ``v``'s multi-relation neighbors by consistency score
    and draw ``q`` samples i.i.d. with replacement.

    Candidates are (neighbor, relation) entries across every relation; a
    neighbor under several relations is a candidate once per relation. If
    nothing survives the filter the node falls back to ``q`` copies of
    itself under relation 0, flagged via ``is_fallback``.
    """
    v = check_node(v, g.num_nodes)
    if q < 1:
        raise ValueError("need at least one sample")
    nodes, relations = g.candidates_of(v)
    scores = None
    if mode == "consistency":
        scores = consistency_scores(np.asarray(h, dtype=np.float64), v, nodes)
    elif mode != "uniform":
        raise ValueError(f"unknown sampling mode {mode!r}")
    return _select_and_draw(v, nodes, relations, scores, q, epsilon, rng)


@dataclass(frozen=True)
class LayerPlan:
    sample_nodes: np.ndarray  # (N, Q)
    sample_relations: np.ndarray  # (N, Q)
    fallback: np.ndarray  # (N,) bool


@dataclass
class SamplingPlan:
    """Recorded sample draws for every layer of one forward pass."""

    layers: list[LayerPlan] = field(default_factory=list)


def _sample_layer(
    g: MultiRelationGraph,
    h_values: np.ndarray,
    q: int,
    epsilon: float,
    rng: np.random.Generator,
    mode: str,
) -> LayerPlan:
    """Draw samples for every node at once.

    Distances come from a Gram matrix (one dense matmul) instead of
    per-node subtraction; clipping guards the tiny negatives roundoff can
    produce.
    """
    n = g.num_nodes
    ids = np.empty((n, q), dtype=np.int64)
    rels = np.empty((n, q), dtype=np.int64)
    fallback = np.zeros(n, dtype=bool)
    if mode == "consistency":
        gram = h_values @ h_values.T
        sqnorm = np.diag(gram).copy()
    for v in range(n):
        nodes, relations = g.candidates_of(v)
        scores = None
        if mode == "consistency":
            d2 = sqnorm[nodes] + sqnorm[v] - 2.0 * gram[v, nodes]
            scores = np.exp(-np.maximum(d2, 0.0))
        s = _select_and_draw(v, nodes, relations, scores, q, epsilon, rng)
        ids[v] = s.sample_nodes
        rels[v] = s.sample_relations
        fallback[v] = s.is_fallback
    return LayerPlan(ids, rels, fallback)


# ---------------------------------------------------------------------------
# attention and aggregation (per-neighborhood reference ops)


def relation_attention_weights(
    h_samples,
    relations: np.ndarray,
    relation_embeddings,
    attention_vector,
    slope: float = 0.01,
) -> Tensor:
    """Softmax attention over Q samples from their embeddings and relation tags.

    Each sample's logit is ``leaky_relu({h_q || t_{r_q}} . a)``; weights are
    positive and sum to 1.
    """
    h_samples = ad.constant(h_samples)
    t_all = ad.constant(relation_embeddings)
    a = ad.constant(attention_vector)
    if h_samples.value.shape[1] + t_all.value.shape[1] != a.value.shape[0]:
        raise ValueError(
            f"attention vector width {a.value.shape[0]} != sample width "
            f"{h_samples.value.shape[1]} + relation width {t_all.value.shape[1]}"
        )
    t = ad.gather_rows(t_all, np.asarray(relations, dtype=np.int64))
    logits = ad.matmul(ad.concat([h_samples, t], axis=1), a)
    return ad.softmax(ad.leaky_relu(logits, slope))


def aggregate_neighborhood(h_samples, alphas) -> Tensor:
    """Convex combination ``sum_q alpha_q h_q`` of the sampled embeddings."""
    h_samples = ad.constant(h_samples)
    alphas = ad.constant(alphas)
    if alphas.value.shape[0] != h_samples.value.shape[0]:
        raise ValueError("one weight per sampled embedding required")
    return ad.matmul(alphas, h_samples)


# ---------------------------------------------------------------------------
# layers and full forward


def _full_mean_matrix(g: MultiRelationGraph) -> np.ndarray:
    """Row-normalized merged adjacency; isolated nodes aggregate themselves."""
    cached = getattr(g, "_full_mean_matrix", None)
    if cached is not None:
        return cached
    n = g.num_nodes
    merged = g.merge_relations().edges[0]
    a = np.zeros((n, n), dtype=np.float64)
    a[merged[:, 0], merged[:, 1]] = 1.0
    a[merged[:, 1], merged[:, 0]] = 1.0
    deg = a.sum(axis=1)
    isolated = deg == 0
    a[isolated, isolated] = 1.0
    deg[isolated] = 1.0
    a /= deg[:, None]
    g._full_mean_matrix = a
    return a


def input_embeddings(g: MultiRelationGraph, params: ModelParams, variant: ModelVariant) -> Tensor:
    """First-layer input: raw features, with context embeddings appended
    column-wise when the variant trains them."""
    x = ad.constant(g.features)
    if variant.use_context:
        if params.context is None:
            raise ValueError("variant uses context embeddings but params have none")
        return ad.concat([x, params.context], axis=1)
    return x


def layer_forward(
    g: MultiRelationGraph,
    h_prev,
    layer: int,
    params: ModelParams,
    cfg: LayerConfig,
    rng: np.random.Generator | None = None,
    variant: ModelVariant = GRAPHCONSIS,
    plan: LayerPlan | None = None,
) -> tuple[Tensor, LayerPlan | None]:
    """One aggregation layer over the whole graph.

    Samples each node's neighborhood from ``h_prev`` values (or replays
    ``plan``), aggregates sampled embeddings, combines with the center via
    the configured mode, then applies the dense transform and leaky-ReLU.
    Returns the new embedding matrix and the plan used.
    """
    h_prev = ad.constant(h_prev)
    n = g.num_nodes
    q = cfg.samples_per_layer[layer]

    if variant.sampling == "full":
        agg = ad.matmul(ad.constant(_full_mean_matrix(g)), h_prev)
        used_plan = None
    else:
        if plan is None:
            if rng is None:
                raise ValueError("layer_forward needs an rng when no plan is supplied")
            mode = "consistency" if variant.sampling == "consistency" else "uniform"
            eps = cfg.epsilon if variant.sampling == "consistency" else 0.0
            plan = _sample_layer(g, h_prev.value, q, eps, rng, mode)
        ids_flat = plan.sample_nodes.reshape(-1)
        h_s = ad.gather_rows(h_prev, ids_flat)  # (N*Q, w)
        if variant.aggregation == "attention":
            t_s = ad.gather_rows(params.relation_embeddings[layer], plan.sample_relations.reshape(-1))
            logits = ad.matmul(ad.concat([h_s, t_s], axis=1), params.attention[layer])
            act = ad.leaky_relu(logits, cfg.leaky_slope)
            alphas = ad.reshape(ad.softmax(ad.reshape(act, (n, q)), axis=-1), (n * q, 1))
            weighted = ad.mul(h_s, alphas)
        else:
            weighted = ad.mul(h_s, 1.0 / q)
        agg = ad.group_sum(weighted, q)
        used_plan = plan

    if cfg.combine_mode == "concat":
        combined = ad.concat([h_prev, agg], axis=1)
    else:
        combined = ad.add(h_prev, agg)
    out = ad.leaky_relu(ad.matmul(combined, params.layer_weights[layer]), cfg.leaky_slope)
    return out, used_plan


@dataclass
class ForwardResult:
    embeddings: Tensor  # (N, hidden_widths[-1])
    logits: Tensor  # (N,)
    plan: SamplingPlan


def model_forward(
    g: MultiRelationGraph,
    params: ModelParams,
    cfg: LayerConfig,
    rng: np.random.Generator | None = None,
    variant: ModelVariant = GRAPHCONSIS,
    plan: SamplingPlan | None = None,
) -> ForwardResult:
    """All layers plus the classifier head.

    Pass ``rng`` to draw fresh samples (recorded into the returned plan) or
    ``plan`` to replay a previous pass exactly.
    """
    h = input_embeddings(g, params, variant)
    used = SamplingPlan()
    for l in range(cfg.num_layers):
        layer_plan = plan.layers[l] if plan is not None and variant.sampling != "full" else None
        h, lp = layer_forward(g, h, l, params, cfg, rng, variant, layer_plan)
        if lp is not None:
            used.layers.append(lp)
    logits = ad.matmul(h, params.classifier)
    return ForwardResult(embeddings=h, logits=logits, plan=used)


# ---------------------------------------------------------------------------
# loss, training, prediction


def compute_loss(logits: Tensor, labels: np.ndarray, train_mask: np.ndarray) -> Tensor:
    """Mean binary cross-entropy with logits over the masked nodes."""
    n = logits.value.shape[0]
    mask = check_mask(train_mask, n, "train_mask")
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise ValueError("train_mask selects no nodes")
    y = np.asarray(labels)[idx]
    if np.any(y == -1):
        raise ValueError("train_mask selects unlabeled nodes")
    return ad.bce_with_logits(ad.gather_rows(logits, idx), y.astype(np.float64))


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainResult:
    params: ModelParams
    loss_history: list[float]


def train(
    g: MultiRelationGraph,
    cfg: LayerConfig,
    train_mask: np.ndarray,
    epochs: int,
    seed: int,
    variant: ModelVariant = GRAPHCONSIS,
    learning_rate: float = 0.01,
    beta1: float = 0.9,
    beta2: float = 0.999,
    adam_eps: float = 1e-8,
) -> TrainResult:
    """Full-graph training: fresh neighborhood samples, forward, loss,
    backprop, and one Adam step per epoch."""
    params = init_params(g, cfg, seed, variant)
    history: list[float] = []
    for epoch in range(epochs):
        rng = derive_rng(seed, _TRAIN, epoch)
        out = model_forward(g, params, cfg, rng, variant)
        loss = compute_loss(out.logits, g.labels, train_mask)
        value = float(loss.value)
        if not np.isfinite(value):
            raise TrainingDiverged(f"non-finite loss {value} at epoch {epoch}")
        history.append(value)
        params.zero_grads()
        ad.backward(loss)
        ad.adam_step(params.all_parameters(), learning_rate, beta1, beta2, adam_eps)
    return TrainResult(params=params, loss_history=history)


def predict_scores(
    g: MultiRelationGraph,
    params: ModelParams,
    cfg: LayerConfig,
    seed: int,
    num_forward_passes: int = 10,
    variant: ModelVariant = GRAPHCONSIS,
) -> np.ndarray:
    """Per-node fraud probability, averaged over independent sampling passes
    to damp sampling variance."""
    if num_forward_passes < 1:
        raise ValueError("need at least one forward pass")
    acc = np.zeros(g.num_nodes, dtype=np.float64)
    for p in range(num_forward_passes):
        rng = derive_rng(seed, _PREDICT, p)
        out = model_forward(g, params, cfg, rng, variant)
        z = out.logits.value
        acc += np.where(z >= 0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))
    return acc / num_forward_passes
