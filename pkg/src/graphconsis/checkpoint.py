"""Versioned JSON checkpoints for model and baseline parameters.

Values are serialized as JSON numbers at full round-trip precision, so a
load restores bit-identical float64 arrays and therefore bit-identical
forward outputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autodiff import Parameter
from .baselines import LogisticRegressionParams
from .model import LayerConfig, ModelParams, ModelVariant

FORMAT_VERSION = 1


def _arr(a: np.ndarray) -> list:
    return a.tolist()


def _param(value, name: str) -> Parameter:
    return Parameter(np.asarray(value, dtype=np.float64), name)


def save_checkpoint(
    path,
    method: str,
    params: ModelParams | LogisticRegressionParams,
    seed: int,
    cfg: LayerConfig | None = None,
    variant: ModelVariant | None = None,
) -> None:
    doc: dict = {"format_version": FORMAT_VERSION, "method": method, "seed": seed}
    if isinstance(params, LogisticRegressionParams):
        doc["params"] = {"weights": _arr(params.weights), "bias": params.bias}
    else:
        if cfg is None or variant is None:
            raise ValueError("GNN checkpoints need the layer config and variant")
        doc["layer_config"] = {
            "num_layers": cfg.num_layers,
            "samples_per_layer": list(cfg.samples_per_layer),
            "hidden_widths": list(cfg.hidden_widths),
            "epsilon": cfg.epsilon,
            "combine_mode": cfg.combine_mode,
            "leaky_slope": cfg.leaky_slope,
        }
        doc["variant"] = {
            "use_context": variant.use_context,
            "sampling": variant.sampling,
            "aggregation": variant.aggregation,
        }
        doc["params"] = {
            "context_embeddings": None if params.context is None else _arr(params.context.value),
            "relation_embeddings": [_arr(p.value) for p in params.relation_embeddings],
            "attention_vectors": [_arr(p.value) for p in params.attention],
            "layer_weights": [_arr(p.value) for p in params.layer_weights],
            "classifier_weights": _arr(params.classifier.value),
        }
    Path(path).write_text(json.dumps(doc, indent=1))


@dataclass
class Checkpoint:
    method: str
    seed: int
    params: ModelParams | LogisticRegressionParams
    layer_config: LayerConfig | None = None
    variant: ModelVariant | None = None


def load_checkpoint(path) -> Checkpoint:
    doc = json.loads(Path(path).read_text())
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format version {version!r}")
    method = doc["method"]
    seed = int(doc["seed"])
    raw = doc["params"]
    if method == "logistic-regression":
        params = LogisticRegressionParams(
            weights=np.asarray(raw["weights"], dtype=np.float64),
            bias=float(raw["bias"]),
        )
        return Checkpoint(method=method, seed=seed, params=params)
    cfg = LayerConfig(
        num_layers=doc["layer_config"]["num_layers"],
        samples_per_layer=tuple(doc["layer_config"]["samples_per_layer"]),
        hidden_widths=tuple(doc["layer_config"]["hidden_widths"]),
        epsilon=doc["layer_config"]["epsilon"],
        combine_mode=doc["layer_config"]["combine_mode"],
        leaky_slope=doc["layer_config"]["leaky_slope"],
    )
    variant = ModelVariant(
        use_context=doc["variant"]["use_context"],
        sampling=doc["variant"]["sampling"],
        aggregation=doc["variant"]["aggregation"],
    )
    context = raw["context_embeddings"]
    params = ModelParams(
        context=None if context is None else _param(context, "context"),
        relation_embeddings=[_param(v, f"relation_emb_{i}") for i, v in enumerate(raw["relation_embeddings"])],
        attention=[_param(v, f"attention_{i}") for i, v in enumerate(raw["attention_vectors"])],
        layer_weights=[_param(v, f"layer_{i}") for i, v in enumerate(raw["layer_weights"])],
        classifier=_param(raw["classifier_weights"], "classifier"),
    )
    return Checkpoint(method=method, seed=seed, params=params, layer_config=cfg, variant=variant)
