"""Input validation helpers shared across the package."""

from __future__ import annotations

import numbers

import numpy as np


def check_feature_matrix(features, num_nodes: int) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"features must be 2-D, got ndim={X.ndim}")
    if X.shape[0] != num_nodes:
        raise ValueError(f"features has {X.shape[0]} rows, expected {num_nodes}")
    if X.shape[1] < 1:
        raise ValueError("feature dimension must be at least 1")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite values")
    return X


def check_labels(labels, num_nodes: int) -> np.ndarray:
    """Normalize labels to an int64 array with -1 marking unknown."""
    out = np.empty(num_nodes, dtype=np.int64)
    labels = list(labels)
    if len(labels) != num_nodes:
        raise ValueError(f"got {len(labels)} labels for {num_nodes} nodes")
    for i, lab in enumerate(labels):
        if lab is None:
            out[i] = -1
        elif isinstance(lab, numbers.Integral) and int(lab) in (-1, 0, 1):
            out[i] = int(lab)
        else:
            raise ValueError(f"label for node {i} must be 0, 1, or unknown, got {lab!r}")
    return out


def check_mask(mask, num_nodes: int, name: str = "mask") -> np.ndarray:
    m = np.asarray(mask)
    if m.dtype != np.bool_:
        raise ValueError(f"{name} must be boolean")
    if m.shape != (num_nodes,):
        raise ValueError(f"{name} has shape {m.shape}, expected ({num_nodes},)")
    return m


def check_node(v, num_nodes: int) -> int:
    if not isinstance(v, numbers.Integral):
        raise ValueError(f"node id must be an integer, got {type(v).__name__}")
    v = int(v)
    if not 0 <= v < num_nodes:
        raise ValueError(f"node id {v} out of range [0, {num_nodes})")
    return v


def check_relation(r, num_relations: int) -> int:
    if not isinstance(r, numbers.Integral):
        raise ValueError(f"relation id must be an integer, got {type(r).__name__}")
    r = int(r)
    if not 0 <= r < num_relations:
        raise ValueError(f"relation id {r} out of range [0, {num_relations})")
    return r


def check_probability(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")
    return value


def check_positive_int(value, name: str) -> int:
    if not isinstance(value, numbers.Integral) or int(value) < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
