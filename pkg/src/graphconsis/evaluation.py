"""Classification metrics and the benchmark grid driver.

AUC is the rank statistic (probability a random positive outscores a
random negative, ties counted half), computed from average ranks so tied
scores are handled exactly. F1 comes in two averagings because published
comparisons rarely say which they used: ``binary-positive`` scores the
fraud class alone, ``macro`` averages both classes' F1.

``run_experiment`` trains every requested method on every (train fraction,
seed) cell, evaluates on the held-out nodes, and aggregates mean/std per
cell into a fixed-column grid. All numeric outputs are deterministic given
the configuration; wall-clock runtimes are reported alongside but are the
one inherently non-reproducible column.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict, replace

import numpy as np

from .baselines import METHODS
from .data import SplitSpec, split_dataset
from .estimators import make_estimator
from .graph import MultiRelationGraph

GRID_COLUMNS = (
    "method",
    "train_fraction",
    "seed_count",
    "f1_macro_mean",
    "f1_macro_std",
    "f1_binary_mean",
    "f1_binary_std",
    "auc_mean",
    "auc_std",
    "runtime_s",
)


def _binary_f1(predictions: np.ndarray, labels: np.ndarray, positive: int) -> float:
    tp = int(((predictions == positive) & (labels == positive)).sum())
    fp = int(((predictions == positive) & (labels != positive)).sum())
    fn = int(((predictions != positive) & (labels == positive)).sum())
    if tp == 0:
        return 0.0  # zero predicted and/or zero true positives score 0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def f1_score(predictions, labels, averaging: str = "binary-positive") -> float:
    """F1 of binary predictions; ``macro`` averages both classes' F1."""
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if p.shape != y.shape or p.ndim != 1 or p.size == 0:
        raise ValueError("predictions and labels must be equal-length non-empty 1-D sequences")
    if averaging == "binary-positive":
        return _binary_f1(p, y, 1)
    if averaging == "macro":
        return 0.5 * (_binary_f1(p, y, 1) + _binary_f1(p, y, 0))
    raise ValueError(f"unknown averaging {averaging!r}")


def auc_score(scores, labels) -> float:
    """Rank-based AUC with tie correction."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be equal-length 1-D sequences")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(s.size, dtype=np.float64)
    sorted_s = s[order]
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum = float(ranks[y == 1].sum())
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


# ---------------------------------------------------------------------------
# experiment grid


@dataclass(frozen=True)
class RunSettings:
    """Everything one benchmark cell needs besides the graph."""

    epochs: int = 100
    learning_rate: float = 0.01
    num_forward_passes: int = 10
    num_layers: int = 2
    samples_per_layer: tuple[int, ...] = (10, 5)
    hidden_widths: tuple[int, ...] = (200, 100)
    epsilon: float = 0.01
    combine_mode: str = "concat"
    stratified: bool = True
    decision_threshold: float = 0.5


@dataclass(frozen=True)
class EvalResult:
    method: str
    train_fraction: float
    seed: int
    f1_binary: float
    f1_macro: float
    auc: float
    runtime_s: float
    status: str = "ok"
    error: str = ""


@dataclass(frozen=True)
class GridRow:
    method: str
    train_fraction: float
    seed_count: int
    f1_macro_mean: float
    f1_macro_std: float
    f1_binary_mean: float
    f1_binary_std: float
    auc_mean: float
    auc_std: float
    runtime_s: float


@dataclass
class ExperimentGrid:
    rows: list[GridRow]
    runs: list[EvalResult]

    def to_dict(self) -> dict:
        return {
            "columns": list(GRID_COLUMNS),
            "rows": [asdict(r) for r in self.rows],
            "runs": [asdict(r) for r in self.runs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def to_csv(self) -> str:
        lines = [",".join(GRID_COLUMNS)]
        for r in self.rows:
            rec = asdict(r)
            lines.append(",".join(_csv_cell(rec[c]) for c in GRID_COLUMNS))
        return "\n".join(lines) + "\n"


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def evaluate_run(
    g: MultiRelationGraph,
    method: str,
    train_fraction: float,
    seed: int,
    settings: RunSettings,
) -> EvalResult:
    """Train one method on one stratified split and score the held-out nodes."""
    start = time.perf_counter()
    try:
        train_mask, test_mask = split_dataset(
            g, SplitSpec(train_fraction, stratified=settings.stratified, seed=seed)
        )
        est = make_estimator(
            method,
            num_layers=settings.num_layers,
            samples_per_layer=settings.samples_per_layer,
            hidden_widths=settings.hidden_widths,
            epsilon=settings.epsilon,
            combine_mode=settings.combine_mode,
            epochs=settings.epochs,
            learning_rate=settings.learning_rate,
            num_forward_passes=settings.num_forward_passes,
            random_state=seed,
        )
        est.fit(g, train_mask)
        scores = est.predict_scores(g)[test_mask]
        y = g.labels[test_mask]
        preds = (scores >= settings.decision_threshold).astype(np.int64)
        return EvalResult(
            method=method,
            train_fraction=train_fraction,
            seed=seed,
            f1_binary=f1_score(preds, y, "binary-positive"),
            f1_macro=f1_score(preds, y, "macro"),
            auc=auc_score(scores, y),
            runtime_s=time.perf_counter() - start,
        )
    except Exception as exc:  # a failed cell is recorded, not dropped
        return EvalResult(
            method=method,
            train_fraction=train_fraction,
            seed=seed,
            f1_binary=float("nan"),
            f1_macro=float("nan"),
            auc=float("nan"),
            runtime_s=time.perf_counter() - start,
            status="failed",
            error=f"{type(exc).__name__}: {exc}",
        )


def _run_cell(args) -> EvalResult:
    return evaluate_run(*args)


def _aggregate(results: list[EvalResult]) -> GridRow:
    ok = [r for r in results if r.status == "ok"]
    ref = results[0]

    def mean_std(values: list[float]) -> tuple[float, float]:
        if not values:
            return float("nan"), float("nan")
        arr = np.asarray(values)
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        return float(arr.mean()), std

    f1m = mean_std([r.f1_macro for r in ok])
    f1b = mean_std([r.f1_binary for r in ok])
    auc = mean_std([r.auc for r in ok])
    runtime = float(np.mean([r.runtime_s for r in results]))
    return GridRow(
        method=ref.method,
        train_fraction=ref.train_fraction,
        seed_count=len(ok),
        f1_macro_mean=f1m[0],
        f1_macro_std=f1m[1],
        f1_binary_mean=f1b[0],
        f1_binary_std=f1b[1],
        auc_mean=auc[0],
        auc_std=auc[1],
        runtime_s=runtime,
    )


def run_experiment(
    g: MultiRelationGraph,
    methods: tuple[str, ...] = METHODS,
    train_fractions: tuple[float, ...] = (0.4, 0.6, 0.8),
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4),
    settings: RunSettings = RunSettings(),
    jobs: int = 1,
) -> ExperimentGrid:
    """Full benchmark grid over methods x train fractions x seeds.

    Cells are independent; ``jobs > 1`` runs them in worker processes.
    Aggregation order is fixed (method, fraction, seed) so outputs are
    identical regardless of scheduling.
    """
    cells = [
        (g, method, frac, seed, settings)
        for method in methods
        for frac in train_fractions
        for seed in seeds
    ]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, cells, chunksize=1))
    else:
        results = [evaluate_run(*c) for c in cells]

    by_key: dict[tuple[str, float], list[EvalResult]] = {}
    for r in results:
        by_key.setdefault((r.method, r.train_fraction), []).append(r)
    rows = []
    for method in methods:
        for frac in train_fractions:
            group = sorted(by_key[(method, frac)], key=lambda r: r.seed)
            rows.append(_aggregate(group))
    runs = sorted(results, key=lambda r: (r.method, r.train_fraction, r.seed))
    return ExperimentGrid(rows=rows, runs=runs)
