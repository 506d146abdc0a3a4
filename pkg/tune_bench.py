# scratch tuning harness for the synthetic benchmark (not part of the package)
import sys
import time

import numpy as np

import graphconsis as gc
from graphconsis.evaluation import auc_score
from graphconsis.data import (
    RelationSpec, SplitSpec, SyntheticSpec, split_dataset,
    _assign_labels, _features,
)


def spec_with(num_clusters=6, cluster_spread=0.35, jitter=0.25, conc=0.9,
              shill=0.6, sep=1.3, axis_noise=0.8, fsf=0.25, noise=0.02, seed=0,
              deg=(4.0, 50.0, 120.0), hom=(0.95, 0.10, 0.10), cam=(0.1, 0.9, 0.9),
              skew=0.0, affinity=0.0):
    rels = (
        RelationSpec(deg[0], cam[0], hom[0]),
        RelationSpec(deg[1], cam[1], hom[1], fsf, conc),
        RelationSpec(deg[2], cam[2], hom[2], fsf, conc),
    )
    return SyntheticSpec(
        relations=rels, class_separation=sep, class_axis_noise=axis_noise,
        fraud_feature_camouflage=shill, num_clusters=num_clusters,
        cluster_spread=cluster_spread, cluster_fraud_skew=skew,
        cluster_edge_affinity=affinity, noise_scale=noise, mixing_jitter=jitter,
        seed=seed,
    )


def hidden_state(spec, g):
    """Replay label/cluster/shill draws (diagnostics only)."""
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    clusters = rng.integers(0, spec.num_clusters, size=spec.num_nodes)
    labels = _assign_labels(spec, clusters, rng)
    _, shill = _features(spec, labels, clusters, rng)
    assert (g.labels == labels).all()
    return clusters, shill


def run(spec, methods, epochs=100, eps=0.01, seeds=(0,), passes=5, **est_kw):
    g = gc.generate_synthetic(spec)
    _, shill = hidden_state(spec, g)
    out = {}
    for method in methods:
        aucs, shill_aucs, core_aucs = [], [], []
        t0 = time.perf_counter()
        for seed in seeds:
            tr, te = split_dataset(g, SplitSpec(0.8, seed=seed))
            est = gc.make_estimator(method, epochs=epochs, num_forward_passes=passes,
                                    epsilon=eps, random_state=seed, **est_kw)
            est.fit(g, tr)
            sc = est.predict_scores(g)
            y = (g.labels == 1).astype(int)
            aucs.append(auc_score(sc[te], y[te]))
            te_b = te & (g.labels == 0)

            def sub_auc(pos_mask):
                if pos_mask.sum() == 0:
                    return float("nan")
                m = te_b | pos_mask
                return auc_score(sc[m], y[m])

            shill_aucs.append(sub_auc(te & shill))
            core_aucs.append(sub_auc(te & (g.labels == 1) & ~shill))
        dt = time.perf_counter() - t0
        out[method] = np.mean(aucs)
        print(f"  {method:22s} auc={np.mean(aucs):.4f} (+-{np.std(aucs):.3f}) "
              f"shill={np.mean(shill_aucs):.4f} core={np.mean(core_aucs):.4f}  ({dt:.0f}s)")
    return out


METHODS = ["logistic-regression", "full-mean-gnn", "uniform-sample-gnn", "graphconsis"]
