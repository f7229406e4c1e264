"""Experiment harness: error-vs-compression and speedup measurement.

Runs a grid of (method, ratio, seed) cells on a labeled dataset with a
stratified 70/30 split, recording per-cell error, training time, and
wall-clock speedup against full-training-set kNN.  Results are emitted as
JSON-lines records plus a rendered plain-text table.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import baselines, ot, shc, spd
from .datasets import LabeledDataset, stratified_indices
from .errors import BadParameters
from .knn import evaluate
from .scc import SccConfig, scc_compress
from .shc import ShcConfig, default_lambda, shc_compress

METHODS = ("scc", "shc", "subsample", "cnn", "rnn", "fcnn", "rmhc")

FEW_CLASS_RATIOS = (0.02, 0.04, 0.08, 0.16)
MANY_CLASS_RATIOS = (0.10, 0.20, 0.30, 0.40)


@dataclass
class ExperimentPlan:
    ratios: tuple = FEW_CLASS_RATIOS
    methods: tuple = ("subsample",)
    seeds: tuple = (0,)
    k: int = 1
    gamma_sq: float | None = None
    lam: float | None = None
    scc_max_iter: int = 100
    shc_max_iter: int = 60
    rmhc_steps: int = 100
    tune: bool = False
    deterministic: bool = True

    def __post_init__(self):
        for r in self.ratios:
            if not 0 < r <= 1:
                raise BadParameters(f"ratio {r} outside (0, 1]")
        for m in self.methods:
            if m not in METHODS:
                raise BadParameters(f"unknown method {m!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentPlan":
        kwargs = {k: v for k, v in doc.items() if k in cls.__dataclass_fields__}
        for key in ("ratios", "methods", "seeds"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


def make_metric(dataset: LabeledDataset, lam: float | None = None,
                sinkhorn_tol: float = 1e-6, sinkhorn_max_iter: int = 2000):
    """Distance callable for the dataset's family; returns (metric, lam)."""
    if dataset.family == "covariance":
        return spd.jbld, None
    M = dataset.ground_metric
    lam = lam if lam is not None else default_lambda(M)

    def metric(h, hp):
        return ot.sinkhorn(h, hp, M, lam, tol=sinkhorn_tol,
                           max_iter=sinkhorn_max_iter).distance

    return metric, lam


def _pairwise_matrix(ds: LabeledDataset, metric, lam: float | None):
    if ds.family == "histogram":
        return ot.sinkhorn_pairwise(np.stack(ds.members), ds.ground_metric,
                                    lam, tol=1e-6, max_iter=2000)
    n = len(ds)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = metric(ds.members[i], ds.members[j])
    return D


def split_dataset(dataset: LabeledDataset, seed: int, test_frac: float = 0.3):
    """Stratified train/test split, deterministic under seed."""
    n = len(dataset)
    rng = np.random.default_rng(seed + 0x5EED)
    n_test = max(1, round(test_frac * n))
    test_idx = stratified_indices(dataset.labels, n_test, rng)
    train_idx = np.setdiff1d(np.arange(n), test_idx)
    return dataset.subset(train_idx), dataset.subset(test_idx)


def _centroid_fn(train: LabeledDataset, lam: float | None):
    if train.family == "covariance":
        return lambda members: spd.jbld_centroid(members, tol=1e-8, max_iter=100)
    M = train.ground_metric
    return lambda members: ot.sinkhorn_barycenter(members, M, lam,
                                                  tol=1e-8, max_iter=500)


def _grid_gamma(D0, proto_labels, train_labels):
    med = float(np.median(D0))
    return [2.0 ** k / max(med, 1e-12) for k in range(-4, 5)]


def _compress(method: str, train: LabeledDataset, m: int, ratio: float,
              seed: int, plan: ExperimentPlan, metric, lam,
              caches: dict) -> LabeledDataset:
    """Build the reference set for one cell; caches hold per-seed artifacts."""
    if method == "subsample":
        rs = baselines.subsample(train, m, seed)
        return train.subset(rs.indices)
    if method in ("cnn", "rnn", "fcnn"):
        key = (method, seed)
        if key not in caches:
            dm = caches.setdefault(("dist", seed),
                                   _pairwise_matrix(train, metric, lam))
            if method == "fcnn":
                caches[key] = baselines.fcnn_reduce(
                    train, metric, _centroid_fn(train, lam),
                    dist_matrix=dm, snapshot_ratios=plan.ratios)
            else:
                cnn_key = ("cnn", seed)
                if cnn_key not in caches:
                    caches[cnn_key] = baselines.cnn_reduce(
                        train, metric, seed, dist_matrix=dm,
                        snapshot_ratios=plan.ratios)
                if method == "rnn":
                    caches[key] = baselines.rnn_reduce(
                        caches[cnn_key], train, metric, seed=seed,
                        dist_matrix=dm)
        rs = caches[key]
        idx = rs.snapshots.get(ratio, rs.indices)
        return train.subset(idx)
    if method == "rmhc":
        dm = caches.setdefault(("dist", seed),
                               _pairwise_matrix(train, metric, lam))
        rs = baselines.rmhc_reduce(train, m, metric, plan.rmhc_steps, seed,
                                   dist_matrix=dm)
        return train.subset(rs.indices)
    if method == "scc":
        cfg = SccConfig(max_iter=plan.scc_max_iter, gamma_sq=plan.gamma_sq,
                        seed=seed)
        if plan.tune:
            cfg.gamma_sq = _tune_scc(train, m, cfg, plan, seed)
        return scc_compress(train, m, cfg).to_dataset(train)
    if method == "shc":
        cfg = ShcConfig(max_iter=plan.shc_max_iter, gamma_sq=plan.gamma_sq,
                        lam=lam, rmhc_steps=plan.rmhc_steps, seed=seed)
        if plan.tune:
            cfg.gamma_sq, cfg.learn_rate = _tune_shc(train, m, cfg, plan, seed)
        return shc_compress(train, m, config=cfg).to_dataset(train)
    raise BadParameters(f"unknown method {method!r}")


def _tune_scc(train, m, cfg, plan, seed):
    """Pick gamma^2 on a 20% validation carve-out by 1-NN error."""
    sub, val = split_dataset(train, seed + 1, test_frac=0.2)
    from .scc import jbld_distance_matrix, scc_init
    m_sub = min(m, len(sub))
    st = scc_init(sub, m_sub, seed)
    D0 = jbld_distance_matrix(st.factors, sub.members)
    best, best_err = None, np.inf
    for g in _grid_gamma(D0, st.labels, sub.labels):
        c = SccConfig(max_iter=max(10, cfg.max_iter // 4), gamma_sq=g, seed=seed)
        ref = scc_compress(sub, m_sub, c).to_dataset(sub)
        err = evaluate(val, ref, spd.jbld, k=plan.k, reps=1).error_rate
        if err < best_err:
            best, best_err = g, err
    return best


def _tune_shc(train, m, cfg, plan, seed):
    sub, val = split_dataset(train, seed + 1, test_frac=0.2)
    metric, lam = make_metric(sub, cfg.lam)
    H = np.stack(sub.members)
    st = shc.shc_init(sub, min(m, len(sub)), seed, rmhc_steps=0, lam=lam)
    D0, _, _ = shc._distances_and_betas(st, H, sub.ground_metric, 1e-6, 2000)
    best, best_err = (None, cfg.learn_rate), np.inf
    for g in _grid_gamma(D0, st.labels, sub.labels):
        for lr in (0.1, 1.0, 10.0):
            c = ShcConfig(max_iter=max(10, cfg.max_iter // 4), gamma_sq=g,
                          learn_rate=lr, lam=lam,
                          rmhc_steps=cfg.rmhc_steps, seed=seed)
            ref = shc_compress(sub, min(m, len(sub)), config=c).to_dataset(sub)
            err = evaluate(val, ref, metric, k=plan.k, reps=1).error_rate
            if err < best_err:
                best, best_err = (g, lr), err
    return best


def run_experiment(plan: ExperimentPlan, dataset: LabeledDataset,
                   out_path: str | None = None,
                   progress: bool = False) -> list[dict]:
    """Run every (method, ratio, seed) cell; return one record per cell."""
    records = []
    sink = open(out_path, "w") if out_path else None
    try:
        for seed in plan.seeds:
            train, test = split_dataset(dataset, seed)
            metric, lam = make_metric(dataset, plan.lam)
            full = evaluate(test, train, metric, k=plan.k)
            caches: dict = {}
            for method in plan.methods:
                for ratio in plan.ratios:
                    m = max(1, round(ratio * len(train)))
                    t0 = time.perf_counter()
                    reference = _compress(method, train, m, ratio, seed,
                                          plan, metric, lam, caches)
                    train_time = time.perf_counter() - t0
                    rep = evaluate(test, reference, metric, k=plan.k,
                                   reference_time=full.wall_time)
                    rec = {
                        "method": method,
                        "ratio": ratio,
                        "seed": seed,
                        "m_requested": m,
                        "m_actual": len(reference),
                        "error_rate": rep.error_rate,
                        "full_error_rate": full.error_rate,
                        "train_time": train_time,
                        "eval_time": rep.wall_time,
                        "speedup": rep.speedup_vs_reference,
                        "distance_evals": rep.distance_evals,
                    }
                    records.append(rec)
                    if sink is not None:
                        sink.write(json.dumps(rec) + "\n")
                        sink.flush()
                    if progress:
                        print(f"[{method} r={ratio} seed={seed}] "
                              f"err={rep.error_rate:.4f} "
                              f"(full {full.error_rate:.4f}) "
                              f"speedup={rep.speedup_vs_reference:.1f}x")
    finally:
        if sink is not None:
            sink.close()
    return records


def summary_table(records: list[dict]) -> str:
    """Mean +/- std of error and speedup per (method, ratio)."""
    cells: dict[tuple, list[dict]] = {}
    for r in records:
        cells.setdefault((r["method"], r["ratio"]), []).append(r)
    lines = [f"{'method':<10} {'ratio':>6} {'error':>16} {'speedup':>16} {'m':>5}"]
    for (method, ratio) in sorted(cells):
        rs = cells[(method, ratio)]
        errs = np.array([r["error_rate"] for r in rs])
        sps = np.array([r["speedup"] for r in rs], dtype=float)
        ms = int(np.mean([r["m_actual"] for r in rs]))
        lines.append(
            f"{method:<10} {ratio:>6.2f} "
            f"{errs.mean():>8.4f}+/-{errs.std():<6.4f} "
            f"{sps.mean():>8.1f}+/-{sps.std():<6.1f} {ms:>5d}")
    full = records[0]["full_error_rate"] if records else float("nan")
    lines.append(f"full 1-NN reference error: {full:.4f}")
    return "\n".join(lines)
