"""Frozen-encoder evaluation: embeddings, readout pooling, linear probes,
and task metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import encoder_forward
from .errors import ArgumentError, DataError
from .graph import Graph
from .spectral import SpectralBasis, relative_distances
from .trainer import RunConfig

METRICS = ("accuracy", "roc-auc", "rmse", "mae")


@dataclass
class ProbeConfig:
    kind: str = "multinomial-logistic"  # or "linear-regression"
    lr: float = 0.01
    epochs: int = 300
    weight_decay: float = 0.0
    metric: str = "accuracy"
    seed: int = 0

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ArgumentError(f"unknown metric {self.metric!r}")


def embed_nodes(g: Graph, basis: SpectralBasis, params: dict, cfg: RunConfig) -> np.ndarray:
    """Deterministic frozen-encoder node representations (no corruption, no
    dropout)."""
    distances = relative_distances(basis, g)
    h, _ = encoder_forward(g, g.node_features, distances, params, cfg.encoder,
                           training=False)
    return h.data


def readout(h: np.ndarray, kind: str = "mean") -> np.ndarray:
    if h.shape[0] == 0:
        raise ArgumentError("readout of an empty graph")
    if kind == "mean":
        return h.mean(axis=0)
    if kind == "sum":
        return h.sum(axis=0)
    if kind == "max":
        return h.max(axis=0)
    raise ArgumentError(f"unknown readout {kind!r}")


# ---------------------------------------------------------------------------
# probes


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _adam_probe(h, targets, grad_fn, dim_out, cfg: ProbeConfig,
                h_valid=None, y_valid=None, score_fn=None, higher_better=True):
    """Full-batch Adam on a linear map; optional early model selection on a
    validation score."""
    rng = np.random.default_rng(cfg.seed)
    w = 0.01 * rng.standard_normal((h.shape[1], dim_out))
    b = np.zeros(dim_out)
    mw = np.zeros_like(w)
    vw = np.zeros_like(w)
    mb = np.zeros_like(b)
    vb = np.zeros_like(b)
    best = None
    best_score = None
    for t in range(1, cfg.epochs + 1):
        gw, gb = grad_fn(h, targets, w, b)
        gw += cfg.weight_decay * w
        mw = 0.9 * mw + 0.1 * gw
        vw = 0.999 * vw + 0.001 * gw * gw
        mb = 0.9 * mb + 0.1 * gb
        vb = 0.999 * vb + 0.001 * gb * gb
        w -= cfg.lr * (mw / (1 - 0.9 ** t)) / (np.sqrt(vw / (1 - 0.999 ** t)) + 1e-8)
        b -= cfg.lr * (mb / (1 - 0.9 ** t)) / (np.sqrt(vb / (1 - 0.999 ** t)) + 1e-8)
        if h_valid is not None and score_fn is not None:
            score = score_fn(h_valid @ w + b, y_valid)
            if best_score is None or (score > best_score if higher_better else score < best_score):
                best_score = score
                best = (w.copy(), b.copy())
    if best is not None:
        w, b = best
    return w, b


def linear_probe(h_train, y_train, h_eval, y_eval, cfg: ProbeConfig,
                 h_valid=None, y_valid=None) -> float:
    """Train a linear probe on frozen embeddings; return the metric on the
    eval split."""
    h_train = np.asarray(h_train, dtype=np.float64)
    h_eval = np.asarray(h_eval, dtype=np.float64)
    mu = h_train.mean(axis=0)
    sd = h_train.std(axis=0) + 1e-8
    h_train = (h_train - mu) / sd
    h_eval = (h_eval - mu) / sd
    if h_valid is not None:
        h_valid = (np.asarray(h_valid, dtype=np.float64) - mu) / sd

    if cfg.kind == "multinomial-logistic":
        classes = np.unique(np.concatenate([np.asarray(y_train).ravel(),
                                            np.asarray(y_eval).ravel()]))
        cls_index = {c: i for i, c in enumerate(classes)}
        yt = np.array([cls_index[c] for c in np.asarray(y_train).ravel()])
        onehot = np.zeros((yt.size, classes.size))
        onehot[np.arange(yt.size), yt] = 1.0

        def grad_fn(h, y, w, b):
            p = _softmax(h @ w + b)
            diff = (p - y) / h.shape[0]
            return h.T @ diff, diff.sum(axis=0)

        def score_fn(logits, y):
            pred = classes[np.argmax(logits, axis=1)]
            return float(np.mean(pred == np.asarray(y).ravel()))

        if cfg.metric == "roc-auc":
            if classes.size != 2:
                raise ArgumentError("roc-auc probe requires binary labels")
            if np.unique(np.asarray(y_train).ravel()).size < 2:
                raise DataError("single-class training labels with roc-auc")
        w, b = _adam_probe(h_train, onehot, grad_fn, classes.size, cfg,
                           h_valid, y_valid, score_fn, higher_better=True)
        scores = h_eval @ w + b
        if cfg.metric == "accuracy":
            pred = classes[np.argmax(scores, axis=1)]
            return metric_suite(pred, np.asarray(y_eval).ravel(), "accuracy")
        if cfg.metric == "roc-auc":
            return metric_suite(scores[:, 1] - scores[:, 0],
                                (np.asarray(y_eval).ravel() == classes[1]).astype(float),
                                "roc-auc")
        raise ArgumentError(f"metric {cfg.metric!r} incompatible with classification probe")

    if cfg.kind == "linear-regression":
        yt = np.asarray(y_train, dtype=np.float64)
        if yt.ndim == 1:
            yt = yt[:, None]

        def grad_fn(h, y, w, b):
            diff = (h @ w + b - y) / h.shape[0]
            return h.T @ diff, diff.sum(axis=0)

        def score_fn(pred, y):
            y = np.asarray(y, dtype=np.float64)
            if y.ndim == 1:
                y = y[:, None]
            return float(np.sqrt(np.mean((pred - y) ** 2)))

        w, b = _adam_probe(h_train, yt, grad_fn, yt.shape[1], cfg,
                           h_valid, y_valid, score_fn, higher_better=False)
        pred = (h_eval @ w + b).ravel()
        return metric_suite(pred, np.asarray(y_eval, dtype=np.float64).ravel(), cfg.metric)

    raise ArgumentError(f"unknown probe kind {cfg.kind!r}")


def probe_multi_seed(run_fn, seeds):
    """mean +/- std helper over probe seeds; run_fn(seed) -> value."""
    vals = np.array([run_fn(s) for s in seeds], dtype=np.float64)
    return float(vals.mean()), float(vals.std()), vals


# ---------------------------------------------------------------------------
# metrics


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-statistic AUC with mid-rank tie handling."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    pos = labels == np.max(labels) if set(np.unique(labels)) != {0, 1} else labels == 1
    npos = int(pos.sum())
    nneg = pos.size - npos
    if npos == 0 or nneg == 0:
        raise DataError("roc-auc needs both classes present")
    from scipy.stats import rankdata

    ranks = rankdata(scores, method="average")
    return float((ranks[pos].sum() - npos * (npos + 1) / 2.0) / (npos * nneg))


def metric_suite(predictions, targets, metric: str) -> float:
    predictions = np.asarray(predictions)
    targets = np.asarray(targets)
    if metric == "accuracy":
        return float(np.mean(predictions == targets))
    if metric == "rmse":
        return float(np.sqrt(np.mean((predictions.astype(float) - targets.astype(float)) ** 2)))
    if metric == "mae":
        return float(np.mean(np.abs(predictions.astype(float) - targets.astype(float))))
    if metric == "roc-auc":
        if targets.ndim == 2:
            # multi-label: average per-label AUC over labels with both classes
            vals = []
            for j in range(targets.shape[1]):
                col = targets[:, j]
                if np.unique(col).size < 2:
                    continue
                vals.append(roc_auc(predictions[:, j], col))
            if not vals:
                raise DataError("no label column has both classes")
            return float(np.mean(vals))
        return roc_auc(predictions, targets)
    raise ArgumentError(f"unknown metric {metric!r}")
