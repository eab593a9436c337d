"""Accuracy, average precision and discrete KL divergence."""
import math

import numpy as np

from .errors import DataError, DimensionError, DomainError, UndefinedMetricError


def _labels(v, name):
    v = np.asarray(v, dtype=float).ravel()
    if not np.all(np.isin(v, (-1.0, 1.0))):
        raise DataError(f"{name} must contain only -1/+1 labels")
    return v


def accuracy(preds, truth):
    preds = _labels(preds, "preds")
    truth = _labels(truth, "truth")
    if preds.shape != truth.shape:
        raise DimensionError(f"length mismatch: {preds.size} predictions vs {truth.size} labels")
    if preds.size == 0:
        raise UndefinedMetricError("accuracy of an empty prediction set is undefined")
    return float(np.count_nonzero(preds == truth)) / preds.size


def average_precision(scores, labels):
    """Mean precision at the rank of each positive, ranking by descending score.

    Ties keep input order (stable sort), so tied items are not averaged.
    The per-positive precisions are summed with :func:`math.fsum`.
    """
    scores = np.asarray(scores, dtype=float).ravel()
    labels = _labels(labels, "labels")
    if scores.shape != labels.shape:
        raise DimensionError(f"length mismatch: {scores.size} scores vs {labels.size} labels")
    if not np.all(np.isfinite(scores)):
        raise DataError("scores must be finite")
    order = np.argsort(-scores, kind="stable")
    hits = labels[order] > 0
    n_pos = int(hits.sum())
    if n_pos == 0:
        raise UndefinedMetricError("average precision is undefined without positive examples")
    ranks = np.flatnonzero(hits) + 1
    return math.fsum(k / int(r) for k, r in zip(range(1, n_pos + 1), ranks)) / n_pos


def kl_divergence(P, Q):
    """``sum_x P(x) log(P(x)/Q(x))`` in nats; terms with ``P(x) = 0`` vanish."""
    P = np.asarray(P, dtype=float).ravel()
    Q = np.asarray(Q, dtype=float).ravel()
    if P.shape != Q.shape:
        raise DimensionError(f"support mismatch: {P.size} vs {Q.size} outcomes")
    if np.any(P < 0) or np.any(Q < 0):
        raise DomainError("probabilities must be non-negative")
    if abs(P.sum() - 1.0) > 1e-9:
        raise DomainError(f"P must sum to 1, sums to {P.sum()!r}")
    support = P > 0
    if np.any(Q[support] == 0):
        raise DomainError("Q is zero where P is positive (P not absolutely continuous w.r.t. Q)")
    return float(np.sum(P[support] * np.log(P[support] / Q[support])))
