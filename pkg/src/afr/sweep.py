"""Grid search over (lam, sigma) on a fixed train/validation/test split."""
import math
from dataclasses import dataclass, replace

import numpy as np

from . import metrics
from .basis import BasisConfig
from .data import split
from .errors import ConfigError, UndefinedMetricError
from .model import predict_labels, predict_scores, select_features, train
from .optimizer import SolverConfig

DEFAULT_LAMBDAS = (5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 7e-2, 1e-1, 2e-1, 5e-1, 1.0)
DEFAULT_SIGMAS = (1.0, 2.0)


@dataclass
class SweepRow:
    lam: float
    sigma: float
    val_acc: float
    val_ap: float
    test_acc: float
    test_ap: float
    support: tuple
    converged: bool
    outer_iterations: int
    model: object = None


def _scores(model, part):
    if len(part) == 0:
        return math.nan, math.nan
    acc = metrics.accuracy(predict_labels(model, part.features), part.labels)
    try:
        ap = metrics.average_precision(predict_scores(model, part.features), part.labels)
    except UndefinedMetricError:
        ap = math.nan
    return acc, ap


def run_sweep(ds, lambdas=DEFAULT_LAMBDAS, sigmas=DEFAULT_SIGMAS, fractions=(0.8, 0.1, 0.1),
              seed=0, basis=BasisConfig(), base=SolverConfig(), tau=1e-3):
    """Train one model per grid point on the training part.

    Rows come back in grid order (sigma-major, then lam). ``fractions`` must
    have three entries (train, validation, test).
    """
    if not lambdas or not sigmas:
        raise ConfigError("sweep grid is empty")
    if len(fractions) != 3:
        raise ConfigError("sweep needs train/validation/test fractions")
    train_part, val_part, test_part = split(ds, fractions, seed)
    X = train_part.feature_matrix()
    rows = []
    for sigma in sigmas:
        for lam in lambdas:
            config = replace(base, lam=float(lam), sigma=float(sigma))
            model, trace = train(X, basis, config, ds.feature_names)
            val_acc, val_ap = _scores(model, val_part)
            test_acc, test_ap = _scores(model, test_part)
            rows.append(SweepRow(float(lam), float(sigma), val_acc, val_ap, test_acc, test_ap,
                                 tuple(select_features(model, tau)), trace.converged,
                                 len(trace), model))
    return rows


def best_row(rows):
    """Highest validation accuracy; ties go to smaller lam, then smaller sigma."""
    scored = [r for r in rows if not np.isnan(r.val_acc)]
    if not scored:
        return None
    return min(scored, key=lambda r: (-r.val_acc, r.lam, r.sigma))
