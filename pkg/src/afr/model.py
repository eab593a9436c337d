"""Trained additive predictor: scoring, feature ranking, curves, persistence.

Model file format (version 1)
-----------------------------
A UTF-8 JSON object with these keys, written in this order:

``format``
    Always ``"afr-model"``.
``version``
    Integer format version; readers reject any other value.
``basis``
    ``{"family": "bspline"|"trig", "dim": d, "order": k}``.
``normalization``
    ``{"min": [p floats], "max": [p floats]}`` frozen at training time.
``coefficients``
    ``{"layout": "feature-major", "n_features": p, "dim": d, "values": [p*d floats]}``;
    ``values[j*d + k]`` multiplies basis function ``k`` of feature ``j``.
``solver``
    The :class:`~afr.optimizer.SolverConfig` fields used for training.
``metadata``
    ``n_samples``, ``n_features``, ``dim``, ``seed``, ``converged``,
    ``outer_iterations`` and ``feature_names``.

Floats are written with Python's shortest round-trip representation, so a
save/load cycle reproduces every number bit for bit.
"""
import json
import types
from dataclasses import dataclass

import numpy as np

from .basis import BasisConfig, NormalizationStats, apply_normalizer, design_matrix, expand
from .errors import (
    DimensionError,
    MalformedModelError,
    ModelParseError,
    ModelVersionError,
)
from .optimizer import SolverConfig, fit_design, group_norms

FORMAT_NAME = "afr-model"
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class TrainedModel:
    basis: BasisConfig
    stats: NormalizationStats
    alpha: np.ndarray
    solver: SolverConfig
    metadata: types.MappingProxyType
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float).ravel()
        p, d = self.stats.n_features, self.basis.dim
        if alpha.shape[0] != p * d:
            raise DimensionError(f"coefficient vector has {alpha.shape[0]} entries, expected p*d = {p * d}")
        alpha.flags.writeable = False
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "metadata", types.MappingProxyType(dict(self.metadata)))

    @property
    def n_features(self):
        return self.stats.n_features

    @property
    def dim(self):
        return self.basis.dim

    @property
    def blocks(self):
        return self.alpha.reshape(self.n_features, self.dim)

    def to_dict(self):
        return {
            "format": FORMAT_NAME,
            "version": self.format_version,
            "basis": self.basis.to_dict(),
            "normalization": {
                "min": [float(v) for v in self.stats.minimum],
                "max": [float(v) for v in self.stats.maximum],
            },
            "coefficients": {
                "layout": "feature-major",
                "n_features": self.n_features,
                "dim": self.dim,
                "values": [float(v) for v in self.alpha],
            },
            "solver": self.solver.to_dict(),
            "metadata": dict(self.metadata),
        }

    def __eq__(self, other):
        if not isinstance(other, TrainedModel):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


def train(X, basis, solver, feature_names=None):
    """Fit normalization, expand, run the solver and wrap the result.

    Returns ``(TrainedModel, SolverTrace)``.
    """
    design = design_matrix(X, basis)
    coef, trace = fit_design(design.phi, X.labels, basis.dim, solver)
    p = X.n_features
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(p)]
    if len(names) != p:
        raise DimensionError(f"expected {p} feature names, got {len(names)}")
    meta = {
        "n_samples": int(X.n_samples),
        "n_features": int(p),
        "dim": int(basis.dim),
        "seed": int(solver.seed),
        "converged": bool(trace.converged),
        "outer_iterations": len(trace),
        "feature_names": names,
    }
    return TrainedModel(basis, design.stats, coef.coef.copy(), solver, meta), trace


def _as_matrix(model, X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.n_features:
        got = X.shape[-1] if X.ndim else 0
        raise DimensionError(f"expected {model.n_features} features, got {got}")
    return X


def predict_scores(model, X):
    """Scores ``f(x) = sum_j Psi_j(x_j)^T alpha_j`` for every row of ``X``."""
    X = _as_matrix(model, X)
    phi = expand(apply_normalizer(X, model.stats), model.basis).phi
    return phi @ model.alpha


def predict_score(model, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError("predict_score takes a single feature vector; use predict_scores")
    return float(predict_scores(model, x)[0])


def label_from_score(score):
    """Decision rule: +1 when the score is >= 0, else -1 (so sign(0) = +1)."""
    return np.where(np.asarray(score, dtype=float) >= 0.0, 1.0, -1.0)


def predict_labels(model, X):
    return label_from_score(predict_scores(model, X))


def predict_label(model, x):
    return int(label_from_score(predict_score(model, x)))


def feature_group_norms(model):
    return group_norms(model.alpha, model.dim, model.solver.q)


def select_features(model, tau=1e-3):
    """Features whose group norm exceeds ``tau`` times the largest one.

    Sorted by descending norm, ties by ascending index; empty when every
    block is zero.
    """
    norms = feature_group_norms(model)
    top = norms.max() if norms.size else 0.0
    if top <= 0.0:
        return []
    keep = [j for j in range(norms.size) if norms[j] > tau * top]
    return sorted(keep, key=lambda j: (-norms[j], j))


def component_values(model, j, x):
    """Component ``f_j`` at raw feature values ``x``."""
    if not 0 <= j < model.n_features:
        raise DimensionError(f"feature index {j} out of range 0..{model.n_features - 1}")
    x = np.asarray(x, dtype=float).ravel()
    lo, hi = model.stats.minimum[j], model.stats.maximum[j]
    if lo == hi:
        z = np.full_like(x, 0.5)
    else:
        z = np.clip((x - lo) / (hi - lo), 0.0, 1.0)
    phi = expand(z[:, None], model.basis).phi
    return phi @ model.blocks[j]


def component_function_curve(model, j, m=100):
    """``m`` rows ``(x, f_j(x))`` on a uniform grid over the training range of feature ``j``."""
    if m < 2:
        raise DimensionError("curve needs at least 2 grid points")
    if not 0 <= j < model.n_features:
        raise DimensionError(f"feature index {j} out of range 0..{model.n_features - 1}")
    grid = np.linspace(model.stats.minimum[j], model.stats.maximum[j], m)
    return np.column_stack([grid, component_values(model, j, grid)])


# --------------------------------------------------------------------------
# persistence
# --------------------------------------------------------------------------

def dumps(model):
    return json.dumps(model.to_dict(), indent=2) + "\n"


def save(model, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(model))


def _require(doc, key, kind):
    if key not in doc:
        raise MalformedModelError(f"model document is missing field {key!r}")
    value = doc[key]
    if not isinstance(value, kind):
        raise MalformedModelError(f"model field {key!r} has type {type(value).__name__}")
    return value


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        raise ModelParseError(f"model file is not valid JSON: {exc.msg}", offset) from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise MalformedModelError("document is not an afr model")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise ModelVersionError(version, FORMAT_VERSION)
    try:
        basis = BasisConfig(**_require(doc, "basis", dict))
        norm = _require(doc, "normalization", dict)
        stats = NormalizationStats(_require(norm, "min", list), _require(norm, "max", list))
        coefs = _require(doc, "coefficients", dict)
        if coefs.get("layout") != "feature-major":
            raise MalformedModelError(f"unknown coefficient layout {coefs.get('layout')!r}")
        if coefs.get("n_features") != stats.n_features or coefs.get("dim") != basis.dim:
            raise MalformedModelError("coefficient block shape disagrees with basis/normalization")
        solver = SolverConfig.from_dict(_require(doc, "solver", dict))
        meta = _require(doc, "metadata", dict)
        return TrainedModel(basis, stats, _require(coefs, "values", list), solver, meta, version)
    except (TypeError, ValueError) as exc:
        raise MalformedModelError(f"invalid model content: {exc}") from exc


def load(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ModelParseError("model file is not UTF-8", exc.start) from None
    return loads(text)
