"""Min-max normalization and per-feature basis expansion.

Every raw feature is mapped to [0, 1] with statistics frozen at fit time and
then expanded into ``d`` basis-function evaluations. The resulting design
matrix is stored feature-major, basis-minor: columns ``j*d .. (j+1)*d - 1``
hold the block for feature ``j``.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, DataError, DimensionError, DomainError

BSPLINE = "bspline"
TRIG = "trig"
FAMILIES = (BSPLINE, TRIG)


@dataclass(frozen=True)
class FeatureMatrix:
    """Raw training features with labels in {-1, +1}."""

    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        labels = np.array(self.labels, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise DataError(f"feature matrix must be a nonempty 2-D array, got shape {values.shape}")
        if labels.shape != (values.shape[0],):
            raise DimensionError(
                f"expected {values.shape[0]} labels, got array of shape {labels.shape}"
            )
        if not np.all(np.isfinite(values)):
            rows, cols = np.nonzero(~np.isfinite(values))
            raise DataError(f"non-finite feature value at row {rows[0]}, column {cols[0]}")
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise DataError("labels must be -1 or +1")
        values.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class NormalizationStats:
    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        lo = np.array(self.minimum, dtype=float).ravel()
        hi = np.array(self.maximum, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise DimensionError("min and max vectors differ in length")
        if np.any(lo > hi):
            raise DataError("normalization stats require min <= max for every feature")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)

    @property
    def n_features(self):
        return self.minimum.shape[0]

    @property
    def constant(self):
        """Boolean mask of columns that were constant at fit time."""
        return self.minimum == self.maximum


@dataclass(frozen=True)
class BasisConfig:
    """Basis family and truncation dimension.

    For ``bspline`` the knots are clamped and uniform over [0, 1]; the number
    of interior knots is ``dim - order``.
    """

    family: str = BSPLINE
    dim: int = 8
    order: int = 4

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown basis family {self.family!r}; choose from {FAMILIES}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ConfigError(f"basis dimension must be a positive integer, got {self.dim!r}")
        if self.family == BSPLINE:
            if int(self.order) != self.order or self.order < 1:
                raise ConfigError(f"spline order must be a positive integer, got {self.order!r}")
            if self.dim < self.order:
                raise ConfigError(
                    f"bspline dimension {self.dim} must be at least the spline order {self.order}"
                )

    @property
    def knots(self):
        if self.family != BSPLINE:
            return None
        return _kernels.clamped_uniform_knots(self.dim, self.order)

    def to_dict(self):
        return {"family": self.family, "dim": int(self.dim), "order": int(self.order)}


@dataclass(frozen=True)
class DesignMatrix:
    phi: np.ndarray
    config: BasisConfig
    stats: NormalizationStats = field(default=None)

    @property
    def n_features(self):
        return self.phi.shape[1] // self.config.dim

    def block(self, j):
        d = self.config.dim
        return self.phi[:, j * d:(j + 1) * d]


def fit_normalizer(X):
    """Column-wise min/max of ``X`` (a FeatureMatrix or 2-D array)."""
    values = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=float)
    if values.ndim != 2 or values.size == 0:
        raise DataError(f"cannot fit normalizer on array of shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise DataError("cannot fit normalizer: input contains non-finite values")
    return NormalizationStats(values.min(axis=0), values.max(axis=0))


def apply_normalizer(X, stats):
    """Map ``X`` into [0, 1] column-wise, clamping values outside the fitted range.

    Columns that were constant at fit time map to 0.5.
    """
    values = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=float)
    if values.ndim == 1:
        values = values[None, :]
    if values.shape[1] != stats.n_features:
        raise DimensionError(
            f"expected {stats.n_features} features, got {values.shape[1]}"
        )
    const = stats.constant
    span = np.where(const, 1.0, stats.maximum - stats.minimum)
    out = np.clip((values - stats.minimum) / span, 0.0, 1.0)
    out[:, const] = 0.5
    return out


def _evaluate(x, config):
    x = np.ascontiguousarray(x, dtype=float)
    if config.family == BSPLINE:
        return _kernels.bspline_basis(x, config.knots, int(config.order))
    return _kernels.trig_basis(x, int(config.dim))


def expand(Xnorm, config, stats=None):
    """Blocked design matrix for normalized features ``Xnorm`` (values in [0, 1])."""
    if not isinstance(config, BasisConfig):
        raise ConfigError("expand requires a BasisConfig")
    Xnorm = np.asarray(Xnorm, dtype=float)
    if Xnorm.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {Xnorm.shape}")
    if np.any(Xnorm < 0.0) or np.any(Xnorm > 1.0) or not np.all(np.isfinite(Xnorm)):
        raise DomainError("normalized features must lie in [0, 1]")
    n, p = Xnorm.shape
    d = config.dim
    phi = np.empty((n, p * d))
    for j in range(p):
        phi[:, j * d:(j + 1) * d] = _evaluate(Xnorm[:, j], config)
    return DesignMatrix(phi, config, stats)


def basis_eval(j, x, config):
    """Basis vector for feature ``j`` at a normalized scalar ``x``.

    All features share one basis family, so ``j`` only needs to be a valid
    (non-negative) index.
    """
    if j < 0:
        raise DimensionError(f"feature index must be non-negative, got {j}")
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"basis functions are defined on [0, 1]; got x={x!r} (clamp first)")
    return _evaluate(np.array([x]), config)[0]


def design_matrix(X, config, stats=None):
    """Normalize (fitting stats if not given) and expand in one step."""
    if stats is None:
        stats = fit_normalizer(X)
    return expand(apply_normalizer(X, stats), config, stats)
