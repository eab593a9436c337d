"""Correntropy-loss sparse additive machine: half-quadratic outer loop + ADMM.

The training problem is

    min_alpha  (1/n) sum_i closs(y_i, Phi_i alpha) + lam * sum_j w_j ||alpha_j||_q

Writing ``exp(-r^2/sigma^2)`` through its convex conjugate introduces one
negative weight ``b_i`` per sample; the problem becomes the maximization of

    R(alpha, b) = (1/n) sum_i [b_i r_i^2 / sigma^2 - g(b_i)] - (lam/beta) sum_j w_j ||alpha_j||_q

with ``g(b) = -b log(-b) + b``. For fixed ``alpha`` the maximizing ``b`` is
closed form (:func:`hq_update_b`); for fixed ``b`` the problem in ``alpha``
is a weighted ridge regression with a group penalty, solved by ADMM
(:func:`admm_solve`).

Scaling of the ADMM subproblem
------------------------------
With ``scaling="mean"`` (default) the subproblem is

    min (1/n) (Y - Phi a)^T diag(-b) (Y - Phi a) + (lam sigma^2 / beta) sum_j w_j ||theta_j||_q

which is exactly ``-sigma^2 * R`` up to a constant, so every ADMM solve
increases ``R``. ``scaling="sum"`` drops the ``1/n`` from the quadratic; the
penalty is then effectively ``lam / n`` relative to ``R``, and
:func:`evaluate_objective` accounts for that so the trace stays comparable.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .basis import BasisConfig, FeatureMatrix, design_matrix
from .errors import ConfigError, DimensionError, DomainError, SolverError

log = logging.getLogger(__name__)

SCALINGS = ("mean", "sum")
DIVERGENCE_WINDOW = 20


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 5e-4
    sigma: float = 1.0
    q: int = 2
    eta: float = 0.1
    eps: float = 1e-4
    outer_max_iter: int = 50
    inner_max_iter: int = 200
    weights: tuple = None
    seed: int = 0
    warm_start: bool = False
    scaling: str = "mean"

    def __post_init__(self):
        for name in ("lam", "sigma", "eta", "eps"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
        if self.q not in (1, 2):
            raise ConfigError(f"q must be 1 or 2, got {self.q!r}")
        for name in ("outer_max_iter", "inner_max_iter"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.scaling not in SCALINGS:
            raise ConfigError(f"scaling must be one of {SCALINGS}, got {self.scaling!r}")
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if not all(math.isfinite(v) and v > 0 for v in w):
                raise ConfigError("feature weights must be strictly positive")
            object.__setattr__(self, "weights", w)

    @property
    def beta(self):
        return closs_beta(self.sigma)

    def feature_weights(self, p):
        if self.weights is None:
            return np.ones(p)
        if len(self.weights) != p:
            raise DimensionError(f"expected {p} feature weights, got {len(self.weights)}")
        return np.asarray(self.weights, dtype=float)

    def to_dict(self):
        return {
            "lam": self.lam, "sigma": self.sigma, "q": self.q, "eta": self.eta,
            "eps": self.eps, "outer_max_iter": self.outer_max_iter,
            "inner_max_iter": self.inner_max_iter,
            "weights": None if self.weights is None else list(self.weights),
            "seed": self.seed, "warm_start": self.warm_start, "scaling": self.scaling,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("weights") is not None:
            d["weights"] = tuple(d["weights"])
        return cls(**d)


@dataclass
class CoefficientBlocks:
    """ADMM state in the blocked layout of the design matrix.

    ``theta`` is the exactly group-sparse split variable and is what the
    solver hands on as the coefficient vector (:attr:`coef`); ``alpha`` is the
    ridge iterate, equal to ``theta`` within the stopping tolerance.
    """

    alpha: np.ndarray
    theta: np.ndarray
    mu: np.ndarray
    dim: int

    @property
    def n_features(self):
        return self.alpha.shape[0] // self.dim

    @property
    def coef(self):
        return self.theta

    def blocks(self, which="theta"):
        return getattr(self, which).reshape(-1, self.dim)


@dataclass
class InnerTrace:
    n_iter: int
    converged: bool
    primal_residual: float
    alpha_change: float
    objective: np.ndarray


@dataclass
class OuterRecord:
    iteration: int
    objective_before: float
    objective: float
    penalized_risk: float
    inner_iterations: int
    inner_converged: bool
    primal_residual: float
    alpha_change: float


@dataclass
class SolverTrace:
    records: list = field(default_factory=list)
    converged: bool = False
    warnings: list = field(default_factory=list)
    initial_objective: float = float("nan")

    @property
    def objectives(self):
        return np.array([r.objective for r in self.records])

    def __len__(self):
        return len(self.records)


# --------------------------------------------------------------------------
# loss and auxiliary weights
# --------------------------------------------------------------------------

def closs_beta(sigma):
    """Normalizer ``1 / (1 - exp(-1/sigma^2))`` that makes ``closs(y, 0) == 1``."""
    if not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma!r}")
    return 1.0 / -math.expm1(-1.0 / sigma ** 2)


def closs(y, f, sigma):
    """Correntropy-induced loss ``beta * (1 - exp(-(1 - y f)^2 / sigma^2))``.

    Vectorizes over ``y`` and ``f``. Bounded in ``[0, beta]``.
    """
    beta = closs_beta(sigma)
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    out = -beta * np.expm1(-((1.0 - y * f) ** 2) / sigma ** 2)
    return float(out) if out.ndim == 0 else out


def conjugate_g(b):
    """``g(b) = -b log(-b) + b`` for ``b < 0``."""
    b = np.asarray(b, dtype=float)
    if np.any(b >= 0):
        raise DomainError("g(b) is only defined for b < 0")
    return -b * np.log(-b) + b


def hq_update_b(residuals, sigma):
    """Maximizing auxiliary weights ``b_i = -exp(-r_i^2 / sigma^2)``."""
    r = np.asarray(residuals, dtype=float)
    if not np.all(np.isfinite(r)):
        raise SolverError("non-finite residuals in auxiliary-weight update")
    b = -np.exp(-(r ** 2) / sigma ** 2)
    # underflow would put b at 0, outside the domain of g
    return np.minimum(b, -np.finfo(float).tiny)


# --------------------------------------------------------------------------
# ADMM pieces
# --------------------------------------------------------------------------

def soft_threshold(a, k, q):
    """Proximal operator of ``k * ||.||_q`` for q in {1, 2}."""
    a = np.asarray(a, dtype=float)
    if k < 0:
        raise DomainError("threshold must be non-negative")
    if q == 1:
        return np.maximum(a - k, 0.0) - np.maximum(-a - k, 0.0)
    if q == 2:
        nrm = np.linalg.norm(a)
        if nrm <= k:
            return np.zeros_like(a)
        return (1.0 - k / nrm) * a
    raise ConfigError(f"q must be 1 or 2, got {q!r}")


def _ridge_system(Phi, Y, b, eta, scale):
    D = -np.asarray(b, dtype=float)
    if np.any(D <= 0):
        raise DomainError("auxiliary weights must be strictly negative")
    H = (2.0 * scale) * (Phi.T @ (D[:, None] * Phi))
    c = (2.0 * scale) * (Phi.T @ (D * Y))
    A = H + eta * np.eye(H.shape[0])
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - SPD by construction
        raise SolverError(f"ridge system is not positive definite: {exc}") from exc
    return H, c, L, scale * float(Y @ (D * Y))


def admm_alpha_update(Phi, Y, b, theta, mu, eta, scale=1.0):
    """Weighted-ridge step ``(2 s Phi^T D Phi + eta I)^{-1} (2 s Phi^T D Y + eta (theta - mu))``.

    ``D = diag(-b)`` and ``s = scale``. Solved through a Cholesky factorization.
    """
    import scipy.linalg

    _, c, L, _ = _ridge_system(np.asarray(Phi, float), np.asarray(Y, float), b, eta, scale)
    rhs = c + eta * (np.asarray(theta, float) - np.asarray(mu, float))
    return scipy.linalg.cho_solve((L, True), rhs)


def admm_dual_update(mu, alpha, theta):
    mu, alpha, theta = (np.asarray(v, dtype=float) for v in (mu, alpha, theta))
    if not (mu.shape == alpha.shape == theta.shape):
        raise DimensionError("mu, alpha and theta must have the same shape")
    return mu + alpha - theta


def _scale_for(config, n):
    return 1.0 / n if config.scaling == "mean" else 1.0


def block_penalties(config, p):
    """Per-block penalty weights ``lam sigma^2 w_j / beta`` of the ADMM subproblem.

    The soft-threshold level used by ADMM is this divided by ``eta``.
    """
    return config.lam * config.sigma ** 2 * config.feature_weights(p) / config.beta


def admm_solve(Phi, Y, b, config, dim, alpha0=None, theta0=None, mu0=None):
    """Run ADMM on the weighted group-penalized least-squares subproblem.

    Returns ``(alpha, theta, mu, InnerTrace)``. Raises :class:`SolverError`
    when the subproblem objective rises for ``DIVERGENCE_WINDOW`` consecutive
    iterations while above its value at zero, or becomes non-finite.
    """
    Phi = np.asarray(Phi, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n, m = Phi.shape
    if m % dim:
        raise DimensionError(f"design matrix has {m} columns, not a multiple of d={dim}")
    p = m // dim
    H, c, L, quad0 = _ridge_system(Phi, Y, b, config.eta, _scale_for(config, n))
    zeros = np.zeros(m)
    alpha0 = zeros if alpha0 is None else np.asarray(alpha0, dtype=float)
    theta0 = zeros if theta0 is None else np.asarray(theta0, dtype=float)
    mu0 = zeros if mu0 is None else np.asarray(mu0, dtype=float)

    alpha, theta, mu, n_iter, status, primal, dalpha, hist = _kernels.admm_loop(
        L, c, H, quad0, block_penalties(config, p), dim, config.q, config.eta,
        config.eps, int(config.inner_max_iter), alpha0, theta0, mu0, DIVERGENCE_WINDOW,
    )
    trace = InnerTrace(int(n_iter), status == _kernels.CONVERGED, float(primal),
                       float(dalpha), np.asarray(hist))
    if status == _kernels.DIVERGED:
        raise SolverError(
            f"ADMM objective increased for {DIVERGENCE_WINDOW} consecutive iterations", trace
        )
    if status == _kernels.NONFINITE:
        raise SolverError("ADMM produced a non-finite objective", trace)
    return alpha, theta, mu, trace


# --------------------------------------------------------------------------
# objectives
# --------------------------------------------------------------------------

def group_norms(alpha, dim, q):
    blocks = np.asarray(alpha, dtype=float).reshape(-1, dim)
    if q == 1:
        return np.abs(blocks).sum(axis=1)
    return np.sqrt((blocks * blocks).sum(axis=1))


def _penalty_factor(config, n):
    return 1.0 if config.scaling == "mean" else 1.0 / n


def evaluate_objective(alpha, b, Phi, Y, config, dim):
    """Half-quadratic objective ``R(alpha, b)`` (to be maximized)."""
    b = np.asarray(b, dtype=float)
    if np.any(b >= 0):
        raise DomainError("R(alpha, b) requires every b_i < 0")
    Phi = np.asarray(Phi, dtype=float)
    n = Phi.shape[0]
    r = np.asarray(Y, dtype=float) - Phi @ alpha
    data = np.mean(b * r ** 2 / config.sigma ** 2 - conjugate_g(b))
    p = Phi.shape[1] // dim
    penalty = config.feature_weights(p) @ group_norms(alpha, dim, config.q)
    return float(data - _penalty_factor(config, n) * config.lam / config.beta * penalty)


def penalized_risk(alpha, Phi, Y, config, dim):
    """Mean C-loss plus ``lam * sum_j w_j ||alpha_j||_q`` (to be minimized)."""
    Phi = np.asarray(Phi, dtype=float)
    n = Phi.shape[0]
    f = Phi @ alpha
    p = Phi.shape[1] // dim
    penalty = config.feature_weights(p) @ group_norms(alpha, dim, config.q)
    loss = np.mean(closs(np.asarray(Y, float), f, config.sigma))
    return float(loss + _penalty_factor(config, n) * config.lam * penalty)


# --------------------------------------------------------------------------
# training
# --------------------------------------------------------------------------

def fit_design(Phi, Y, dim, config):
    """Alternate b-updates and ADMM solves on a precomputed design matrix.

    Returns ``(CoefficientBlocks, SolverTrace)``. The coefficient vector
    carried between outer iterations (and returned as ``coef``) is the ADMM
    split variable ``theta``.
    """
    Phi = np.ascontiguousarray(Phi, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n, m = Phi.shape
    if Y.shape != (n,):
        raise DimensionError(f"expected {n} labels, got shape {Y.shape}")
    trace = SolverTrace()
    if np.unique(Y).size < 2:
        msg = "training labels contain a single class"
        trace.warnings.append(msg)
        log.warning(msg)

    rng = np.random.default_rng(config.seed)
    coef = rng.uniform(0.0, 1.0, size=m)
    theta = np.zeros(m)
    mu = np.zeros(m)
    alpha = coef
    prev_objective = None

    for t in range(int(config.outer_max_iter)):
        b = hq_update_b(Y - Phi @ coef, config.sigma)
        before = evaluate_objective(coef, b, Phi, Y, config, dim)
        if prev_objective is None:
            trace.initial_objective = before
            prev_objective = before
        if config.warm_start:
            alpha, theta, mu, inner = admm_solve(Phi, Y, b, config, dim, coef, theta, mu)
        else:
            alpha, theta, mu, inner = admm_solve(Phi, Y, b, config, dim, coef)
        coef = theta
        objective = evaluate_objective(coef, b, Phi, Y, config, dim)
        if not math.isfinite(objective):
            raise SolverError(f"non-finite objective at outer iteration {t}", trace)
        trace.records.append(OuterRecord(
            t, before, objective, penalized_risk(coef, Phi, Y, config, dim),
            inner.n_iter, inner.converged, inner.primal_residual, inner.alpha_change,
        ))
        if objective - prev_objective <= config.eps:
            trace.converged = True
            break
        prev_objective = objective

    return CoefficientBlocks(alpha, theta, mu, dim), trace


def fit(X, basis, config):
    """Normalize, expand and train on a :class:`FeatureMatrix`."""
    if not isinstance(X, FeatureMatrix):
        raise DimensionError("fit expects a FeatureMatrix")
    if not isinstance(basis, BasisConfig):
        raise ConfigError("fit expects a BasisConfig")
    design = design_matrix(X, basis)
    return fit_design(design.phi, X.labels, basis.dim, config)
