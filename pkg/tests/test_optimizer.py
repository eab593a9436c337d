import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afr import basis, optimizer as O
from afr.errors import ConfigError, DomainError, SolverError

from oracles import conjugate_argmax, prox_numeric


# ---------------------------------------------------------------- C-loss

@pytest.mark.parametrize("y", [-1.0, 1.0])
@pytest.mark.parametrize("sigma", [0.1, 0.5, 1.0, 3.0, 50.0])
def test_closs_at_zero_score_is_one(y, sigma):
    assert O.closs(y, 0.0, sigma) == pytest.approx(1.0, abs=1e-12)


def test_closs_values():
    assert O.closs(1.0, 1.0, 1.0) == 0.0
    beta = 1.0 / (1.0 - math.exp(-1.0))
    assert O.closs(-1.0, 1.0, 1.0) == pytest.approx(beta * (1.0 - math.exp(-4.0)), rel=1e-14)
    assert O.closs(-1.0, 1.0, 1.0) == pytest.approx(1.55300, abs=1e-5)


def test_closs_bounded():
    f = np.linspace(-50, 50, 1001)
    for sigma in (0.3, 1.0, 4.0):
        v = O.closs(1.0, f, sigma)
        assert v.min() >= 0.0 and v.max() <= O.closs_beta(sigma) + 1e-12


def test_closs_rejects_bad_sigma():
    with pytest.raises(ConfigError):
        O.closs(1.0, 0.0, 0.0)


def test_closs_large_sigma_limit_is_squared_margin():
    rng = np.random.default_rng(0)
    y = rng.choice([-1.0, 1.0], 200)
    f = rng.uniform(-1, 1, 200)
    np.testing.assert_allclose(O.closs(y, f, 100.0), (1 - y * f) ** 2, atol=1e-3)


@settings(max_examples=200)
@given(st.sampled_from([-1.0, 1.0]), st.floats(-1e3, 1e3))
def test_residual_forms_coincide(y, f):
    assert (y - f) ** 2 == pytest.approx((1 - y * f) ** 2, rel=1e-12, abs=1e-9)


# ---------------------------------------------------------------- b update

def test_hq_update_b_values():
    assert O.hq_update_b([0.0], 1.0)[0] == -1.0
    assert O.hq_update_b([2.0], 2.0)[0] == pytest.approx(-math.exp(-1), rel=1e-15)
    assert O.hq_update_b([0.7], 0.7)[0] == pytest.approx(-0.36787944117, abs=1e-11)


def test_hq_update_b_range():
    r = np.r_[0.0, np.random.default_rng(1).normal(scale=30, size=500), 1e6]
    b = O.hq_update_b(r, 1.0)
    assert np.all(b >= -1.0) and np.all(b < 0.0)


def test_hq_update_b_rejects_non_finite():
    with pytest.raises(SolverError):
        O.hq_update_b([np.nan], 1.0)


@pytest.mark.parametrize("seed", range(10))
def test_conjugacy_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    r, sigma = rng.uniform(0, 3), rng.uniform(0.3, 3)
    assert O.hq_update_b([r], sigma)[0] == pytest.approx(conjugate_argmax(r, sigma), abs=1e-8)


def test_conjugate_g_domain():
    assert O.conjugate_g(-1.0) == -1.0
    with pytest.raises(DomainError):
        O.conjugate_g(0.0)


# ---------------------------------------------------------------- prox

def test_soft_threshold_examples():
    np.testing.assert_array_equal(O.soft_threshold(np.zeros(3), 1.0, 1), 0.0)
    np.testing.assert_array_equal(O.soft_threshold(np.zeros(3), 1.0, 2), 0.0)
    np.testing.assert_allclose(O.soft_threshold([3.0, -0.5], 1.0, 1), [2.0, 0.0])
    np.testing.assert_allclose(O.soft_threshold([3.0, 4.0], 2.5, 2), [1.5, 2.0])
    np.testing.assert_allclose(prox_numeric(np.array([3.0, -0.5]), 1.0, 1), [2.0, 0.0], atol=1e-6)
    np.testing.assert_allclose(prox_numeric(np.array([3.0, 4.0]), 2.5, 2), [1.5, 2.0], atol=1e-6)


def test_soft_threshold_negative_threshold():
    with pytest.raises(DomainError):
        O.soft_threshold([1.0], -1.0, 1)


@pytest.mark.parametrize("q", [1, 2])
def test_soft_threshold_matches_numeric_prox(q):
    rng = np.random.default_rng(q)
    for _ in range(20):
        a = rng.normal(scale=2, size=rng.integers(1, 9))
        k = rng.uniform(0, 3)
        np.testing.assert_allclose(O.soft_threshold(a, k, q), prox_numeric(a, k, q), atol=1e-5)


@settings(max_examples=100)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=8), st.floats(0, 5))
def test_group_shrink_never_grows_or_flips(a, k):
    a = np.array(a)
    x = O.soft_threshold(a, k, 2)
    assert np.linalg.norm(x) <= np.linalg.norm(a) + 1e-12
    assert np.all(x * a >= 0)


# ---------------------------------------------------------------- ADMM pieces

def test_alpha_update_zero_rhs():
    Phi = np.random.default_rng(0).normal(size=(10, 4))
    z = np.zeros(4)
    np.testing.assert_array_equal(O.admm_alpha_update(Phi, np.zeros(10), -np.ones(10), z, z, 0.1), 0.0)


def test_alpha_update_scalar():
    alpha = O.admm_alpha_update([[1.0]], [1.0], [-1.0], [0.0], [0.0], 2.0)
    assert alpha[0] == pytest.approx(0.5, abs=1e-15)
    assert np.linalg.solve([[2.0 + 2.0]], [2.0])[0] == pytest.approx(alpha[0])


@pytest.mark.parametrize("seed", range(10))
def test_alpha_update_stationarity(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(5, 200), 4 * rng.integers(1, 6)
    Phi, Y = rng.uniform(size=(n, m)), rng.choice([-1.0, 1.0], n)
    b = -rng.uniform(0.01, 1, n)
    theta, mu, eta = rng.normal(size=m), rng.normal(size=m), rng.uniform(0.01, 2)
    alpha = O.admm_alpha_update(Phi, Y, b, theta, mu, eta)
    D = -b
    grad = -2 * Phi.T @ (D * (Y - Phi @ alpha)) + eta * (alpha - theta + mu)
    scale = np.linalg.norm(2 * Phi.T @ (D * Y)) + np.linalg.norm(eta * (theta - mu))
    assert np.linalg.norm(grad) / scale <= 1e-8


def test_alpha_update_requires_negative_b():
    with pytest.raises(DomainError):
        O.admm_alpha_update([[1.0]], [1.0], [0.0], [0.0], [0.0], 1.0)


def test_dual_update():
    np.testing.assert_array_equal(O.admm_dual_update([0.25, -1.0], [2.0, 1.0], [2.0, 1.0]), [0.25, -1.0])
    np.testing.assert_allclose(O.admm_dual_update([0.0], [1.0], [0.25]), [0.75])


def _small_problem(seed=0, n=80, p=5, d=4):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, p))
    y = np.where(np.sin(2 * np.pi * X[:, 0]) + X[:, 1] - 0.5 >= 0, 1.0, -1.0)
    phi = basis.expand(X, basis.BasisConfig(dim=d, order=min(d, 4))).phi
    b = -rng.uniform(0.2, 1.0, n)
    return phi, y, b


def test_admm_solve_matches_step_by_step_iteration():
    # the compiled loop against the public one-step operations
    phi, y, b = _small_problem()
    cfg = O.SolverConfig(lam=0.05, inner_max_iter=25, eps=1e-300)
    n, m = phi.shape
    k = O.block_penalties(cfg, m // 4) / cfg.eta
    theta, mu, residual_sum = np.zeros(m), np.zeros(m), np.zeros(m)
    for _ in range(25):
        alpha = O.admm_alpha_update(phi, y, b, theta, mu, cfg.eta, scale=1.0 / n)
        theta = np.concatenate([O.soft_threshold(v, kj, 2)
                                for v, kj in zip((alpha + mu).reshape(-1, 4), k)])
        residual_sum += alpha - theta
        mu = O.admm_dual_update(mu, alpha, theta)
    a2, t2, mu2, tr = O.admm_solve(phi, y, b, cfg, 4)
    assert tr.n_iter == 25 and not tr.converged
    np.testing.assert_allclose(a2, alpha, atol=1e-10)
    np.testing.assert_allclose(t2, theta, atol=1e-10)
    np.testing.assert_allclose(mu2, mu, atol=1e-10)
    # scaled dual telescopes into the running sum of primal residuals
    np.testing.assert_allclose(mu, residual_sum, atol=1e-12)


def test_admm_total_shrinkage():
    phi, y, b = _small_problem()
    alpha, theta, mu, tr = O.admm_solve(phi, y, b, O.SolverConfig(lam=1e6), 4)
    np.testing.assert_array_equal(theta, 0.0)
    assert np.max(np.abs(alpha)) < 1e-3


@pytest.mark.parametrize("q", [1, 2])
def test_admm_stop_rule_postcondition(q):
    phi, y, b = _small_problem(2)
    cfg = O.SolverConfig(lam=0.02, q=q)
    alpha, theta, mu, tr = O.admm_solve(phi, y, b, cfg, 4)
    assert tr.converged
    assert np.max(np.abs(alpha - theta)) < cfg.eps
    assert tr.primal_residual < cfg.eps and tr.alpha_change < cfg.eps


def test_admm_small_lambda_is_weighted_least_squares():
    rng = np.random.default_rng(9)
    n, m = 150, 12
    phi, y = rng.normal(size=(n, m)), rng.choice([-1.0, 1.0], n)
    b = -rng.uniform(0.1, 1, n)
    cfg = O.SolverConfig(lam=1e-12, eps=1e-10, inner_max_iter=20000)
    alpha, theta, mu, tr = O.admm_solve(phi, y, b, cfg, 4)
    D = -b
    direct = np.linalg.solve(phi.T @ (D[:, None] * phi), phi.T @ (D * y))
    np.testing.assert_allclose(alpha, direct, atol=1e-6)


def _mismatched_ridge(Phi, Y, b, eta, scale):
    # factor of a system with a tenth of the proximal weight: each alpha-step
    # then amplifies (theta - mu) by 10 and the iteration blows up
    H, c, L, quad0 = _true_ridge(Phi, Y, b, eta, scale)
    m = H.shape[0]
    return H, np.zeros(m), np.sqrt(0.1 * eta) * np.eye(m), quad0


_true_ridge = O._ridge_system


@pytest.mark.parametrize("loop", ["_admm_loop_np", "_admm_loop_nb"])
def test_divergence_guard_in_kernels(loop):
    from afr import _kernels
    phi, y, b = _small_problem()
    H, c, L, quad0 = _mismatched_ridge(phi, y, b, 0.1, 1.0 / len(y))
    m = H.shape[0]
    start = np.full(m, 0.01)
    out = getattr(_kernels, loop)(L, c, H, quad0, np.full(m // 4, 1e-9), 4, 2, 0.1, 1e-4,
                                  200, start, start.copy(), np.zeros(m), 20)
    status, hist = out[4], out[7]
    assert status == _kernels.DIVERGED
    assert np.all(np.diff(hist[-20:]) > 0)


def test_divergence_guard_raises_with_trace(monkeypatch):
    phi, y, b = _small_problem()
    monkeypatch.setattr(O, "_ridge_system", _mismatched_ridge)
    start = np.full(phi.shape[1], 0.01)
    with pytest.raises(SolverError) as err:
        O.admm_solve(phi, y, b, O.SolverConfig(lam=1e-9), 4, alpha0=start, theta0=start)
    assert err.value.trace is not None and not err.value.trace.converged
    assert err.value.trace.n_iter >= 20


# ---------------------------------------------------------------- objective

@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_objective_at_zero(sigma):
    phi, y, _ = _small_problem()
    cfg = O.SolverConfig(sigma=sigma)
    value = O.evaluate_objective(np.zeros(phi.shape[1]), -np.ones(len(y)), phi, y, cfg, 4)
    assert value == pytest.approx(-1.0 / sigma ** 2 + 1.0, abs=1e-14)


def test_objective_penalty_decomposition():
    phi, y, _ = _small_problem()
    rng = np.random.default_rng(4)
    alpha, b = rng.normal(size=phi.shape[1]), -rng.uniform(0.1, 1, len(y))
    for q in (1, 2):
        cfg = O.SolverConfig(lam=0.3, q=q)
        zero_pen = O.SolverConfig(lam=1e-300, q=q)
        blocks = alpha.reshape(-1, 4)
        norms = [np.sum(np.abs(v)) if q == 1 else math.sqrt(np.sum(v * v)) for v in blocks]
        diff = O.evaluate_objective(alpha, b, phi, y, zero_pen, 4) - O.evaluate_objective(alpha, b, phi, y, cfg, 4)
        assert diff == pytest.approx(0.3 / cfg.beta * sum(norms), rel=1e-12)


def test_objective_domain():
    phi, y, _ = _small_problem()
    with pytest.raises(DomainError):
        O.evaluate_objective(np.zeros(phi.shape[1]), np.zeros(len(y)), phi, y, O.SolverConfig(), 4)


def test_objective_equals_negated_risk_at_optimal_b():
    phi, y, _ = _small_problem()
    cfg = O.SolverConfig(lam=0.01, sigma=1.3)
    alpha = np.random.default_rng(2).normal(scale=0.3, size=phi.shape[1])
    b = O.hq_update_b(y - phi @ alpha, cfg.sigma)
    R = O.evaluate_objective(alpha, b, phi, y, cfg, 4)
    risk = O.penalized_risk(alpha, phi, y, cfg, 4)
    assert risk == pytest.approx(cfg.beta * (1.0 - R), rel=1e-12)


# ---------------------------------------------------------------- training

def test_solver_config_validation():
    for bad in ({"lam": 0}, {"sigma": -1}, {"q": 3}, {"eta": 0}, {"eps": 0},
                {"weights": (1.0, 0.0)}, {"scaling": "median"}, {"inner_max_iter": 0}):
        with pytest.raises(ConfigError):
            O.SolverConfig(**bad)


def test_defaults():
    cfg = O.SolverConfig()
    assert (cfg.lam, cfg.sigma, cfg.q, cfg.eta, cfg.eps) == (5e-4, 1.0, 2, 0.1, 1e-4)


def test_one_dimensional_separable():
    rng = np.random.default_rng(0)
    x = rng.uniform(size=(400, 1))
    y = np.where(x[:, 0] >= 0.5, 1.0, -1.0)
    coef, trace = O.fit(basis.FeatureMatrix(x, y), basis.BasisConfig(), O.SolverConfig())
    phi = basis.design_matrix(x, basis.BasisConfig()).phi
    assert np.mean(np.where(phi @ coef.coef >= 0, 1, -1) == y) >= 0.99


def test_single_class_warns_and_shrinks():
    x = np.random.default_rng(1).uniform(size=(50, 3))
    coef, trace = O.fit(basis.FeatureMatrix(x, np.ones(50)), basis.BasisConfig(), O.SolverConfig(lam=1e6))
    assert any("single class" in w for w in trace.warnings)
    np.testing.assert_array_equal(coef.coef, 0.0)


def test_trace_sandwich_monotonicity(synthetic):
    ds, _ = synthetic
    phi = basis.design_matrix(ds.features, basis.BasisConfig()).phi
    for lam, sigma in [(5e-4, 1.0), (0.07, 2.0), (0.5, 1.0)]:
        _, trace = O.fit_design(phi, ds.labels, 8, O.SolverConfig(lam=lam, sigma=sigma))
        prev = trace.initial_objective
        for rec in trace.records:
            assert rec.objective_before >= prev - 1e-8  # exact b-maximization
            assert rec.objective >= rec.objective_before - 1e-8
            prev = rec.objective
        assert len(trace) <= 50


def test_group_sparsity_is_exact(synthetic):
    ds, truth = synthetic
    phi = basis.design_matrix(ds.features, basis.BasisConfig()).phi
    coef, _ = O.fit_design(phi, ds.labels, 8, O.SolverConfig(lam=0.07, sigma=2.0))
    zero_blocks = [j for j in range(20) if j not in truth.support]
    assert np.all(coef.blocks()[zero_blocks] == 0.0)


def test_fit_is_deterministic(synthetic):
    ds, _ = synthetic
    X = ds.feature_matrix()
    a, _ = O.fit(X, basis.BasisConfig(), O.SolverConfig(seed=5))
    b, _ = O.fit(X, basis.BasisConfig(), O.SolverConfig(seed=5))
    assert np.array_equal(a.coef, b.coef) and np.array_equal(a.alpha, b.alpha)


def test_warm_start_and_sum_scaling_run(synthetic):
    ds, _ = synthetic
    phi = basis.design_matrix(ds.features, basis.BasisConfig()).phi
    for cfg in (O.SolverConfig(lam=0.05, sigma=2.0, warm_start=True),
                O.SolverConfig(lam=5.0, sigma=2.0, scaling="sum")):
        _, trace = O.fit_design(phi, ds.labels, 8, cfg)
        assert trace.converged
        assert np.all(np.diff(trace.objectives) >= -1e-6)
