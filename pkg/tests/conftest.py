import sys
import numpy as np
import pytest

from afr import basis, data, model, optimizer


@pytest.fixture(scope="session")
def synthetic():
    return data.generate_synthetic(data.SyntheticSpec())


@pytest.fixture(scope="session")
def small_model():
    rng = np.random.default_rng(3)
    X = rng.uniform(-2.0, 5.0, size=(120, 4))
    y = np.where(np.sin(2 * np.pi * X[:, 1] / 7.0) + 0.3 * X[:, 2] - 0.5 >= 0, 1.0, -1.0)
    fitted, _ = model.train(basis.FeatureMatrix(X, y), basis.BasisConfig(),
                            optimizer.SolverConfig(lam=1e-2, sigma=2.0))
    return fitted, X


def make_model(alpha, p, d=8, family="bspline", q=2, lo=0.0, hi=1.0):
    stats = basis.NormalizationStats(np.full(p, lo), np.full(p, hi))
    return model.TrainedModel(basis.BasisConfig(family, d), stats, np.asarray(alpha, float),
                              optimizer.SolverConfig(q=q), {"n_features": p})


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
