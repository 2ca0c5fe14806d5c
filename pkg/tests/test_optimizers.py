import numpy as np
import pytest

from tweet2traffic.learn.optimizers import (
    fit_l1_logistic,
    fit_lasso,
    lasso_kkt_violation,
    sigmoid,
    soft_threshold,
)


def random_instance(rng, n, p, noise=0.5):
    X = rng.normal(size=(n, p))
    w_true = np.zeros(p)
    k = max(1, p // 5)
    w_true[rng.choice(p, size=k, replace=False)] = rng.normal(size=k) * 2
    y = X @ w_true + 1.5 + noise * rng.normal(size=n)
    return X, y


class TestLasso:
    def test_alpha_zero_matches_least_squares(self):
        rng = np.random.default_rng(0)
        X, y = random_instance(rng, 80, 10)
        model = fit_lasso(X, y, alpha=0.0, standardize=False)
        A = np.column_stack([X, np.ones(len(y))])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        assert np.abs(model.weights - coef[:-1]).max() < 1e-6
        assert abs(model.bias - coef[-1]) < 1e-6

    def test_orthonormal_soft_threshold(self):
        # single unit-norm column, no bias: coefficient = soft(x.y, alpha/2)
        rng = np.random.default_rng(1)
        x = rng.normal(size=40)
        x /= np.linalg.norm(x)
        y = 2.0 * x
        model = fit_lasso(x[:, None], y, alpha=1.0, standardize=False, fit_bias=False)
        assert model.weights[0] == pytest.approx(1.5, abs=1e-8)

    def test_orthonormal_multicolumn(self):
        rng = np.random.default_rng(2)
        Q, _ = np.linalg.qr(rng.normal(size=(60, 5)))
        ols = np.array([3.0, -1.2, 0.3, 0.0, -0.6])
        y = Q @ ols
        alpha = 1.0
        model = fit_lasso(Q, y, alpha=alpha, standardize=False, fit_bias=False)
        want = np.sign(ols) * np.maximum(np.abs(ols) - alpha / 2.0, 0.0)
        assert np.abs(model.weights - want).max() < 1e-8

    def test_critical_alpha_all_zero(self):
        rng = np.random.default_rng(3)
        X, y = random_instance(rng, 60, 8)
        alpha_max = 2.0 * np.abs(X.T @ (y - y.mean())).max()
        model = fit_lasso(X, y, alpha=alpha_max * 1.001, standardize=False)
        assert np.all(model.weights == 0.0)
        assert model.bias == pytest.approx(y.mean())

    def test_kkt_random_instances(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            n = int(rng.integers(20, 200))
            p = int(rng.integers(2, 50))
            X, y = random_instance(rng, n, p)
            alpha = float(rng.uniform(0.1, 20.0))
            model = fit_lasso(X, y, alpha=alpha, standardize=False)
            assert lasso_kkt_violation(X, y, model) < 1e-6

    def test_warm_start_same_solution(self):
        rng = np.random.default_rng(5)
        X, y = random_instance(rng, 50, 12)
        cold = fit_lasso(X, y, alpha=5.0, standardize=False)
        first = fit_lasso(X, y, alpha=20.0, standardize=False)
        warm = fit_lasso(X, y, alpha=5.0, standardize=False,
                         warm_start=first._std_state)
        assert np.abs(cold.weights - warm.weights).max() < 1e-6

    def test_zero_variance_column_zero_coef(self):
        rng = np.random.default_rng(6)
        X, y = random_instance(rng, 40, 5)
        X[:, 2] = 3.14
        model = fit_lasso(X, y, alpha=1.0)
        assert model.weights[2] == 0.0


class TestL1Logistic:
    def test_objective_monotone(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            X = rng.normal(size=(60, 8))
            y = (rng.random(60) < sigmoid(X[:, 0] - 0.5)).astype(float)
            model = fit_l1_logistic(X, y, lam=1.0)
            path = model.objective_path
            assert all(a >= b - 1e-9 for a, b in zip(path, path[1:]))

    def test_huge_lambda_intercept_only(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(200, 6))
        y = (rng.random(200) < 0.3).astype(float)
        model = fit_l1_logistic(X, y, lam=1e6, tol=1e-10)
        pbar = y.mean()
        assert np.all(model.weights == 0.0)
        assert model.bias == pytest.approx(np.log(pbar / (1 - pbar)), abs=1e-3)

    def test_mirror_symmetry_zero_weight(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=50)
        y = (rng.random(50) < 0.5).astype(float)
        X = np.concatenate([x, -x])[:, None]
        yy = np.concatenate([y, y])
        model = fit_l1_logistic(X, yy, lam=0.5, standardize=False)
        assert abs(model.weights[0]) < 1e-8

    def test_separable_data_finite_weights(self):
        X = np.linspace(-2, 2, 40)[:, None]
        y = (X[:, 0] > 0).astype(float)
        model = fit_l1_logistic(X, y, lam=0.5)
        assert np.all(np.isfinite(model.weights))
        assert np.isfinite(model.bias)

    def test_recovers_signal_direction(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(400, 5))
        logits = 2.0 * X[:, 1] - 1.5 * X[:, 3]
        y = (rng.random(400) < sigmoid(logits)).astype(float)
        model = fit_l1_logistic(X, y, lam=2.0)
        assert model.weights[1] > 0.1
        assert model.weights[3] < -0.1
        assert abs(model.weights[0]) < abs(model.weights[1])

    def test_probabilities_in_unit_interval(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(30, 4))
        y = (rng.random(30) < 0.5).astype(float)
        model = fit_l1_logistic(X, y, lam=0.1)
        proba = model.predict_proba(X)
        assert np.all((proba > 0) & (proba < 1))


def test_soft_threshold():
    assert soft_threshold(np.array([2.0, -2.0, 0.3]), 0.5).tolist() == [1.5, -1.5, 0.0]


def test_sigmoid_extremes_stable():
    z = np.array([-800.0, 0.0, 800.0])
    s = sigmoid(z)
    assert s[0] == 0.0 and s[1] == 0.5 and s[2] == 1.0
