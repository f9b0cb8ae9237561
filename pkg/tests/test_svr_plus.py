import json

import numpy as np
import pytest

from privheight.kernel import KernelParams, kernel_matrix
from privheight import svr, svr_plus


def toy_problem(seed=0, l=20, noise=0.15):
    rng = np.random.default_rng(seed)
    X = np.linspace(0.0, 3.0, l).reshape(-1, 1)
    noise_vals = noise * rng.standard_normal(l)
    y = np.sin(X.ravel()) + noise_vals
    Xs = np.column_stack([np.abs(noise_vals), rng.standard_normal(l)])
    return X, Xs, y


def default_params(**kw):
    base = dict(
        cost=10.0,
        epsilon=0.1,
        gamma_correcting=1.0,
        kernel_decision=KernelParams(1.0),
        kernel_correcting=KernelParams(0.5),
    )
    base.update(kw)
    return svr_plus.SvrPlusHyperparams(**base)


def full_beta(model, X):
    beta = np.zeros(len(X))
    svi = 0
    for i, row in enumerate(X):
        if svi < len(model.support_vectors) and np.allclose(
            model.support_vectors[svi], row
        ):
            beta[i] = model.dual_coefficients[svi]
            svi += 1
    assert svi == len(model.support_vectors)
    return beta


def test_kkt_residual_small_after_training():
    X, Xs, y = toy_problem()
    model = svr_plus.svr_plus_train(X, Xs, y, default_params())
    assert model.training_diagnostics["kkt_residual"] <= 1e-5


def test_primal_constraints_satisfied_on_training_set():
    X, Xs, y = toy_problem(seed=3, noise=0.3)
    params = default_params(cost=5.0)
    model = svr_plus.svr_plus_train(X, Xs, y, params)
    f = svr_plus.svr_plus_predict_batch(model, X)
    xi1, xi2 = svr_plus.reconstruct_correcting_values(model, Xs)
    assert np.all(xi1 >= -1e-5)
    assert np.all(xi2 >= -1e-5)
    assert np.all(y - f - params.epsilon - xi1 <= 1e-5)
    assert np.all(f - y - params.epsilon - xi2 <= 1e-5)


def test_upward_tube_violations_covered_by_first_correcting_function():
    X, Xs, y = toy_problem(seed=5, noise=0.4)
    params = default_params(cost=2.0, epsilon=0.05)
    model = svr_plus.svr_plus_train(X, Xs, y, params)
    f = svr_plus.svr_plus_predict_batch(model, X)
    xi1, _ = svr_plus.reconstruct_correcting_values(model, Xs)
    above = y - f - params.epsilon
    assert np.any(above > 1e-3), "test setup: need at least one upward violation"
    for i in np.flatnonzero(above > 0):
        assert xi1[i] >= above[i] - 1e-4


def test_duality_gap_is_zero():
    X, Xs, y = toy_problem(seed=7, noise=0.25)
    params = default_params()
    model = svr_plus.svr_plus_train(X, Xs, y, params)
    Kd = kernel_matrix(X, X, params.kernel_decision)
    Kc = kernel_matrix(Xs, Xs, params.kernel_correcting)
    beta = full_beta(model, X)
    gam = params.gamma_correcting
    d1 = model.correcting_coefficients_1 * gam
    d2 = model.correcting_coefficients_2 * gam
    xi1, xi2 = svr_plus.reconstruct_correcting_values(model, Xs)
    primal = (
        0.5 * (beta @ Kd @ beta + (d1 @ Kc @ d1 + d2 @ Kc @ d2) / gam)
        + params.cost * (xi1.sum() + xi2.sum())
    )
    dual = model.training_diagnostics["objective"]
    assert abs(primal - dual) <= 1e-4 * max(1.0, abs(primal))


def test_identical_privileged_vectors_match_plain_svr():
    rng = np.random.default_rng(42)
    l = 20
    X = np.linspace(0.0, 3.0, l).reshape(-1, 1)
    y = np.sin(X.ravel()) + 0.05 * rng.standard_normal(l)
    Xs = np.full((l, 2), 3.7)
    params = default_params(epsilon=0.2, kernel_correcting=KernelParams(1.0))
    plus = svr_plus.svr_plus_train(X, Xs, y, params)
    base = svr.svr_train(X, y, svr.SvrHyperparams(10.0, 0.2, KernelParams(1.0)))
    grid = np.linspace(0.0, 3.0, 60).reshape(-1, 1)
    diff = np.abs(
        svr_plus.svr_plus_predict_batch(plus, grid) - svr.svr_predict_batch(base, grid)
    )
    assert np.max(diff) <= 1e-3


def test_identical_privileged_vectors_give_constant_correcting_values():
    X, _, y = toy_problem(seed=9)
    Xs = np.full((len(y), 3), 1.5)
    model = svr_plus.svr_plus_train(X, Xs, y, default_params())
    xi1, xi2 = svr_plus.reconstruct_correcting_values(model, Xs)
    assert np.ptp(xi1) <= 1e-8
    assert np.ptp(xi2) <= 1e-8


def test_constant_targets_give_constant_model():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((15, 2))
    Xs = rng.standard_normal((15, 4))
    y = np.full(15, 2.5)
    model = svr_plus.svr_plus_train(X, Xs, y, default_params(epsilon=0.1))
    for x in X:
        assert svr_plus.svr_plus_predict(model, x) == pytest.approx(2.5, abs=1e-3)


def test_privileged_noise_information_improves_test_error():
    wins = 0
    errs_plus, errs_base = [], []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        l, lt = 30, 60
        X = rng.uniform(0.0, 3.0, (l, 1))
        noise = 0.3 * rng.standard_normal(l)
        y = np.sin(X.ravel()) + noise
        Xs = np.abs(noise).reshape(-1, 1)
        Xt = rng.uniform(0.0, 3.0, (lt, 1))
        yt = np.sin(Xt.ravel())
        params = svr_plus.SvrPlusHyperparams(
            2.0, 0.1, 0.1, KernelParams(1.0), KernelParams(10.0)
        )
        plus = svr_plus.svr_plus_train(X, Xs, y, params)
        base = svr.svr_train(X, y, svr.SvrHyperparams(2.0, 0.1, KernelParams(1.0)))
        errs_plus.append(np.mean(np.abs(svr_plus.svr_plus_predict_batch(plus, Xt) - yt)))
        errs_base.append(np.mean(np.abs(svr.svr_predict_batch(base, Xt) - yt)))
        wins += errs_plus[-1] <= errs_base[-1]
    assert np.mean(errs_plus) <= np.mean(errs_base)


def test_prediction_uses_only_observable_part():
    X, Xs, y = toy_problem(seed=13)
    model = svr_plus.svr_plus_train(X, Xs, y, default_params())
    x_query = np.array([1.7])
    before = svr_plus.svr_plus_predict(model, x_query)
    # blank out the correcting part entirely
    model.privileged_vectors = np.zeros_like(model.privileged_vectors)
    model.correcting_coefficients_1 = np.zeros_like(model.correcting_coefficients_1)
    model.correcting_coefficients_2 = np.zeros_like(model.correcting_coefficients_2)
    model.bias_1 = 0.0
    model.bias_2 = 0.0
    assert svr_plus.svr_plus_predict(model, x_query) == before


def test_zero_coefficient_model_predicts_bias():
    model = svr_plus.SvrPlusModel(
        support_vectors=np.empty((0, 3)),
        dual_coefficients=np.empty(0),
        bias=1.5,
        privileged_vectors=np.zeros((2, 2)),
        correcting_coefficients_1=np.zeros(2),
        correcting_coefficients_2=np.zeros(2),
        bias_1=0.0,
        bias_2=0.0,
        hyperparams=default_params(),
    )
    assert svr_plus.svr_plus_predict(model, [0.0, 1.0, 2.0]) == 1.5


def test_prediction_matches_manual_kernel_expansion():
    X, Xs, y = toy_problem(seed=15)
    model = svr_plus.svr_plus_train(X, Xs, y, default_params())
    rng = np.random.default_rng(16)
    for _ in range(10):
        x = rng.uniform(0.0, 3.0, 1)
        manual = model.bias
        for sv, c in zip(model.support_vectors, model.dual_coefficients):
            d = sv - x
            manual += c * np.exp(-model.hyperparams.kernel_decision.gamma_g * (d @ d))
        assert svr_plus.svr_plus_predict(model, x) == pytest.approx(manual, abs=1e-12)


def test_dimension_and_alignment_errors():
    X, Xs, y = toy_problem()
    with pytest.raises(svr.SvrError):
        svr_plus.svr_plus_train(X[:-1], Xs, y, default_params())
    with pytest.raises(svr.SvrError):
        svr_plus.svr_plus_train(X, np.empty((len(y), 0)), y, default_params())
    model = svr_plus.svr_plus_train(X, Xs, y, default_params())
    with pytest.raises(svr.SvrError):
        svr_plus.svr_plus_predict(model, [1.0, 2.0])
    with pytest.raises(svr.SvrError):
        svr_plus.reconstruct_correcting_values(model, np.zeros((3, 5)))


def test_json_round_trip(tmp_path):
    X, Xs, y = toy_problem(seed=17)
    model = svr_plus.svr_plus_train(X, Xs, y, default_params())
    path = tmp_path / "svrplus.json"
    svr_plus.save_model(model, path)
    loaded = svr_plus.load_model(path)
    np.testing.assert_array_equal(loaded.support_vectors, model.support_vectors)
    np.testing.assert_array_equal(loaded.dual_coefficients, model.dual_coefficients)
    np.testing.assert_array_equal(loaded.privileged_vectors, model.privileged_vectors)
    assert loaded.bias == model.bias
    assert loaded.bias_1 == model.bias_1
    assert loaded.bias_2 == model.bias_2
    assert loaded.hyperparams == model.hyperparams

    doc = json.loads(path.read_text())
    svr_fields = {
        "support_vectors", "dual_coefficients", "bias", "cost", "epsilon",
        "gamma_g", "feature_dim",
    }
    assert svr_fields <= set(doc)
    rng = np.random.default_rng(18)
    for _ in range(5):
        x = rng.uniform(0, 3, 1)
        assert svr_plus.svr_plus_predict(loaded, x) == svr_plus.svr_plus_predict(model, x)
