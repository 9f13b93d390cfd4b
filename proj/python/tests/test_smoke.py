"""Smoke tests for the python bindings: a miniature end-to-end run of each
main operation, with values cross-checked against numpy."""

import numpy as np
import pytest

import _psivar as pv


def test_random_fourier_map_matches_numpy():
    rng = np.random.default_rng(0)
    fmap = pv.random_fourier_map(3, 64, lengthscale=1.5, seed=7)
    x = rng.normal(size=3)
    phi = fmap.evaluate(x)
    assert phi.shape == (64,)
    assert np.all(np.abs(phi) <= np.sqrt(2.0 / 64) + 1e-12)
    # serialization round trip is exact
    clone = pv.map_from_json(fmap.to_json())
    np.testing.assert_array_equal(clone.evaluate(x), phi)
    # finite differences agree with the analytic partial
    h = 1e-6
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        fd = (fmap.evaluate(x + e) - fmap.evaluate(x - e)) / (2 * h)
        np.testing.assert_allclose(fmap.partial(x, j), fd, rtol=1e-4, atol=1e-8)


def test_posterior_matches_closed_form():
    rng = np.random.default_rng(1)
    n, d, sigma2 = 40, 6, 0.5
    phi = rng.normal(size=(n, d))
    y = rng.normal(size=n)
    acc = pv.PosteriorAccumulator(d, sigma2)
    acc.accumulate(phi[:25], y[:25])
    acc.accumulate(phi[25:], y[25:])
    post = acc.finalize()
    cov = np.linalg.inv(np.eye(d) + phi.T @ phi / sigma2)
    mean = cov @ phi.T @ y / sigma2
    np.testing.assert_allclose(post.mean, mean, atol=1e-10)
    np.testing.assert_allclose(post.cov, cov, atol=1e-10)
    # feature-space prediction equals the kernel-space oracle
    probe = rng.normal(size=(5, d))
    primal = pv.predict(post, probe)
    dual = pv.dual_gp_posterior(phi @ phi.T, probe @ phi.T, probe @ probe.T, y, sigma2)
    np.testing.assert_allclose(primal.mean, dual.mean, atol=1e-8)
    np.testing.assert_allclose(primal.cov, dual.cov, atol=1e-8)


def test_pipeline_recovers_causal_variables():
    data = pv.generate_synthetic(f0="linear", features="continuous", n_train=400, dim=10, seed=3)
    x, y = data["x_train"], data["y_train"]
    model = pv.fit_additive(x, y, noise_variance=0.01, seed=5)
    assert model.sigma2 == 0.01
    scores = pv.importance_means(model, x)
    assert pv.auroc(scores, data["causal_mask"]) >= 0.9
    summary = pv.importance(model, x, mode="full", mc_samples=300, seed=9)
    ranks = {v["variable"]: v["rank"] for v in summary["variables"]}
    assert sorted(ranks[j] for j in range(5)) == [1, 2, 3, 4, 5]
    survival = summary["survival"]
    assert np.all(np.diff(survival, axis=1) <= 1e-12)


def test_forest_pipeline_runs_on_mixture_data():
    data = pv.generate_synthetic(f0="matern32", features="mixture", n_train=150, dim=12, seed=4)
    roles = ["continuous"] * 12
    for j in data["discrete_columns"]:
        roles[j] = "binary"
    model = pv.fit_fdt_forest(
        data["x_train"], data["y_train"], roles=roles, n_trees=10, noise_variance=0.01, seed=11
    )
    assert model.n_members == 10
    scores = pv.importance_means(model, data["x_train"])
    assert scores.shape == (12,)
    assert np.all(scores >= 0)
    pred = model.predict_mean(data["x_test"])
    assert pred.shape == (150,)
    # round trip through the document format preserves predictions exactly
    clone = pv.model_from_json(model.to_json())
    np.testing.assert_array_equal(clone.predict_mean(data["x_test"]), pred)


def test_errors_surface_as_python_exceptions():
    fmap = pv.random_fourier_map(2, 8, lengthscale=1.0)
    with pytest.raises(ValueError):
        fmap.evaluate(np.zeros(3))
    with pytest.raises(ValueError):
        pv.PosteriorAccumulator(3, 0.0)
