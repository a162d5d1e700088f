import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import enet_bruteforce, enet_objective
from hubnet import penreg
from hubnet.errors import AllWeightsInfinite, DimensionMismatch, InvalidParameter, NonBinaryResponse
from hubnet.numcore import standardize
from hubnet.penreg import PenaltySpec


def problem(rng, n=40, p=6, sparse=3):
    X, _ = standardize(rng.normal(size=(n, p)))
    beta = np.zeros(p)
    beta[:sparse] = rng.normal(0, 2, size=sparse)
    y = 1.5 + X @ beta + rng.normal(size=n)
    return X, y


def test_full_shrinkage_at_lambda_max(rng):
    X, y = problem(rng)
    lmax = np.max(np.abs(X.T @ (y - y.mean()))) / X.shape[0]
    f = penreg.wfit(X, y, PenaltySpec(lam=lmax))
    assert np.all(f.beta == 0.0)
    assert f.beta0 == pytest.approx(y.mean(), abs=1e-12)
    assert penreg.lambda_max(X, y, PenaltySpec()) == pytest.approx(lmax, rel=1e-14)


@pytest.mark.parametrize("alpha", [1.0, 0.5, 0.0])
def test_single_feature_closed_form(rng, alpha):
    X, _ = standardize(rng.normal(size=(30, 1)))
    y = 0.8 * X[:, 0] + rng.normal(size=30)
    lam, w = 0.1, 1.7
    f = penreg.wfit(X, y, PenaltySpec(lam=lam, alpha=alpha, weights=[w]))
    x = X[:, 0]
    z = x @ (y - y.mean()) / 30
    expected = np.sign(z) * max(abs(z) - lam * alpha * w, 0) / (x @ x / 30 + 2 * lam * (1 - alpha) * w)
    assert f.beta[0] == pytest.approx(expected, abs=1e-10)


def test_infinite_weight_never_enters(rng):
    X, y = problem(rng)
    w = np.ones(6)
    w[0] = np.inf
    path = penreg.lambda_path(X, y, PenaltySpec(weights=w), n_lambda=30, ratio=1e-4)
    assert all(f.beta[0] == 0.0 for f in path.fits)


def test_all_infinite_weights(rng):
    X, y = problem(rng)
    with pytest.raises(AllWeightsInfinite):
        penreg.lambda_path(X, y, PenaltySpec(weights=np.full(6, np.inf)))


def test_penalty_spec_validation():
    with pytest.raises(InvalidParameter):
        PenaltySpec(lam=-1.0)
    with pytest.raises(InvalidParameter):
        PenaltySpec(alpha=1.5)
    with pytest.raises(InvalidParameter):
        PenaltySpec(weights=[1.0, 0.0])


def test_dimension_and_response_checks(rng):
    X, y = problem(rng)
    with pytest.raises(DimensionMismatch):
        penreg.wfit(X, y[:-1], PenaltySpec(lam=0.1))
    with pytest.raises(NonBinaryResponse):
        penreg.wfit(X, y, PenaltySpec(lam=0.1), "binomial")


def test_path_starts_empty_and_grows(rng):
    monotone = total = 0
    for seed in range(20):
        X, y = problem(np.random.default_rng(seed), n=50, p=20, sparse=5)
        path = penreg.lambda_path(X, y, PenaltySpec())
        nz = path.nonzero_counts
        assert nz[0] == 0
        assert np.all(np.diff(path.lambdas) < 0)
        monotone += np.sum(np.diff(nz) >= 0)
        total += nz.size - 1
    assert monotone >= 0.9 * total


def test_halving_weights_halves_lambda_max(rng):
    X, y = problem(rng)
    w = rng.uniform(0.5, 2.0, size=6)
    a = penreg.lambda_max(X, y, PenaltySpec(weights=w))
    b = penreg.lambda_max(X, y, PenaltySpec(weights=w / 2))
    assert b == pytest.approx(2 * a, rel=1e-14)


def test_weight_scale_equivalence(rng):
    X, y = problem(rng)
    w = rng.uniform(0.5, 2.0, size=6)
    f1 = penreg.wfit(X, y, PenaltySpec(lam=0.05, weights=w))
    f2 = penreg.wfit(X, y, PenaltySpec(lam=0.05 / 3.0, weights=3.0 * w))
    np.testing.assert_allclose(f1.beta, f2.beta, atol=1e-8)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 10**6),
    lam_frac=st.floats(0.01, 0.95),
    alpha=st.sampled_from([1.0, 0.7, 0.3]),
)
def test_three_feature_bruteforce(seed, lam_frac, alpha):
    rng = np.random.default_rng(seed)
    X, y = problem(rng, n=25, p=3, sparse=2)
    w = rng.uniform(0.3, 3.0, size=3)
    if rng.random() < 0.3:
        w[rng.integers(3)] = np.inf
    lam = lam_frac * penreg.lambda_max(X, y, PenaltySpec(alpha=alpha, weights=w))
    f = penreg.wfit(X, y, PenaltySpec(lam=lam, alpha=alpha, weights=w))
    b0, beta = enet_bruteforce(X, y, lam, alpha, w)
    np.testing.assert_allclose(f.beta, beta, atol=1e-4)
    assert f.beta0 == pytest.approx(b0, abs=1e-4)
    assert np.all(f.beta[np.isinf(w)] == 0.0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), lam_frac=st.floats(0.001, 0.9))
def test_kkt_certificate(seed, lam_frac):
    rng = np.random.default_rng(seed)
    X, y = problem(rng, n=30, p=50, sparse=4)
    w = rng.uniform(0.2, 4.0, size=50)
    spec = PenaltySpec(weights=w)
    lam = lam_frac * penreg.lambda_max(X, y, spec)
    f = penreg.wfit(X, y, spec.with_lambda(lam))
    assert np.max(penreg.kkt_residuals(X, y, f)) <= 1e-6


def test_cd_matches_objective_minimum(rng):
    X, y = problem(rng, n=30, p=4)
    w = np.array([1.0, 2.0, 0.5, 1.0])
    f = penreg.wfit(X, y, PenaltySpec(lam=0.1, alpha=0.6, weights=w))
    base = enet_objective(X, y, f.beta0, f.beta, 0.1, 0.6, w)
    for _ in range(200):
        d = rng.normal(scale=1e-4, size=4)
        assert base <= enet_objective(X, y, f.beta0, f.beta + d, 0.1, 0.6, w) + 1e-14


def test_binomial_fit_and_kkt(rng):
    X, _ = standardize(rng.normal(size=(200, 5)))
    eta = 0.3 + X @ np.array([1.5, -1.0, 0, 0, 0])
    y = (rng.random(200) < 1 / (1 + np.exp(-eta))).astype(float)
    f = penreg.wfit(X, y, PenaltySpec(lam=0.02), "binomial")
    assert np.max(penreg.kkt_residuals(X, y, f)) <= 1e-6
    assert set(np.flatnonzero(f.beta)) >= {0, 1}
    true_fit = penreg.PenalizedFit(0.3, np.array([1.5, -1.0, 0, 0, 0]), "binomial", PenaltySpec())
    null_fit = penreg.PenalizedFit(penreg._null_intercept(y, "binomial"), np.zeros(5), "binomial", PenaltySpec())
    assert penreg.prediction_loss(true_fit, X, y) <= penreg.prediction_loss(null_fit, X, y)


def test_cv_report_invariants(rng):
    X, y = problem(rng, n=60, p=15)
    rep = penreg.cv(X, y, PenaltySpec(), K=5, seed=3)
    assert rep.cvm[rep.index_min] == rep.cvm.min()
    assert np.all(rep.cvsd >= 0)
    np.testing.assert_array_equal(rep.foldid, penreg.fold_ids(60, 5, 3))
    d = json.loads(rep.to_json())
    assert d["lambda_min"] == rep.lambda_min


def test_cv_leave_one_out():
    rng = np.random.default_rng(2)
    X, y = problem(rng, n=20, p=3)
    rep = penreg.cv(X, y, PenaltySpec(), K=20, n_lambda=20)
    assert np.all(np.isfinite(rep.cvm))


def test_cv_null_response_is_sparse():
    sparse = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        X, _ = standardize(rng.normal(size=(60, 30)))
        y = rng.normal(size=60)
        rep = penreg.cv(X, y, PenaltySpec(), K=10, seed=seed)
        sparse += rep.chosen_fit.nonzero_count <= 5
    assert sparse >= 16


def test_fold_ids_balanced():
    f = penreg.fold_ids(103, 10, 1)
    counts = np.bincount(f)
    assert counts.max() - counts.min() <= 1
    with pytest.raises(InvalidParameter):
        penreg.fold_ids(5, 6, 0)


def test_univariate_weights(rng):
    Q, _ = np.linalg.qr(rng.normal(size=(40, 4)))
    X = Q * np.sqrt(40)
    y = X @ np.array([1.0, -2.0, 0.5, 3.0]) + rng.normal(size=40)
    ols = np.linalg.lstsq(X, y, rcond=None)[0]
    np.testing.assert_allclose(penreg.univariate_weights(X, y), 1 / np.abs(ols), rtol=1e-10)
    np.testing.assert_allclose(penreg.univariate_weights(X, 2 * y), 0.5 / np.abs(ols), rtol=1e-10)


def test_univariate_weight_orthogonal_feature():
    X = np.array([[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]])
    y = np.array([1.0, -1.0, 1.0, -1.0])
    w = penreg.univariate_weights(X, y)
    assert w[0] == 1.0 and np.isinf(w[1])
