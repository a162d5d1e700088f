import numpy as np
import pytest

from hubnet import harness, penreg
from hubnet.errors import AllWeightsInfinite, InvalidSpec, MissingGroundTruth
from hubnet.harness import NOT_SCREENED
from hubnet.penreg import FitPath, PenalizedFit, PenaltySpec
from hubnet.simgen import HubGraphSpec, ScenarioSpec, SimData, gen_hub_graph, gen_scenario


def fit_with_support(p, support):
    beta = np.zeros(p)
    beta[list(support)] = 1.0
    return PenalizedFit(0.0, beta, "gaussian", PenaltySpec())


@pytest.fixture(scope="module")
def small_data():
    return gen_scenario(ScenarioSpec("A", n=50, p=40, s=4, seed=1))


def test_evaluate_perfect_and_empty(small_data):
    row = harness.evaluate(fit_with_support(40, range(4)), small_data)
    assert (row.fp, row.fn, row.n_features) == (0.0, 0.0, 4.0)
    row = harness.evaluate(fit_with_support(40, []), small_data)
    assert (row.fp, row.fn, row.n_features) == (0.0, 1.0, 0.0)


def test_evaluate_rates(small_data):
    row = harness.evaluate(fit_with_support(40, [0, 1, 10, 11, 12]), small_data)
    assert row.fp == pytest.approx(3 / 5)
    assert row.fn == pytest.approx(2 / 4)


def test_evaluate_needs_truth(small_data):
    bare = SimData(small_data.X_train, small_data.y_train, small_data.X_test, small_data.y_test,
                   np.array([], dtype=int), np.array([], dtype=int))
    with pytest.raises(MissingGroundTruth):
        harness.evaluate(fit_with_support(40, [0]), bare)


def test_binomial_test_error_is_misclassification():
    X = np.array([[1.0], [-1.0], [2.0], [-2.0]])
    f = PenalizedFit(0.0, np.array([1.0]), "binomial", PenaltySpec())
    assert harness.prediction_error(f, X, np.array([1.0, 0.0, 0.0, 0.0])) == 0.25


def test_run_hubnet_artifacts(small_data):
    res = harness.run_hubnet(small_data)
    assert res.fit is res.cv.chosen_fit
    assert res.selection.chosen_theta == res.edge_fit.theta
    np.testing.assert_array_equal(np.isinf(res.weights.w), res.edge_fit.row_abs_sums == 0)
    assert np.all(res.fit.beta[res.weights.excluded] == 0.0)
    assert res.predict(small_data.X_train).shape == (50,)


def test_run_hubnet_all_weights_infinite(small_data):
    with pytest.raises(AllWeightsInfinite):
        harness.run_hubnet(small_data.X_train, small_data.y_train, theta_grid=[1e9])


def test_compare_single_replicate():
    spec = ScenarioSpec("A", n=40, p=30, s=3)
    table = harness.compare(spec, ["lasso", "hubnet", "elasticnet", "adaptive_lasso"], reps=1, seed=4, cv_k=5)
    assert [r.method for r in table] == ["adaptive_lasso", "elasticnet", "hubnet", "lasso"]
    for r in table:
        assert r.cvm_se == 0.0 and r.test_error_se == 0.0
        assert 0 <= r.fp <= 1 and 0 <= r.fn <= 1 and r.n_features <= 30
    again = harness.compare(spec, ["hubnet", "lasso", "elasticnet", "adaptive_lasso"], reps=1, seed=4, cv_k=5)
    assert [r.as_csv_fields() for r in table] == [r.as_csv_fields() for r in again]


def test_compare_reports_spread():
    table = harness.compare(ScenarioSpec("D", n=40, p=30, s=3), ["lasso"], reps=3, seed=1, cv_k=5)
    assert table[0].test_error_se > 0


def test_compare_rejects_bad_input():
    with pytest.raises(InvalidSpec):
        harness.compare(ScenarioSpec("A", n=40, p=30, s=3), ["ridge"], reps=1)
    with pytest.raises(InvalidSpec):
        harness.compare(ScenarioSpec("A", n=40, p=30, s=3), ["lasso"], reps=0)


def test_fp_fn_path_endpoints(small_data):
    path = penreg.lambda_path(small_data.X_train, small_data.y_train, PenaltySpec(), ratio=1e-4)
    curve = harness.fp_fn_path(path, small_data)
    assert len(curve.lambdas) == len(curve.fp_path) == len(curve.fn_path)
    assert curve.fp_path[0] == 0.0 and curve.fn_path[0] == 1.0
    assert curve.fn_path[-1] == 0.0


def test_screening_fp():
    truth = SimData(np.zeros((2, 6)), np.zeros(2), np.zeros((2, 6)), np.zeros(2), np.array([0, 1]), np.array([0, 1]))
    exact = FitPath(np.array([3.0, 2.0, 1.0]), [fit_with_support(6, s) for s in ([], [0], [0, 1])])
    assert harness.screening_fp(exact, truth) == 0
    loose = FitPath(np.array([3.0, 2.0]), [fit_with_support(6, s) for s in ([0, 4], [0, 1, 4, 5])])
    assert harness.screening_fp(loose, truth) == 2
    never = FitPath(np.array([3.0]), [fit_with_support(6, [0, 3])])
    assert harness.screening_fp(never, truth) is NOT_SCREENED
    summary = harness.summarize_screening([0, 2, NOT_SCREENED])
    assert summary["median"] == 1.0 and summary["not_screened"] == 1


def test_hub_ranks_pessimistic_ties():
    s = np.array([5.0, 3.0, 3.0, 1.0])
    assert harness.hub_ranks(s, [0]).tolist() == [1]
    assert harness.hub_ranks(s, [1]).tolist() == [3]


def test_hub_recovery_curve():
    d = gen_hub_graph(HubGraphSpec("S1", n=60, p=30, s=2, seed=3))
    from hubnet import edgeout

    tmax = edgeout.theta_max(d.X_train, 0.5)
    curve = harness.hub_recovery(d.X_train, d.hub_set, 0.5, theta_grid=[2 * tmax, tmax, 0.3 * tmax, 0.05 * tmax])
    assert curve.correct_hubs[0] == 0 and curve.correct_hubs[1] == 0
    assert np.all(curve.correct_hubs <= 2)
    full = curve.correct_hubs == 2
    assert np.all(curve.max_hub_rank[full] >= 2)
    everything = harness.hub_recovery(d.X_train, np.arange(30), 0.5, theta_grid=[0.05 * tmax])
    assert everything.max_hub_rank[0] == 30


def test_derive_seed_is_stable():
    assert harness.derive_seed(7, 3, 0) == harness.derive_seed(7, 3, 0)
    assert harness.derive_seed(7, 3, 0) != harness.derive_seed(7, 4, 0)
    assert 0 <= harness.derive_seed(2**40, 1) < 2**63


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("HUBNET_THREADS", "1")
    assert harness.max_workers() == 1
    monkeypatch.setenv("HUBNET_THREADS", "junk")
    assert harness.max_workers() >= 1


def test_fig2_failure_visible_in_cv():
    worse = 0
    for seed in range(20):
        d = gen_scenario(ScenarioSpec.figure("Fig2", seed=seed))
        foldid = penreg.fold_ids(60, 10, seed)
        hub = harness.run_hubnet(d.X_train, d.y_train, foldid=foldid).cv
        lasso = penreg.cv(d.X_train, d.y_train, PenaltySpec(), foldid=foldid)
        worse += hub.cvm_min > lasso.cvm_min
    assert worse > 10


def test_fig1_screening_favors_hubnet():
    hub, lasso = [], []
    for seed in range(20):
        d = gen_scenario(ScenarioSpec.figure("Fig1", seed=seed))
        # run the paths far enough that both methods eventually screen
        for store, method in ((hub, "hubnet"), (lasso, "lasso")):
            path = harness.method_path(method, d.X_train, d.y_train, ratio=1e-4)
            store.append(harness.screening_fp(path, d))
    h = harness.summarize_screening(hub)
    l = harness.summarize_screening(lasso)
    assert h["screened"] >= l["screened"] > 0
    assert h["median"] <= l["median"]


def test_hubnet_paths_fn_monotone():
    steps = good = 0
    for seed in range(20):
        d = gen_scenario(ScenarioSpec("A", n=100, p=200, s=10, seed=seed))
        curve = harness.fp_fn_path(harness.method_path("hubnet", d.X_train, d.y_train), d)
        diffs = np.diff(curve.fn_path)
        steps += diffs.size
        good += np.count_nonzero(diffs <= 0)
    assert good >= 0.9 * steps


def test_scenario_a_hubnet_keeps_all_true_features(scenario_runs):
    _, reps = scenario_runs("A")
    methods = sorted(["hubnet", "lasso"])
    k = methods.index("hubnet")
    perfect = sum(rows[k].fn == 0.0 for rows in reps)
    assert perfect >= 18, f"fn = 0 in {perfect}/20 replicates"


def test_scenario_a_hub_weights_lower_cv_error(scenario_runs):
    _, reps = scenario_runs("A")
    wins = sum(rows[0].cvm < rows[1].cvm for rows in reps)  # rows sorted: hubnet, lasso
    assert wins >= 16, f"hubnet cvm below lasso in {wins}/20 replicates"
