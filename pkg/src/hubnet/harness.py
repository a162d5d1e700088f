"""End-to-end hubNet pipeline, baseline runners and evaluation metrics.

Four methods are compared on identical data and identical CV folds:

``lasso``           plain l1, unit penalty factors
``elasticnet``      alpha = 1/2, unit penalty factors
``adaptive_lasso``  l1 with inverse absolute univariate slopes as factors
``hubnet``          l1 with inverse edge-out row sums as factors, where the
                    edge-out fit uses gamma = 1/2 and GCV-selected theta

Replicates are independent given their derived seeds and may be farmed out to
worker processes (``HUBNET_THREADS`` caps the pool).  Output order never
depends on scheduling.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import edgeout, penreg
from .errors import AllWeightsInfinite, InvalidSpec, MissingGroundTruth
from .numcore import StandardizeReport, standardize
from .simgen import ScenarioSpec, SimData, gen_scenario

METHODS = ("adaptive_lasso", "elasticnet", "hubnet", "lasso")
HUBNET_GAMMA = 0.5
ELASTICNET_ALPHA = 0.5
NOT_SCREENED = None


def check_methods(methods) -> list:
    out = []
    for m in methods:
        m = m.strip().lower().replace("-", "_")
        if m not in METHODS:
            raise InvalidSpec(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        out.append(m)
    return sorted(set(out))


def max_workers() -> int:
    env = os.environ.get("HUBNET_THREADS")
    cpus = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cpus))
        except ValueError:
            pass
    return cpus


def _map(fn, items):
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 63-bit seed for the sub-task ``keys`` of a run."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class HubNetResult:
    fit: penreg.PenalizedFit
    weights: edgeout.HubWeights
    edge_fit: edgeout.EdgeOutFit
    cv: penreg.CvReport
    selection: edgeout.ThetaSelection
    scaling: StandardizeReport

    def predict(self, X_raw):
        """Predictions for unstandardized rows."""
        return self.fit.predict(self.scaling.apply(X_raw))


def run_hubnet(
    X,
    y=None,
    family: str = "gaussian",
    cv_k: int = 10,
    seed: int = 0,
    foldid=None,
    theta_grid=None,
    df_form: str = "plain",
) -> HubNetResult:
    """Standardize, fit edge-out at the GCV theta, weight, cross-validate.

    ``X`` may also be a :class:`SimData`, in which case its training arrays
    are used and ``y`` is ignored.
    """
    if isinstance(X, SimData):
        X, y = X.X_train, X.y_train
    Z, scaling = standardize(X)
    sel = edgeout.select_theta(Z, HUBNET_GAMMA, "gcv", grid=theta_grid, df_form=df_form)
    weights = edgeout.hub_weights(sel.fit)
    if np.all(weights.excluded):
        raise AllWeightsInfinite(
            f"edge-out returned B = 0 at theta = {sel.chosen_theta:.4g}; no feature is usable"
        )
    report = penreg.cv(Z, y, penreg.PenaltySpec(alpha=1.0, weights=weights.w), family, K=cv_k, seed=seed, foldid=foldid)
    return HubNetResult(report.chosen_fit, weights, sel.fit, report, sel, scaling)


def method_penalty(method: str, X, y) -> penreg.PenaltySpec:
    """Penalty for a non-hubnet method on standardized ``X``."""
    if method == "lasso":
        return penreg.PenaltySpec(alpha=1.0)
    if method == "elasticnet":
        return penreg.PenaltySpec(alpha=ELASTICNET_ALPHA)
    if method == "adaptive_lasso":
        return penreg.PenaltySpec(alpha=1.0, weights=penreg.univariate_weights(X, y))
    raise InvalidSpec(f"unknown method {method!r}")


def run_method(method: str, X, y, family: str = "gaussian", cv_k: int = 10, seed: int = 0, foldid=None) -> penreg.CvReport:
    """Cross-validated fit for one method on already standardized ``X``."""
    if method == "hubnet":
        return run_hubnet(X, y, family, cv_k, seed, foldid).cv
    spec = method_penalty(method, X, y)
    return penreg.cv(X, y, spec, family, K=cv_k, seed=seed, foldid=foldid)


def method_path(
    method: str, X, y, family: str = "gaussian", n_lambda: int = 100, ratio: float = 0.01
) -> penreg.FitPath:
    if method == "hubnet":
        sel = edgeout.select_theta(X, HUBNET_GAMMA, "gcv")
        w = edgeout.hub_weights(sel.fit)
        if np.all(w.excluded):
            raise AllWeightsInfinite("edge-out returned B = 0")
        spec = penreg.PenaltySpec(alpha=1.0, weights=w.w)
    else:
        spec = method_penalty(method, X, y)
    return penreg.lambda_path(X, y, spec, family, n_lambda=n_lambda, ratio=ratio)


# ---------------------------------------------------------------------------
# metrics


@dataclass
class MetricsRow:
    method: str
    cvm: float
    cvm_se: float
    fn: float
    fp: float
    n_features: float
    test_error: float
    test_error_se: float

    def as_csv_fields(self) -> list:
        return [
            self.method,
            _fmt(self.cvm),
            _fmt(self.cvm_se),
            _fmt(self.fn),
            _fmt(self.fp),
            _fmt(self.n_features),
            _fmt(self.test_error),
            _fmt(self.test_error_se),
        ]


CSV_HEADER = ["method", "cvm", "cvm_se", "fn", "fp", "features", "test_error", "test_error_se"]


def _fmt(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.6f}"


def support_rates(selected, truth) -> tuple[float, float]:
    """(fp, fn): false share of the selection, missed share of the truth.

    An empty selection has fp = 0.
    """
    sel = set(int(i) for i in selected)
    true = set(int(i) for i in truth)
    if not true:
        raise MissingGroundTruth("true support is empty")
    fp = len(sel - true) / max(len(sel), 1)
    fn = len(true - sel) / len(true)
    return fp, fn


def prediction_error(fit_: penreg.PenalizedFit, X, y) -> float:
    if fit_.family == "binomial":
        return float(np.mean((fit_.predict(X) >= 0.5) != (y == 1.0)))
    return float(np.mean((y - fit_.predict(X)) ** 2))


def evaluate(fit_: penreg.PenalizedFit, data: SimData, method: str = "", cv: penreg.CvReport | None = None) -> MetricsRow:
    if data.true_support is None or len(data.true_support) == 0:
        raise MissingGroundTruth("data carries no true support")
    fp, fn = support_rates(fit_.support, data.true_support)
    te = prediction_error(fit_, data.X_test, data.y_test) if data.y_test.size else float("nan")
    cvm = cv.cvm_min if cv is not None else float("nan")
    return MetricsRow(method, cvm, 0.0, fn, fp, float(fit_.nonzero_count), te, 0.0)


def _replicate(args):
    spec, methods, rep, seed, cv_k = args
    data = gen_scenario(replace(spec, seed=derive_seed(seed, rep, 0)))
    fold_seed = derive_seed(seed, rep, 1)
    foldid = penreg.fold_ids(data.X_train.shape[0], cv_k, fold_seed)
    family = spec.family
    rows = []
    for m in methods:
        report = run_method(m, data.X_train, data.y_train, family, cv_k, foldid=foldid)
        rows.append(evaluate(report.chosen_fit, data, m, report))
    return rows


def compare(spec: ScenarioSpec, methods=METHODS, reps: int = 20, seed: int = 0, cv_k: int = 10, per_rep: bool = False):
    """Average metrics over ``reps`` fresh replicates of ``spec``.

    Each replicate draws its own data from ``(seed, rep)``; every method sees
    the same data and the same folds.  The ``*_se`` columns are standard
    deviations across replicates (0 for a single replicate).
    """
    if reps < 1:
        raise InvalidSpec("reps must be >= 1")
    methods = check_methods(methods)
    results = _map(_replicate, [(spec, methods, r, seed, cv_k) for r in range(reps)])
    table = []
    for k, m in enumerate(methods):
        rows = [res[k] for res in results]
        table.append(_aggregate(m, rows))
    if per_rep:
        return table, results
    return table


def _aggregate(method, rows) -> MetricsRow:
    def mean(attr):
        return float(np.mean([getattr(r, attr) for r in rows]))

    def sd(attr):
        if len(rows) < 2:
            return 0.0
        return float(np.std([getattr(r, attr) for r in rows], ddof=1))

    return MetricsRow(
        method=method,
        cvm=mean("cvm"),
        cvm_se=sd("cvm"),
        fn=mean("fn"),
        fp=mean("fp"),
        n_features=mean("n_features"),
        test_error=mean("test_error"),
        test_error_se=sd("test_error"),
    )


# ---------------------------------------------------------------------------
# paths and screening


@dataclass
class PathCurve:
    lambdas: np.ndarray
    fp_path: np.ndarray
    fn_path: np.ndarray
    nonzero: np.ndarray = field(default=None)

    def rows(self):
        for lam, nz, fp, fn in zip(self.lambdas, self.nonzero, self.fp_path, self.fn_path):
            yield [f"{lam:.10g}", str(int(nz)), _fmt(fp), _fmt(fn)]


def fp_fn_path(path: penreg.FitPath, data: SimData) -> PathCurve:
    if data.true_support is None or len(data.true_support) == 0:
        raise MissingGroundTruth("data carries no true support")
    fps, fns = [], []
    for f in path.fits:
        fp, fn = support_rates(f.support, data.true_support)
        fps.append(fp)
        fns.append(fn)
    return PathCurve(np.asarray(path.lambdas), np.array(fps), np.array(fns), path.nonzero_counts)


def screening_fp(path: penreg.FitPath, data: SimData):
    """False positives in the sparsest model containing every true feature.

    Returns ``NOT_SCREENED`` (``None``) when no model on the path screens.
    """
    if data.true_support is None or len(data.true_support) == 0:
        raise MissingGroundTruth("data carries no true support")
    truth = set(int(i) for i in data.true_support)
    for f in path.fits:
        sel = set(int(i) for i in f.support)
        if truth <= sel:
            return len(sel - truth)
    return NOT_SCREENED


def summarize_screening(values) -> dict:
    """Median and mean over screened replicates plus the excluded count."""
    ok = [v for v in values if v is not NOT_SCREENED]
    return {
        "median": float(np.median(ok)) if ok else float("nan"),
        "mean": float(np.mean(ok)) if ok else float("nan"),
        "screened": len(ok),
        "not_screened": len(values) - len(ok),
    }


# ---------------------------------------------------------------------------
# hub recovery


@dataclass
class RecoveryCurve:
    grid: np.ndarray
    correct_hubs: np.ndarray
    max_hub_rank: np.ndarray
    nonzero_rows: np.ndarray

    def exact_recovery(self, s: int) -> np.ndarray:
        """Grid points whose nonzero rows are exactly the hub set."""
        return (self.correct_hubs == s) & (self.nonzero_rows == s)


def hub_ranks(row_sums: np.ndarray, hubs) -> np.ndarray:
    """Rank of each hub in decreasing row-sum order, ties counted against it."""
    s = np.asarray(row_sums)
    return np.array([int(np.count_nonzero(s >= s[h])) for h in hubs])


def hub_recovery(X, hub_set, gamma: float = 0.5, theta_grid=None, tol: float = edgeout.DEFAULT_TOL) -> RecoveryCurve:
    """Hub detection counts and worst hub rank along a theta grid.

    Fits run from large to small theta with warm starts.
    """
    hubs = np.asarray(hub_set, dtype=np.int64)
    if hubs.size == 0:
        raise MissingGroundTruth("hub set is empty")
    if theta_grid is None:
        theta_grid = edgeout.default_grid(X, gamma)
    grid = np.asarray(theta_grid, dtype=np.float64)
    order = np.argsort(-grid, kind="stable")
    correct = np.zeros(grid.size, dtype=np.int64)
    worst = np.zeros(grid.size, dtype=np.int64)
    rows = np.zeros(grid.size, dtype=np.int64)
    B = None
    for idx in order:
        f = edgeout.fit(X, edgeout.EdgeOutConfig(float(grid[idx]), gamma, tol=tol), B_init=B)
        B = f.B
        l2 = f.row_l2
        correct[idx] = int(np.count_nonzero(l2[hubs] > 0))
        rows[idx] = int(np.count_nonzero(l2 > 0))
        worst[idx] = int(hub_ranks(f.row_abs_sums, hubs).max())
    return RecoveryCurve(grid, correct, worst, rows)


def _recovery_rep(args):
    spec, rep, seed, gamma = args
    from .simgen import gen_hub_graph

    data = gen_hub_graph(replace(spec, seed=derive_seed(seed, rep, 0)))
    return hub_recovery(data.X_train, data.hub_set, gamma)


def recovery_table(spec, reps: int = 50, seed: int = 0, gamma: float = 0.5) -> list:
    """One :class:`RecoveryCurve` per replicate of a hub-graph setting."""
    if reps < 1:
        raise InvalidSpec("reps must be >= 1")
    return _map(_recovery_rep, [(spec, r, seed, gamma) for r in range(reps)])


def scenario_path(spec: ScenarioSpec, method: str, n_lambda: int = 100) -> PathCurve:
    """FP/FN along the regularization path of one method on one draw."""
    (method,) = check_methods([method])
    data = gen_scenario(spec)
    path = method_path(method, data.X_train, data.y_train, spec.family, n_lambda=n_lambda)
    return fp_fn_path(path, data)
