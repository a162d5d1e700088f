"""Weighted l1 / elastic-net regression with per-feature penalty factors.

Gaussian objective::

    1/(2n) ||y - b0 - X b||^2 + lam * sum_j w_j (alpha |b_j| + (1 - alpha) b_j^2)

The ridge part is *not* halved.  Penalty factors ``w_j`` scale both parts;
``w_j = inf`` removes feature ``j`` (its coefficient is pinned at 0).  The
binomial family swaps the squared loss for the mean negative log-likelihood
and is solved by iteratively reweighted least squares with the same inner
coordinate-descent kernel.  The intercept is never penalized.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from . import _kernels
from .errors import (
    AllWeightsInfinite,
    DimensionMismatch,
    InvalidParameter,
    NoConvergence,
    NonBinaryResponse,
)
from .numcore import as_matrix, as_vector, make_rng

Family = Literal["gaussian", "binomial"]

CD_TOL = 1e-16
# CD stops here and hands over to the active-set solve
POLISH_TOL = 1e-10
FOLD_TOL = 1e-10
CD_MAX_SWEEPS = 100_000
IRLS_MAX_ITER = 25
IRLS_TOL = 1e-8
PROB_CLAMP = 1e-5
# stand-in for alpha when computing lambda_max of a pure ridge path
MIN_ALPHA_FOR_PATH = 1e-3


@dataclass(frozen=True)
class PenaltySpec:
    lam: float = 0.0
    alpha: float = 1.0
    weights: np.ndarray | None = None

    def __post_init__(self):
        if not self.lam >= 0:
            raise InvalidParameter(f"lambda must be >= 0, got {self.lam}")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidParameter(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
            if np.any(np.isnan(w)) or np.any(w <= 0):
                raise InvalidParameter("penalty factors must be positive or inf")
            object.__setattr__(self, "weights", w)

    def resolved_weights(self, p: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(p)
        if self.weights.shape[0] != p:
            raise DimensionMismatch(f"{self.weights.shape[0]} penalty factors for {p} features")
        return self.weights

    def with_lambda(self, lam: float) -> "PenaltySpec":
        return replace(self, lam=float(lam))

    def to_dict(self) -> dict:
        w = None if self.weights is None else [None if np.isinf(v) else float(v) for v in self.weights]
        return {"lambda": self.lam, "alpha": self.alpha, "weights": w}


@dataclass
class PenalizedFit:
    beta0: float
    beta: np.ndarray
    family: str
    spec: PenaltySpec
    sweeps: int = 0
    converged: bool = True

    @property
    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.beta))

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.beta)

    def linear_predictor(self, X) -> np.ndarray:
        return self.beta0 + np.asarray(X, dtype=np.float64) @ self.beta

    def predict(self, X) -> np.ndarray:
        """Mean response: fitted values or success probabilities."""
        eta = self.linear_predictor(X)
        if self.family == "binomial":
            return _sigmoid(eta)
        return eta

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "beta0": self.beta0,
            "beta": self.beta.tolist(),
            "nonzero_count": self.nonzero_count,
            "penalty": self.spec.to_dict(),
        }


@dataclass
class FitPath:
    lambdas: np.ndarray
    fits: list

    @property
    def nonzero_counts(self) -> np.ndarray:
        return np.array([f.nonzero_count for f in self.fits])

    def coef_matrix(self) -> np.ndarray:
        return np.vstack([f.beta for f in self.fits])


@dataclass
class CvReport:
    lambdas: np.ndarray
    cvm: np.ndarray
    cvsd: np.ndarray
    lambda_min: float
    chosen_fit: PenalizedFit
    foldid: np.ndarray = field(repr=False, default=None)
    path: FitPath | None = field(repr=False, default=None)

    @property
    def index_min(self) -> int:
        return int(np.flatnonzero(self.lambdas == self.lambda_min)[0])

    @property
    def cvm_min(self) -> float:
        return float(self.cvm[self.index_min])

    def to_dict(self) -> dict:
        return {
            "lambdas": self.lambdas.tolist(),
            "cvm": self.cvm.tolist(),
            "cvsd": self.cvsd.tolist(),
            "lambda_min": self.lambda_min,
            "chosen_fit": self.chosen_fit.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _sigmoid(eta):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(eta)))


def _check_xy(X, y, family: str):
    X = as_matrix(X)
    y = as_vector(y)
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatch(f"y has {y.shape[0]} entries, X has {X.shape[0]} rows")
    if family == "binomial":
        if not np.all((y == 0.0) | (y == 1.0)):
            raise NonBinaryResponse("binomial response must be coded 0/1")
    elif family != "gaussian":
        raise InvalidParameter(f"unknown family {family!r}")
    return X, y


def _penalty_vectors(spec: PenaltySpec, p: int):
    w = spec.resolved_weights(p)
    excluded = np.isinf(w)
    wf = np.where(excluded, 0.0, w)
    l1 = spec.lam * spec.alpha * wf
    l2 = spec.lam * (1.0 - spec.alpha) * wf
    return l1, l2, excluded


def objective(X, y, beta0: float, beta, spec: PenaltySpec, family: Family = "gaussian") -> float:
    """Penalized objective; excluded features contribute nothing (beta is 0 there)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    l1, l2, _ = _penalty_vectors(spec, X.shape[1])
    eta = beta0 + X @ beta
    if family == "gaussian":
        loss = 0.5 * np.mean((y - eta) ** 2)
    else:
        loss = np.mean(np.logaddexp(0.0, eta) - y * eta)
    return float(loss + np.sum(l1 * np.abs(beta)) + np.sum(l2 * beta * beta))


def _polish(X, y, beta, l1, l2, excluded):
    """Solve the stationarity equations on the current active set.

    With the active set and signs taken from a loosely converged CD iterate,
    the Gaussian problem is a linear system.  Returns ``(b0, beta)`` when the
    solution keeps every sign and leaves every inactive feature inside its
    threshold, otherwise ``None``.
    """
    n = X.shape[0]
    act = np.flatnonzero(beta)
    xbar = X.mean(axis=0)
    ybar = y.mean()
    if act.size >= n - 1:
        return None
    Xa = X[:, act] - xbar[act]
    yc = y - ybar
    s = np.sign(beta[act])
    H = Xa.T @ Xa / n + np.diag(2.0 * l2[act])
    rhs = Xa.T @ yc / n - l1[act] * s
    try:
        ba = np.linalg.solve(H, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(ba)) or np.any(np.sign(ba) != s):
        return None
    new = np.zeros_like(beta)
    new[act] = ba
    b0 = ybar - xbar @ new
    g = X.T @ (y - b0 - X @ new) / n
    free = np.ones(beta.shape[0], dtype=bool)
    free[act] = False
    free &= ~excluded
    if np.any(np.abs(g[free]) > l1[free] * (1.0 + 1e-9) + 1e-12):
        return None
    active_err = np.abs(g[act] - l1[act] * s - 2.0 * l2[act] * ba)
    if active_err.size and active_err.max() > 1e-9:
        return None
    return float(b0), new


def _gaussian_cd(X, y, spec, beta, beta0, tol, max_sweeps):
    n, p = X.shape
    l1, l2, excluded = _penalty_vectors(spec, p)
    beta[excluded] = 0.0
    obs_w = np.full(n, 1.0 / n)
    loose = max(tol, POLISH_TOL)
    b0, sweeps, ok = _kernels.weighted_enet_cd(X, y, obs_w, beta, float(beta0), l1, l2, excluded, loose, max_sweeps)
    if ok and loose > tol:
        polished = _polish(X, y, beta, l1, l2, excluded)
        if polished is not None:
            return polished[0], polished[1], sweeps
        b0, more, ok = _kernels.weighted_enet_cd(X, y, obs_w, beta, b0, l1, l2, excluded, tol, max_sweeps)
        sweeps += more
    if not ok:
        raise NoConvergence(f"coordinate descent did not converge in {max_sweeps} sweeps")
    return float(b0), beta, sweeps


def _binomial_irls(X, y, spec, beta, beta0, tol, max_sweeps):
    n, p = X.shape
    l1, l2, excluded = _penalty_vectors(spec, p)
    beta[excluded] = 0.0
    b0 = float(beta0)

    def deviance(b0, beta):
        eta = b0 + X @ beta
        return 2.0 * np.mean(np.logaddexp(0.0, eta) - y * eta)

    dev = deviance(b0, beta)
    total = 0
    for it in range(IRLS_MAX_ITER):
        eta = b0 + X @ beta
        mu = np.clip(_sigmoid(eta), PROB_CLAMP, 1.0 - PROB_CLAMP)
        v = mu * (1.0 - mu)
        z = eta + (y - mu) / v
        obs_w = v / n
        b0, sweeps, ok = _kernels.weighted_enet_cd(X, z, obs_w, beta, b0, l1, l2, excluded, tol, max_sweeps)
        total += sweeps
        if not ok:
            raise NoConvergence(f"inner coordinate descent did not converge in {max_sweeps} sweeps")
        new = deviance(b0, beta)
        if abs(new - dev) / (abs(new) + 0.1) < IRLS_TOL:
            return float(b0), beta, total
        dev = new
    return float(b0), beta, total


def wfit(
    X,
    y,
    spec: PenaltySpec,
    family: Family = "gaussian",
    *,
    beta_init=None,
    beta0_init: float | None = None,
    tol: float = CD_TOL,
    max_sweeps: int = CD_MAX_SWEEPS,
) -> PenalizedFit:
    """Fit the weighted elastic net at a single lambda.

    ``beta_init``/``beta0_init`` warm-start the solver; path and CV code pass
    the previous solution.
    """
    X, y = _check_xy(X, y, family)
    n, p = X.shape
    beta = np.zeros(p) if beta_init is None else np.array(beta_init, dtype=np.float64)
    if beta0_init is None:
        beta0_init = _null_intercept(y, family)
    if family == "gaussian":
        b0, beta, sweeps = _gaussian_cd(X, y, spec, beta, beta0_init, tol, max_sweeps)
    else:
        b0, beta, sweeps = _binomial_irls(X, y, spec, beta, beta0_init, tol, max_sweeps)
    return PenalizedFit(beta0=b0, beta=beta, family=family, spec=spec, sweeps=sweeps)


def _null_intercept(y, family):
    ybar = float(np.mean(y))
    if family == "binomial":
        ybar = min(max(ybar, PROB_CLAMP), 1.0 - PROB_CLAMP)
        return float(np.log(ybar / (1.0 - ybar)))
    return ybar


def lambda_max(X, y, spec: PenaltySpec, family: Family = "gaussian") -> float:
    """Smallest lambda at which every finite-weight coefficient is zero.

    At the intercept-only fit the score for feature j is
    ``|x_j^T (y - ybar)| / n`` for both families, so the threshold is the
    largest score divided by ``alpha * w_j``.
    """
    X, y = _check_xy(X, y, family)
    n, p = X.shape
    w = spec.resolved_weights(p)
    finite = ~np.isinf(w)
    if not np.any(finite):
        raise AllWeightsInfinite("every penalty factor is infinite")
    score = np.abs(X[:, finite].T @ (y - y.mean())) / n
    alpha = max(spec.alpha, MIN_ALPHA_FOR_PATH)
    return float(np.max(score / (alpha * w[finite])))


def lambda_grid(lmax: float, n_lambda: int = 100, ratio: float = 0.01) -> np.ndarray:
    if n_lambda < 1:
        raise InvalidParameter("n_lambda must be >= 1")
    if lmax <= 0:
        # y is constant or orthogonal to every usable feature
        return np.zeros(1)
    return np.geomspace(lmax, lmax * ratio, n_lambda)


def lambda_path(
    X,
    y,
    spec: PenaltySpec | None = None,
    family: Family = "gaussian",
    n_lambda: int = 100,
    ratio: float = 0.01,
    lambdas=None,
    tol: float = CD_TOL,
) -> FitPath:
    """Warm-started fits along a decreasing lambda grid.

    The grid starts at :func:`lambda_max` unless ``lambdas`` is given.
    """
    spec = PenaltySpec() if spec is None else spec
    X, y = _check_xy(X, y, family)
    if lambdas is None:
        lambdas = lambda_grid(lambda_max(X, y, spec, family), n_lambda, ratio)
    else:
        w = spec.resolved_weights(X.shape[1])
        if np.all(np.isinf(w)):
            raise AllWeightsInfinite("every penalty factor is infinite")
        lambdas = np.asarray(lambdas, dtype=np.float64)
    fits = []
    beta = None
    b0 = None
    for lam in lambdas:
        f = wfit(X, y, spec.with_lambda(lam), family, beta_init=beta, beta0_init=b0, tol=tol)
        fits.append(f)
        beta, b0 = f.beta, f.beta0
    return FitPath(lambdas=np.asarray(lambdas), fits=fits)


def fold_ids(n: int, K: int, seed: int) -> np.ndarray:
    """Balanced random fold labels 0..K-1; deterministic in ``seed``."""
    if not 2 <= K <= n:
        raise InvalidParameter(f"K must satisfy 2 <= K <= n = {n}, got {K}")
    rng = make_rng(seed, 0xC5)
    return rng.permutation(np.arange(n) % K)


def prediction_loss(fit_: PenalizedFit, X, y) -> float:
    """Mean squared error (gaussian) or mean deviance (binomial)."""
    eta = fit_.linear_predictor(X)
    if fit_.family == "gaussian":
        return float(np.mean((y - eta) ** 2))
    return float(2.0 * np.mean(np.logaddexp(0.0, eta) - y * eta))


def cv(
    X,
    y,
    spec: PenaltySpec | None = None,
    family: Family = "gaussian",
    K: int = 10,
    seed: int = 0,
    n_lambda: int = 100,
    ratio: float = 0.01,
    foldid=None,
    fold_tol: float = FOLD_TOL,
) -> CvReport:
    """K-fold cross-validation over the full-data lambda grid.

    Per-fold losses are averaged with fold-size weights; ``cvsd`` is the
    standard error of that weighted mean.  The reported fit is the full-data
    path solution at ``lambda_min``; fold paths only feed the loss curve and
    are solved to the looser ``fold_tol``.
    """
    spec = PenaltySpec() if spec is None else spec
    X, y = _check_xy(X, y, family)
    n = X.shape[0]
    if not K >= 2:
        raise InvalidParameter(f"K must be >= 2, got {K}")
    foldid = fold_ids(n, K, seed) if foldid is None else np.asarray(foldid)
    K = int(foldid.max()) + 1
    full = lambda_path(X, y, spec, family, n_lambda, ratio)
    lambdas = full.lambdas
    losses = np.empty((K, lambdas.size))
    sizes = np.empty(K)
    for k in range(K):
        tr = foldid != k
        te = ~tr
        sizes[k] = te.sum()
        path = lambda_path(X[tr], y[tr], spec, family, lambdas=lambdas, tol=fold_tol)
        for m, f in enumerate(path.fits):
            losses[k, m] = prediction_loss(f, X[te], y[te])
    wts = sizes / sizes.sum()
    cvm = wts @ losses
    if K > 1:
        cvsd = np.sqrt((wts @ (losses - cvm) ** 2) / (K - 1))
    else:
        cvsd = np.zeros_like(cvm)
    best = int(np.argmin(cvm))
    return CvReport(
        lambdas=lambdas,
        cvm=cvm,
        cvsd=cvsd,
        lambda_min=float(lambdas[best]),
        chosen_fit=full.fits[best],
        foldid=foldid,
        path=full,
    )


def univariate_weights(X, y) -> np.ndarray:
    """Inverse absolute univariate slopes ``1 / |x_j^T y / n|``; zero slope gives inf."""
    X = as_matrix(X)
    y = as_vector(y)
    n = X.shape[0]
    slope = np.abs(X.T @ y) / n
    w = np.full(X.shape[1], np.inf)
    pos = slope > 0
    w[pos] = 1.0 / slope[pos]
    return w


def kkt_residuals(X, y, fit_: PenalizedFit) -> np.ndarray:
    """Per-feature stationarity violation for a Gaussian fit.

    For ``b_j = 0`` this is ``max(|g_j| - l1_j, 0)`` and for ``b_j != 0`` it is
    ``|g_j - l1_j sign(b_j) - 2 l2_j b_j|`` where ``g`` is the loss gradient
    ``X^T (y - b0 - X b) / n``.  Excluded features report 0.
    """
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    l1, l2, excluded = _penalty_vectors(fit_.spec, p)
    eta = fit_.linear_predictor(X)
    if fit_.family == "gaussian":
        g = X.T @ (y - eta) / n
    else:
        g = X.T @ (y - _sigmoid(eta)) / n
    b = fit_.beta
    res = np.where(
        b == 0.0,
        np.maximum(np.abs(g) - l1, 0.0),
        np.abs(g - l1 * np.sign(b) - 2.0 * l2 * b),
    )
    res[excluded] = 0.0
    return res
