"""Edge-out hub-graph estimator.

Fits the row-penalized self-regression ``X ~ X B`` with ``diag(B) = 0``::

    1/2 ||X - X B||_F^2
        + theta * sum_i [ gamma ||B_i||_1 + (1 - gamma) sqrt(p - 1) ||B_i||_2 ]

by cyclic blockwise coordinate descent over the rows of ``B``.  Each row
update is the exact minimizer of the objective with the other rows held
fixed: an elementwise soft-threshold followed by a group shrinkage and a
``1 / ||X_i||^2`` rescaling.

Rows of ``B`` that survive the group penalty mark hub features; their
absolute row sums give the penalty factors used by the supervised stage.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from . import _kernels
from .errors import (
    DegenerateDf,
    DimensionMismatch,
    InvalidParameter,
    NonzeroDiagonal,
    ZeroColumn,
)
from .numcore import as_matrix, make_rng

DEFAULT_TOL = 1e-7
DEFAULT_MAX_SWEEPS = 500
DEFAULT_GRID_SIZE = 50
DEFAULT_GRID_RATIO = 1e-3


@dataclass(frozen=True)
class EdgeOutConfig:
    theta: float
    gamma: float = 0.5
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    tol: float = DEFAULT_TOL
    # optional extra requirement: largest entry change over a sweep below this
    step_tol: float | None = None

    def __post_init__(self):
        if not self.theta >= 0:
            raise InvalidParameter(f"theta must be >= 0, got {self.theta}")
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidParameter(f"gamma must lie in [0, 1], got {self.gamma}")
        if not self.tol > 0:
            raise InvalidParameter(f"tol must be > 0, got {self.tol}")
        if self.max_sweeps < 1:
            raise InvalidParameter("max_sweeps must be >= 1")
        if self.step_tol is not None and not self.step_tol > 0:
            raise InvalidParameter(f"step_tol must be > 0, got {self.step_tol}")


@dataclass
class EdgeOutFit:
    """Result of :func:`fit`.

    ``trace`` holds the objective at initialization followed by its value
    after every completed sweep.
    """

    B: np.ndarray
    theta: float
    gamma: float
    objective: float
    sweeps_used: int
    converged: bool
    trace: list = field(default_factory=list)

    @property
    def row_abs_sums(self) -> np.ndarray:
        return np.abs(self.B).sum(axis=1)

    @property
    def row_l2(self) -> np.ndarray:
        return np.sqrt((self.B * self.B).sum(axis=1))

    @property
    def hub_rows(self) -> np.ndarray:
        """Indices of rows with any nonzero entry."""
        return np.flatnonzero(np.any(self.B != 0.0, axis=1))

    def to_dict(self, include_B: bool = False) -> dict:
        out = {
            "theta": self.theta,
            "gamma": self.gamma,
            "sweeps": self.sweeps_used,
            "converged": self.converged,
            "objective": self.objective,
            "row_l1": self.row_abs_sums.tolist(),
        }
        if include_B:
            out["B"] = self.B.tolist()
        return out

    def to_json(self, include_B: bool = False) -> str:
        return json.dumps(self.to_dict(include_B=include_B))


@dataclass(frozen=True)
class HubWeights:
    """Penalty factors ``w = 1 / s`` from absolute row sums ``s``.

    ``w[j]`` is ``inf`` exactly when ``s[j] == 0``; such features are
    dropped by the weighted solver.
    """

    w: np.ndarray
    s: np.ndarray

    @property
    def excluded(self) -> np.ndarray:
        return np.isinf(self.w)


@dataclass
class ThetaSelection:
    grid: list
    scores: list
    chosen_theta: float
    method: str
    fit: EdgeOutFit | None = None
    dfs: list | None = None


def soft_threshold(x, t):
    """``sign(x) * max(|x| - t, 0)``, elementwise for arrays."""
    if np.any(np.asarray(t) < 0):
        raise InvalidParameter("threshold must be non-negative")
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def _group_scale(p: int) -> float:
    return math.sqrt(p - 1) if p > 1 else 0.0


def _check_B(X: np.ndarray, B) -> np.ndarray:
    B = np.asarray(B, dtype=np.float64)
    p = X.shape[1]
    if B.shape != (p, p):
        raise DimensionMismatch(f"B must be {p}x{p}, got {B.shape}")
    if np.any(np.diag(B) != 0.0):
        raise NonzeroDiagonal("B must have an exactly zero diagonal")
    return B


def penalty(B: np.ndarray, theta: float, gamma: float) -> float:
    p = B.shape[0]
    l1 = np.abs(B).sum(axis=1)
    l2 = np.sqrt((B * B).sum(axis=1))
    return float(theta * (gamma * l1.sum() + (1.0 - gamma) * _group_scale(p) * l2.sum()))


def residual(X: np.ndarray, B: np.ndarray) -> np.ndarray:
    rows = np.flatnonzero(np.any(B != 0.0, axis=1))
    if rows.size == 0:
        return X.copy()
    return X - X[:, rows] @ B[rows]


def objective(X, B, theta: float, gamma: float) -> float:
    """Value of the edge-out objective at ``B``."""
    X = as_matrix(X)
    B = _check_B(X, B)
    R = residual(X, B)
    return float(0.5 * np.sum(R * R) + penalty(B, theta, gamma))


def row_minimize(X, B, i: int, theta: float, gamma: float) -> np.ndarray:
    """Exact minimizer of the objective over row ``i``, other rows fixed.

    Returns the length ``p - 1`` vector of off-diagonal entries of row ``i``
    (columns in increasing order, column ``i`` skipped).
    """
    X = as_matrix(X)
    B = _check_B(X, B)
    p = X.shape[1]
    xi = X[:, i]
    a = float(xi @ xi)
    if a <= 0.0:
        raise ZeroColumn(i)
    keep = np.arange(p) != i
    Xo = X[:, keep]
    Bo = B[np.ix_(keep, keep)]
    r = xi @ (Xo - Xo @ Bo)
    beta = soft_threshold(r, theta * gamma)
    nrm = float(np.linalg.norm(beta))
    t_grp = theta * (1.0 - gamma) * _group_scale(p)
    if nrm <= t_grp or nrm == 0.0:
        return np.zeros(p - 1)
    return (1.0 - t_grp / nrm) / a * beta


def _zero_row_threshold(r: np.ndarray, gamma: float, c: float) -> float:
    """Smallest theta with ||S(r, theta*gamma)||_2 <= theta*c.

    ``g(theta) = ||S(r, theta gamma)|| - theta c`` is strictly decreasing, so
    locate the breakpoint segment and solve the quadratic inside it.
    """
    u = np.sort(np.abs(r))[::-1]
    u = u[u > 0]
    if u.size == 0:
        return 0.0
    if gamma == 0.0:
        return float(np.linalg.norm(u) / c)
    if c == 0.0:
        return float(u[0] / gamma)
    k = np.arange(u.size)  # number of entries strictly above breakpoint k
    cs1 = np.concatenate([[0.0], np.cumsum(u)])[:-1]
    cs2 = np.concatenate([[0.0], np.cumsum(u * u)])[:-1]
    # ||S(r, u_k)||^2 with threshold exactly at u_k
    s_sq = cs2 - 2.0 * u * cs1 + k * u * u
    g_at = np.sqrt(np.maximum(s_sq, 0.0)) - (u / gamma) * c
    # g rises as the breakpoint index grows (theta falls); the root sits just
    # below the last breakpoint where g is still <= 0, with entries 0..last active
    last = int(np.count_nonzero(g_at <= 0.0)) - 1
    m = last + 1
    s1 = u[:m].sum()
    s2 = (u[:m] ** 2).sum()
    qa = m * gamma * gamma - c * c
    qb = -2.0 * gamma * s1
    qc = s2
    lo = u[m] / gamma if m < u.size else 0.0
    hi = u[last] / gamma
    if abs(qa) < 1e-300:
        roots = [qc / -qb]
    else:
        disc = max(qb * qb - 4.0 * qa * qc, 0.0)
        sq = math.sqrt(disc)
        roots = [(-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa)]
    cand = [t for t in roots if lo - 1e-12 * hi <= t <= hi * (1 + 1e-12)]
    if not cand:
        # numerically degenerate segment; fall back to the segment end
        return float(hi)
    return float(min(max(cand), hi))


def theta_max(X, gamma: float) -> float:
    """Smallest theta at which the first sweep from ``B = 0`` keeps ``B = 0``."""
    X = as_matrix(X)
    p = X.shape[1]
    G = X.T @ X
    c = (1.0 - gamma) * _group_scale(p)
    if gamma == 0.0 and c == 0.0:
        raise InvalidParameter("gamma = 0 needs p >= 2")
    best = 0.0
    for i in range(p):
        r = np.delete(G[i], i)
        best = max(best, _zero_row_threshold(r, gamma, c))
    # nudge so that rounding in the zero-branch comparison cannot leave a row alive
    return best * (1.0 + 1e-12)


def default_grid(X, gamma: float, size: int = DEFAULT_GRID_SIZE, ratio: float = DEFAULT_GRID_RATIO) -> np.ndarray:
    """``size`` log-spaced values from ``theta_max`` down to ``theta_max * ratio``."""
    tmax = theta_max(X, gamma)
    if tmax == 0.0:
        return np.zeros(1)
    return np.geomspace(tmax, tmax * ratio, size)


def _check_columns(X: np.ndarray) -> np.ndarray:
    col_sq = np.einsum("ij,ij->j", X, X)
    bad = np.flatnonzero(col_sq <= 0.0)
    if bad.size:
        raise ZeroColumn(int(bad[0]))
    return col_sq


def fit(X, cfg: EdgeOutConfig, B_init=None) -> EdgeOutFit:
    """Minimize the edge-out objective by cyclic exact row updates.

    Sweeps stop once the relative objective decrease falls below
    ``cfg.tol`` (and, if ``cfg.step_tol`` is set, no entry of ``B`` moved by
    more than ``step_tol`` in that sweep).

    ``X`` is used as given; standardize beforehand.  ``B`` starts at zero
    unless ``B_init`` (zero diagonal) is supplied, which path-wise callers use
    for warm starts.
    """
    X = as_matrix(X)
    n, p = X.shape
    col_sq = _check_columns(X)
    if B_init is None:
        B = np.zeros((p, p))
    else:
        B = np.array(_check_B(X, B_init), dtype=np.float64, order="C")
    active = np.any(B != 0.0, axis=1)
    G = X.T @ X
    t_l1 = cfg.theta * cfg.gamma
    t_grp = cfg.theta * (1.0 - cfg.gamma) * _group_scale(p)

    obj = objective(X, B, cfg.theta, cfg.gamma)
    trace = [obj]
    converged = False
    sweeps = 0
    B_prev = np.empty_like(B) if cfg.step_tol is not None else None
    while sweeps < cfg.max_sweeps:
        if B_prev is not None:
            B_prev[...] = B
        if np.count_nonzero(active) > 2 * n:
            R = residual(X, B)
            _kernels.edgeout_sweep_resid(X, R, col_sq, B, active, t_l1, t_grp)
        else:
            _kernels.edgeout_sweep(G, B, active, t_l1, t_grp)
        sweeps += 1
        new = objective(X, B, cfg.theta, cfg.gamma)
        trace.append(new)
        decrease = (obj - new) / max(abs(obj), np.finfo(float).tiny)
        obj = new
        if decrease < cfg.tol:
            # near the optimum the objective moves only quadratically in B, so
            # rounding can hide a row that is still off by ~sqrt(eps)
            if B_prev is None or np.max(np.abs(B - B_prev)) < cfg.step_tol:
                converged = True
                break
    return EdgeOutFit(
        B=B,
        theta=float(cfg.theta),
        gamma=float(cfg.gamma),
        objective=obj,
        sweeps_used=sweeps,
        converged=converged,
        trace=trace,
    )


def degrees_of_freedom(B: np.ndarray, theta: float, gamma: float, col_sq=None) -> float:
    """Approximate df of the reconstruction ``X B``.

    Pure l1 penalty: the count of nonzero entries.  Otherwise each row's
    nonzero count is discounted by
    ``g_i / (g_i + theta (1 - gamma) sqrt(p - 1))`` with ``g_i = ||B_i||``.

    Passing ``col_sq`` (the squared column norms of X) uses
    ``g_i = ||X_i||^2 ||B_i||`` instead, which is exactly the shrinkage
    factor of the row update, ``1 - theta (1 - gamma) sqrt(p - 1) /
    ||S(r_i, theta gamma)||``.  The two agree for unit-norm columns.
    """
    nnz_rows = np.count_nonzero(B, axis=1)
    if gamma == 1.0:
        return float(nnz_rows.sum())
    p = B.shape[0]
    a = np.ones(p) if col_sq is None else np.asarray(col_sq, dtype=np.float64)
    l2 = np.sqrt((B * B).sum(axis=1))
    shrink = theta * (1.0 - gamma) * _group_scale(p)
    df = 0.0
    for i in np.flatnonzero(nnz_rows):
        g = a[i] * l2[i]
        df += g / (g + shrink) * nnz_rows[i]
    return float(df)


DF_FORMS = ("plain", "scaled")


def _df_weights(X: np.ndarray, df_form: str):
    if df_form == "plain":
        return None
    if df_form == "scaled":
        return np.einsum("ij,ij->j", X, X)
    raise InvalidParameter(f"df_form must be one of {DF_FORMS}, got {df_form!r}")


def gcv_score(
    X, fit_: EdgeOutFit, theta: float | None = None, gamma: float | None = None, df_form: str = "plain"
) -> float:
    """Reconstruction error divided by ``n p - df``.

    ``df_form="scaled"`` weights each row norm by its column's squared norm
    (see :func:`degrees_of_freedom`).
    """
    X = as_matrix(X)
    theta = fit_.theta if theta is None else theta
    gamma = fit_.gamma if gamma is None else gamma
    n, p = X.shape
    df = degrees_of_freedom(fit_.B, theta, gamma, _df_weights(X, df_form))
    if df >= n * p:
        raise DegenerateDf(f"df = {df:.3f} >= n p = {n * p}")
    R = residual(X, fit_.B)
    return float(np.sum(R * R) / (n * p - df))


def kfold_ids(n: int, K: int, seed: int) -> np.ndarray:
    """Balanced fold labels 0..K-1 in a seeded random order."""
    if not 2 <= K <= n:
        raise InvalidParameter(f"K must satisfy 2 <= K <= n = {n}, got {K}")
    rng = make_rng(seed, 0xF01D)
    return rng.permutation(np.arange(n) % K)


def _argmin_prefer_large(grid: np.ndarray, scores: np.ndarray) -> int:
    best = np.min(scores)
    ties = np.flatnonzero(scores == best)
    return int(ties[np.argmax(grid[ties])])


def select_theta(
    X,
    gamma: float = 0.5,
    method: Literal["gcv", "kfold"] = "gcv",
    grid: Sequence[float] | None = None,
    K: int = 5,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    df_form: str = "plain",
) -> ThetaSelection:
    """Choose theta on a grid by GCV or by K-fold reconstruction error.

    The grid is visited from large to small theta with warm starts.  A GCV
    score is ``inf`` where df reaches ``n p``; once that happens the rest of
    the (smaller, denser) grid is scored ``inf`` without fitting.  Ties go to
    the larger theta.
    """
    X = as_matrix(X)
    n, p = X.shape
    if grid is None:
        grid = default_grid(X, gamma)
    grid = np.asarray(grid, dtype=np.float64).reshape(-1)
    if grid.size == 0:
        raise InvalidParameter("theta grid is empty")
    order = np.argsort(-grid, kind="stable")

    if method == "gcv":
        col_sq = _df_weights(X, df_form)
        scores = np.full(grid.size, np.inf)
        dfs = np.full(grid.size, np.nan)
        fits: dict[int, EdgeOutFit] = {}
        B = None
        for idx in order:
            f = fit(X, EdgeOutConfig(float(grid[idx]), gamma, max_sweeps, tol), B_init=B)
            B = f.B
            df = degrees_of_freedom(f.B, f.theta, gamma, col_sq)
            dfs[idx] = df
            if df >= n * p:
                break
            scores[idx] = gcv_score(X, f, f.theta, gamma, df_form)
            fits[idx] = f
        if not np.any(np.isfinite(scores)):
            raise DegenerateDf("every theta on the grid gives df >= n p")
        best = _argmin_prefer_large(grid, scores)
        return ThetaSelection(
            grid=grid.tolist(),
            scores=scores.tolist(),
            chosen_theta=float(grid[best]),
            method="gcv",
            fit=fits[best],
            dfs=dfs.tolist(),
        )

    if method != "kfold":
        raise InvalidParameter(f"unknown theta selection method {method!r}")
    folds = kfold_ids(n, K, seed)
    scores = np.zeros(grid.size)
    for k in range(K):
        train = X[folds != k]
        val = X[folds == k]
        B = None
        for idx in order:
            f = fit(train, EdgeOutConfig(float(grid[idx]), gamma, max_sweeps, tol), B_init=B)
            B = f.B
            R = residual(val, f.B)
            scores[idx] += 0.5 * float(np.sum(R * R))
    best = _argmin_prefer_large(grid, scores)
    chosen = fit(X, EdgeOutConfig(float(grid[best]), gamma, max_sweeps, tol))
    return ThetaSelection(
        grid=grid.tolist(),
        scores=scores.tolist(),
        chosen_theta=float(grid[best]),
        method="kfold",
        fit=chosen,
    )


def hub_weights(fit_: EdgeOutFit | np.ndarray) -> HubWeights:
    """Penalty factors from absolute row sums of ``B``."""
    B = fit_.B if isinstance(fit_, EdgeOutFit) else np.asarray(fit_, dtype=np.float64)
    s = np.abs(B).sum(axis=1)
    w = np.full(s.shape, np.inf)
    pos = s > 0
    w[pos] = 1.0 / s[pos]
    return HubWeights(w=w, s=s)
