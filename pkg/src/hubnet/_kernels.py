"""Compiled inner loops for the two coordinate-descent solvers.

Kept free of validation: callers in ``edgeout`` and ``penreg`` check shapes,
finiteness and parameter ranges before dispatching here.
"""
import numpy as np
from numba import njit

TIE_SLACK = 1e-12


@njit(cache=True, nogil=True)
def edgeout_sweep(G, B, active, theta_l1, theta_grp):
    """One cyclic pass of exact row updates for the edge-out objective.

    ``G`` is the Gram matrix X^T X.  ``theta_l1`` is theta*gamma and
    ``theta_grp`` is theta*(1-gamma)*sqrt(p-1).  ``B`` and ``active`` are
    updated in place; ``active[k]`` flags a nonzero row k.
    """
    p = G.shape[0]
    r = np.empty(p)
    beta = np.empty(p)
    for i in range(p):
        a = G[i, i]
        for j in range(p):
            r[j] = G[i, j]
        for k in range(p):
            if active[k] and k != i:
                g = G[i, k]
                if g != 0.0:
                    for j in range(p):
                        r[j] -= g * B[k, j]
        r[i] = 0.0
        nrm2 = 0.0
        for j in range(p):
            v = abs(r[j]) - theta_l1
            if v > 0.0 and j != i:
                beta[j] = v if r[j] > 0.0 else -v
                nrm2 += v * v
            else:
                beta[j] = 0.0
        nrm = np.sqrt(nrm2)
        if nrm <= theta_grp or nrm2 == 0.0:
            if active[i]:
                for j in range(p):
                    B[i, j] = 0.0
                active[i] = False
        else:
            scale = (1.0 - theta_grp / nrm) / a
            for j in range(p):
                B[i, j] = scale * beta[j]
            active[i] = True


@njit(cache=True, nogil=True)
def edgeout_sweep_resid(X, R, colsq, B, active, theta_l1, theta_grp):
    """Same pass as :func:`edgeout_sweep`, driven by the residual X - X B.

    Costs O(n p) per row regardless of how many rows are active, so it wins
    over the Gram form once the active set is large.  ``R`` must equal
    ``X - X B`` on entry and is kept current.
    """
    n, p = X.shape
    r = np.empty(p)
    beta = np.empty(p)
    delta = np.empty(p)
    for i in range(p):
        a = colsq[i]
        for j in range(p):
            r[j] = 0.0
        for t in range(n):
            x = X[t, i]
            if x != 0.0:
                for j in range(p):
                    r[j] += x * R[t, j]
        if active[i]:
            for j in range(p):
                r[j] += a * B[i, j]
        r[i] = 0.0
        nrm2 = 0.0
        for j in range(p):
            v = abs(r[j]) - theta_l1
            if v > 0.0 and j != i:
                beta[j] = v if r[j] > 0.0 else -v
                nrm2 += v * v
            else:
                beta[j] = 0.0
        nrm = np.sqrt(nrm2)
        if nrm <= theta_grp or nrm2 == 0.0:
            scale = 0.0
        else:
            scale = (1.0 - theta_grp / nrm) / a
        if scale == 0.0 and not active[i]:
            continue
        for j in range(p):
            beta[j] *= scale
            delta[j] = beta[j] - B[i, j]
        for t in range(n):
            x = X[t, i]
            if x != 0.0:
                for j in range(p):
                    R[t, j] -= x * delta[j]
        for j in range(p):
            B[i, j] = beta[j]
        active[i] = scale != 0.0


@njit(cache=True, nogil=True)
def _cd_pass(X, xsq, resid, beta, b0, obs_w, wsum, l1, l2, excluded, only_active, fit_intercept):
    """A single coordinate pass of weighted elastic-net CD.

    Minimizes  sum_i obs_w[i] * (resid_i)^2 / 2 + sum_j l1[j]|b_j| + l2[j] b_j^2
    with obs_w already divided by n.  Returns (max scaled change, new b0).
    ``resid`` = z - b0 - X beta is kept current.
    """
    n, p = X.shape
    max_change = 0.0
    for j in range(p):
        if excluded[j]:
            continue
        bj = beta[j]
        if only_active and bj == 0.0:
            continue
        grad = 0.0
        for i in range(n):
            grad += obs_w[i] * X[i, j] * resid[i]
        u = grad + xsq[j] * bj
        # ties at the threshold (up to rounding) resolve to zero
        if abs(u) > l1[j] * (1.0 + TIE_SLACK):
            v = abs(u) - l1[j]
            nb = (v if u > 0.0 else -v) / (xsq[j] + 2.0 * l2[j])
        else:
            nb = 0.0
        d = nb - bj
        if d != 0.0:
            for i in range(n):
                resid[i] -= d * X[i, j]
            beta[j] = nb
            c = d * d * xsq[j]
            if c > max_change:
                max_change = c
    if fit_intercept:
        s = 0.0
        for i in range(n):
            s += obs_w[i] * resid[i]
        d0 = s / wsum
        if d0 != 0.0:
            for i in range(n):
                resid[i] -= d0
            b0 += d0
            c = d0 * d0 * wsum
            if c > max_change:
                max_change = c
    return max_change, b0


@njit(cache=True, nogil=True)
def weighted_enet_cd(X, z, obs_w, beta, b0, l1, l2, excluded, tol, max_sweeps):
    """Weighted least-squares elastic net by active-set cyclic CD.

    Warm-started from ``beta``/``b0`` (``beta`` modified in place).  Stops
    when a full pass changes no coordinate by more than ``tol`` in the
    curvature-scaled squared norm.  Returns (b0, sweeps, converged).
    """
    n, p = X.shape
    xsq = np.zeros(p)
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += obs_w[i] * X[i, j] * X[i, j]
        xsq[j] = s
    wsum = 0.0
    for i in range(n):
        wsum += obs_w[i]
    resid = np.empty(n)
    for i in range(n):
        acc = z[i] - b0
        for j in range(p):
            if beta[j] != 0.0:
                acc -= X[i, j] * beta[j]
        resid[i] = acc
    sweeps = 0
    while sweeps < max_sweeps:
        change, b0 = _cd_pass(X, xsq, resid, beta, b0, obs_w, wsum, l1, l2, excluded, False, True)
        sweeps += 1
        if change < tol:
            return b0, sweeps, True
        # settle the active set before the next full pass
        while sweeps < max_sweeps:
            change, b0 = _cd_pass(X, xsq, resid, beta, b0, obs_w, wsum, l1, l2, excluded, True, True)
            sweeps += 1
            if change < tol:
                break
    return b0, sweeps, False
