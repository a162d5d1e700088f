"""Synthetic data with known hub structure and known response support.

Two families of generators:

* :func:`gen_scenario` -- supervised data (design plus response) for the four
  comparison scenarios and the two small hub-model demonstrations.
* :func:`gen_hub_graph` -- response-free designs for hub recovery, built from
  a hub-patterned precision matrix (settings 1 and 2) or from an explicit
  hub regression (setting 3).

Every generator draws from named Philox streams derived from the spec's seed,
so identical specs give bit-identical data.  Indices are 0-based.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import InvalidSpec
from .numcore import gen_positive_def, make_rng, sample_gaussian, standardize, write_csv

SCENARIO_KINDS = ("A", "B", "C", "D", "Fig1", "Fig2")
HUB_SETTINGS = ("S1", "S2", "S3")

# stream keys
_TRAIN, _TEST, _STRUCT = 1, 2, 3


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    n: int = 100
    p: int = 500
    s: int = 10
    t_frac: float = 0.2
    seed: int = 0
    n_test: int | None = None
    family: str = "gaussian"

    def __post_init__(self):
        kind = _normalize_kind(self.kind)
        if self.family not in ("gaussian", "binomial"):
            raise InvalidSpec(f"unknown family {self.family!r}")
        object.__setattr__(self, "kind", kind)
        if self.n_test is None:
            object.__setattr__(self, "n_test", self.n)
        if self.n < 2 or self.n_test < 2:
            raise InvalidSpec("n and n_test must be >= 2")
        if not 1 <= self.s < self.p:
            raise InvalidSpec(f"need 1 <= s < p, got s={self.s}, p={self.p}")
        if not 0.0 < self.t_frac <= 1.0:
            raise InvalidSpec(f"t_frac must lie in (0, 1], got {self.t_frac}")
        if kind in ("C", "Fig2") and 2 * self.s > self.p:
            raise InvalidSpec(f"kind {kind} needs 2 s <= p")
        if kind == "B" and self.n_t() < self.s:
            raise InvalidSpec("scenario B needs |T| >= s")

    @classmethod
    def figure(cls, kind: str, seed: int = 0) -> "ScenarioSpec":
        """The small hub-model demonstration: n = 60, p = 40, three hubs."""
        return cls(kind=kind, n=60, p=40, s=3, t_frac=1.0, seed=seed)

    def n_t(self) -> int:
        return int(round(self.t_frac * (self.p - self.s)))


@dataclass(frozen=True)
class HubGraphSpec:
    setting: str
    n: int = 100
    p: int = 200
    s: int = 4
    seed: int = 0

    def __post_init__(self):
        setting = str(self.setting).upper()
        if setting in ("1", "2", "3"):
            setting = "S" + setting
        if setting not in HUB_SETTINGS:
            raise InvalidSpec(f"unknown hub setting {self.setting!r}")
        object.__setattr__(self, "setting", setting)
        if self.n < 2:
            raise InvalidSpec("n must be >= 2")
        if not 1 <= self.s < self.p:
            raise InvalidSpec(f"need 1 <= s < p, got s={self.s}, p={self.p}")
        if setting == "S2":
            if self.s % 2:
                raise InvalidSpec("setting S2 needs an even s")
            if self.s // 2 >= self.p // 2:
                raise InvalidSpec("setting S2 cores do not fit in the blocks")


@dataclass
class SimData:
    """Standardized design(s), response(s) and ground truth.

    The test design is standardized with the training means and sds.
    ``y_train``/``y_test`` are empty for response-free data.
    """

    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    true_support: np.ndarray
    hub_set: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.X_train.shape[1]

    def sidecar(self) -> dict:
        return {
            "true_support": [int(i) for i in self.true_support],
            "hub_set": [int(i) for i in self.hub_set],
            "spec": self.meta.get("spec", {}),
        }

    def save(self, out_dir) -> None:
        """Write X/y CSVs and a ``truth.json`` sidecar into ``out_dir``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "X_train.csv", self.X_train)
        write_csv(out / "X_test.csv", self.X_test)
        if self.y_train.size:
            write_csv(out / "y_train.csv", self.y_train.reshape(-1, 1))
            write_csv(out / "y_test.csv", self.y_test.reshape(-1, 1))
        (out / "truth.json").write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True))


def _normalize_kind(kind) -> str:
    k = str(kind)
    for cand in SCENARIO_KINDS:
        if k.lower() == cand.lower():
            return cand
    raise InvalidSpec(f"unknown scenario kind {kind!r}")


def _release(X_tr, y_tr, X_te, y_te, support, hubs, meta) -> SimData:
    Z_tr, rep = standardize(X_tr)
    Z_te = rep.apply(X_te)
    return SimData(
        X_train=Z_tr,
        y_train=np.asarray(y_tr, dtype=np.float64),
        X_test=Z_te,
        y_test=np.asarray(y_te, dtype=np.float64),
        true_support=np.sort(np.asarray(support, dtype=np.int64)),
        hub_set=np.sort(np.asarray(hubs, dtype=np.int64)),
        meta=meta,
    )


def _hub_design(n, p, core, driven, Gamma, rng):
    """Core columns N(0,1); driven columns X_core Gamma + N(0,1); rest N(0,1)."""
    X = rng.standard_normal((n, p))
    X[:, driven] = X[:, core] @ Gamma + X[:, driven]
    return X


def _response(eta_signal, rng, family):
    """Signal plus N(0, 1) noise; binomial draws Bernoulli(sigmoid(.)) of that."""
    eta = eta_signal + rng.standard_normal(eta_signal.shape[0])
    if family == "binomial":
        prob = 0.5 * (1.0 + np.tanh(0.5 * eta))
        return (rng.random(eta.shape[0]) < prob).astype(np.float64)
    return eta


def gen_scenario(spec: ScenarioSpec) -> SimData:
    """Draw a training and a test sample for one comparison scenario.

    In every kind the response is the plain sum of the signal features plus
    N(0, 1) noise, and driven features are ``X_core @ Gamma + N(0, 1)``.
    With ``family="binomial"`` that sum is used as the logit of a 0/1 draw.
    """
    n, p, s = spec.n, spec.p, spec.s
    kind = spec.kind
    srng = make_rng(spec.seed, _STRUCT)
    meta = {"spec": asdict(spec)}
    idx = np.arange(p)

    if kind == "D":
        Sigma = gen_positive_def(p, 10.0, srng)
        support = idx[:s]
        beta = np.zeros(p)
        beta[support] = 1.0

        def draw(m, key):
            rng = make_rng(spec.seed, key)
            X = sample_gaussian(m, Sigma, rng)
            return X, _response(X @ beta, rng, spec.family)

        X_tr, y_tr = draw(n, _TRAIN)
        X_te, y_te = draw(spec.n_test, _TEST)
        return _release(X_tr, y_tr, X_te, y_te, support, [], meta)

    core = idx[:s]
    rest = idx[s:]
    if kind == "A":
        T = np.sort(srng.choice(rest, size=spec.n_t(), replace=False))
        Gamma = srng.normal(0.0, 2.0, size=(s, T.size))
        support = core
    elif kind == "B":
        T = np.sort(srng.choice(rest, size=spec.n_t(), replace=False))
        Gamma = srng.normal(0.0, 0.5, size=(s, T.size))
        support = np.sort(srng.choice(T, size=s, replace=False))
    elif kind == "C":
        T = rest
        Gamma = srng.normal(0.0, 0.5, size=(s, T.size))
        support = idx[s : 2 * s]
    else:  # Fig1 / Fig2: every non-hub feature is driven by the hubs
        T = rest
        Gamma = srng.normal(0.0, 2.0, size=(s, T.size))
        support = core if kind == "Fig1" else idx[s : 2 * s]
    meta["T"] = [int(j) for j in T]

    def draw(m, key):
        rng = make_rng(spec.seed, key)
        X = _hub_design(m, p, core, T, Gamma, rng)
        return X, _response(X[:, support].sum(axis=1), rng, spec.family)

    X_tr, y_tr = draw(n, _TRAIN)
    X_te, y_te = draw(spec.n_test, _TEST)
    return _release(X_tr, y_tr, X_te, y_te, support, core, meta)


def hub_pattern(p: int, cores) -> np.ndarray:
    """0/1 pattern with unit diagonal and full rows/columns at each core index."""
    A = np.eye(p)
    for i in cores:
        A[i, :] = 1.0
        A[:, i] = 1.0
    return A


def hub_precision(A: np.ndarray, rng: np.random.Generator, floor: float = 0.2) -> np.ndarray:
    """Precision matrix supported on ``A`` with smallest eigenvalue ``floor``.

    Entries on the support have magnitude uniform in [0.015, 0.15] and a
    random sign; the matrix is symmetrized and then shifted along the
    identity.
    """
    p = A.shape[0]
    mag = rng.uniform(0.015, 0.15, size=(p, p))
    sign = np.where(rng.random((p, p)) < 0.5, -1.0, 1.0)
    E = np.where(A != 0, sign * mag, 0.0)
    Ebar = (E + E.T) / 2.0
    lam_min = linalg.eigvalsh(Ebar)[0]
    return Ebar + (floor - lam_min) * np.eye(p)


def truncated_normal(shape, sd: float, bound: float, rng: np.random.Generator) -> np.ndarray:
    """N(0, sd^2) conditioned on |x| <= bound, by rejection."""
    size = int(np.prod(shape))
    out = np.empty(size)
    filled = 0
    while filled < size:
        draw = rng.normal(0.0, sd, size=2 * (size - filled) + 16)
        ok = draw[np.abs(draw) <= bound]
        take = min(ok.size, size - filled)
        out[filled : filled + take] = ok[:take]
        filled += take
    return out.reshape(shape)


def gen_hub_graph(spec: HubGraphSpec) -> SimData:
    """Response-free design with planted hubs.

    S1: one core of the first ``s`` features.  S2: block diagonal with two
    halves, each carrying a core of ``s / 2`` features at the start of its
    block.  S3: the first ``s`` features drive all others through a truncated
    N(0, 4) coefficient matrix.
    """
    n, p, s = spec.n, spec.p, spec.s
    srng = make_rng(spec.seed, _STRUCT)
    rng = make_rng(spec.seed, _TRAIN)
    meta: dict = {"spec": asdict(spec)}
    if spec.setting in ("S1", "S2"):
        if spec.setting == "S1":
            hubs = np.arange(s)
        else:
            half = p // 2
            hubs = np.concatenate([np.arange(s // 2), half + np.arange(s // 2)])
        A = hub_pattern(p, hubs)
        if spec.setting == "S2":
            half = p // 2
            A[:half, half:] = 0.0
            A[half:, :half] = 0.0
        Theta = hub_precision(A, srng)
        L = linalg.cholesky(Theta, lower=True)
        Z = rng.standard_normal((n, p))
        # rows Z L^{-T} have covariance Theta^{-1}
        X = linalg.solve_triangular(L, Z.T, lower=True, trans="T").T
        meta["precision"] = Theta
    else:
        hubs = np.arange(s)
        Gamma = truncated_normal((s, p - s), 2.0, 2.0, srng)
        X = _hub_design(n, p, hubs, np.arange(s, p), Gamma, rng)
        meta["Gamma"] = Gamma
    Z, _ = standardize(X)
    empty = np.empty(0)
    return SimData(
        X_train=Z,
        y_train=empty,
        X_test=np.empty((0, p)),
        y_test=empty,
        true_support=np.sort(hubs),
        hub_set=np.sort(hubs),
        meta=meta,
    )
