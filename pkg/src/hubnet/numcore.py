"""Dense matrix helpers, standardization, seeded sampling and matrix I/O.

Matrices are plain ``float64`` numpy arrays in C (row-major) order; the
``as_matrix`` validator is the single gate that enforces shape and finiteness.

Random streams use the counter-based Philox generator.  A stream is named by a
base seed plus a tuple of integer keys, e.g. ``make_rng(seed, rep, 3)``, which
maps onto ``SeedSequence(seed, spawn_key=keys)``.  Distinct key tuples give
statistically independent streams, and the mapping is platform independent.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import (
    DimensionMismatch,
    InvalidParameter,
    MatrixFormatError,
    NonFiniteValue,
    NotPositiveDefinite,
    ZeroVarianceColumn,
)

HNM_MAGIC = b"HNM1"


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Return a Philox generator for the stream ``(seed, *keys)``."""
    if seed < 0 or seed >= 2**64:
        raise InvalidParameter(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def as_matrix(X, name: str = "X") -> np.ndarray:
    """Validate ``X`` as a finite 2-D float array and return a C-ordered copy."""
    A = np.array(X, dtype=np.float64, order="C", copy=True)
    if A.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteValue(f"{name} contains NaN or Inf")
    return A


def as_vector(y, name: str = "y") -> np.ndarray:
    v = np.array(y, dtype=np.float64, copy=True).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise NonFiniteValue(f"{name} contains NaN or Inf")
    return v


@dataclass(frozen=True)
class StandardizeReport:
    """Column means and sample standard deviations (divisor ``n - 1``)."""

    means: np.ndarray
    sds: np.ndarray

    def apply(self, X) -> np.ndarray:
        """Standardize new rows with the stored statistics."""
        X = as_matrix(X)
        if X.shape[1] != self.means.shape[0]:
            raise DimensionMismatch(
                f"expected {self.means.shape[0]} columns, got {X.shape[1]}"
            )
        return (X - self.means) / self.sds


def standardize(X) -> tuple[np.ndarray, StandardizeReport]:
    """Center each column and scale it to unit sample variance.

    Raises
    ------
    ZeroVarianceColumn
        If some column is constant; the offending 0-based index is attached.
    """
    X = as_matrix(X)
    n = X.shape[0]
    if n < 2:
        raise InvalidParameter("standardize needs at least 2 rows")
    means = X.mean(axis=0)
    Xc = X - means
    sds = np.sqrt((Xc * Xc).sum(axis=0) / (n - 1))
    scale = np.maximum(np.abs(means), 1.0)
    for j in range(X.shape[1]):
        # relative test so that round-off on a constant column still counts
        if sds[j] <= 1e-13 * scale[j]:
            raise ZeroVarianceColumn(j)
    Z = Xc / sds
    return Z, StandardizeReport(means=means, sds=sds)


def cholesky_lower(Sigma) -> np.ndarray:
    Sigma = as_matrix(Sigma, "Sigma")
    p, q = Sigma.shape
    if p != q:
        raise DimensionMismatch(f"Sigma must be square, got {Sigma.shape}")
    if not np.array_equal(Sigma, Sigma.T) and not np.allclose(Sigma, Sigma.T, atol=1e-12):
        raise NotPositiveDefinite("Sigma is not symmetric")
    try:
        return linalg.cholesky(Sigma, lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None


def sample_gaussian(n: int, Sigma, seed: int | np.random.Generator) -> np.ndarray:
    """Draw ``n`` rows from ``N(0, Sigma)`` as ``Z @ L.T`` with ``Sigma = L L^T``."""
    L = cholesky_lower(Sigma)
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    Z = rng.standard_normal((n, L.shape[0]))
    return np.ascontiguousarray(Z @ L.T)


def random_orthogonal(p: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.standard_normal((p, p))
    Q, R = np.linalg.qr(G)
    # sign fix makes Q Haar-distributed
    return Q * np.sign(np.diag(R))


def gen_positive_def(p: int, cond_ratio: float = 10.0, seed: int | np.random.Generator = 0) -> np.ndarray:
    """Random covariance with eigenvalues spread over ``[1, cond_ratio]``.

    The smallest eigenvalue is exactly 1 and the largest exactly
    ``cond_ratio``; the remaining ``p - 2`` are uniform in between.  The
    eigenvectors come from a Haar-random orthogonal matrix.
    """
    if p < 2:
        raise InvalidParameter(f"p must be >= 2, got {p}")
    if not cond_ratio > 1:
        raise InvalidParameter(f"cond_ratio must exceed 1, got {cond_ratio}")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    Q = random_orthogonal(p, rng)
    eig = np.concatenate([[1.0, float(cond_ratio)], rng.uniform(1.0, cond_ratio, p - 2)])
    S = (Q * eig) @ Q.T
    return (S + S.T) / 2.0


# ---------------------------------------------------------------------------
# matrix files


def write_csv(path, X) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    np.savetxt(path, X, delimiter=",", fmt="%.17g")


def read_csv(path) -> np.ndarray:
    try:
        A = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: {exc}") from None
    return as_matrix(A)


def write_hnm(path, X) -> None:
    """Write the binary format: ``HNM1``, u64 rows, u64 cols, f64 data (LE)."""
    X = as_matrix(X)
    rows, cols = X.shape
    with open(path, "wb") as fh:
        fh.write(HNM_MAGIC)
        fh.write(struct.pack("<QQ", rows, cols))
        fh.write(X.astype("<f8").tobytes(order="C"))


def read_hnm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 20 or data[:4] != HNM_MAGIC:
        raise MatrixFormatError(f"{path}: missing HNM1 header")
    rows, cols = struct.unpack("<QQ", data[4:20])
    body = data[20:]
    if len(body) != rows * cols * 8:
        raise MatrixFormatError(
            f"{path}: expected {rows * cols * 8} data bytes, found {len(body)}"
        )
    A = np.frombuffer(body, dtype="<f8").reshape(rows, cols)
    return as_matrix(A)


def read_matrix(path) -> np.ndarray:
    """Dispatch on content: HNM1 magic means binary, anything else CSV."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == HNM_MAGIC:
        return read_hnm(path)
    return read_csv(path)
