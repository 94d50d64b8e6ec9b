"""Kernel PCA with an inhomogeneous polynomial kernel.

The Gram matrix of the (standardised) training rows is double-centred and
eigendecomposed; the top ``k`` eigenvectors, scaled by ``1/sqrt(lambda)``,
are the dual coefficients used to project new rows.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import _binio
from .errors import FormatError, NumericError, RankDeficiencyError, UsageError

SYMMETRY_TOL = 1e-10
# cyclic Jacobi is O(n^3) per sweep in Python-level rotations; above this
# size fit() hands the centred Gram matrix to LAPACK instead
JACOBI_MAX_N = 160
DEFAULT_MAX_ROWS = 2000


@dataclass(frozen=True)
class KernelConfig:
    degree: int = 3
    gain: float | None = None  # None -> 1 / input_dim, resolved at fit time
    offset: float = 1.0

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 1:
            raise UsageError(f"kernel degree must be a positive integer, got {self.degree}")
        if self.gain is not None and not self.gain > 0:
            raise UsageError(f"kernel gain must be positive, got {self.gain}")
        if not self.offset >= 0:
            raise UsageError(f"kernel offset must be non-negative, got {self.offset}")

    def resolved(self, dim):
        return KernelConfig(self.degree, 1.0 / dim if self.gain is None else self.gain, self.offset)


def poly_kernel(x, y, cfg=KernelConfig()):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise UsageError(f"kernel arguments must be equal-length vectors, got {x.shape} and {y.shape}")
    cfg = cfg.resolved(x.size)
    return float((cfg.gain * np.dot(x, y) + cfg.offset) ** cfg.degree)


def gram(A, B, cfg):
    """Kernel matrix between the rows of ``A`` and ``B``; cfg must be resolved."""
    return (cfg.gain * (A @ B.T) + cfg.offset) ** cfg.degree


def center_gram(K):
    """Double-centre a square Gram matrix; returns (K', row_means, grand_mean)."""
    row_means = K.mean(axis=1)
    grand = float(row_means.mean())
    Kc = K - row_means[:, None] - row_means[None, :] + grand
    return Kc, row_means, grand


def symmetric_eig(M, tol=1e-12, max_sweeps=100):
    """Eigenpairs of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps over the strict upper triangle in row order until every
    off-diagonal entry is below ``tol * ||M||_F``. Returns eigenvalues in
    descending order and the matching orthonormal eigenvectors as columns.
    """
    A = np.array(M, dtype=np.float64, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise UsageError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    scale = max(1.0, float(np.max(np.abs(A)))) if n else 1.0
    if not np.allclose(A, A.T, rtol=0.0, atol=SYMMETRY_TOL * scale):
        raise UsageError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    thresh = tol * np.linalg.norm(A)

    for _ in range(max_sweeps):
        off = np.abs(A - np.diag(np.diag(A)))
        if n < 2 or off.max() < thresh or off.max() == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < thresh:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q]
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :]
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q]
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise NumericError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")

    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def _eigh_desc(M):
    w, V = np.linalg.eigh(M)
    return w[::-1].copy(), V[:, ::-1].copy()


@dataclass
class KpcaModel:
    train: np.ndarray            # standardised training rows, N x D
    kernel: KernelConfig         # resolved (gain filled in)
    mean: np.ndarray             # per-column standardisation
    scale: np.ndarray
    eigenvalues: np.ndarray      # top-k, descending
    alphas: np.ndarray           # N x k, eigenvectors / sqrt(lambda)
    row_means: np.ndarray
    grand_mean: float
    total_spectrum: float        # sum of all positive eigenvalues of K'
    max_rows: int = 0            # subsampling cap used at fit time, 0 = none

    @property
    def in_dim(self):
        return self.train.shape[1]

    @property
    def out_dim(self):
        return self.alphas.shape[1]

    def standardize(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale

    def transform(self, X):
        return transform(self, X)


def _subsample(n, cap):
    if not cap or n <= cap:
        return np.arange(n)
    return np.unique(np.round(np.linspace(0, n - 1, cap)).astype(np.int64))


def fit(X, out_dim=30, cfg=KernelConfig(), standardize=True, max_rows=DEFAULT_MAX_ROWS,
        solver="auto"):
    """Fit kernel PCA on the rows of ``X`` and keep ``out_dim`` components.

    With ``standardize`` each column is z-scored with the training mean and
    standard deviation (constant columns keep scale 1). When there are more
    than ``max_rows`` rows an evenly strided subset is used.
    ``solver`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi for small
    problems).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise UsageError(f"training data must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise UsageError("training data contains non-finite values")
    idx = _subsample(X.shape[0], max_rows)
    X = X[idx]
    n, d = X.shape
    if not 1 <= out_dim < n:
        raise UsageError(f"need 1 <= out_dim < n_rows, got out_dim={out_dim}, n_rows={n}")

    if standardize:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
    else:
        mean = np.zeros(d)
        scale = np.ones(d)
    Z = (X - mean) / scale
    kcfg = cfg.resolved(d)

    K = gram(Z, Z, kcfg)
    Kc, row_means, grand = center_gram(K)
    Kc = 0.5 * (Kc + Kc.T)

    if solver == "auto":
        solver = "jacobi" if n <= JACOBI_MAX_N else "lapack"
    if solver == "jacobi":
        w, V = symmetric_eig(Kc)
    elif solver == "lapack":
        w, V = _eigh_desc(Kc)
    else:
        raise UsageError(f"unknown eigensolver {solver!r}")

    floor = max(1e-10 * max(w[0], 0.0), 1e-12 * n * float(np.max(np.abs(K))))
    positive = w > floor
    if np.count_nonzero(positive) < out_dim:
        raise RankDeficiencyError(
            f"centred Gram matrix has {np.count_nonzero(positive)} usable eigenvalues, "
            f"{out_dim} requested")
    lam = w[:out_dim].copy()
    alphas = np.ascontiguousarray(V[:, :out_dim] / np.sqrt(lam))
    return KpcaModel(train=Z, kernel=kcfg, mean=mean, scale=scale, eigenvalues=lam,
                     alphas=alphas, row_means=row_means, grand_mean=grand,
                     total_spectrum=float(w[positive].sum()),
                     max_rows=int(max_rows or 0))


def transform(model, X):
    """Project rows (or a single vector) onto the fitted components."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X2 = X[None, :] if single else X
    if X2.ndim != 2 or X2.shape[1] != model.in_dim:
        raise UsageError(f"expected rows of dimension {model.in_dim}, got shape {X.shape}")
    kx = gram(model.standardize(X2), model.train, model.kernel)
    kx = kx - kx.mean(axis=1, keepdims=True) - model.row_means[None, :] + model.grand_mean
    out = kx @ model.alphas
    return out[0] if single else out


def cumulative_explained_variance(model):
    """Running fraction of the positive centred-Gram spectrum captured."""
    return np.cumsum(model.eigenvalues) / model.total_spectrum


# ---- KPCA model file -------------------------------------------------------

MAGIC = b"KPCA"


def dumps(model):
    n, d = model.train.shape
    k = model.out_dim
    kc = model.kernel
    parts = [
        MAGIC, _binio.pack("IIII", 1, d, n, k),
        _binio.pack("ddd", float(kc.degree), kc.gain, kc.offset),
        _binio.le_bytes(model.mean, "f8"), _binio.le_bytes(model.scale, "f8"),
        _binio.le_bytes(model.train, "f8"), _binio.le_bytes(model.row_means, "f8"),
        _binio.pack("d", model.grand_mean),
        _binio.le_bytes(model.eigenvalues, "f8"), _binio.le_bytes(model.alphas, "f8"),
        _binio.pack("dI", model.total_spectrum, model.max_rows),
    ]
    return b"".join(parts)


def loads(blob):
    r = _binio.Reader(blob, "KPCA")
    r.magic(MAGIC)
    r.version()
    d = r.scalar("I", "D")
    n = r.scalar("I", "N")
    k = r.scalar("I", "k")
    if not (d >= 1 and n >= 1 and 1 <= k <= n):
        raise FormatError("KPCA.extents", f"invalid D={d}, N={n}, k={k}")
    degree, gain, offset = (r.scalar("d", f) for f in ("degree", "gain", "offset"))
    if degree != int(degree) or degree < 1 or not gain > 0 or not offset >= 0:
        raise FormatError("KPCA.kernel", f"invalid kernel ({degree}, {gain}, {offset})")
    mean = r.array("f8", d, "mean")
    scale = r.array("f8", d, "scale")
    train = r.array("f8", n * d, "train").reshape(n, d)
    row_means = r.array("f8", n, "row_means")
    grand = r.scalar("d", "grand_mean")
    eig = r.array("f8", k, "eigenvalues")
    alphas = r.array("f8", n * k, "alphas").reshape(n, k)
    total = r.scalar("d", "total_spectrum")
    cap = r.scalar("I", "max_rows")
    r.finish()
    return KpcaModel(train=train, kernel=KernelConfig(int(degree), gain, offset), mean=mean,
                     scale=scale, eigenvalues=eig, alphas=alphas, row_means=row_means,
                     grand_mean=grand, total_spectrum=total, max_rows=cap)


def save(model, path):
    _binio.write_file(path, dumps(model))


def load(path):
    return loads(_binio.read_file(path))
