"""Forward maps C with exact adjoints and singular-value estimates."""

import warnings
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, InvalidRankError, NoConvergenceWarning
from .rng import make_rng

_POWER_ITER_SEED = 0x5EED


class LinearOperator:
    """A linear map R^d -> R^m with an exact adjoint.

    Subclasses set `kind` and implement `apply`, `apply_adjoint`, and
    `as_matrix`.  Instances are immutable and safe to share.
    """

    kind = "abstract"
    shape: tuple[int, int]  # (m, d)

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply_adjoint(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def as_matrix(self) -> np.ndarray:
        """Dense m x d matrix; intended for desk-scale diagnostics only."""
        m, d = self.shape
        cols = [self.apply(e) for e in np.eye(d)]
        return np.column_stack(cols) if cols else np.zeros((m, 0))

    def _check_input(self, v, length, name):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (length,):
            raise DimensionMismatchError(
                "%s has shape %s, expected (%d,)" % (name, v.shape, length)
            )
        return v


class IdentityOperator(LinearOperator):
    kind = "identity"

    def __init__(self, d: int):
        self.shape = (d, d)

    def apply(self, x):
        return self._check_input(x, self.shape[1], "x").copy()

    def apply_adjoint(self, z):
        return self._check_input(z, self.shape[0], "z").copy()

    def as_matrix(self):
        return np.eye(self.shape[0])


class DenseOperator(LinearOperator):
    kind = "dense"

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise DimensionMismatchError("dense operator needs a 2-D matrix")
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.shape = matrix.shape

    def apply(self, x):
        return self.matrix @ self._check_input(x, self.shape[1], "x")

    def apply_adjoint(self, z):
        return self.matrix.T @ self._check_input(z, self.shape[0], "z")

    def as_matrix(self):
        return self.matrix.copy()


class SeparableBlurOperator(LinearOperator):
    """Row-then-column 1-D convolution with zero-padding boundary.

    The adjoint is correlation with the same kernel about the same center,
    so <Cx, z> = <x, C^T z> holds exactly.
    """

    kind = "separable-blur"

    def __init__(self, kernel, rows: int, cols: int):
        kernel = np.asarray(kernel, dtype=np.float64)
        if kernel.ndim != 1 or kernel.size < 1:
            raise DimensionMismatchError("kernel must be a nonempty 1-D array")
        self.kernel = kernel
        self.kernel.setflags(write=False)
        self.rows = rows
        self.cols = cols
        d = rows * cols
        self.shape = (d, d)
        self._center = (kernel.size - 1) // 2

    def _conv_axis(self, img, axis, adjoint):
        out = np.zeros_like(img)
        n = img.shape[axis]
        for k, wk in enumerate(self.kernel):
            shift = k - self._center
            if adjoint:
                shift = -shift
            # out[i] += wk * img[i + shift], zero outside the image
            lo, hi = max(0, -shift), min(n, n - shift)
            if lo >= hi:
                continue
            dst = [slice(None)] * 2
            src = [slice(None)] * 2
            dst[axis] = slice(lo, hi)
            src[axis] = slice(lo + shift, hi + shift)
            out[tuple(dst)] += wk * img[tuple(src)]
        return out

    def _blur(self, x, adjoint):
        img = self._check_input(x, self.shape[1], "x").reshape(self.rows, self.cols)
        img = self._conv_axis(img, 1, adjoint)
        img = self._conv_axis(img, 0, adjoint)
        return img.ravel()

    def apply(self, x):
        return self._blur(x, adjoint=False)

    def apply_adjoint(self, z):
        return self._blur(z, adjoint=True)


def identity(d: int) -> IdentityOperator:
    return IdentityOperator(d)


def dense(matrix) -> DenseOperator:
    return DenseOperator(matrix)


def separable_blur(kernel, rows: int, cols: int) -> SeparableBlurOperator:
    return SeparableBlurOperator(kernel, rows, cols)


def dense_from_csv(path) -> DenseOperator:
    """Load a dense operator from a row-major comma-separated matrix file."""
    matrix = np.loadtxt(Path(path), delimiter=",", ndmin=2)
    return DenseOperator(matrix)


def spectral_norm(op: LinearOperator, tol: float = 1e-10, max_iter: int = 5000) -> float:
    """Largest singular value via power iteration on C^T C.

    Stops when the Rayleigh quotient's relative change drops below tol;
    warns NoConvergenceWarning (and returns the best estimate) otherwise.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m, d = op.shape
    rng = make_rng(_POWER_ITER_SEED)
    v = rng.standard_normal(d)
    v_norm = np.linalg.norm(v)
    if v_norm == 0:
        v = np.ones(d)
        v_norm = np.sqrt(d)
    v /= v_norm
    lam_prev = 0.0
    for _ in range(max_iter):
        w = op.apply_adjoint(op.apply(v))
        lam = float(v @ w)
        w_norm = np.linalg.norm(w)
        if w_norm == 0.0:
            return 0.0
        v = w / w_norm
        if abs(lam - lam_prev) <= tol * max(abs(lam), 1e-300):
            return float(np.sqrt(max(lam, 0.0)))
        lam_prev = lam
    warnings.warn(
        "power iteration did not meet tol=%g after %d iterations" % (tol, max_iter),
        NoConvergenceWarning,
    )
    return float(np.sqrt(max(lam_prev, 0.0)))


def sigma_min(op: LinearOperator, tol: float = 1e-10) -> float:
    """Smallest singular value of C; requires m >= d (tall or square).

    Dense SVD for d <= 2048, shifted inverse iteration on C^T C beyond that.
    Raises InvalidRankError when the estimate falls below tol, i.e. the
    operator is numerically rank-deficient.
    """
    m, d = op.shape
    if m < d:
        raise InvalidRankError("m=%d < d=%d cannot have rank d" % (m, d))
    if d <= 2048:
        smallest = float(np.linalg.svd(op.as_matrix(), compute_uv=False)[-1])
    else:
        smallest = _sigma_min_inverse_iteration(op)
    if smallest < tol:
        raise InvalidRankError(
            "smallest singular value %g below tol %g (rank-deficient)" % (smallest, tol)
        )
    return smallest


def _sigma_min_inverse_iteration(op, shift_scale=1e-12, max_iter=200, tol=1e-12):
    # Inverse power iteration on C^T C + shift, Cholesky-factored once.
    m, d = op.shape
    mat = op.as_matrix()
    gram = mat.T @ mat
    shift = shift_scale * np.trace(gram) / d
    chol = np.linalg.cholesky(gram + shift * np.eye(d))
    rng = make_rng(_POWER_ITER_SEED)
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    lam_prev = np.inf
    for _ in range(max_iter):
        w = np.linalg.solve(chol.T, np.linalg.solve(chol, v))
        w_norm = np.linalg.norm(w)
        v = w / w_norm
        lam = float(v @ (gram @ v))
        if abs(lam - lam_prev) <= tol * max(abs(lam), 1e-300):
            break
        lam_prev = lam
    return float(np.sqrt(max(lam, 0.0)))
