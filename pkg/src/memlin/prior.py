"""Empirical prior over image samples and its log-moment generating function.

The prior is the uniform atomic measure on n sample rows.  Everything the
solver needs comes from one stabilized log-mean-exp pass: the function
value, the Gibbs weights (a softmax over per-sample inner products), and
the gradient (the weighted sample mean).  All reductions go through numpy's
pairwise/BLAS kernels, so results do not depend on summation order beyond
the 1e-12 contract.
"""

from dataclasses import dataclass

import numpy as np

from .dataset import SampleMatrix
from .errors import DimensionTooLargeError, NonFiniteInputError, OverflowRiskError

_WEIGHT_FLUSH = 1e-300  # denormal guard: weights below this are exactly 0
_MGF_EXP_LIMIT = 700.0  # exp overflow guard for the plain MGF


@dataclass(frozen=True)
class EmpiricalPrior:
    """n samples in [0,1]^d with the cached max row norm |X|."""

    samples: np.ndarray  # (n, d)
    radius: float

    def __post_init__(self):
        self.samples.setflags(write=False)

    @classmethod
    def from_samples(cls, samples, dtype=np.float64) -> "EmpiricalPrior":
        """Build from a SampleMatrix or array; float32 storage is selectable."""
        if isinstance(samples, SampleMatrix):
            samples = samples.samples
        samples = np.asarray(samples, dtype=dtype)
        if samples.ndim != 2 or samples.shape[0] < 1:
            raise ValueError("need a nonempty 2-D sample array")
        if samples.min() < 0.0 or samples.max() > 1.0:
            raise ValueError("samples must lie in [0,1]^d")
        radius = float(np.sqrt(np.einsum("ij,ij->i", samples, samples).max()))
        return cls(samples=samples.copy(), radius=radius)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class LogMgfEval:
    """One evaluation: value L(y), gradient (Gibbs mean), simplex weights."""

    value: float
    gradient: np.ndarray
    weights: np.ndarray


def _check_finite(y, d):
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (d,):
        raise NonFiniteInputError("argument has shape %s, expected (%d,)" % (y.shape, d))
    if not np.all(np.isfinite(y)):
        raise NonFiniteInputError("argument contains non-finite entries")
    return y


def _scores(prior, y):
    return prior.samples @ y


def log_mgf(prior: EmpiricalPrior, y) -> float:
    """log of the mean of exp<y, X_i>, stabilized by the running max."""
    y = _check_finite(y, prior.d)
    s = _scores(prior, y)
    m = float(s.max())
    return m + float(np.log(np.exp(s - m).sum())) - float(np.log(prior.n))


def log_mgf_eval(prior: EmpiricalPrior, y) -> LogMgfEval:
    """Value, Gibbs weights, and gradient in one stabilized pass."""
    y = _check_finite(y, prior.d)
    s = _scores(prior, y)
    m = float(s.max())
    e = np.exp(s - m)
    total = float(e.sum())
    value = m + float(np.log(total)) - float(np.log(prior.n))
    weights = e / total
    weights[weights < _WEIGHT_FLUSH] = 0.0
    gradient = weights @ prior.samples
    return LogMgfEval(value=value, gradient=np.asarray(gradient, dtype=np.float64), weights=weights)


def mgf(prior: EmpiricalPrior, y) -> float:
    """Plain moment generating function; diagnostic use only."""
    y = _check_finite(y, prior.d)
    s = _scores(prior, y)
    if float(s.max()) > _MGF_EXP_LIMIT:
        raise OverflowRiskError(
            "max inner product %g exceeds %g; use log_mgf" % (s.max(), _MGF_EXP_LIMIT)
        )
    return float(np.exp(log_mgf(prior, y)))


def log_mgf_batch(prior: EmpiricalPrior, ys: np.ndarray) -> np.ndarray:
    """Vectorized log_mgf over rows of ys (k, d) -> (k,)."""
    ys = np.asarray(ys, dtype=np.float64)
    s = ys @ prior.samples.T  # (k, n)
    m = s.max(axis=1, keepdims=True)
    return (m[:, 0] + np.log(np.exp(s - m).sum(axis=1)) - np.log(prior.n))


def log_mgf_hessian(prior: EmpiricalPrior, y) -> np.ndarray:
    """Gibbs covariance sum_i w_i X_i X_i^T - g g^T; diagnostic scale d <= 64."""
    if prior.d > 64:
        raise DimensionTooLargeError("hessian is a diagnostic, d=%d > 64" % prior.d)
    ev = log_mgf_eval(prior, y)
    x = np.asarray(prior.samples, dtype=np.float64)
    h = (x.T * ev.weights) @ x - np.outer(ev.gradient, ev.gradient)
    return (h + h.T) / 2.0
