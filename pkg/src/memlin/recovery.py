"""Primal recovery from a dual solution, measure/pixel post-processing, KL."""

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptySupportError,
    InvalidGammaError,
    NonFiniteInputError,
    ZeroReferenceError,
)
from .operators import LinearOperator
from .prior import EmpiricalPrior, log_mgf_eval


@dataclass(frozen=True)
class RecoveredSolution:
    """Primal point x_bar = sum_i w_i X_i plus the discrete optimal measure."""

    x_bar: np.ndarray
    weights: np.ndarray
    support_size: int
    prior: EmpiricalPrior

    def __post_init__(self):
        self.x_bar.setflags(write=False)
        self.weights.setflags(write=False)


def recover_primal(prior: EmpiricalPrior, op: LinearOperator, z_bar) -> RecoveredSolution:
    """Gibbs weights and their convex combination at C^T z_bar.

    This is the gradient of the log-moment generating function, i.e. the
    unique primal solution once z_bar minimizes the dual.
    """
    z_bar = np.asarray(z_bar, dtype=np.float64)
    if not np.all(np.isfinite(z_bar)):
        raise NonFiniteInputError("z_bar contains non-finite entries")
    ev = log_mgf_eval(prior, op.apply_adjoint(z_bar))
    return RecoveredSolution(
        x_bar=ev.gradient,
        weights=ev.weights,
        support_size=int(np.count_nonzero(ev.weights)),
        prior=prior,
    )


def threshold_measure(sol: RecoveredSolution, tau: float) -> RecoveredSolution:
    """Zero out weights below tau, renormalize survivors, rebuild x_bar."""
    if not 0.0 <= tau < 1.0:
        raise ValueError("tau must be in [0, 1)")
    keep = sol.weights >= tau
    if tau == 0.0 or bool(keep.all()):
        return sol
    if not keep.any():
        raise EmptySupportError("every weight falls below tau=%g" % tau)
    weights = np.where(keep, sol.weights, 0.0)
    weights = weights / weights.sum()
    x_bar = weights @ sol.prior.samples
    return RecoveredSolution(
        x_bar=np.asarray(x_bar, dtype=np.float64),
        weights=weights,
        support_size=int(np.count_nonzero(weights)),
        prior=sol.prior,
    )


def pixel_mask(x, gamma: float) -> np.ndarray:
    """Snap near-white pixels (>= 1-gamma) to 1 and near-black (<= gamma) to 0."""
    if not 0.0 <= gamma < 0.5:
        raise InvalidGammaError("gamma must be in [0, 0.5)")
    x = np.asarray(x, dtype=np.float64)
    out = x.copy()
    out[x >= 1.0 - gamma] = 1.0
    out[x <= gamma] = 0.0
    return out


def kl_to_prior(sol: RecoveredSolution) -> float:
    """Discrete KL divergence of the recovered measure against the uniform prior."""
    w = sol.weights
    n = w.shape[0]
    pos = w > 0.0
    return float(np.sum(w[pos] * np.log(n * w[pos])))


def relative_error(x, x_ref) -> float:
    """||x - x_ref|| / ||x_ref||."""
    x = np.asarray(x, dtype=np.float64)
    x_ref = np.asarray(x_ref, dtype=np.float64)
    ref_norm = float(np.linalg.norm(x_ref))
    if ref_norm == 0.0:
        raise ZeroReferenceError("reference vector has zero norm")
    return float(np.linalg.norm(x - x_ref)) / ref_norm
