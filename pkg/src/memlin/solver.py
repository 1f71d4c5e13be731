"""Limited-memory BFGS solver for the smooth, strongly convex dual problem.

The dual objective is  phi(z) = ||z||^2/(2 alpha) - <b, z> + L(C^T z)  for the
quadratic fidelity; the quadratic part is supplied through a small callback
object so other smooth conjugate terms can be plugged in (only the quadratic
instance ships).  Strong convexity of modulus 1/alpha turns the final
gradient norm into a certified epsilon bound on the objective gap.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NegativeInputError, NonFiniteInputError
from .operators import LinearOperator
from .prior import EmpiricalPrior, log_mgf_eval


@dataclass(frozen=True)
class QuadraticFidelity:
    """The term ||z||^2/(2 alpha) - <b, z>; strongly convex with modulus 1/alpha."""

    b: np.ndarray
    alpha: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise NegativeInputError("alpha must be positive")
        self.b.setflags(write=False)

    @property
    def strong_convexity(self) -> float:
        return 1.0 / self.alpha

    def value(self, z) -> float:
        return float(z @ z) / (2.0 * self.alpha) - float(self.b @ z)

    def gradient(self, z) -> np.ndarray:
        return z / self.alpha - self.b


@dataclass(frozen=True)
class DualProblem:
    """Empirical prior + forward map + observation + fidelity weight."""

    prior: EmpiricalPrior
    op: LinearOperator
    b: np.ndarray
    alpha: float

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64)
        object.__setattr__(self, "b", b)
        b.setflags(write=False)
        m, d = self.op.shape
        if d != self.prior.d:
            raise NonFiniteInputError(
                "operator maps dimension %d, prior has d=%d" % (d, self.prior.d)
            )
        if b.shape != (m,):
            raise NonFiniteInputError("b has shape %s, expected (%d,)" % (b.shape, m))
        if self.alpha <= 0:
            raise NegativeInputError("alpha must be positive")

    @property
    def m(self) -> int:
        return self.op.shape[0]

    def fidelity(self) -> QuadraticFidelity:
        return QuadraticFidelity(b=self.b.copy(), alpha=self.alpha)


@dataclass(frozen=True)
class SolverConfig:
    memory: int = 10
    grad_tol: float = 1e-9
    max_iter: int = 500
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    max_line_search: int = 60

    def __post_init__(self):
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise ValueError("need 0 < c1 < c2 < 1")
        if self.memory < 1:
            raise ValueError("memory must be >= 1")


@dataclass
class DualSolveResult:
    z_bar: np.ndarray
    grad_norm: float
    epsilon_cert: float  # alpha * grad_norm^2 / 2 for the quadratic fidelity
    iterations: int
    objective: float
    converged: bool
    objective_trace: list = field(default_factory=list)


def _check_z(p: DualProblem, z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (p.m,):
        raise NonFiniteInputError("z has shape %s, expected (%d,)" % (z.shape, p.m))
    if not np.all(np.isfinite(z)):
        raise NonFiniteInputError("z contains non-finite entries")
    return z


def dual_objective(p: DualProblem, z, fidelity=None) -> float:
    z = _check_z(p, z)
    fid = p.fidelity() if fidelity is None else fidelity
    return fid.value(z) + log_mgf_eval(p.prior, p.op.apply_adjoint(z)).value


def dual_gradient(p: DualProblem, z, fidelity=None) -> np.ndarray:
    z = _check_z(p, z)
    fid = p.fidelity() if fidelity is None else fidelity
    ev = log_mgf_eval(p.prior, p.op.apply_adjoint(z))
    return fid.gradient(z) + p.op.apply(ev.gradient)


def epsilon_distance_bound(alpha: float, epsilon: float) -> float:
    """Distance bound sqrt(2 alpha epsilon) between an epsilon-minimizer and
    the exact minimizer, from 1/alpha strong convexity."""
    if alpha <= 0 or epsilon < 0:
        raise NegativeInputError("need alpha > 0 and epsilon >= 0")
    return float(np.sqrt(2.0 * alpha * epsilon))


def _two_loop(grad, s_hist, y_hist, rho_hist):
    q = grad.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        beta = rho * float(y @ q)
        q += (a - beta) * s
    return -q


def _cubic_step(t_lo, f_lo, g_lo, t_hi, f_hi, g_hi):
    # Minimizer of the cubic interpolant; falls back to bisection when flat.
    d1 = g_lo + g_hi - 3.0 * (f_lo - f_hi) / (t_lo - t_hi)
    disc = d1 * d1 - g_lo * g_hi
    if disc < 0.0:
        return 0.5 * (t_lo + t_hi)
    d2 = np.sqrt(disc)
    if t_lo <= t_hi:
        t = t_hi - (t_hi - t_lo) * (g_hi + d2 - d1) / (g_hi - g_lo + 2.0 * d2)
    else:
        t = t_lo - (t_lo - t_hi) * (g_lo + d2 - d1) / (g_lo - g_hi + 2.0 * d2)
    lo, hi = min(t_lo, t_hi), max(t_lo, t_hi)
    if not np.isfinite(t) or t <= lo or t >= hi:
        return 0.5 * (t_lo + t_hi)
    return float(t)


def _strong_wolfe(phi, f0, df0, c1, c2, t_init, max_evals):
    """Bracket-and-zoom line search enforcing the strong Wolfe conditions.

    phi(t) -> (f, df, g_full); returns (t, f, g_full, ok).  ok=False means the
    search could not certify Wolfe; a strictly decreasing point may still be
    returned when one was seen, otherwise t=0 with g_full=None.
    """
    t_prev, f_prev, df_prev, g_prev = 0.0, f0, df0, None
    t = t_init
    bracket = None
    evals = 0
    while evals < max_evals:
        f, df, g = phi(t)
        evals += 1
        if f > f0 + c1 * t * df0 or (evals > 1 and f >= f_prev):
            bracket = (t_prev, f_prev, df_prev, g_prev, t, f, df, g)
            break
        if abs(df) <= -c2 * df0:
            return t, f, g, True
        if df >= 0.0:
            bracket = (t, f, df, g, t_prev, f_prev, df_prev, g_prev)
            break
        t_prev, f_prev, df_prev, g_prev = t, f, df, g
        t *= 2.0
    if bracket is None:
        if t_prev > 0.0 and f_prev < f0:
            return t_prev, f_prev, g_prev, False
        return 0.0, f0, None, False
    t_lo, f_lo, df_lo, g_lo, t_hi, f_hi, df_hi, g_hi = bracket
    while evals < max_evals:
        span = abs(t_hi - t_lo)
        if span <= 1e-16 * max(1.0, abs(t_lo), abs(t_hi)):
            break
        t = _cubic_step(t_lo, f_lo, df_lo, t_hi, f_hi, df_hi)
        if min(abs(t - t_lo), abs(t - t_hi)) < 0.1 * span:
            t = 0.5 * (t_lo + t_hi)  # keep the bracket shrinking geometrically
        f, df, g = phi(t)
        evals += 1
        if f > f0 + c1 * t * df0 or f >= f_lo:
            t_hi, f_hi, df_hi, g_hi = t, f, df, g
        else:
            if abs(df) <= -c2 * df0:
                return t, f, g, True
            if df * (t_hi - t_lo) >= 0.0:
                t_hi, f_hi, df_hi, g_hi = t_lo, f_lo, df_lo, g_lo
            t_lo, f_lo, df_lo, g_lo = t, f, df, g
    if t_lo > 0.0 and f_lo < f0 and g_lo is not None:
        return t_lo, f_lo, g_lo, False
    return 0.0, f0, None, False


def solve_dual(p: DualProblem, cfg: SolverConfig | None = None, fidelity=None) -> DualSolveResult:
    """L-BFGS (two-loop recursion, strong Wolfe line search) from z0 = 0.

    The objective vanishes at the origin and the minimizer lives in a ball
    around it, so descent from zero is certified.  On exit epsilon_cert =
    grad_norm^2 / (2c) bounds the objective gap, with c the strong-convexity
    modulus of the fidelity (1/alpha for the quadratic).  A failed line
    search reports the best iterate seen with converged=False.
    """
    cfg = cfg or SolverConfig()
    fid = p.fidelity() if fidelity is None else fidelity
    c = fid.strong_convexity
    if c <= 0:
        raise NegativeInputError("fidelity must declare a positive strong convexity")

    def value_and_grad(z):
        ev = log_mgf_eval(p.prior, p.op.apply_adjoint(z))
        return fid.value(z) + ev.value, fid.gradient(z) + p.op.apply(ev.gradient)

    z = np.zeros(p.m)
    f, g = value_and_grad(z)
    trace = [f]
    s_hist, y_hist, rho_hist = [], [], []
    converged = False
    line_search_ok = True
    iterations = 0

    while iterations < cfg.max_iter:
        g_norm = float(np.linalg.norm(g))
        if g_norm <= cfg.grad_tol:
            converged = True
            break
        direction = _two_loop(g, s_hist, y_hist, rho_hist)
        df0 = float(g @ direction)
        if df0 >= 0.0:  # not a descent direction (numerical breakdown): restart
            direction = -g
            df0 = -g_norm * g_norm
            s_hist, y_hist, rho_hist = [], [], []

        def phi(t, _z=z, _dir=direction):
            f_t, g_t = value_and_grad(_z + t * _dir)
            return f_t, float(g_t @ _dir), g_t

        t_init = 1.0 if s_hist else min(1.0, 1.0 / max(g_norm, 1.0))
        t, f_new, g_new, ok = _strong_wolfe(
            phi, f, df0, cfg.wolfe_c1, cfg.wolfe_c2, t_init, cfg.max_line_search
        )
        if t <= 0.0 or g_new is None:
            line_search_ok = False
            break
        z_new = z + t * direction
        s = z_new - z
        yv = g_new - g
        sy = float(s @ yv)
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(yv)):
            s_hist.append(s)
            y_hist.append(yv)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > cfg.memory:
                s_hist.pop(0)
                y_hist.pop(0)
                rho_hist.pop(0)
        z, f, g = z_new, f_new, g_new
        trace.append(f)
        iterations += 1
        if not ok:
            # accepted a decreasing step without a Wolfe certificate; the
            # implicit Hessian may be poisoned, so drop history and continue
            s_hist, y_hist, rho_hist = [], [], []

    g_norm = float(np.linalg.norm(g))
    if g_norm <= cfg.grad_tol:
        converged = True
    elif not line_search_ok:
        converged = False
    return DualSolveResult(
        z_bar=z,
        grad_norm=g_norm,
        epsilon_cert=g_norm * g_norm / (2.0 * c),
        iterations=iterations,
        objective=f,
        converged=converged,
        objective_trace=trace,
    )
