"""Explicit problem constants, distance surrogates, and the rate benchmark.

The constants bound the dual minimizer's norm and value; the log-MGF
discrepancy over a dual ball controls how far solutions for two priors can
drift apart; the rate experiment measures that drift empirically against a
full-data reference as the sample count grows.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import SampleMatrix, subsample
from .errors import BoundViolatedError, InvalidRankError, RankDeficientError
from .operators import LinearOperator, sigma_min, spectral_norm
from .prior import EmpiricalPrior, log_mgf_batch
from .recovery import recover_primal, relative_error
from .rng import derive_seed, make_rng
from .solver import DualProblem, SolverConfig, solve_dual

BALL_RADIUS_FACTOR = 2.0  # diagnostics sample B_rho with rho = 2 * rho0 by default


@dataclass(frozen=True)
class ProblemConstants:
    rho_hat: float
    rho0: float
    k_hat: float
    k: float
    ball_radius_used: float

    def to_dict(self) -> dict:
        return {
            "rho_hat": self.rho_hat,
            "rho0": self.rho0,
            "k_hat": self.k_hat,
            "k": self.k,
            "ball_radius_used": self.ball_radius_used,
        }


def lipschitz_bound(radius: float, rho_hat: float) -> float:
    """Uniform bound on the diagonal of the log-MGF Hessian over B_rho_hat.

    Grossly conservative by design; overflow saturates to inf.
    """
    with np.errstate(over="ignore"):
        e = np.exp(2.0 * rho_hat * radius)
    return float(radius * e + radius * radius * e)


def _rho_constants(alpha, b_norm, op_norm, radius):
    rho_hat = 2.0 * alpha * (b_norm + op_norm * radius)
    rho0 = max(
        rho_hat,
        rho_hat * rho_hat / (2.0 * alpha) + b_norm * rho_hat + rho_hat * op_norm * radius,
    )
    return rho_hat, rho0


def _constants(alpha, b_norm, op_norm, radius, dim, epsilon):
    rho_hat, rho0 = _rho_constants(alpha, b_norm, op_norm, radius)
    ball = op_norm * (rho0 + np.sqrt(2.0 * alpha * epsilon))
    k_hat = lipschitz_bound(radius, ball)
    return ProblemConstants(
        rho_hat=float(rho_hat),
        rho0=float(rho0),
        k_hat=k_hat,
        k=float(dim * k_hat),
        ball_radius_used=float(BALL_RADIUS_FACTOR * rho0),
    )


def compute_constants(p: DualProblem, epsilon: float | None = None) -> ProblemConstants:
    """Norm/value bounds for the dual minimizer and the gradient Lipschitz bound.

    epsilon defaults to the certificate implied by the default solver
    tolerance.  A numerically zero operator is rejected: every bound here
    feeds theorems that assume rank(C) = d.
    """
    op_norm = spectral_norm(p.op)
    if op_norm <= 1e-300:
        raise InvalidRankError("operator is numerically zero; rank(C)=d cannot hold")
    if epsilon is None:
        grad_tol = SolverConfig().grad_tol
        epsilon = p.alpha * grad_tol * grad_tol / 2.0
    return _constants(
        p.alpha,
        float(np.linalg.norm(p.b)),
        op_norm,
        p.prior.radius,
        p.prior.d,
        epsilon,
    )


def _ball_points(m, rho, count, seed):
    """`count` points uniform in the ball B_rho of R^m.

    The first m coordinates of a uniform point on the (m+1)-sphere are
    uniform in the m-ball, so one (m+2)-normal block per point suffices;
    a longer draw from the same seed extends a shorter one (nested-sample
    monotonicity).
    """
    block = make_rng(seed).standard_normal(count * (m + 2)).reshape(count, m + 2)
    norms = np.linalg.norm(block, axis=1)
    norms[norms == 0.0] = 1.0
    return rho * block[:, :m] / norms[:, None]


def _adjoint_rows(op, zs):
    return np.stack([op.apply_adjoint(z) for z in zs])


def epi_distance_estimate(
    nu: EmpiricalPrior,
    mu: EmpiricalPrior,
    op: LinearOperator,
    rho: float,
    samples: int,
    seed: int,
) -> float:
    """Sampled lower bound on the max log-MGF discrepancy over the ball B_rho.

    Non-decreasing in `samples` for a fixed seed; symmetric in (nu, mu);
    exactly zero when both priors are the same object.
    """
    if rho <= 0 or samples < 1:
        raise ValueError("need rho > 0 and samples >= 1")
    if nu is mu:
        return 0.0
    zs = _ball_points(op.shape[0], rho, samples, seed)
    ys = _adjoint_rows(op, zs)
    diff = log_mgf_batch(nu, ys) - log_mgf_batch(mu, ys)
    return float(np.abs(diff).max())


def epi_distance_grid(
    nu: EmpiricalPrior,
    mu: EmpiricalPrior,
    op: LinearOperator,
    rho: float,
    points_per_axis: int = 15,
) -> float:
    """Certified overestimate of the ball discrepancy via a dense cube grid.

    Grid maximum plus a Lipschitz pad over the covering radius; the
    discrepancy is Lipschitz with constant ||C|| (|X_nu| + |X_mu|).
    Intended for small m only (cost grows like points_per_axis^m).
    """
    m = op.shape[0]
    if points_per_axis < 2:
        raise ValueError("need at least 2 points per axis")
    axes = [np.linspace(-rho, rho, points_per_axis)] * m
    mesh = np.meshgrid(*axes, indexing="ij")
    zs = np.stack([g.ravel() for g in mesh], axis=1)
    keep = np.linalg.norm(zs, axis=1) <= rho
    zs = np.vstack([zs[keep], np.zeros((1, m))])  # origin is always inside
    ys = _adjoint_rows(op, zs)
    grid_max = float(np.abs(log_mgf_batch(nu, ys) - log_mgf_batch(mu, ys)).max())
    spacing = 2.0 * rho / (points_per_axis - 1)
    covering_radius = spacing * np.sqrt(m) / 2.0
    lip = spectral_norm(op) * (nu.radius + mu.radius)
    return grid_max + float(lip * covering_radius)


@dataclass(frozen=True)
class MgfBoundsReport:
    trials: int
    violations: int
    log_bound: float
    min_margin: float
    mean_margin: float
    rho: float
    op_norm: float
    radius: float

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "violations": self.violations,
            "log_bound": self.log_bound,
            "min_margin": self.min_margin,
            "mean_margin": self.mean_margin,
            "rho": self.rho,
            "op_norm": self.op_norm,
            "radius": self.radius,
        }


def mgf_bounds_check(
    prior: EmpiricalPrior,
    op: LinearOperator,
    rho: float,
    trials: int = 1000,
    seed: int = 0,
) -> MgfBoundsReport:
    """Verify the MGF stays within exp(+-rho ||C|| |X|) over sampled z in B_rho.

    Checked in log space (identical assertion, no overflow); margins are in
    log units.  A violation beyond float slack raises BoundViolatedError
    carrying the report -- the bound is unconditional, so that indicates an
    implementation bug.
    """
    if rho <= 0 or trials < 1:
        raise ValueError("need rho > 0 and trials >= 1")
    zs = _ball_points(op.shape[0], rho, trials, seed)
    ys = _adjoint_rows(op, zs)
    values = log_mgf_batch(prior, ys)
    op_norm = spectral_norm(op)
    log_bound = rho * op_norm * prior.radius
    margins = log_bound - np.abs(values)
    slack = 1e-9 * (1.0 + log_bound)
    violations = int(np.count_nonzero(margins < -slack))
    report = MgfBoundsReport(
        trials=trials,
        violations=violations,
        log_bound=float(log_bound),
        min_margin=float(margins.min()),
        mean_margin=float(margins.mean()),
        rho=float(rho),
        op_norm=float(op_norm),
        radius=float(prior.radius),
    )
    if violations:
        raise BoundViolatedError(
            "%d of %d sampled points violate the MGF bound" % (violations, trials),
            report=report,
        )
    return report


def error_bound_formula(
    alpha: float,
    smallest_singular: float,
    op_norm: float,
    k: float,
    epsilon: float,
    d_rho: float,
) -> float:
    """Right-hand side of the primal discrepancy bound, fully parameterized."""
    if smallest_singular <= 0:
        raise RankDeficientError("bound requires sigma_min > 0")
    sqrt_alpha = np.sqrt(alpha)
    return float(
        d_rho / (alpha * smallest_singular)
        + (2.0 * np.sqrt(2.0) / (sqrt_alpha * smallest_singular)) * np.sqrt(d_rho)
        + (k * op_norm * np.sqrt(2.0 * alpha) + 2.0 / (sqrt_alpha * smallest_singular))
        * np.sqrt(epsilon)
    )


def primal_error_bound(
    p: DualProblem,
    nu: EmpiricalPrior,
    epsilon: float,
    d_rho: float,
    rank_tol: float = 1e-10,
) -> float:
    """Guaranteed bound on ||x_nu_eps - x_mu|| given the ball discrepancy d_rho.

    The Lipschitz constant is computed with the larger of the two prior
    radii so it covers both measures.
    """
    if epsilon < 0 or d_rho < 0:
        raise ValueError("epsilon and d_rho must be nonnegative")
    try:
        smallest = sigma_min(p.op, tol=rank_tol)
    except InvalidRankError as exc:
        raise RankDeficientError(str(exc)) from exc
    op_norm = spectral_norm(p.op)
    radius = max(p.prior.radius, nu.radius)
    consts = _constants(
        p.alpha, float(np.linalg.norm(p.b)), op_norm, radius, p.prior.d, epsilon
    )
    return error_bound_formula(p.alpha, smallest, op_norm, consts.k, epsilon, d_rho)


@dataclass(frozen=True)
class RateRecord:
    n: int
    trial: int
    rel_error: float
    epsilon_cert: float
    wall_time_s: float


@dataclass(frozen=True)
class RateTable:
    records: tuple
    reference_n: int

    def to_csv(self) -> str:
        lines = ["n,trial,rel_error,epsilon_cert,wall_time_s"]
        for r in self.records:
            lines.append(
                "%d,%d,%s,%s,%.6f"
                % (r.n, r.trial, repr(r.rel_error), repr(r.epsilon_cert), r.wall_time_s)
            )
        return "\n".join(lines) + "\n"

    def mean_errors(self) -> dict[int, float]:
        by_n: dict[int, list] = {}
        for r in self.records:
            by_n.setdefault(r.n, []).append(r.rel_error)
        return {n: float(np.mean(v)) for n, v in sorted(by_n.items())}


def rate_experiment(
    data: SampleMatrix,
    b: np.ndarray,
    op: LinearOperator,
    alpha: float,
    n_grid,
    trials: int,
    seed: int,
    config: SolverConfig | None = None,
    threads: int = 1,
) -> RateTable:
    """Relative error of subsample solutions against the full-data reference.

    Each (n, trial) cell derives its own seed from the master seed, so the
    table is byte-identical no matter how cells are scheduled across
    threads.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_grid = [int(n) for n in n_grid]
    config = config or SolverConfig()

    full_prior = EmpiricalPrior.from_samples(data)
    ref_problem = DualProblem(prior=full_prior, op=op, b=b, alpha=alpha)
    ref_solve = solve_dual(ref_problem, config)
    x_ref = recover_primal(full_prior, op, ref_solve.z_bar).x_bar

    def run_cell(cell):
        n, trial = cell
        cell_seed = derive_seed(seed, "rate", n, trial)
        t0 = time.perf_counter()
        sub_prior = EmpiricalPrior.from_samples(subsample(data, n, cell_seed))
        problem = DualProblem(prior=sub_prior, op=op, b=b, alpha=alpha)
        result = solve_dual(problem, config)
        x_n = recover_primal(sub_prior, op, result.z_bar).x_bar
        wall = time.perf_counter() - t0
        return RateRecord(
            n=n,
            trial=trial,
            rel_error=relative_error(x_n, x_ref),
            epsilon_cert=result.epsilon_cert,
            wall_time_s=wall,
        )

    cells = [(n, t) for n in n_grid for t in range(trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run_cell, cells))
    else:
        records = [run_cell(c) for c in cells]
    return RateTable(records=tuple(records), reference_n=data.n)


def two_cluster_instance(n_total: int, dim: int, seed: int, spread: float = 0.06):
    """Synthetic benchmark: two Gaussian-ish clusters in [0,1]^dim plus a noisy target.

    Returns (SampleMatrix, b) with b a corrupted view of the first cluster's
    center, so recovery is nontrivial but well-posed.
    """
    rng = make_rng(seed)
    c0 = rng.uniform(0.15, 0.40, size=dim)
    c1 = rng.uniform(0.60, 0.85, size=dim)
    assign = rng.random(n_total) < 0.5
    centers = np.where(assign[:, None], c1[None, :], c0[None, :])
    points = np.clip(centers + spread * rng.standard_normal((n_total, dim)), 0.0, 1.0)
    b = c0 + 0.08 * rng.standard_normal(dim)
    return SampleMatrix(samples=points), b
