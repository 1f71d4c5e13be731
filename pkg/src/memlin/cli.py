"""Command-line surface: denoise, rates, diagnose.

Every command writes manifest.json (flags, seeds, RNG algorithm, dataset
checksums, solver config) before any other output, so a run can be
reproduced byte-exactly from its manifest.  Exit codes: 0 success, 1 domain
failure, 2 usage error.
"""

import argparse
import datetime
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import load_images, nearest_neighbor, normalize, subsample
from .diagnostics import (
    BALL_RADIUS_FACTOR,
    compute_constants,
    mgf_bounds_check,
    rate_experiment,
    two_cluster_instance,
)
from .errors import BoundViolatedError, MemlinError
from .images import read_pgm, write_pgm, write_weights_csv
from .noise import GAUSSIAN_LEVEL_DEFAULT, SALT_PEPPER_LEVEL_DEFAULT, NoiseSpec
from .operators import identity
from .prior import EmpiricalPrior
from .recovery import pixel_mask, recover_primal, threshold_measure
from .rng import RNG_ALGORITHM, derive_seed
from .solver import DualProblem, SolverConfig, solve_dual

SYNTH_N_TOTAL = 2000
SYNTH_DIM = 9


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("MEM_THREADS")
    return max(1, int(env)) if env else 1


def _write_manifest(out_dir: Path, command: str, args, seeds: dict, checksums: dict,
                    outputs: list) -> None:
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "parameters": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "seeds": seeds,
        "rng_algorithm": RNG_ALGORITHM,
        "dataset_checksums": checksums,
        "solver_config": vars(SolverConfig()),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "output_paths": outputs,
        "version": __version__,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="ascii"
    )


def _load_prior_samples(args):
    checksums = {args.data: _sha256(args.data)}
    imgset = load_images(args.data, labels_path=getattr(args, "labels", None))
    if getattr(args, "labels", None):
        checksums[args.labels] = _sha256(args.labels)
    return normalize(imgset), imgset, checksums


def cmd_denoise(args, parser) -> int:
    data, imgset, checksums = _load_prior_samples(args)
    out = Path(args.out)

    if args.n is not None:
        if not 1 <= args.n <= data.n:
            parser.error("--n must be between 1 and %d" % data.n)
        sample_seed = derive_seed(args.seed, "subsample", args.n)
        working = subsample(data, args.n, sample_seed)
    else:
        sample_seed = None
        working = data

    # ground truth: dataset index or external PGM
    try:
        gt_index = int(args.ground_truth)
    except ValueError:
        gt_index = None
    if gt_index is not None:
        if not 0 <= gt_index < data.n:
            parser.error("--ground-truth index out of range")
        x_true = data.samples[gt_index]
    else:
        x_true, rows, cols = read_pgm(args.ground_truth)
        if (rows, cols) != (imgset.rows, imgset.cols):
            parser.error("ground-truth geometry %dx%d does not match dataset %dx%d"
                         % (rows, cols, imgset.rows, imgset.cols))
        checksums[args.ground_truth] = _sha256(args.ground_truth)

    noise_seed = derive_seed(args.seed, "noise")
    spec = NoiseSpec(kind=args.noise, level=args.level, seed=noise_seed,
                     gaussian_scale=args.noise_scale)
    b = spec.apply(x_true)

    outputs = ["b.pgm", "x_bar.pgm", "x_thresholded.pgm", "x_masked.pgm",
               "nearest_neighbor.pgm", "weights.csv"]
    _write_manifest(out, "denoise", args,
                    seeds={"master": args.seed, "noise": noise_seed,
                           "subsample": sample_seed},
                    checksums=checksums, outputs=outputs)

    prior = EmpiricalPrior.from_samples(working)
    op = identity(prior.d)
    problem = DualProblem(prior=prior, op=op, b=b, alpha=args.alpha)
    result = solve_dual(problem)
    sol = recover_primal(prior, op, result.z_bar)
    thresholded = threshold_measure(sol, args.threshold)
    masked = pixel_mask(thresholded.x_bar, args.mask_gamma)
    nn = working.samples[nearest_neighbor(working, b)]

    rows, cols = imgset.rows, imgset.cols
    write_pgm(out / "b.pgm", b, rows, cols)
    write_pgm(out / "x_bar.pgm", sol.x_bar, rows, cols)
    write_pgm(out / "x_thresholded.pgm", thresholded.x_bar, rows, cols)
    write_pgm(out / "x_masked.pgm", masked, rows, cols)
    write_pgm(out / "nearest_neighbor.pgm", nn, rows, cols)
    write_weights_csv(out / "weights.csv", sol.weights)

    print("solved in %d iterations, grad norm %.3e, certified eps %.3e, support %d"
          % (result.iterations, result.grad_norm, result.epsilon_cert,
             thresholded.support_size))
    if not result.converged:
        print("warning: solver did not reach tolerance", file=sys.stderr)
        return 1
    return 0


def cmd_rates(args, parser) -> int:
    if args.trials < 1:
        parser.error("--trials must be >= 1")
    grid_parts = args.grid.split(",")
    if len(grid_parts) != 3:
        parser.error("--grid must be min,max,points")
    lo, hi, points = int(grid_parts[0]), int(grid_parts[1]), int(grid_parts[2])
    if points < 1 or lo < 1 or hi < lo:
        parser.error("--grid values must satisfy 1 <= min <= max, points >= 1")
    n_grid = sorted({int(round(v)) for v in np.linspace(lo, hi, points)})
    out = Path(args.out)

    checksums = {}
    if args.synthesize:
        data, b = two_cluster_instance(SYNTH_N_TOTAL, SYNTH_DIM, args.seed)
    else:
        if args.data is None:
            parser.error("--data is required unless --synthesize is given")
        checksums[args.data] = _sha256(args.data)
        data = normalize(load_images(args.data))
        if args.b is None:
            parser.error("--b is required unless --synthesize is given")
        b, _, _ = read_pgm(args.b)
        checksums[args.b] = _sha256(args.b)
        if b.shape != (data.d,):
            parser.error("observed image length %d does not match dataset d=%d"
                         % (b.size, data.d))
    if max(n_grid) > data.n:
        parser.error("grid maximum %d exceeds dataset size %d" % (max(n_grid), data.n))

    threads = _resolve_threads(args)
    _write_manifest(out, "rates", args,
                    seeds={"master": args.seed},
                    checksums=checksums, outputs=["rates.csv"])

    table = rate_experiment(data, b, identity(data.d), args.alpha, n_grid,
                            args.trials, args.seed, threads=threads)
    (out / "rates.csv").write_text(table.to_csv(), encoding="ascii")

    print("n      mean rel_error")
    for n, err in table.mean_errors().items():
        print("%-6d %.6f" % (n, err))
    return 0


def cmd_diagnose(args, parser) -> int:
    if args.ball_samples < 1:
        parser.error("--ball-samples must be >= 1")
    out = Path(args.out)
    checksums = {args.data: _sha256(args.data)}
    data = normalize(load_images(args.data))
    b, _, _ = read_pgm(args.b)
    checksums[args.b] = _sha256(args.b)
    if b.shape != (data.d,):
        parser.error("observed image length %d does not match dataset d=%d"
                     % (b.size, data.d))

    _write_manifest(out, "diagnose", args,
                    seeds={"master": args.seed},
                    checksums=checksums,
                    outputs=["constants.json", "bounds_report.json"])

    prior = EmpiricalPrior.from_samples(data)
    op = identity(prior.d)
    problem = DualProblem(prior=prior, op=op, b=b, alpha=args.alpha)
    constants = compute_constants(problem)
    rho = args.rho if args.rho is not None else BALL_RADIUS_FACTOR * constants.rho0
    payload = constants.to_dict()
    payload.update({"alpha": args.alpha, "b_norm": float(np.linalg.norm(b)),
                    "prior_radius": prior.radius, "rho": rho})
    (out / "constants.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="ascii"
    )

    try:
        report = mgf_bounds_check(prior, op, rho, trials=args.ball_samples,
                                  seed=args.seed)
        violated = False
    except BoundViolatedError as exc:
        report = exc.report
        violated = True
    (out / "bounds_report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="ascii"
    )
    print("rho0 = %.6g, sampled MGF margin min = %.3e (%d violations)"
          % (constants.rho0, report.min_margin, report.violations))
    return 1 if violated else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memlin",
        description="Maximum entropy on the mean for denoising with empirical priors",
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="worker cap (fallback: MEM_THREADS env var)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="corrupt a ground truth and recover it")
    p.add_argument("--data", required=True, help="IDX images file (gzip ok)")
    p.add_argument("--labels", default=None, help="IDX labels file (metadata only)")
    p.add_argument("--ground-truth", required=True,
                   help="dataset index or PGM path of the clean image")
    p.add_argument("--noise", choices=["gaussian", "salt-pepper"], default="gaussian")
    p.add_argument("--level", type=float, default=None,
                   help="noise level (default 0.10 gaussian, 0.2 salt-pepper)")
    p.add_argument("--noise-scale", choices=["per-pixel", "total"], default="per-pixel",
                   help="meaning of the gaussian level relative to ||x||")
    p.add_argument("--alpha", type=float, required=True, help="fidelity weight")
    p.add_argument("--n", type=int, default=None, help="subsample size for the prior")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.01,
                   help="measure threshold tau")
    p.add_argument("--mask-gamma", type=float, default=0.2, help="pixel mask level")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("rates", help="convergence-rate experiment over subsample sizes")
    p.add_argument("--data", default=None, help="IDX images file (gzip ok)")
    p.add_argument("--b", default=None, help="observed image as PGM")
    p.add_argument("--synthesize", action="store_true",
                   help="use the built-in two-cluster instance instead of files")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--grid", default="10000,60000,20", help="min,max,points")
    p.add_argument("--trials", type=int, default=15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("diagnose", help="constants report and MGF bound check")
    p.add_argument("--data", required=True)
    p.add_argument("--b", required=True, help="observed image as PGM")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--rho", type=float, default=None,
                   help="ball radius (default 2*rho0)")
    p.add_argument("--ball-samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "denoise" and args.level is None:
        args.level = (GAUSSIAN_LEVEL_DEFAULT if args.noise == "gaussian"
                      else SALT_PEPPER_LEVEL_DEFAULT)
    try:
        return args.func(args, parser)
    except MemlinError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
