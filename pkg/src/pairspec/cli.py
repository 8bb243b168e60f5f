"""Command-line interface.

Exit codes: 0 success, 1 a verification check failed, 2 usage error,
3 I/O or numerical infrastructure error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from pairspec import io
from pairspec.datagen import gen_points, gen_target, sample_pairs
from pairspec.kernels import (
    SWAP_MODES,
    KernelSpec,
    PairSample,
    PSDViolation,
    build_gram,
    close_under_swap,
)
from pairspec.regression import (
    RegularizedSolution,
    TargetFunction,
    bias_reports,
    krr_fit,
    krr_predict,
)
from pairspec.spectral import EigenSolverError, effdim_curve, eigh_psd

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_INFRA = 3

SEED_ENV = "PAIRSPEC_SEED"


class InfraError(Exception):
    pass


class UsageError(Exception):
    pass


def _log(args, msg: str) -> None:
    if not getattr(args, "quiet", False):
        print(msg, file=sys.stderr)


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def env_seed() -> int | None:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise InfraError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _spec(path) -> KernelSpec:
    return KernelSpec.from_flat(io.read_config(path))


def _labels(args, sample: PairSample) -> np.ndarray:
    if args.targets:
        y = io.read_column(args.targets, "y")
    elif sample.labels is not None:
        y = sample.labels
    else:
        raise InfraError("no targets: pass --targets or a pairs file with a y column")
    if y.shape[0] != len(sample):
        raise InfraError(f"{y.shape[0]} targets for {len(sample)} pairs")
    return y


def cmd_gram(args) -> int:
    spec = _spec(args.config)
    points = io.read_points(args.points)
    sample = io.read_pairs(args.pairs)
    G = build_gram(spec, points, sample, check_psd=not args.no_psd_check)
    io.write_matrix(args.out, G.values)
    _log(args, f"wrote {G.n}x{G.n} Gram matrix to {args.out}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    G = io.read_matrix(args.gram)
    if args.empirical:
        G = G / G.shape[0]
    sp = eigh_psd(G)
    io.write_table(args.out, ["index", "eigenvalue"], [(i, v) for i, v in enumerate(sp.values)])
    _log(args, f"wrote {len(sp)} eigenvalues to {args.out}")
    return EXIT_OK


def cmd_effdim(args) -> int:
    values = io.read_column(args.spectrum, "eigenvalue")
    curve = effdim_curve(np.clip(values, 0.0, None), args.lam)
    io.write_table(args.out, ["lambda", "effdim"], curve)
    _log(args, f"wrote {len(curve)} effective-dimension values to {args.out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    spec = _spec(args.config)
    points = io.read_points(args.points)
    sample = io.read_pairs(args.pairs)
    y = _labels(args, sample)
    G = build_gram(spec, points, sample)
    sol = krr_fit(G, y, args.lam)
    io.write_column(args.out, "alpha", sol.coefficients)
    _log(args, f"wrote {len(sample)} coefficients to {args.out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    spec = _spec(args.config)
    points = io.read_points(args.points)
    train = io.read_pairs(args.train)
    test = io.read_pairs(args.test)
    alpha = io.read_column(args.coefficients, "alpha")
    pred = krr_predict(spec, points, train, RegularizedSolution(alpha, 1.0), test)
    rows = [(int(i), int(j), float(p)) for (i, j), p in zip(test.pairs, pred)]
    io.write_table(args.out, ["i", "j", "prediction"], rows)
    _log(args, f"wrote {len(rows)} predictions to {args.out}")
    return EXIT_OK


def cmd_bias(args) -> int:
    spec = _spec(args.config)
    points = io.read_points(args.points)
    sample = io.read_pairs(args.pairs)
    if not sample.swap_closed:
        missing = sample.missing_swaps()
        raise InfraError(
            f"pair sample is not closed under swapping ({len(missing)} swapped pairs missing, "
            f"e.g. {missing[0]}); add virtual examples with "
            f"`pairspec gen --close-swaps --pairs-in {args.pairs} --pairs-out <file>`"
        )
    target = TargetFunction(_labels(args, sample), args.symmetry)
    reports = bias_reports(spec, points, sample, target, args.lam,
                           normalize=not args.no_normalize)
    io.write_json(args.out, [r.to_json() for r in reports])
    ok = all(r.bounds_hold for r in reports)
    _log(args, f"wrote {len(reports)} bias reports to {args.out}; bounds hold: {ok}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from pairspec.testbed import SuiteConfig, run_suite

    cfg = io.read_config(args.config) if args.config else {}
    seed = env_seed()
    if seed is not None:
        cfg["master_seed"] = seed
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    if args.trials is not None:
        cfg["trials"] = args.trials
    if args.inject_gram_error:
        cfg["inject_gram_error"] = args.inject_gram_error
    if args.no_decay:
        cfg["decay"] = False
    try:
        config = SuiteConfig.from_flat(cfg)
    except ValueError as exc:
        raise InfraError(f"invalid suite config: {exc}") from None
    report = run_suite(config, progress=lambda m: _log(args, m))
    if args.out:
        io.write_json(args.out, report.to_json())
    s = report.summary
    _log(args, f"{s['passed']}/{s['total']} checks passed")
    for c in report.checks:
        if not c.passed:
            _log(args, f"FAILED {c.name} margin={c.margin:.3e} tol={c.tolerance:.1e} {c.context}")
    return EXIT_OK if report.all_passed else EXIT_CHECK_FAILED


def cmd_gen(args) -> int:
    if args.close_swaps:
        if not args.pairs_in:
            raise UsageError("--close-swaps needs --pairs-in")
        sample = io.read_pairs(args.pairs_in)
        mode = args.swap_mode or ("unlabeled" if sample.labels is None else "symmetric")
        closed = close_under_swap(sample, mode)
        io.write_pairs(args.pairs_out, closed)
        _log(args, f"added {len(closed) - len(sample)} virtual examples; wrote {args.pairs_out}")
        return EXIT_OK
    if args.n_points is None or args.points_out is None:
        raise UsageError("gen needs --n-points and --points-out (or --close-swaps)")
    seed = args.seed if args.seed is not None else env_seed()
    if seed is None:
        seed = 0
    ss = np.random.SeedSequence(seed)
    pt_seed, pair_seed, target_seed = ss.spawn(3)
    points = gen_points(args.n_points, args.dim, pt_seed)
    sample = sample_pairs(args.n_points, pair_seed, args.max_pairs)
    if args.target:
        y = gen_target(args.target, points, sample, target_seed).values
        sample = PairSample(sample.pairs, y)
    io.write_points(args.points_out, points)
    io.write_pairs(args.pairs_out, sample)
    _log(args, f"wrote {len(points)} points and {len(sample)} pairs (seed {seed})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="suppress progress text on stderr")

    parser = argparse.ArgumentParser(prog="pairspec", parents=[common],
                                     description="Pairwise kernel spectra, regression and checks.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("gram", parents=[common], help="write the Gram matrix of a pair sample")
    p.add_argument("--config", required=True, help="kernel config file")
    p.add_argument("--points", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-psd-check", action="store_true")
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalues of a Gram matrix")
    p.add_argument("--gram", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--empirical", action="store_true", help="divide the Gram matrix by n first")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("effdim", parents=[common], help="effective dimension over a lambda grid")
    p.add_argument("--spectrum", required=True)
    p.add_argument("--lambda", dest="lam", required=True, type=_float_list,
                   help="comma-separated ascending grid")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_effdim)

    p = sub.add_parser("fit", parents=[common], help="kernel ridge regression coefficients")
    p.add_argument("--config", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--targets", help="CSV with column y; defaults to the y column of --pairs")
    p.add_argument("--lambda", dest="lam", required=True, type=_positive_float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", parents=[common], help="predictions from fitted coefficients")
    p.add_argument("--config", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--train", required=True, help="training pairs CSV")
    p.add_argument("--coefficients", required=True)
    p.add_argument("--test", required=True, help="test pairs CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bias", parents=[common], help="regularization bias for none, PI, S and A")
    p.add_argument("--config", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--targets")
    p.add_argument("--symmetry", choices=("symmetric", "antisymmetric", "generic"),
                   default="symmetric")
    p.add_argument("--lambda", dest="lam", required=True, type=_float_list)
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("verify", parents=[common], help="run the randomized verification suite")
    p.add_argument("--config", help="suite config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--inject-gram-error", type=float, default=0.0,
                   help="perturb one Gram entry before the projection identity check")
    p.add_argument("--no-decay", action="store_true", help="skip the approximation-decay run")
    p.add_argument("--out", help="JSON report path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", parents=[common], help="synthetic points, pairs and targets")
    p.add_argument("--n-points", type=int)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-pairs", type=int, default=64)
    p.add_argument("--target", choices=("symmetric", "antisymmetric", "ranking", "generic"))
    p.add_argument("--points-out")
    p.add_argument("--pairs-out", required=True)
    p.add_argument("--close-swaps", action="store_true",
                   help="add the swapped pair of every pair in --pairs-in")
    p.add_argument("--pairs-in")
    p.add_argument("--swap-mode", choices=SWAP_MODES)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"pairspec {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InfraError, OSError, ValueError, IndexError, EigenSolverError,
            PSDViolation, np.linalg.LinAlgError) as exc:
        print(f"pairspec {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INFRA


if __name__ == "__main__":
    sys.exit(main())
