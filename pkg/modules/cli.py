"""Command-line front end: theory, simulate, compare, tensor, moments and scaffold."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .activations import get_activation, hermite_stats
from .errors import InternalConsistencyError, NtkSpectraError, ValidationError
from .free import direct_moment, moment_formula_binomial, moment_inputs, q_moment_formula
from .pipeline import (
    ExperimentConfig,
    ExperimentRunner,
    TheoryConfig,
    gamma_scan,
    load_config,
    run_experiment,
    save_config,
    scaffold,
    write_spectra,
    write_theory,
)
from .simulation import NuSpec, stream
from .tensor import build_q, build_qhat, exact_qhat_spectrum, save_tensor, verify_eigenvectors

EXACT_TOLERANCE = 1e-8
MOMENT_FLOOR = 1e-12
OVERRIDE_KEYS = ("n", "d", "p", "gamma1", "gamma2", "activation", "nu", "seeds", "grid", "eta", "jobs", "output_dir")


class ArgumentParser(argparse.ArgumentParser):
    """argparse that raises ValidationError instead of exiting with status 2."""

    def error(self, message: str):
        raise ValidationError(f"{self.prog}: {message}")


def _seed_list(text: str) -> List[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got '{text}'")
    if any(s < 0 for s in seeds):
        raise argparse.ArgumentTypeError("seeds must be nonnegative")
    return seeds


def _float_list(text: str) -> List[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _add_common(parser: argparse.ArgumentParser, config_required: bool = False):
    parser.add_argument("--config", "-c", required=config_required, help="Experiment config (YAML or JSON)")
    parser.add_argument("--output-dir", "-o", dest="output_dir", help="Directory for written artifacts")
    group = parser.add_argument_group("overrides")
    group.add_argument("--n", type=int, help="Number of samples")
    group.add_argument("--d", type=int, help="Input dimension")
    group.add_argument("--p", type=int, help="Width")
    group.add_argument("--gamma1", type=float, help="n / (d p)")
    group.add_argument("--gamma2", type=float, help="p / d")
    group.add_argument("--activation", help="Activation spec, e.g. neg_part or linear:1,0")
    group.add_argument("--nu", help="Law of a^2, e.g. delta:1 or two_point:1,30,0.5")
    group.add_argument("--seeds", type=_seed_list, help="Comma-separated seeds")
    group.add_argument("--grid", type=int, help="Theory grid points")
    group.add_argument("--eta", type=float, help="Stieltjes inversion offset")
    group.add_argument("--jobs", type=int, help="Parallel seed runs")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="ntk_spectra", description="Spectra of NTK kernels in the quadratic scaling regime")
    parser.add_argument("--quiet", "-q", action="store_true", help="Suppress progress output")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    subparsers = parser.add_subparsers(dest="command", help="Available commands", parser_class=ArgumentParser)

    theory_parser = subparsers.add_parser("theory", help="Compute the limit density and write theory.csv")
    _add_common(theory_parser)
    theory_parser.add_argument("--route", choices=["auto", "special", "general"], help="Limit-law route")
    theory_parser.add_argument("--scan-gamma1", type=_float_list, help="gamma1 values for a gap scan")
    theory_parser.add_argument("--scan-gamma2", type=_float_list, help="gamma2 values for a gap scan")

    simulate_parser = subparsers.add_parser("simulate", help="Simulate kernels and write ESD/histogram CSVs")
    _add_common(simulate_parser)

    compare_parser = subparsers.add_parser("compare", help="Theory, simulation, metrics and report.json")
    _add_common(compare_parser)

    tensor_parser = subparsers.add_parser("tensor", help="Build the covariance tensor and check its spectrum")
    tensor_parser.add_argument("--d", type=int, required=True, help="Input dimension")
    tensor_parser.add_argument("--p", type=int, required=True, help="Width")
    tensor_parser.add_argument("--alpha", type=float, default=1.0, help="Linear Hermite coefficient")
    tensor_parser.add_argument("--beta", type=float, default=0.0, help="Residual standard deviation")
    tensor_parser.add_argument("--nu", help="Build Q with D^2 drawn from this law instead of Q-hat")
    tensor_parser.add_argument("--mu4", type=float, help="Fourth-moment remainder parameter for Q")
    tensor_parser.add_argument("--seed", type=int, default=0, help="Sampling seed")
    tensor_parser.add_argument("--dp-cap", type=int, default=6000, help="Largest allowed d p")
    tensor_parser.add_argument("--check-exact", action="store_true", help="Compare with the closed-form spectrum")
    tensor_parser.add_argument("--eigenvectors", type=int, default=0, help="Random eigenvector pairs to verify")
    tensor_parser.add_argument("--dump", help="Write the tensor to this binary file")

    moments_parser = subparsers.add_parser("moments", help="Trace moments of Q: formula against direct")
    moments_parser.add_argument("--d", type=int, required=True, help="Input dimension")
    moments_parser.add_argument("--p", type=int, required=True, help="Width")
    moments_parser.add_argument("--activation", default="identity", help="Activation spec")
    moments_parser.add_argument("--nu", default="delta:1", help="Law of a^2")
    moments_parser.add_argument("--max-order", type=int, default=5, help="Largest moment order (at most 8)")
    moments_parser.add_argument("--seed", type=int, default=0, help="Sampling seed")

    scaffold_parser = subparsers.add_parser("scaffold", help="Write a small runnable experiment config")
    scaffold_parser.add_argument("--id", default="example", help="Experiment id")
    scaffold_parser.add_argument("--output", "-o", help="Config path (default config/experiments/<id>.yaml)")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """The config file (or the scaffold defaults) with command-line overrides applied."""
    config = load_config(args.config) if args.config else scaffold("cli")
    overrides: Dict[str, Any] = {k: getattr(args, k, None) for k in OVERRIDE_KEYS}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        config = config.with_overrides(**overrides)
    if getattr(args, "route", None):
        config.theory = TheoryConfig.from_dict({**config.theory.to_dict(), "route": args.route})
    return config


def _say(args: argparse.Namespace, message: str):
    if not args.quiet:
        print(message)


def cmd_theory(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    runner = ExperimentRunner(config, quiet=args.quiet)
    out = Path(config.output_dir)

    if args.scan_gamma1 or args.scan_gamma2:
        gammas1 = args.scan_gamma1 or [config.gamma1]
        gammas2 = args.scan_gamma2 or [config.gamma2]
        table = gamma_scan(config, [(g1, g2) for g1 in gammas1 for g2 in gammas2], quiet=args.quiet)
        out.mkdir(parents=True, exist_ok=True)
        table.to_csv(out / "gamma_scan.csv", index=False, float_format="%.17g")
        _say(args, f"💾 Saved {out / 'gamma_scan.csv'}")
        return 0

    # explicit ratios are used as given rather than through the rounded n, p
    theory, diagnostics = runner.compute_theory(args.gamma1, args.gamma2)
    path = write_theory(theory, diagnostics, out)
    lo, hi = theory.support()
    _say(args, f"✅ Theory density: mean={theory.mean:.6g} support=[{lo:.6g}, {hi:.6g}]")
    _say(args, f"💾 Saved {path}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    if not config.seeds:
        raise ValidationError("simulate needs at least one seed")
    runner = ExperimentRunner(config, quiet=args.quiet)
    runner.check_caps()
    _say(args, f"🎯 Simulating {len(config.seeds)} seed(s): n={config.n} d={config.d} p={config.p}")
    results = runner.simulate()
    for kind in config.kernels:
        spectra = {seed: r.eigenvalues[kind] for seed, r in results.items()}
        paths = write_spectra(kind.value, spectra, config.output_dir)
        pooled = np.concatenate(list(spectra.values()))
        _say(args, f"   📊 {kind.value}: mean={pooled.mean():.6g} max={pooled.max():.6g}")
        _say(args, f"   💾 Saved {', '.join(str(p) for p in paths)}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    report = run_experiment(config, quiet=args.quiet)
    _say(args, f"🔍 disconnected_support: {str(report.disconnected_support).lower()}")
    if not report.passed:
        raise InternalConsistencyError(f"Invariant checks failed: {', '.join(report.failed_invariants)}")
    return 0


def cmd_tensor(args: argparse.Namespace) -> int:
    rng = stream(args.seed, "w")
    W = rng.standard_normal((args.d, args.p))
    if args.nu:
        d2 = NuSpec.parse(args.nu).sample(stream(args.seed, "d2"), args.p)
        tensor = build_q(W, np.sqrt(d2), args.alpha, args.beta, cap=args.dp_cap, mu4=args.mu4)
    else:
        tensor = build_qhat(W, args.alpha, args.beta, cap=args.dp_cap)
    eigs = tensor.eigenvalues()
    _say(args, f"📊 {tensor.header()['kind']} d={args.d} p={args.p}: eigenvalues in [{eigs[0]:.6g}, {eigs[-1]:.6g}]")

    if args.dump:
        _say(args, f"💾 Saved {save_tensor(tensor, args.dump)}")

    ok = True
    if args.check_exact:
        if not tensor.is_qhat:
            raise ValidationError("--check-exact applies to Q-hat only (omit --nu)")
        error = float(np.max(np.abs(exact_qhat_spectrum(W, args.alpha, args.beta).eigenvalues() - eigs)))
        print(f"max |exact - numeric| = {error:.3e}")
        ok = error <= EXACT_TOLERANCE
    if args.eigenvectors:
        rng = stream(args.seed, "surrogate")
        report = verify_eigenvectors(W, args.alpha, args.beta, count=args.eigenvectors, rng=rng)
        print(f"max eigenvector residual = {report.max_residual:.3e} over {len(report.checked)} vectors")
        ok = ok and report.passed(EXACT_TOLERANCE)
    if not ok:
        raise InternalConsistencyError(f"Tensor checks exceeded tolerance {EXACT_TOLERANCE}")
    return 0


def _moment_error(formula: float, direct: float) -> float:
    """Relative error, or the absolute one when the direct moment vanishes."""
    if abs(direct) <= MOMENT_FLOOR:
        return abs(formula - direct)
    return abs(formula - direct) / abs(direct)


def cmd_moments(args: argparse.Namespace) -> int:
    stats = hermite_stats(get_activation(args.activation))
    W = stream(args.seed, "w").standard_normal((args.d, args.p))
    D = np.sqrt(NuSpec.parse(args.nu).sample(stream(args.seed, "d2"), args.p))
    beta = float(np.sqrt(stats.beta_sq))
    H, gram = moment_inputs(W, D, stats.alpha, beta)
    Q = build_q(W, D, stats.alpha, beta).flat
    h_eigs = np.linalg.eigvalsh(H) if stats.beta_sq <= 1e-12 else None

    header = f"{'k':>2} {'formula':>14} {'direct':>14} {'rel.error':>10}"
    print(header + (f" {'binomial':>14}" if h_eigs is not None else ""))
    for k in range(1, args.max_order + 1):
        formula = q_moment_formula(H, k, args.d, args.p, gram)
        direct = direct_moment(Q, k)
        line = f"{k:>2} {formula:>14.6g} {direct:>14.6g} {_moment_error(formula, direct):>10.2e}"
        if h_eigs is not None:
            line += f" {moment_formula_binomial(h_eigs, k, args.p / args.d):>14.6g}"
        print(line)
    return 0


def cmd_scaffold(args: argparse.Namespace) -> int:
    config = scaffold(args.id)
    path = Path(args.output) if args.output else Path("config/experiments") / f"{args.id}.yaml"
    save_config(config, path)
    _say(args, f"💾 Saved {path}")
    return 0


COMMANDS = {
    "theory": cmd_theory,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "tensor": cmd_tensor,
    "moments": cmd_moments,
    "scaffold": cmd_scaffold,
}


def report_error(error: NtkSpectraError) -> int:
    """One JSON line on standard error; returns the error's exit code."""
    payload = {"error": type(error).__name__, "exit_code": error.exit_code, "message": str(error)}
    print(json.dumps(payload), file=sys.stderr)
    return error.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    except ValidationError as e:
        return report_error(e)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.command is None:
        parser.print_help()
        return 1
    try:
        return COMMANDS[args.command](args)
    except NtkSpectraError as e:
        return report_error(e)
    except MemoryError as e:
        return report_error(NtkSpectraError(f"Out of memory: {e}"))
