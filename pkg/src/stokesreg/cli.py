"""Command line entry point: ``stokesreg <experiment> [flags]``.

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence.
"""
import argparse
import logging
import sys

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, parse_h, run_experiment
from .interface import NonConvergenceError

EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _on_off(text):
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def _fraction(text):
    try:
        (value,) = parse_h(text)
    except (ConfigError, ValueError):
        raise argparse.ArgumentTypeError(f"bad number {text!r}")
    return value


def build_parser():
    p = _Parser(prog="stokesreg", description=__doc__.splitlines()[0])
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--surface", help="sphere | spheroid:a=1,b=0.5 | ellipsoid:a=1,b=0.6,c=0.4 | molecule")
    p.add_argument("--h", default="1/16,1/32", help="comma separated grid sizes, halving (e.g. 1/16,1/32)")
    p.add_argument("--mode", help="on|near for layer tests; direct|uncorrected|corrected for two-spheres")
    p.add_argument("--delta-ratio", type=float)
    p.add_argument("--delta-ratios", help="comma separated delta/h values for delta-sweep")
    p.add_argument("--corrections", type=_on_off)
    p.add_argument("--regularization", choices=("plain", "sharp"))
    p.add_argument("--mu0", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=2.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--sl-fine-h", type=_fraction)
    p.add_argument("--eps", type=_fraction, default=1 / 16 ** 3)
    p.add_argument("--max-targets", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", help="CSV path (default: stdout)")
    p.add_argument("--verbose", "-v", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        extra = {}
        if args.delta_ratios:
            extra["delta_ratios"] = [float(v) for v in parse_h(args.delta_ratios)]
        cfg = ExperimentConfig(
            args.experiment, args.surface, parse_h(args.h), args.mode, args.delta_ratio,
            args.corrections, args.regularization, args.mu0, args.mu, args.tol, args.sl_fine_h,
            args.eps, max_targets=args.max_targets, seed=args.seed, output=args.output, **extra)
        result = run_experiment(cfg)
    except ConfigError as exc:
        print(f"stokesreg: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"stokesreg: {exc}; last updates {exc.trace[-3:]}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    if not args.output:
        try:
            result.write(sys.stdout)
        except BrokenPipeError:
            sys.stderr.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
