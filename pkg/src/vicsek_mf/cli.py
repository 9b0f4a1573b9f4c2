"""Command line entry point: ``vicsek-mf {simulate,couple,homogeneous,analyze,sweep}``."""

import argparse
import sys

from . import experiments
from .config import RunConfig, load_config
from .errors import ConfigError, NumericalError, RecordError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def build_parser():
    p = argparse.ArgumentParser(prog="vicsek-mf", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "couple", "homogeneous", "analyze", "sweep"):
        s = sub.add_parser(name)
        s.add_argument("--config", help="key = value run configuration")
        s.add_argument("--seed", type=lambda t: int(t, 0), help="override the master seed")
        s.add_argument("--out", default="out", help="output directory")
        s.add_argument("--workers", type=int, help="worker count (results do not depend on it)")
        s.add_argument("--record-every", type=int, dest="record_every")
        if name == "analyze":
            s.add_argument("inputs", nargs="*", help="trajectory files, one per replica")
    return p


def resolve_config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {"experiment": args.command}
    for key in ("seed", "workers", "record_every"):
        val = getattr(args, key)
        if val is not None:
            over[key] = val
    if getattr(args, "inputs", None):
        over["input"] = tuple(args.inputs)
    return cfg.with_overrides(**over)


def run(args):
    cfg = resolve_config(args)
    sys.stdout.write(cfg.to_text())
    if args.command == "simulate":
        experiments.simulate(cfg, args.out)
    elif args.command == "couple":
        def progress(N, m, se):
            print(f"N={N:5d}  error={m:.6e}  stderr={se:.2e}", flush=True)
        _, fit = experiments.couple(cfg, args.out, progress=progress)
        if fit is not None:
            print(f"slope={fit.slope:.4f}  intercept={fit.intercept:.4f}  r2={fit.r_squared:.4f}")
    elif args.command == "homogeneous":
        final, recs = experiments.homogeneous(cfg, args.out)
        print(f"t={recs[-1][0]:g}  |J|={recs[-1][2]:.6f}")
    elif args.command == "analyze":
        if not cfg.input:
            raise ConfigError("analyze: no trajectory files given")
        _, reports = experiments.analyze(cfg, cfg.input, args.out)
        for name, rep in reports:
            print(f"{name}: {100 * rep.coverage:.1f}% of time points within band")
    else:
        experiments.sweep(cfg, args.out)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        run(args)
    except ConfigError as exc:
        print("configuration error:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (RecordError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
