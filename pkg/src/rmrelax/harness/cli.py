"""Command line entry point: ``rmrelax <subcommand> [flags]``."""

import argparse
import sys
from pathlib import Path

from .compare import compare
from .config import ConfigError, load_config, read_raw
from .io import SchemaError
from .report import bundle_reports
from .run import DEFAULT_OUT, run, run_dos, run_spectral

ENGINE_OF = {"mc": "mc", "evolve": "analytic", "vanhove": "vanhove"}


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="output directory (overrides the config's out)")
    common.add_argument("--tolerance", type=float, default=0.02, metavar="X",
                        help="comparison tolerance (compare/report)")

    run_flags = argparse.ArgumentParser(add_help=False)
    run_flags.add_argument("--config", required=True, metavar="PATH", help="TOML config or JSON manifest")
    run_flags.add_argument("--seed", type=int, metavar="N", help="override engine.master_seed")
    run_flags.add_argument("--workers", type=int, default=1, metavar="N", help="worker threads for mc")

    p = argparse.ArgumentParser(prog="rmrelax", description="Random-matrix two-level relaxation toolkit.")
    sub = p.add_subparsers(dest="cmd", required=True)
    sub.add_parser("dos", parents=[common, run_flags], help="tabulate nu0 and the rate function")
    sub.add_parser("mc", parents=[common, run_flags], help="finite-n Monte Carlo ensemble run")
    sub.add_parser("spectral", parents=[common, run_flags], help="spectral densities and equilibrium state")
    sub.add_parser("evolve", parents=[common, run_flags], help="analytic n -> infinity dynamics")
    sub.add_parser("vanhove", parents=[common, run_flags], help="van Hove or band master-equation closed forms")
    c = sub.add_parser("compare", parents=[common], help="compare two trajectory CSVs")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--stat-allowance", action="store_true", help="add 3 stderr to the tolerance")
    c.add_argument("--interpolate", action="store_true", help="interpolate b onto the time grid of a")
    r = sub.add_parser("report", parents=[common], help="bundle comparison reports")
    r.add_argument("inputs", nargs="+", help="comparison.json files or directories")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.cmd in ENGINE_OF:
            over = {"engine.master_seed": args.seed} if args.seed is not None else {}
            cfg = load_config(args.config, engine=ENGINE_OF[args.cmd], overrides=over)
            res = run(cfg, out=args.out, workers=max(1, args.workers))
            print(f"wrote {res.csv} and {res.manifest}")
        elif args.cmd in ("dos", "spectral"):
            raw = read_raw(args.config)
            res = (run_dos if args.cmd == "dos" else run_spectral)(raw, out=args.out)
            print(f"wrote {res.csv} and {res.manifest}")
        elif args.cmd == "compare":
            rep = compare(args.a, args.b, args.tolerance, args.stat_allowance, args.interpolate)
            out = Path(args.out or DEFAULT_OUT)
            rep.write(out / "comparison.json")
            print(rep.summary_text())
            return 0 if rep.passed else 1
        elif args.cmd == "report":
            summ = bundle_reports(args.inputs, out=args.out)
            print(summ["text"])
            return 0 if summ["verdict"] == "PASS" else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # engine failures propagate as a nonzero exit
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
