"""
Command-line entry point.

    iiss-toolkit simulate --system sys.txt --xi 1 --horizon 1
    iiss-toolkit check --system sys.txt --spec spec.json --xi 1,0 --input u.csv
    iiss-toolkit falsify --system sys.txt --spec spec.json --budget 2000 --seed 0
    iiss-toolkit functions --construction factor-posdef --inputs rho.json
    iiss-toolkit counterexample --gain "2*r" --horizon 50

Exit codes: 0 completed or holds, 1 error, 2 finite escape, 3 violated.
"""

import argparse
import logging
import sys

from keboola.component.exceptions import UserException

from configuration import TOOL_NAME, TOOL_VERSION, Construction, RunConfig, Subcommand
from runner import EXIT_ERROR, ToolkitRunner


def parse_vector(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL_NAME, description="iISS and ISS estimate toolkit")
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {TOOL_VERSION}")
    parser.add_argument("subcommand", choices=[s.value for s in Subcommand])
    parser.add_argument("--system", help="system definition file")
    parser.add_argument("--spec", help="estimate spec file (JSON)")
    parser.add_argument("--input", help="input signal CSV with columns t,v1,...,vm")
    parser.add_argument("--inputs", help="construction operands file (JSON)")
    parser.add_argument("--witness", help="witness file written by check or falsify")
    parser.add_argument("--construction", choices=[c.value for c in Construction])
    parser.add_argument("--xi", type=parse_vector, help="initial state, comma separated")
    parser.add_argument("--horizon", type=float)
    parser.add_argument("--budget", type=int, help="simulations spent by the falsifier")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--jobs", type=int, help="worker threads")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--radius", type=float, help="falsifier bound on |xi|")
    parser.add_argument("--input-bound", type=float, help="falsifier bound on ||u||")
    parser.add_argument("--segments", type=int, help="input pieces searched by the falsifier")
    parser.add_argument("--gain", help="candidate ISS gain of the counterexample, an expression in r")
    parser.add_argument("--bound", type=float, help="state bound M of the counterexample")
    parser.add_argument("--tol-abs", type=float, help="integrator absolute tolerance")
    parser.add_argument("--tol-rel", type=float, help="integrator relative tolerance")
    parser.add_argument("--debug", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Only flags given on the command line override RunConfig defaults."""
    values = {k: v for k, v in vars(args).items() if v is not None and k not in ("tol_abs", "tol_rel")}
    tolerances = {}
    if args.tol_abs is not None:
        tolerances["atol"] = args.tol_abs
    if args.tol_rel is not None:
        tolerances["rtol"] = args.tol_rel
    if tolerances:
        values["tolerances"] = tolerances
    return RunConfig(**values)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.debug else logging.INFO, format="%(levelname)s %(message)s")
    try:
        config = config_from_args(args)
        return ToolkitRunner(config).run().exit_code
    except UserException as e:
        logging.error(e)
        return EXIT_ERROR
    except Exception as e:
        logging.exception(e)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
