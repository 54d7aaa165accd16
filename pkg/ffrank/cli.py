# Copyright © 2024 ffrank authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Command line interface.

Results are printed to standard output as JSON, log messages go to
standard error. The exit code is 0 on success, 2 when an experiment is out
of tolerance, 3 on configuration or domain errors and 4 when sampling ran
out of its rejection budget.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

import numpy as np

from ffrank import __authors__, __version__
from ffrank.analytic import (
    analytic_report,
    bethe_at_alpha,
    ldpc_rate,
    locate_transition,
    phi,
    phi_small,
    rho,
)
from ffrank.config import PRESETS, load_config, parse_ensemble
from ffrank.coreops import core_rank_bound, peel
from ffrank.degrees import parse_distribution
from ffrank.ensemble import dump_instance, load_instance, sample
from ffrank.errors import FFRankError, RejectionBudgetExhausted
from ffrank.harness import (
    EXIT_BUDGET,
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_TOLERANCE,
    emit_curve,
    ldpc_rate_mc,
    run_experiment,
    verify_worked_examples,
)
from ffrank.linalg import rank
from ffrank.logsetup import setup_logging

logger = logging.getLogger(__name__)


def _json_default(value: object) -> object:
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def _print(document: object) -> None:
    print(json.dumps(document, indent=2, default=_json_default))


def _ensemble(args: argparse.Namespace, n: int = 0):
    return parse_ensemble(args.ens, args.q, args.chi, args.mode, n)


def cmd_phi(args: argparse.Namespace) -> int:
    """Evaluate Phi and phi."""
    ens = _ensemble(args)
    _print({"alpha": args.alpha, "phi": float(phi(ens, args.alpha)),
            "phi_small": float(phi_small(ens, args.alpha))})
    return EXIT_OK


def cmd_rho(args: argparse.Namespace) -> int:
    """Print rho."""
    _print({"rho": rho(_ensemble(args))})
    return EXIT_OK


def cmd_rate(args: argparse.Namespace) -> int:
    """Analytic design rate, optionally with a Monte Carlo estimate."""
    ens = _ensemble(args)
    result = {"rate": ldpc_rate(ens)}
    if args.n:
        mean, stderr = ldpc_rate_mc(ens, args.n, args.trials, args.seed)
        result.update({"empirical_rate": mean, "stderr": stderr, "n": args.n,
                       "trials": args.trials})
    _print(result)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    """Print the analytic report."""
    ens = _ensemble(args)
    _print({"ensemble": ens.to_record(), **analytic_report(ens).to_dict()})
    return EXIT_OK


def cmd_core(args: argparse.Namespace) -> int:
    """Sample an instance and peel it."""
    ens = _ensemble(args, args.n)
    graph, matrix = sample(ens, args.seed)
    core = peel(graph)
    bound = core_rank_bound(graph, matrix, core)
    result = core.as_dict()
    if args.members:
        result["core_vars"] = sorted(core.core_vars)
        result["core_checks"] = sorted(core.core_checks)
    result.update({"n": args.n, "m": graph.m, "bound": bound.bound,
                   "nullity": bound.nullity, "bound_tight": bound.tight})
    _print(result)
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    """Sample an instance and write it to a file."""
    ens = _ensemble(args, args.n)
    graph, matrix = sample(ens, args.seed)
    dump_instance(args.dump, graph, matrix, args.seed)
    _print({"path": args.dump, "n": graph.n_vars, "m": graph.m, "nnz": matrix.nnz})
    return EXIT_OK


def cmd_rank(args: argparse.Namespace) -> int:
    """Rank of a dumped instance."""
    _, matrix, seed = load_instance(args.instance)
    r = rank(matrix)
    _print({"n": matrix.cols, "m": matrix.rows, "q": matrix.field.q, "seed": seed,
            "rank": r, "nullity": matrix.cols - r})
    return EXIT_OK


def cmd_curve(args: argparse.Namespace) -> int:
    """Tabulate Phi and phi."""
    frame = emit_curve(_ensemble(args), args.points, args.out)
    if args.out is None:
        sys.stdout.write(frame.to_csv(index=False, float_format="%.12g"))
    else:
        _print({"path": args.out, "points": args.points})
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """Run the assertion battery on the worked examples."""
    checks = verify_worked_examples()
    _print([{"name": c.name, "passed": c.passed, "value": c.value, "expected": c.expected}
            for c in checks])
    return EXIT_OK if all(c.passed for c in checks) else EXIT_TOLERANCE


def cmd_experiment(args: argparse.Namespace) -> int:
    """Run an experiment described by a configuration file."""
    cfg = load_config(args.config)
    summary = run_experiment(cfg)
    _print(summary.to_dict())
    return EXIT_OK if summary.passed else EXIT_TOLERANCE


def cmd_bethe(args: argparse.Namespace) -> int:
    """Monte Carlo estimate of the Bethe functional."""
    ens = _ensemble(args)
    mean, stderr = bethe_at_alpha(ens, args.alpha, args.samples, args.seed)
    _print({"alpha": args.alpha, "bethe": mean, "stderr": stderr,
            "phi": float(phi(ens, args.alpha))})
    return EXIT_OK


def cmd_transition(args: argparse.Namespace) -> int:
    """Locate the full-rank transition of Po>=1(lam) variable degrees."""
    lam, mean = locate_transition(parse_distribution(args.k), args.lo, args.hi, args.tol, args.q)
    _print({"lambda": lam, "mean_degree": mean})
    return EXIT_OK


def _add_ensemble_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ens", required=True,
                        help=f"preset ({', '.join(sorted(PRESETS))}) or 'd=<law>;k=<law>'")
    parser.add_argument("--q", type=int, default=2, help="field order")
    parser.add_argument("--chi", default="uniform", help="entry law: uniform, one, fixed:<a>")
    parser.add_argument("--mode", choices=("simple", "multigraph", "exact-degrees"),
                        help="sampling mode, the preset default when omitted")


def build_parser() -> argparse.ArgumentParser:
    """Construct the argument parser with all subcommands."""
    parser = argparse.ArgumentParser(
        prog="ffrank", description="Rank of random sparse matrices over finite fields")
    parser.add_argument("--version", action="store_true", help="print version and exit")
    parser.add_argument("--authors", action="store_true", help="print authors and exit")
    parser.add_argument("--log-config", help="YAML logging configuration")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    subparsers = parser.add_subparsers(dest="command")

    p = subparsers.add_parser("phi", help="evaluate Phi and phi at alpha")
    _add_ensemble_arguments(p)
    p.add_argument("--alpha", type=float, required=True)
    p.set_defaults(handler=cmd_phi)

    p = subparsers.add_parser("rho", help="largest stationary point of Phi")
    _add_ensemble_arguments(p)
    p.set_defaults(handler=cmd_rho)

    p = subparsers.add_parser("rate", help="LDPC design rate")
    _add_ensemble_arguments(p)
    p.add_argument("--n", type=int, default=0, help="also estimate it on instances of size n")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_rate)

    p = subparsers.add_parser("report", help="all analytic predictions")
    _add_ensemble_arguments(p)
    p.set_defaults(handler=cmd_report)

    p = subparsers.add_parser("core", help="2-core of a sampled instance")
    _add_ensemble_arguments(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--members", action="store_true", help="list the core variables and checks")
    p.set_defaults(handler=cmd_core)

    p = subparsers.add_parser("sample", help="sample an instance into a JSON file")
    _add_ensemble_arguments(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump", required=True, help="output path")
    p.set_defaults(handler=cmd_sample)

    p = subparsers.add_parser("rank", help="rank of a dumped instance")
    p.add_argument("--instance", required=True)
    p.set_defaults(handler=cmd_rank)

    p = subparsers.add_parser("curve", help="Phi and phi on a uniform grid as CSV")
    _add_ensemble_arguments(p)
    p.add_argument("--points", type=int, default=1001)
    p.add_argument("--out", help="output path, standard output when omitted")
    p.set_defaults(handler=cmd_curve)

    p = subparsers.add_parser("verify", help="assertions on the worked examples")
    p.set_defaults(handler=cmd_verify)

    p = subparsers.add_parser("experiment", help="run an experiment from a configuration file")
    p.add_argument("--config", required=True)
    p.set_defaults(handler=cmd_experiment)

    p = subparsers.add_parser("bethe", help="Monte Carlo Bethe functional")
    _add_ensemble_arguments(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_bethe)

    p = subparsers.add_parser("transition", help="full-rank transition of Po>=1(lam) degrees")
    p.add_argument("--k", default="point:3", help="check degree law")
    p.add_argument("--lo", type=float, default=2.0)
    p.add_argument("--hi", type=float, default=4.0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--q", type=int, default=2)
    p.set_defaults(handler=cmd_transition)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the selected subcommand and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors, which would read as a tolerance failure
        return EXIT_OK if e.code == 0 else EXIT_CONFIG

    if args.version:
        print(f"ffrank version {__version__}")
        return EXIT_OK
    if args.authors:
        print(__authors__)
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    try:
        setup_logging(args.log_config, args.verbose)
        return args.handler(args)
    except RejectionBudgetExhausted as e:
        logger.error("%s", e)
        return EXIT_BUDGET
    except (FFRankError, OSError) as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_CONFIG
