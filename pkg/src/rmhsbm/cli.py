"""Command line entry point (``rmhsbm``).

Exit codes: 0 success, 1 usage, 2 input parse, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .estimation import aggregate_summaries, bic_delta, summarize
from .harness import StudyConfig, emit_figures, run_study
from .hierarchy import SpecError, build_parameter_groups, resolve_spec
from .io import (
    InputError,
    read_graph,
    read_manifest,
    read_test_report,
    write_matrix_csv,
    write_outcomes_csv,
    write_p_profile_csv,
    write_population,
    write_test_report,
)
from .numeric import ConvergenceError
from .sampling import Seed, draw_model_parameters, perturb_parameters, sample_population
from .testing import METHODS, run_tests

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(payload, out: str | None) -> None:
    text = json.dumps(payload, indent=1) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_simulate(args) -> int:
    data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if args.seed is not None:
        data["seed"] = args.seed
    if args.alpha is not None:
        data["alpha"] = args.alpha
    try:
        config = StudyConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{args.config}: {exc}") from exc
    result = run_study(config)
    for path in emit_figures(result, args.out):
        print(path)
    return EXIT_OK


def _cmd_sample(args) -> int:
    spec = resolve_spec(args.spec)
    if args.nodes_per_block:
        spec = spec.with_block_sizes(args.nodes_per_block)
    groups = build_parameter_groups(spec)
    root = Seed(args.seed)
    model = draw_model_parameters(groups, seed=root.derive("params"), block_sizes=spec.block_sizes)
    if args.relative_sd > 0:
        model = perturb_parameters(model, args.relative_sd, args.mode, root.derive("perturb"))
    graphs = sample_population(model, args.n_graphs, root.derive("sample"), spec.default_membership(), summaries_only=False)
    print(write_population(args.out, graphs, args.seed))
    return EXIT_OK


def _cmd_test(args) -> int:
    spec = resolve_spec(args.spec)
    groups = build_parameter_groups(spec)
    graphs, _ = read_manifest(args.manifest)
    population = [summarize(g, spec.k_star) for g in graphs]
    report = run_tests(population, groups, args.method, args.alpha)
    if args.out:
        write_test_report(args.out, report)
    else:
        _emit(report.to_dict(), None)
    return EXIT_OK


def _cmd_bic(args) -> int:
    spec = resolve_spec(args.spec)
    groups = build_parameter_groups(spec)
    if args.manifest:
        graphs, _ = read_manifest(args.manifest)
        summary = aggregate_summaries([summarize(g, spec.k_star) for g in graphs])
    else:
        if not (args.graph and args.membership):
            raise _UsageError("bic needs --manifest or both --graph and --membership")
        summary = summarize(read_graph(args.graph, args.membership), spec.k_star)
    _emit(bic_delta(summary, groups).to_dict(), args.out)
    return EXIT_OK


def _cmd_groups(args) -> int:
    spec = resolve_spec(args.spec)
    groups = build_parameter_groups(spec)
    payload = {
        "k_star": spec.k_star,
        "n_groups": len(groups),
        "n_cells": int(groups.sizes.sum()),
        "groups": groups.to_rows(),
    }
    _emit(payload, args.out)
    return EXIT_OK


def _cmd_report(args) -> int:
    report = read_test_report(args.report)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(out / "rejection_matrix.csv", report.rejection_matrix)
    write_p_profile_csv(out / "p_profile.csv", report.p_profile)
    write_outcomes_csv(out / "groups.csv", report)
    for name in ("rejection_matrix.csv", "p_profile.csv", "groups.csv"):
        print(out / name)
    return EXIT_OK


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rmhsbm", description="Repeated-motif hierarchical SBM toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a simulation study from a JSON config")
    p.add_argument("--config", required=True, help="StudyConfig JSON file")
    p.add_argument("--out", required=True, help="output directory for the CSV files")
    p.add_argument("--seed", type=int, help="override the config's master seed")
    p.add_argument("--alpha", type=float, help="override the config's alpha")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sample", help="sample a population of graphs and write a manifest")
    p.add_argument("--spec", default="bnu1_desk", help="bundled spec name or spec JSON path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-graphs", type=int, default=10)
    p.add_argument("--nodes-per-block", type=int)
    p.add_argument("--relative-sd", type=float, default=0.0)
    p.add_argument("--mode", choices=("population", "per-individual"), default="population")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("test", help="run per-group tests on a population")
    p.add_argument("--manifest", required=True, help="population manifest JSON")
    p.add_argument("--spec", required=True, help="bundled spec name or spec JSON path")
    p.add_argument("--method", choices=METHODS, default="wilks-aggregated")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", help="write the TestReport JSON here instead of stdout")
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("bic", help="BIC comparison of tied and free models")
    p.add_argument("--spec", required=True)
    p.add_argument("--graph", help="edge list CSV")
    p.add_argument("--membership", help="membership CSV")
    p.add_argument("--manifest", help="pool a whole population instead of one graph")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bic)

    p = sub.add_parser("groups", help="list the tied parameter groups of a spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_groups)

    p = sub.add_parser("report", help="export a TestReport JSON as CSV files")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "alpha", None) is not None and not 0 < args.alpha < 1:
        parser.error(f"--alpha must lie in (0, 1), got {args.alpha}")
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"rmhsbm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"rmhsbm: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, SpecError, json.JSONDecodeError, FileNotFoundError, IsADirectoryError, ValueError) as exc:
        print(f"rmhsbm: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
