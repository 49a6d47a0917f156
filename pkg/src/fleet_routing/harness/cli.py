"""
Command-line front end.
[CTX:PBI-5:5-4:CLI]

Subcommands: gen, solve, bench, sweep, check. Exit codes: 0 success,
1 usage or validation failure, 2 infeasible, 3 time limit without incumbent.
"""
import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

from fleet_routing.checker import validate_solution
from fleet_routing.core.clock import FakeTimeProvider, TimeProvider
from fleet_routing.core.config import ToolkitConfig, load_config
from fleet_routing.core.errors import FleetRoutingError
from fleet_routing.core.source import NamedInstance
from fleet_routing.formulations import BuildOptions, parse_kind, resolve_fleet
from fleet_routing.harness.bench import (
    BenchReport,
    Variant,
    parse_variant,
    run_benchmark,
    solve_cell,
)
from fleet_routing.harness.report import TABLES, write_report, write_sweep_report
from fleet_routing.harness.sweep import sweep_warmstart_budget
from fleet_routing.instance import (
    FleetMode,
    fleet_from_document,
    generate_instance,
    load_instance,
    save_instance,
)
from fleet_routing.mip.model import ModelBuildError
from fleet_routing.solver import MIPStatus, SolveParams
from fleet_routing.sources import DirectorySource, GeneratedSource
from fleet_routing.strengthen import (
    CUT_FAMILIES,
    ORDERING_FAMILIES,
    StrengthenConfig,
    compatible_families,
    parse_family_list,
)
from fleet_routing.warmstart.construct import CapacityShortfallError
from fleet_routing.warmstart.solution import solution_from_document

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INFEASIBLE = 2
EXIT_NO_INCUMBENT = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="YAML config file (default config/solver.yml)")
    parser.add_argument("--time-limit", type=float, default=None, help="Seconds per MIP run (overrides config)")
    parser.add_argument("--seed", type=int, default=0, help="Heuristic and generator seed")
    parser.add_argument("--output", type=Path, default=None, help="Output file or directory")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")


def _add_model_flags(parser: argparse.ArgumentParser, default_preset: str = "full") -> None:
    parser.add_argument("--model", default="sc", help="sc | sv | fc | ff, optionally with :<preset>")
    parser.add_argument("--preset", default=None, help=f"base | cuts | symmetry | full (default {default_preset})")
    parser.add_argument("--cuts", default=None, help="all, none or a comma list of cut families")
    parser.add_argument("--symmetry", default=None, help="all, none or a comma list of symmetry families")
    parser.add_argument(
        "--ordering", default=None,
        help="all, none or a comma list of ordering families (customer assignment with farthest-first reordering)",
    )
    parser.add_argument("--warmstart-budget", type=float, default=None, help="Heuristic seconds before the MIP")
    parser.add_argument(
        "--no-heuristic-start", action="store_true",
        help="Solve cold when no warm-start budget is given (overrides solver.heuristic_start)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fleet-routing",
        description="Exact MIP solver toolkit for split-delivery fleet size and mix routing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Generate seeded instances")
    _add_common(gen)
    gen.add_argument("--customers", type=int, default=8)
    gen.add_argument("--commodities", type=int, default=2)
    gen.add_argument("--profile", default="standard", help="standard | split-heavy | single-type | oracle")
    gen.add_argument("--count", type=int, default=1)

    solve = sub.add_parser("solve", help="Solve one instance with one variant")
    _add_common(solve)
    _add_model_flags(solve)
    solve.add_argument("instance", type=Path)
    solve.add_argument("--log", type=Path, default=None, help="Solve log (JSON lines)")

    bench = sub.add_parser("bench", help="Benchmark variants over a set of instances")
    _add_common(bench)
    bench.add_argument("--instances", type=Path, default=None, help="Directory of instance documents")
    bench.add_argument("--generate", type=int, default=None, help="Generate this many seeded instances instead")
    bench.add_argument("--customers", type=int, default=8)
    bench.add_argument("--commodities", type=int, default=2)
    bench.add_argument("--profile", default="standard")
    bench.add_argument("--variants", default=None, help="Comma list of <kind>[:<preset>] (default from config)")
    bench.add_argument("--warmstart-budget", type=float, default=None)
    bench.add_argument(
        "--no-heuristic-start", action="store_true",
        help="Cold cells get no solver-seeded incumbent (overrides solver.heuristic_start)",
    )
    bench.add_argument(
        "--fake-clock", type=float, default=None, metavar="TICK",
        help="Give every cell a fake clock advancing TICK seconds per reading (reproducible runs)",
    )
    bench.add_argument("--concurrency", type=int, default=None)
    bench.add_argument("--format", choices=["csv", "markdown"], default="csv")
    bench.add_argument("--table", choices=list(TABLES) + ["all"], default="main")

    sweep = sub.add_parser("sweep", help="Split a fixed budget between heuristic and MIP")
    _add_common(sweep)
    sweep.add_argument("instance", type=Path)
    sweep.add_argument("--model", default="sc:full")
    sweep.add_argument("--budgets", default=None, help="Comma list of heuristic seconds (default from config)")
    sweep.add_argument("--format", choices=["csv", "markdown"], default="csv")
    sweep.add_argument(
        "--fake-clock", type=float, default=None, metavar="TICK",
        help="Give every budget a fake clock advancing TICK seconds per reading",
    )

    check = sub.add_parser("check", help="Validate a solution document")
    _add_common(check)
    check.add_argument("instance", type=Path)
    check.add_argument("solution", type=Path)
    check.add_argument("--model", default=None, help="Fleet kind to size the fleet with when the instance has none")

    return parser


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _solve_params(args: argparse.Namespace, config: ToolkitConfig, time_limit: Optional[float] = None) -> SolveParams:
    limit = args.time_limit or time_limit or config.solver.time_limit_s
    overrides = {"time_limit_s": limit, "seed": args.seed}
    if getattr(args, "no_heuristic_start", False):
        overrides["heuristic_start"] = False
    return SolveParams.from_settings(config.solver, **overrides)


def _clock_factory(args: argparse.Namespace) -> Optional[Callable[[], TimeProvider]]:
    """Fresh `FakeTimeProvider` per cell under `--fake-clock`, else None (system clock)."""
    tick = getattr(args, "fake_clock", None)
    if tick is None:
        return None
    if tick <= 0:
        raise ValueError(f"--fake-clock tick must be positive, got {tick}")
    return lambda: FakeTimeProvider(initial_time=0.0, tick=tick)


def _build_options(config: ToolkitConfig) -> BuildOptions:
    return BuildOptions(priorities=dict(config.solver.priorities), fleet_slack=config.instance.fleet_slack)


def variant_from_args(args: argparse.Namespace) -> Variant:
    """
    Variant of `--model` with `--preset`, or explicit families when any of
    `--cuts`, `--symmetry` or `--ordering` is given.
    """
    variant = parse_variant(args.model if args.preset is None else f"{args.model.split(':')[0]}:{args.preset}")
    if args.cuts is None and args.symmetry is None and args.ordering is None:
        return variant
    allowed = compatible_families(variant.fleet_kind, variant.routing_kind)
    symmetry_allowed = [f for f in allowed if f not in CUT_FAMILIES and f not in ORDERING_FAMILIES]
    cuts = parse_family_list(args.cuts, [f for f in allowed if f in CUT_FAMILIES])
    symmetry = parse_family_list(args.symmetry, symmetry_allowed)
    ordering = parse_family_list(args.ordering, ORDERING_FAMILIES)
    return Variant(
        code=variant.code,
        preset=variant.preset,
        config=StrengthenConfig(cuts=cuts, symmetry=symmetry | ordering, reorder_customers=bool(ordering)),
    )


def _load_named(path: Path) -> NamedInstance:
    inst = load_instance(path.read_text())
    return NamedInstance(name=path.stem, instance=inst, fleet=fleet_from_document(inst), metadata={"path": str(path)})


def _write(text: str, output: Optional[Path]) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(text, encoding="utf-8")
    logger.info(f"[CTX:PBI-5:5-4:CLI] Wrote {output}")


def cmd_gen(args: argparse.Namespace, config: ToolkitConfig) -> int:
    written = []
    for offset in range(args.count):
        seed = args.seed + offset
        inst = generate_instance(
            seed,
            args.customers,
            args.commodities,
            args.profile,
            scale=config.instance.scale,
            name=f"{args.profile}-{args.customers}-s{seed}",
        )
        document = save_instance(inst)
        if args.output is None:
            sys.stdout.write(document + "\n")
            continue
        target = args.output
        if args.count > 1 or target.suffix != ".json":
            target = target / f"{inst.name}.json"
        _write(document + "\n", target)
        written.append(str(target))
    if written:
        print(json.dumps({"instances": written}))
    return EXIT_OK


def cmd_solve(args: argparse.Namespace, config: ToolkitConfig) -> int:
    named = _load_named(args.instance)
    variant = variant_from_args(args)
    params = _solve_params(args, config)
    options = _build_options(config)
    try:
        cell = solve_cell(
            named, variant, params,
            warmstart_budget=args.warmstart_budget,
            seed=args.seed,
            warmstart=config.warmstart,
            build_options=options,
        )
    except (ModelBuildError, CapacityShortfallError) as e:
        print(json.dumps({"instance": named.name, "variant": variant.label, "status": "infeasible", "reason": str(e)}))
        return EXIT_INFEASIBLE

    if args.log is not None:
        _write("".join(event.to_json() + "\n" for event in cell.events), args.log)
    summary = {
        "instance": named.name,
        "variant": variant.label,
        "status": cell.status.value,
        "objective": cell.objective,
        "bound": cell.bound,
        "gap": cell.gap,
        "wall_s": cell.wall_s,
        "subtour_cuts": cell.subtour_cuts,
        "warm_value": cell.warm_value,
    }
    print(json.dumps(summary, default=str))

    if cell.status is MIPStatus.INFEASIBLE:
        return EXIT_INFEASIBLE
    if cell.objective is None:
        return EXIT_NO_INCUMBENT
    if args.output is not None and cell.solution is not None:
        _write(cell.solution.to_json() + "\n", args.output)
    return EXIT_OK


def _bench_instances(args: argparse.Namespace, config: ToolkitConfig) -> list[NamedInstance]:
    if args.instances is not None:
        return list(DirectorySource(args.instances).instances())
    count = args.generate or 1
    source = GeneratedSource(
        seeds=range(args.seed, args.seed + count),
        n_customers=args.customers,
        n_commodities=args.commodities,
        profile=args.profile,
        radius=config.instance.cluster_radius,
    )
    return list(source.instances())


def cmd_bench(args: argparse.Namespace, config: ToolkitConfig) -> int:
    variants = (
        [v.strip() for v in args.variants.split(",") if v.strip()]
        if args.variants
        else list(config.harness.variants)
    )
    instances = _bench_instances(args, config)
    report: BenchReport = asyncio.run(run_benchmark(
        instances,
        variants,
        params=_solve_params(args, config, config.harness.time_limit_s),
        warmstart_budget=args.warmstart_budget,
        seed=args.seed,
        warmstart=config.warmstart,
        max_concurrency=args.concurrency or config.harness.max_concurrency,
        clock_factory=_clock_factory(args),
        build_options=_build_options(config),
    ))
    tables = TABLES if args.table == "all" else (args.table,)
    text = "\n".join(write_report(report, args.format, table) for table in tables)
    _write(text, args.output)
    if args.output is not None:
        log = args.output.with_suffix(".events.jsonl")
        lines = [e.to_json() for row in report.rows for cell in row.cells.values() for e in cell.events]
        _write("".join(line + "\n" for line in lines), log)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, config: ToolkitConfig) -> int:
    budgets = (
        [float(b) for b in args.budgets.split(",") if b.strip()]
        if args.budgets
        else [float(b) for b in config.harness.budgets]
    )
    total = args.time_limit or config.harness.time_limit_s
    budgets = [b for b in budgets if b <= total]
    points = sweep_warmstart_budget(
        _load_named(args.instance),
        args.model,
        budgets,
        total,
        params=SolveParams.from_settings(config.solver, time_limit_s=total),
        seed=args.seed,
        warmstart=config.warmstart,
        clock_factory=_clock_factory(args),
        build_options=_build_options(config),
    )
    _write(write_sweep_report(points, args.format), args.output)
    return EXIT_OK


def cmd_check(args: argparse.Namespace, config: ToolkitConfig) -> int:
    inst = load_instance(args.instance.read_text())
    solution = solution_from_document(args.solution.read_text())
    fleet = fleet_from_document(inst)
    if fleet is None:
        if args.model is not None:
            fleet_kind = parse_kind(args.model.split(":")[0])[0]
        else:
            fleet_kind = FleetMode.FLEXIBLE if all(t is None for t in solution.types) else FleetMode.STABLE
        fleet = resolve_fleet(inst, fleet_kind, slack=config.instance.fleet_slack)
    report = validate_solution(inst, fleet, solution)
    _write(json.dumps(report.to_dict(), indent=2) + "\n", args.output)
    return EXIT_OK if report.passed else EXIT_FAILURE


COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "bench": cmd_bench,
    "sweep": cmd_sweep,
    "check": cmd_check,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        config = load_config(args.config)
        return COMMANDS[args.command](args, config)
    except (FleetRoutingError, ValueError, OSError) as e:
        logger.error(f"[CTX:PBI-5:5-4:CLI] {args.command} failed: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
