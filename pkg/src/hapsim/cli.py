import argparse
import csv
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from .exceptions import (
    EmptyLogError,
    HapsimError,
    MissingColumnError,
    ScenarioParseError,
    ScenarioValidationError,
)
from .harness import (
    compare_runs,
    compute_metrics,
    run_pair,
    run_simulation,
    run_sweep,
)
from .plotting import DEFAULT_PANELS, PlotSpec, save_svg
from .scenario import (
    EPSILON_SWEEP,
    ScenarioConfig,
    builtin_names,
    builtin_scenarios,
    load_scenario,
    parse_override,
)
from .simlog import SimLog, log_document, read_log, write_csv, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

SWEEP_KEY = "controller.epsilon"
SWEEP_COLUMNS = ("value", "steady_state_tau_diff", "max_abs_theta_s")


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    return dict(parse_override(item) for item in args.set)


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def export_run(log: SimLog, out: Path) -> list[Path]:
    """Write the CSV log, its JSON mirror and the metrics of one run."""
    metrics = compute_metrics(log)
    return [
        write_csv(log, out / f"{log.name}.csv"),
        write_json(log_document(log), out / f"{log.name}.json"),
        write_json(metrics.to_document(), out / f"{log.name}.metrics.json"),
    ]


def cmd_run(args: argparse.Namespace) -> int:
    overrides = _overrides(args)
    cfg = load_scenario(args.scenario, overrides)
    log = run_simulation(cfg, overrides)
    export_run(log, _out_dir(args))
    return EXIT_OK


def _sweep_values(
        args: argparse.Namespace,
        cfg: ScenarioConfig,
) -> list[float]:
    if args.values is not None:
        return args.values
    if cfg.sweep is not None and cfg.sweep.key == args.key:
        return list(cfg.sweep.values)
    if args.key == SWEEP_KEY:
        return list(EPSILON_SWEEP)
    return []


def cmd_sweep(args: argparse.Namespace) -> int:
    overrides = _overrides(args)
    cfg = load_scenario(args.scenario, overrides)
    values = _sweep_values(args, cfg)
    results = run_sweep(cfg, args.key, values, max_workers=args.workers)

    out = _out_dir(args)
    summary = out / f"{cfg.name}.sweep.csv"
    with open(summary, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for result in results:
            result.log.meta["overrides"].update(overrides)
            export_run(result.log, out)
            writer.writerow([
                f"{result.value:.9g}",
                f"{result.metrics.steady_state_tau_diff:.9g}",
                f"{result.metrics.max_abs_theta_s:.9g}",
            ])
    logger.info("Wrote %s", summary)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    overrides = _overrides(args)
    cfg = load_scenario(args.scenario, overrides)
    adaptive, fixed = run_pair(cfg)
    report = compare_runs(adaptive, fixed)

    out = _out_dir(args)
    for log in (adaptive, fixed):
        log.meta["overrides"] = overrides
        export_run(log, out)
    document = report.to_document()
    document["scenario"] = cfg.name
    write_json(document, out / "comparison.json")
    if not report.adaptive_lower_disagreement:
        logger.warning("Adaptive run does not lower the disagreement")
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    log = read_log(Path(args.log))
    panels = tuple(
        tuple(column.strip() for column in panel.split(","))
        for panel in args.panel
    ) or DEFAULT_PANELS
    if args.output:
        output = Path(args.output)
    else:
        output = Path(args.log).with_suffix(".svg")
    spec = PlotSpec(
        panels=panels,
        output=output,
        ylabels=tuple(args.ylabel),
        title=args.title or "",
    )
    save_svg(log, spec)
    return EXIT_OK


def cmd_list(args: argparse.Namespace) -> int:
    for name, cfg in builtin_scenarios().items():
        epsilon = cfg.controller.epsilon.bounds()[1]
        print(
            f"{name:<26} {cfg.mode_label.value:<16} "
            f"{cfg.duration:g} s, epsilon <= {epsilon:g}",
        )
    return EXIT_OK


def _logging_parent() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument(
        "--quiet", action="store_true", help="only report warnings and errors",
    )
    verbosity.add_argument(
        "--verbose", action="store_true", help="report debug messages",
    )
    return parser


def _scenario_parent() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument(
        "scenario",
        help=f"built-in name ({', '.join(builtin_names())}) or TOML file",
    )
    parser.add_argument(
        "--out", default=".", help="output directory (default: current)",
    )
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a scenario value by dotted key, repeatable",
    )
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hapsim",
        description="Adaptive haptic shared-control steering simulations",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    logging_parent = _logging_parent()
    scenario_parent = _scenario_parent()

    run = commands.add_parser(
        "run",
        parents=[logging_parent, scenario_parent],
        help="simulate a scenario and export its log and metrics",
    )
    run.set_defaults(handler=cmd_run)

    sweep = commands.add_parser(
        "sweep",
        parents=[logging_parent, scenario_parent],
        help="simulate a scenario once per value of one key",
    )
    sweep.add_argument("--key", default=SWEEP_KEY)
    sweep.add_argument(
        "--values", type=float, nargs="*", default=None,
        help="values to sweep (default: the scenario's sweep table)",
    )
    sweep.add_argument("--workers", type=int, default=None)
    sweep.set_defaults(handler=cmd_sweep)

    compare = commands.add_parser(
        "compare",
        parents=[logging_parent, scenario_parent],
        help="run adaptive and fixed impedance variants and compare them",
    )
    compare.set_defaults(handler=cmd_compare)

    plot = commands.add_parser(
        "plot",
        parents=[logging_parent],
        help="render a CSV or JSON log as SVG panels",
    )
    plot.add_argument("log")
    plot.add_argument(
        "--panel",
        action="append",
        default=[],
        metavar="COL[,COL...]",
        help="columns of one panel, repeatable",
    )
    plot.add_argument("--ylabel", action="append", default=[])
    plot.add_argument("--title")
    plot.add_argument("-o", "--output")
    plot.set_defaults(handler=cmd_plot)

    listing = commands.add_parser(
        "list", parents=[logging_parent], help="list built-in scenarios",
    )
    listing.set_defaults(handler=cmd_list)
    return parser


def setup_logging(args: argparse.Namespace) -> None:
    if args.quiet:
        level = logging.WARNING
    elif args.verbose:
        level = logging.DEBUG
    else:
        level = logging.INFO
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args)
    try:
        return args.handler(args)
    except (ScenarioParseError, MissingColumnError) as e:
        logger.error("%s", e)
        return EXIT_PARSE
    except (ScenarioValidationError, EmptyLogError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_VALIDATION
    except HapsimError as e:
        logger.error("%s", e)
        return EXIT_RUNTIME
