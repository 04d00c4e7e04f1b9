"""Command-line front end.

One subcommand per pipeline stage (each re-runnable on a prior stage's
run directory), plus ``run`` for the full chain and ``synth`` to generate
benchmark panels. Exit codes: 0 success, 2 configuration error, 3 data
error, 4 stage failure.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import (
    ConfigError,
    DegenerateSeriesError,
    IntegrityError,
    RowError,
    SampleSizeError,
    SchemaError,
    StageFailure,
)
from .pipeline import STAGES, RunConfig, run_pipeline
from .synth import PlantedPanelSpec, gen_planted_panel

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_STAGE = 4

_DATA_ERRORS = (
    SchemaError,
    RowError,
    IntegrityError,
    SampleSizeError,
    DegenerateSeriesError,
    FileNotFoundError,
)


def _add_shared_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="YAML run configuration")
    parser.add_argument("--input", metavar="PATH", help="panel CSV (overrides config)")
    parser.add_argument("--out", metavar="DIR", help="run directory (overrides config)")
    parser.add_argument("--seed", type=int, metavar="N", help="master seed (overrides config)")
    parser.add_argument("--jobs", type=int, metavar="N", help="worker count (overrides config)")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tenet",
        description="Directed information-flow networks from investor-flow panels",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the full pipeline (or selected stages)")
    _add_shared_flags(run_p)
    run_p.add_argument(
        "--stage",
        action="append",
        choices=STAGES,
        metavar="NAME",
        help=f"restrict to a stage (repeatable); one of {', '.join(STAGES)}",
    )

    for stage in STAGES:
        stage_p = sub.add_parser(stage, help=f"run only the {stage} stage")
        _add_shared_flags(stage_p)

    synth_p = sub.add_parser("synth", help="generate a synthetic benchmark panel")
    synth_p.add_argument("--out", metavar="PATH", default="panel_synth.csv",
                         help="output panel CSV (default %(default)s)")
    synth_p.add_argument("--truth", metavar="PATH",
                         help="truth-ledger JSON (default: <out>.truth.json)")
    synth_p.add_argument("--stocks", type=int, default=20)
    synth_p.add_argument("--length", type=int, default=600)
    synth_p.add_argument("--edges", type=int, default=10,
                         help="number of planted couplings (0 = independent null)")
    synth_p.add_argument("--coupling", type=float, default=0.8)
    synth_p.add_argument("--n-symbols", type=int, default=5, dest="n_symbols")
    synth_p.add_argument("--seed", type=int, default=0)
    synth_p.add_argument("-v", "--verbose", action="store_true")

    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_yaml(args.config) if args.config else RunConfig()
    overrides = {}
    if args.input is not None:
        overrides["input"] = args.input
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.jobs is not None:
        if args.jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
        overrides["jobs"] = args.jobs
    return replace(config, **overrides) if overrides else config


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    stages = getattr(args, "stage", None)
    out = run_pipeline(config, stages=stages)
    print(f"run complete: {out}")
    return EXIT_OK


def _cmd_stage(stage: str, args: argparse.Namespace) -> int:
    config = _load_config(args)
    out = run_pipeline(config, stages=[stage])
    print(f"{stage} complete: {out}")
    return EXIT_OK


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = PlantedPanelSpec(
        n_stocks=args.stocks,
        length=args.length,
        n_edges=args.edges,
        coupling=args.coupling,
        n_symbols=args.n_symbols,
    )
    panel, truth = gen_planted_panel(spec, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    panel.to_csv(out)
    truth_path = Path(args.truth) if args.truth else out.with_suffix(out.suffix + ".truth.json")
    truth_path.write_text(json.dumps(truth, sort_keys=True, indent=2) + "\n")
    print(f"panel written: {out} ({args.stocks} stocks x {args.length} dates, "
          f"{args.edges} planted edges); truth: {truth_path}")
    return EXIT_OK


def _classify_stage_failure(exc: StageFailure) -> int:
    cause = exc.cause
    if isinstance(cause, ConfigError):
        return EXIT_CONFIG
    if isinstance(cause, _DATA_ERRORS):
        return EXIT_DATA
    return EXIT_STAGE


def _describe(exc: Exception) -> str:
    if isinstance(exc, RowError) and exc.rows:
        head = "; ".join(f"line {ln}: {why}" for ln, why in exc.rows[:5])
        more = len(exc.rows) - 5
        suffix = f" (+{more} more)" if more > 0 else ""
        return f"{exc} [{head}{suffix}]"
    return str(exc)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command in STAGES:
            return _cmd_stage(args.command, args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {_describe(exc)}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"data error: {_describe(exc)}", file=sys.stderr)
        return EXIT_DATA
    except StageFailure as exc:
        code = _classify_stage_failure(exc)
        kind = {EXIT_CONFIG: "config error", EXIT_DATA: "data error"}.get(code, "stage failure")
        print(f"{kind} in stage {exc.stage!r}: {_describe(exc)}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
