"""Command-line entry point.

Subcommands:
  analytic SPEC     evaluate the model only, write <name>.csv
  simulate SPEC     run Monte Carlo + model for a YAML spec, write <name>.csv
  reproduce FIGURE  run the built-in spec for one result figure (4a..5c)

Exit codes: 0 success, 1 configuration error, 2 runtime or model error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .errors import ConfigError, ModelError
from .harness import (
    FIGURE_IDS,
    default_out_dir,
    load_spec,
    reproduce_spec,
    run_experiment,
)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--out", default=None, help="output directory (default: $SPSBENCH_OUT or ./out)")
    p.add_argument("--seed", type=int, default=None, help="override the base seed")
    p.add_argument("--jobs", type=int, default=None, help="parallel trial workers")
    p.add_argument("--trials", type=int, default=None, help="override the trial count")
    p.add_argument("--duration", type=float, default=None, help="override trial duration (s)")
    p.add_argument(
        "--strict-paper-mode",
        action="store_true",
        help="let a transmitting vehicle sense other subchannels in its own slot",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spsbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="model curves only for a YAML spec")
    p.add_argument("spec", help="path to a YAML experiment spec")
    _add_common(p)

    p = sub.add_parser("simulate", help="Monte Carlo + model for a YAML spec")
    p.add_argument("spec", help="path to a YAML experiment spec")
    _add_common(p)

    p = sub.add_parser("reproduce", help="run a built-in figure spec")
    p.add_argument("figure", help=f"one of: {', '.join(FIGURE_IDS)}")
    _add_common(p)

    return parser


def _apply_overrides(spec, args):
    updates = {}
    if args.seed is not None:
        updates["base_seed"] = args.seed
    if args.trials is not None:
        updates["trials"] = args.trials
    if args.duration is not None:
        updates["duration_s"] = args.duration
    return replace(spec, **updates) if updates else spec


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "reproduce":
            spec = reproduce_spec(args.figure)
        else:
            spec = load_spec(args.spec)
        spec = _apply_overrides(spec, args)
        out_dir = args.out if args.out is not None else default_out_dir()
        path, n_errors = run_experiment(
            spec,
            out_dir,
            jobs=args.jobs,
            simulate=args.command != "analytic",
            strict_paper_mode=args.strict_paper_mode,
        )
    except (ConfigError, FileNotFoundError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except (ModelError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(path)
    if n_errors:
        print(f"{n_errors} grid rows carry errors", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
