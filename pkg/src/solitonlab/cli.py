"""Command-line interface.

    solitonlab run [--config FILE] [--preset NAME] [--out DIR]
                   [--threads N] [--override key=value ...]
    solitonlab preset list
    solitonlab preset show NAME

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import ConfigError, SolitonLabError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solitonlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("--config", help="path to a key = value config file")
    run.add_argument("--preset", help="preset name to start from")
    run.add_argument("--out", help="output directory")
    run.add_argument("--threads", type=int, help="parallel sweep workers")
    run.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (repeatable)",
    )

    preset = sub.add_parser("preset", help="inspect the preset registry")
    psub = preset.add_subparsers(dest="preset_command", required=True)
    psub.add_parser("list", help="list presets")
    show = psub.add_parser("show", help="show one preset")
    show.add_argument("name")
    return parser


def _cmd_run(args) -> int:
    overrides = list(args.override)
    if args.out:
        overrides.append(f'out="{args.out}"')
    if args.threads:
        overrides.append(f"threads={args.threads}")
    cfg = load_config(args.config, overrides, preset=args.preset)
    from .runner import run_experiment

    art = run_experiment(cfg)
    print(f"wrote {art.manifest_path}")
    for p in art.csv_paths + art.svg_paths:
        print(f"  {p}")
    return 0


def _cmd_preset(args) -> int:
    from .presets import all_presets, get_preset

    if args.preset_command == "list":
        for p in all_presets():
            tag = " [long-running]" if p.long_running else ""
            print(f"{p.name}{tag}")
            print(f"    {p.description}")
        return 0
    p = get_preset(args.name)
    print(f"name: {p.name}")
    print(f"long_running: {str(p.long_running).lower()}")
    print(f"description: {p.description}")
    for key, value in sorted(p.values.items()):
        if isinstance(value, str):
            print(f'{key} = "{value}"')
        elif isinstance(value, bool):
            print(f"{key} = {str(value).lower()}")
        elif isinstance(value, list):
            print(f"{key} = [{', '.join(repr(v) for v in value)}]")
        else:
            print(f"{key} = {value!r}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_preset(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except SolitonLabError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
