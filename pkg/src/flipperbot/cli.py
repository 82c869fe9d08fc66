"""Command line entry points.

Every flag can also be set through the environment with the FLIPPERBOT_
prefix (FLIPPERBOT_SCENARIO, FLIPPERBOT_SEED, ...); explicit flags win.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__, report, runner
from .world.scenario import BUILTIN_SCENARIOS


def _env(name: str, default):
    return os.environ.get(f"FLIPPERBOT_{name.upper()}", default)


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", default=_env("scenario", "pool"),
                   help="built-in scenario name or path to a scenario YAML")
    p.add_argument("--mode", default=_env("mode", "explore"),
                   choices=sorted(runner.MODES))
    p.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    p.add_argument("--duration", type=float,
                   default=(float(_env("duration", 0)) or None),
                   help="seconds; defaults to the scenario duration")
    p.add_argument("--config", default=_env("config", None),
                   help="config YAML; defaults to the packaged config")
    p.add_argument("--log-dir", default=_env("log_dir", None))
    p.add_argument("--save-frames", action="store_true",
                   help="also write the binary frame sidecar")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="flipperbot")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario headless")
    _add_run_args(p_run)

    p_replay = sub.add_parser("replay", help="re-execute a logged run and compare")
    p_replay.add_argument("--log-dir", required=True)

    p_report = sub.add_parser("report", help="metrics from a run log")
    p_report.add_argument("--log-dir", required=True)
    p_report.add_argument("--json", action="store_true")

    p_serve = sub.add_parser("serve", help="run with the operator console bridge")
    _add_run_args(p_serve)
    p_serve.add_argument("--listen", default=_env("listen", "127.0.0.1:8765"),
                         help="host:port for the websocket console")

    p_list = sub.add_parser("scenarios", help="list built-in scenarios")

    args = parser.parse_args(argv)

    if args.command == "run":
        result = runner.run(scenario=args.scenario, mode=args.mode,
                            seed=args.seed, duration=args.duration,
                            config_path=args.config, log_dir=args.log_dir,
                            save_frames=args.save_frames)
        summary = result.summary
        print(f"run complete: {result.manifest.record_count} records, "
              f"mean power {summary['mean_power_w']:.1f} W, "
              f"{len(summary['maneuvers'])} avoidance maneuvers")
        if args.log_dir:
            print(f"log: {args.log_dir}")
        return 0

    if args.command == "replay":
        rep = runner.replay(args.log_dir)
        print(rep)
        return 0 if rep.matches else 1

    if args.command == "report":
        summary = report.summarize(args.log_dir)
        if args.json:
            print(json.dumps(summary, indent=2, sort_keys=True))
        else:
            print(report.format_report(summary))
        return 0

    if args.command == "serve":
        from .server import serve
        serve(scenario=args.scenario, mode=args.mode, seed=args.seed,
              duration=args.duration, config_path=args.config,
              log_dir=args.log_dir, listen=args.listen)
        return 0

    if args.command == "scenarios":
        for name in BUILTIN_SCENARIOS:
            print(name)
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
