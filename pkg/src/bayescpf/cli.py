"""Command line interface.

Subcommands: ``run`` a single config, ``sweep`` a parameter grid, ``heatmap``
the observation-probability grid, and ``validate-config``. Exit code is 0 on
success and nonzero with a diagnostic on any failure.
"""

import argparse
import os
import sys

from . import config as config_mod
from . import runner


def _add_set_option(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one config value (repeatable)",
    )


def _load_config(path, overrides) -> config_mod.TrialConfig:
    if path is None:
        cfg = config_mod.TrialConfig().with_overrides(overrides)
    else:
        cfg = config_mod.load(path, overrides)
    return cfg.validate()


def _write_config_echo(out_dir: str, cfg: config_mod.TrialConfig) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.txt"), "w") as fh:
        fh.write(f"# config hash: {cfg.hash()}\n")
        fh.write(cfg.canonical())


def cmd_run(args) -> int:
    cfg = _load_config(args.config, args.overrides)
    if args.full_rate:
        cfg = cfg.with_overrides(["sim.record_every=1"]).validate()
    _write_config_echo(args.out, cfg)
    rows, failures = runner.run_config(cfg, args.out)
    path = runner.write_summary(args.out, rows + failures)
    print(f"wrote {path} ({cfg.sim.trials} trials, config {cfg.hash()})")
    if failures:
        print(f"{len(failures)} trial(s) failed", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args) -> int:
    base = config_mod.TrialConfig().with_overrides(args.overrides)
    with open(args.grid) as fh:
        configs = config_mod.expand_grid(fh, base=base)
    for cfg in configs:
        cfg.validate()
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "configs.csv"), "w") as fh:
        keys = [k for k, _ in configs[0].items()]
        fh.write("config_hash," + ",".join(keys) + "\n")
        for cfg in configs:
            fh.write(
                cfg.hash()
                + ","
                + ",".join(config_mod._format_value(v) for _, v in cfg.items())
                + "\n"
            )
    rows, failures = runner.run_batch(configs, args.out, jobs=args.jobs)
    path = runner.write_summary(args.out, rows + failures)
    print(f"wrote {path} ({len(configs)} configs)")
    if failures:
        print(f"{len(failures)} trial(s) failed", file=sys.stderr)
        return 1
    return 0


def cmd_heatmap(args) -> int:
    if args.out:
        runner.write_heatmap(args.out, args.resolution)
        print(f"wrote {args.out}")
    else:
        runner.write_heatmap(sys.stdout, args.resolution)
    return 0


def cmd_validate(args) -> int:
    cfg = _load_config(args.config, args.overrides)
    print(f"OK config {cfg.hash()}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayescpf",
        description="Collective perception experiments with degrading sensors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run all trials of one config")
    p.add_argument("config", nargs="?", help="config file (defaults apply if omitted)")
    p.add_argument("--out", default="bayescpf_out", help="output directory")
    p.add_argument(
        "--full-rate",
        action="store_true",
        help="record every control step instead of every filter period",
    )
    _add_set_option(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a Cartesian parameter grid")
    p.add_argument("grid", help="grid file; comma-separated values sweep")
    p.add_argument("--out", default="bayescpf_sweep", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel trial processes")
    _add_set_option(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("heatmap", help="emit the observation-probability grid")
    p.add_argument("--resolution", type=int, default=101, help="points per axis")
    p.add_argument("--out", default=None, help="output CSV (stdout if omitted)")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("validate-config", help="check a config and print its hash")
    p.add_argument("config", nargs="?", help="config file")
    _add_set_option(p)
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (config_mod.ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
