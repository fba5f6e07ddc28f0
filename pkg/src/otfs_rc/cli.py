"""Command line front end.

Subcommands::

    otfs-rc init-config out.json      write a runnable starting config
    otfs-rc sweep -c cfg.json -o ber.csv [-m meta.json] [--workers N]
    otfs-rc nmse -c cfg.json -o nmse.csv
    otfs-rc complexity -o counts.csv [-c cfg.json]
    otfs-rc verify-channel [--trials N]
"""

from __future__ import annotations

import argparse
import json
import sys

from otfs_rc import harness
from otfs_rc.complexity import write_complexity_csv


def _cmd_init_config(args) -> int:
    with open(args.out, "w") as fh:
        json.dump(harness.DEFAULT_CONFIG, fh, indent=2)
        fh.write("\n")
    print(f"wrote {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    config = harness.load_config(args.config)
    progress = None
    if args.progress:
        def progress(done, total):
            print(f"\rframe {done}/{total}", end="", file=sys.stderr, flush=True)
    result = harness.run_sweep(config, workers=args.workers, progress=progress)
    if args.progress:
        print(file=sys.stderr)
    harness.write_ber_csv(result.rows, args.out)
    if args.meta:
        harness.write_metadata(result.metadata, args.meta)
    n_fail = len(result.metadata["failures"])
    print(f"wrote {args.out} ({len(result.rows)} rows, {n_fail} failed frames)")
    return 0


def _cmd_nmse(args) -> int:
    config = harness.load_config(args.config)
    rows = harness.nmse_report(config)
    harness.write_nmse_csv(rows, args.out)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def _cmd_complexity(args) -> int:
    config = {}
    if args.config:
        with open(args.config) as fh:
            config = json.load(fh)
    rows = harness.complexity_report(config)
    write_complexity_csv(rows, args.out)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def _cmd_verify_channel(args) -> int:
    report = harness.verify_channel(trials=args.trials, seed=args.seed)
    for name in sorted(report["worst"]):
        status = "PASS" if report["passed"][name] else "FAIL"
        print(f"{name:12s} worst {report['worst'][name]:.3e} "
              f"(tol {report['tolerances'][name]:.0e})  {status}")
    return 0 if all(report["passed"].values()) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otfs-rc",
        description="Delay-Doppler link simulation with reservoir detectors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-config", help="write a runnable example config")
    p.add_argument("out")
    p.set_defaults(func=_cmd_init_config)

    p = sub.add_parser("sweep", help="run a BER sweep from a JSON config")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--out", required=True, help="output CSV path")
    p.add_argument("-m", "--meta", help="optional metadata JSON path")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("nmse", help="reservoir size / window NMSE study")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_nmse)

    p = sub.add_parser("complexity", help="operation-count table")
    p.add_argument("-c", "--config")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_complexity)

    p = sub.add_parser("verify-channel", help="cross-check the channel routes")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_verify_channel)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
