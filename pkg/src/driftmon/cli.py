"""Command-line surface: run pipelines, size studies, data generation, reports.

Exit codes: 0 success, 2 configuration or usage error, 1 runtime error.
All output files are flat CSV/JSON stamped with the config hash and seed so
re-runs are verifiable; wall-clock timing columns are the only exception to
byte-identical reproduction.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys

from .errors import ConfigError, DriftmonError
from .evaluate import build_report, read_runlog, write_report_csv, write_report_json, write_runlog
from .pipeline import compare_policies, comparison_table, load_config, run
from .simulate import DISTRIBUTIONS, NullStudyConfig, RegimeScenario, gen_regime_streams, run_null_study
from .streams import write_csv


def _write_report_files(report, out_dir: str, stamp: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_report_csv(report, os.path.join(out_dir, "report.csv"), header_comment=stamp)
    write_report_json(report, os.path.join(out_dir, "report.json"))


def _cmd_run(args) -> int:
    config = load_config(args.config)
    log = run(config)
    report = build_report(log)
    out_dir = args.out or config.out_dir or "driftmon_out"
    stamp = f"config_hash={log.config_hash} seed={log.seed}"
    write_runlog(log, out_dir)
    _write_report_files(report, out_dir, stamp)
    for s in report.streams:
        print(f"{s.stream_id}: smape={s.smape:.2f} breaks={s.n_breaks}")
    print(f"average: smape={report.avg_smape:.2f} breaks={report.avg_breaks:.2f}")
    print(f"outputs written to {out_dir}")
    return 0


def _cmd_compare(args) -> int:
    configs = [load_config(path) for path in args.configs]
    runs = compare_policies(configs)
    rows = comparison_table(runs)
    out_dir = args.out or "driftmon_out"
    os.makedirs(out_dir, exist_ok=True)
    labels = [cr.label for cr in runs]
    table_path = os.path.join(out_dir, "comparison.csv")
    with open(table_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["stream_id"] + labels)
        for row in rows:
            writer.writerow([row["stream_id"]] + [repr(row[label]) for label in labels])
    for cr in runs:
        sub = os.path.join(out_dir, cr.label.replace("/", "_"))
        write_runlog(cr.log, sub)
        _write_report_files(cr.report, sub,
                            f"config_hash={cr.log.config_hash} seed={cr.log.seed}")
    header = "stream_id".ljust(12) + "".join(label.rjust(28) for label in labels)
    print(header)
    for row in rows:
        line = str(row["stream_id"]).ljust(12)
        line += "".join(f"{row[label]:28.2f}" for label in labels)
        print(line)
    print(f"outputs written to {out_dir}")
    return 0


def _cmd_null_study(args) -> int:
    config = NullStudyConfig(
        distribution=args.dist,
        stream_length=args.length,
        batch_size=args.batch,
        alpha=args.alpha,
        n_replications=args.reps,
        seed=args.seed,
    )
    freq = run_null_study(config, threads=args.threads)
    print(f"rejection_frequency={freq:.4f}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        payload = json.dumps(config.__dict__, sort_keys=True)
        stamp = (f"config_hash={hashlib.sha256(payload.encode()).hexdigest()[:12]} "
                 f"seed={config.seed}")
        path = os.path.join(args.out, "null_study.csv")
        new_file = not os.path.exists(path)
        with open(path, "a", newline="", encoding="utf-8") as handle:
            if new_file:
                handle.write(f"# {stamp}\n")
                handle.write("distribution,length,batch,alpha,rejection_freq\n")
            handle.write(f"{config.distribution},{config.stream_length},"
                         f"{config.batch_size},{config.alpha},{freq!r}\n")
        print(f"appended to {path}")
    return 0


def _cmd_gen_data(args) -> int:
    try:
        with open(args.scenario, encoding="utf-8") as handle:
            data = json.load(handle)
    except FileNotFoundError:
        raise ConfigError("scenario", f"scenario file not found: {args.scenario}")
    except json.JSONDecodeError as exc:
        raise ConfigError("scenario", f"invalid JSON in {args.scenario}: {exc}")
    try:
        scenario = RegimeScenario.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError("scenario", str(exc))
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    streams = gen_regime_streams(scenario)
    payload = json.dumps(scenario.to_dict(), sort_keys=True)
    stamp = (f"config_hash={hashlib.sha256(payload.encode()).hexdigest()[:12]} "
             f"seed={scenario.seed}")
    write_csv(streams, args.out, header_comment=stamp)
    print(f"wrote {streams.n_ticks} ticks x {streams.n_streams} streams to {args.out}")
    return 0


def _cmd_report(args) -> int:
    log = read_runlog(args.runlog)
    report = build_report(log)
    out_dir = args.out or args.runlog
    _write_report_files(report, out_dir, f"config_hash={log.config_hash} seed={log.seed}")
    for s in report.streams:
        print(f"{s.stream_id}: smape={s.smape:.2f} breaks={s.n_breaks}")
    print(f"average: smape={report.avg_smape:.2f} breaks={report.avg_breaks:.2f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftmon",
        description="Monitored retraining for streaming forecast models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one monitored forecasting pipeline")
    p_run.add_argument("--config", required=True, help="path to a JSON run config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="run several configs on identical data")
    p_cmp.add_argument("--configs", nargs="+", required=True, help="run config paths")
    p_cmp.add_argument("--out", default=None, help="output directory")
    p_cmp.set_defaults(func=_cmd_compare)

    p_null = sub.add_parser("null-study", help="false-alarm rate of the monitor on iid data")
    p_null.add_argument("--dist", choices=DISTRIBUTIONS, default="gaussian")
    p_null.add_argument("--length", type=int, default=10_000)
    p_null.add_argument("--batch", type=int, default=50)
    p_null.add_argument("--alpha", type=float, default=0.05)
    p_null.add_argument("--reps", type=int, default=1_000)
    p_null.add_argument("--seed", type=int, default=0)
    p_null.add_argument("--threads", type=int, default=1)
    p_null.add_argument("--out", default=None, help="directory for the study CSV")
    p_null.set_defaults(func=_cmd_null_study)

    p_gen = sub.add_parser("gen-data", help="materialize a synthetic scenario to CSV")
    p_gen.add_argument("--scenario", required=True, help="path to a scenario JSON")
    p_gen.add_argument("--out", required=True, help="output CSV path")
    p_gen.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_gen.set_defaults(func=_cmd_gen_data)

    p_rep = sub.add_parser("report", help="rebuild a report from saved run-log CSVs")
    p_rep.add_argument("--runlog", required=True, help="directory written by `driftmon run`")
    p_rep.add_argument("--out", default=None, help="output directory (default: runlog dir)")
    p_rep.set_defaults(func=_cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DriftmonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
