"""Command line entry point: ``run``, ``plot`` and ``sweep``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiment import ConfigError, config_from_dict, run_experiment, set_by_path
from .plots import CHART_KINDS, ChartError, render_charts

EXIT_OK = 0
EXIT_INCOMPLETE = 2
EXIT_INVALID = 3


def _load_raw(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _one_line(summary: dict) -> str:
    ratio = summary["ideal_ratio"]
    return (
        f"flows={summary['n_finished']}/{summary['n_flows']} "
        f"fct_max={summary['fct_max']} ideal_ratio={'-' if ratio is None else f'{ratio:.3f}'} "
        f"trims={summary['trims']} drops={summary['drops']} "
        f"retx={summary['retransmissions']} complete={summary['complete']}"
    )


def cmd_run(args) -> int:
    raw = _load_raw(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg = config_from_dict(raw, base_dir=Path(args.config).parent)
    out = args.out or cfg.output_dir or "out"
    report = run_experiment(cfg, out_dir=out)
    print(f"{out}: {_one_line(report.summary())}")
    return EXIT_OK if report.complete else EXIT_INCOMPLETE


def cmd_plot(args) -> int:
    kinds = args.kind or list(CHART_KINDS)
    for path in render_charts(args.report_dir, kinds):
        print(path)
    return EXIT_OK


def cmd_sweep(args) -> int:
    raw = _load_raw(args.config)
    values = [_parse_value(v) for v in args.values.split(",")]
    base_out = Path(args.out or raw.get("output_dir") or "sweep")
    configs = []
    # validate every point before running any of them
    for v in values:
        point = set_by_path(raw, args.param, v)
        configs.append((v, config_from_dict(point, base_dir=Path(args.config).parent)))
    status = EXIT_OK
    rows = []
    for v, cfg in configs:
        out = base_out / f"{args.param}={v}"
        report = run_experiment(cfg, out_dir=out)
        s = report.summary()
        rows.append({"value": v, "dir": str(out), **{k: s[k] for k in (
            "fct_max", "fct_p50", "ideal_ratio", "trims", "retransmissions", "complete")}})
        print(f"{args.param}={v}: {_one_line(s)}")
        if not report.complete:
            status = EXIT_INCOMPLETE
    base_out.mkdir(parents=True, exist_ok=True)
    (base_out / "sweep.json").write_text(
        json.dumps({"param": args.param, "points": rows}, indent=2) + "\n")
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smartt-sim", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="render SVG charts from a report directory")
    p.add_argument("report_dir")
    p.add_argument("--kind", action="append", choices=CHART_KINDS,
                   help="chart kind (repeatable); all kinds if omitted")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("sweep", help="run one experiment per value of a config parameter")
    p.add_argument("config")
    p.add_argument("--param", required=True, help="dotted key, e.g. workload.msg_size")
    p.add_argument("--values", required=True, help="comma-separated JSON values")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ChartError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
