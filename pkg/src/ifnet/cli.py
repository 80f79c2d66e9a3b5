"""ifnet command line: run, sweep, validate, report.

Exit codes: 0 ok, 1 IO failure, 2 invalid config or arguments.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, dump_config, parse_and_validate
from .engine import RunReport, ScenarioConfig, run
from .metrics import effective_link_throughput, LinkWindowRecord
from .traffic import export_backlog_csv

OUT_ENV = "IFNET_OUT"
RECORD_FIELDS = ("link", "coding_rate", "slots_active", "slots_in_window", "successes",
                 "outages", "losses", "arrivals")


def load_config(path, seed=None) -> ScenarioConfig:
    cfg = parse_and_validate(Path(path).read_text())
    if seed is not None:
        try:
            cfg = dataclasses.replace(cfg, seed=seed)
        except ValueError as exc:
            raise ConfigError(f"seed: {exc}") from None
    return cfg


def summarize(report: RunReport) -> dict:
    """Flat scalar metrics for one run; keys are stable across runs of one scenario."""
    series = report.spatial_throughput_series
    arrivals = sum(v["arrivals"] for v in report.links.values())
    lost = sum(v["lost"] for v in report.links.values())
    out = {
        "mean_spatial_throughput": sum(series) / len(series),
        "outage_probability": report.network["outage_probability"],
        "arrivals": arrivals,
        "delivered": sum(v["delivered"] for v in report.links.values()),
        "lost": lost,
        "plr": lost / arrivals if arrivals else None,
    }
    for k, v in sorted(report.links.items()):
        out[f"link{k}.delivered"] = v["delivered"]
        out[f"link{k}.plr"] = v["plr"]
        out[f"link{k}.final_backlog"] = v["backlog"]
        out[f"link{k}.drift"] = None if v["stability"] is None else v["stability"]["drift"]
    return out


def _fmt(v):
    return "" if v is None else repr(v) if isinstance(v, float) else str(v)


def _write_metrics_csv(report: RunReport, path: Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window", "start", "end", "spatial_throughput", *RECORD_FIELDS, "effective_throughput"])
        for win in report.windows:
            recs = list(win.records) + ([win.population] if win.population is not None else [])
            for r in recs:
                w.writerow([win.index, win.start, win.end, _fmt(win.spatial_throughput),
                            *(_fmt(getattr(r, f)) for f in RECORD_FIELDS),
                            _fmt(effective_link_throughput(r))])


def write_run(cfg: ScenarioConfig, report: RunReport, out: Path, traces=False):
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.json").write_text(dump_config(cfg) + "\n")
    (out / "report.json").write_text(report.to_json() + "\n")
    with open(out / "windows.jsonl", "w") as fh:
        for win in report.windows:
            fh.write(json.dumps(win.as_dict(), sort_keys=True) + "\n")
    _write_metrics_csv(report, out / "metrics.csv")
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "value"])
        for key, value in summarize(report).items():
            w.writerow([key, _fmt(value)])
    with open(out / "adaptation.jsonl", "w") as fh:
        for entry in report.adaptation_log:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    if traces:
        for k, trace in report.backlog_traces.items():
            export_backlog_csv(trace, out / f"backlog_{k}.csv")


def _replicate(args):
    cfg, out, traces = args
    report = run(cfg)
    write_run(cfg, report, out, traces)
    return summarize(report)


def aggregate(summaries: list) -> list:
    """Rows of (metric, n, mean, std) over replications; missing values are skipped."""
    keys = []
    for s in summaries:
        keys.extend(k for k in s if k not in keys)
    rows = []
    for key in keys:
        vals = [float(s[key]) for s in summaries if s.get(key) is not None]
        if not vals:
            rows.append((key, 0, None, None))
            continue
        std = statistics.stdev(vals) if len(vals) > 1 else 0.0
        rows.append((key, len(vals), statistics.fmean(vals), std))
    return rows


def cmd_validate(ns) -> int:
    cfg = load_config(ns.config, ns.seed)
    print(dump_config(cfg))
    return 0


def cmd_run(ns) -> int:
    cfg = load_config(ns.config, ns.seed)
    out = Path(ns.out)
    report = run(cfg)
    write_run(cfg, report, out, ns.traces)
    print(f"wrote {out}")
    return 0


def cmd_sweep(ns) -> int:
    base = load_config(ns.config, ns.seed)
    if ns.replications < 1 or ns.jobs < 1:
        raise ConfigError("replications and jobs must be >= 1")
    out = Path(ns.out)
    jobs = [(dataclasses.replace(base, seed=base.seed + i), out / f"rep_{base.seed + i}", ns.traces)
            for i in range(ns.replications)]
    if ns.jobs > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
            summaries = list(pool.map(_replicate, jobs))
    else:
        summaries = [_replicate(j) for j in jobs]
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "aggregate.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "n", "mean", "std"])
        for key, n, mean, std in aggregate(summaries):
            w.writerow([key, n, _fmt(mean), _fmt(std)])
    print(f"wrote {len(jobs)} replications and {out / 'aggregate.csv'}")
    return 0


def cmd_report(ns) -> int:
    run_dir = Path(ns.run_dir)
    doc = json.loads((run_dir / "report.json").read_text())
    out = Path(ns.out) if ns.out else run_dir / "series.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window", "start", "end", "spatial_throughput", "attempts", "outages",
                    "outage_rate", "arrivals", "losses"])
        for win in doc["windows"]:
            recs = win["records"] + ([win["population"]] if win["population"] else [])
            rec = LinkWindowRecord(-1, 0.0)
            for r in recs:
                rec.successes += r["successes"]
                rec.outages += r["outages"]
                rec.arrivals += r["arrivals"]
                rec.losses += r["losses"]
            att = rec.attempts
            w.writerow([win["index"], win["start"], win["end"], _fmt(win["spatial_throughput"]),
                        att, rec.outages, _fmt(rec.outages / att if att else None),
                        rec.arrivals, rec.losses])
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    default_out = os.environ.get(OUT_ENV, "ifnet_out")
    p = argparse.ArgumentParser(prog="ifnet", description="Slotted interference network simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", required=True, help="scenario JSON")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        if out:
            sp.add_argument("--out", default=default_out, help=f"output directory (default ${OUT_ENV} or ./ifnet_out)")
            sp.add_argument("--traces", action="store_true", help="also write per-link backlog traces")

    common(sub.add_parser("validate", help="check a config and print the resolved form"), out=False)
    common(sub.add_parser("run", help="run one scenario"))
    sw = sub.add_parser("sweep", help="independent replications over consecutive seeds")
    common(sw)
    sw.add_argument("--replications", type=int, default=8)
    sw.add_argument("--jobs", type=int, default=1)
    rp = sub.add_parser("report", help="turn a run directory into plot-ready CSV")
    rp.add_argument("run_dir")
    rp.add_argument("--out", default=None, help="CSV path (default <run_dir>/series.csv)")
    return p


COMMANDS = {"validate": cmd_validate, "run": cmd_run, "sweep": cmd_sweep, "report": cmd_report}


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return COMMANDS[ns.command](ns)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
