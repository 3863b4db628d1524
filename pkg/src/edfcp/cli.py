"""Command-line interface: ``edfcp {threshold,monitor,simulate,experiment}``."""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Sequence

from .bootstrap import MultiplierConfig
from .core import MonitorConfig, ThresholdFunction
from .io import read_csv, read_json, write_csv, write_json, write_report
from .monitor import MonitorState, Status
from .simulation import Scenario, generate, model_from_dict, model_to_dict, run_level_experiment, run_power_experiment
from .thresholds import DEFAULT_B, DEFAULT_M, bootstrap_threshold, mc_threshold

log = logging.getLogger("edfcp")

EXIT_OK = 0
EXIT_ERROR = 2
EXIT_ALARM = 10

CONFIG_FIELDS = ("m", "n", "alpha", "p", "detector", "gamma", "delta", "dim")


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with MonitorConfig fields")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--p", type=int)
    p.add_argument("--detector", choices=list("RSTPQ"))
    p.add_argument("--gamma", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--dim", type=int)


def _config(args: argparse.Namespace, **defaults: Any) -> MonitorConfig:
    d: dict[str, Any] = dict(defaults)
    if args.config is not None:
        d.update(read_json(args.config))
    d.update({f: getattr(args, f) for f in CONFIG_FIELDS if getattr(args, f, None) is not None})
    return MonitorConfig.from_dict(d)


def _mult(args: argparse.Namespace) -> MultiplierConfig:
    B = args.replicates if args.replicates is not None else DEFAULT_B
    if args.ell is not None:
        return MultiplierConfig.fixed(args.ell, B=B, seed=args.seed)
    return MultiplierConfig(B=B, seed=args.seed)


def cmd_threshold(args: argparse.Namespace) -> int:
    if args.mode == "mc":
        cfg = _config(args)
        M = args.replicates if args.replicates is not None else DEFAULT_M
        th = mc_threshold(cfg, M=M, seed=args.seed)
    else:
        if args.learning is None:
            raise ValueError("--learning is required for bootstrap thresholds")
        X = read_csv(args.learning)
        cfg = _config(args, m=X.shape[0], dim=X.shape[1])
        th = bootstrap_threshold(X, cfg, _mult(args))
    write_json(th, args.out)
    log.info("wrote %d-step threshold to %s", th.p, args.out)
    return EXIT_OK


def _config_from_threshold(th: ThresholdFunction, dim: int) -> dict[str, Any]:
    d: dict[str, Any] = {"m": th.m, "n": th.n, "p": th.p, "dim": dim}
    for key in ("detector", "gamma", "delta", "alpha"):
        if key in th.meta:
            d[key] = th.meta[key]
    return d


def cmd_monitor(args: argparse.Namespace) -> int:
    X = read_csv(args.learning)
    stream = read_csv(args.stream)
    th = ThresholdFunction.from_dict(read_json(args.threshold))
    cfg = _config(args, **_config_from_threshold(th, X.shape[1]))
    state = MonitorState(X, th, cfg)
    report = state.run(stream)
    if args.out is not None:
        write_report(report, args.out)
    if report.status is Status.ALARMED:
        print(f"alarm at k={report.alarm_index}; estimated change point {report.changepoint}")
        return EXIT_ALARM
    print(f"no alarm ({report.status.value}) after k={state.k}")
    return EXIT_OK


def _load_jsonish(text: str) -> Any:
    p = Path(text)
    return read_json(p) if p.exists() else json.loads(text)


def scenario_from_dict(d: dict[str, Any]) -> Scenario:
    post = d.get("post")
    return Scenario(
        null=model_from_dict(d["null"]),
        m=int(d["m"]),
        n=int(d["n"]),
        change_at=d.get("change_at"),
        post=model_from_dict(post) if post else None,
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    scn = scenario_from_dict(_load_jsonish(args.scenario))
    X = generate(scn, args.seed, args.index)
    write_csv(X, args.out)
    log.info("wrote %d x %d sample to %s", *X.shape, args.out)
    return EXIT_OK


def _expand_grid(spec: dict[str, Any]) -> list[dict[str, Any]]:
    grid = spec.get("grid", {})
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def run_experiment_spec(spec: dict[str, Any]) -> dict[str, Any]:
    """Run every cell of an experiment grid; returns long rows and a pivoted table."""
    kind = spec.get("experiment", "level")
    base_scn = dict(spec["scenario"])
    base_cfg = dict(spec.get("config", {}))
    mode = spec.get("threshold_mode", "mc")
    trials = int(spec.get("trials", 1000))
    seed = int(spec.get("seed", 0))
    M = int(spec.get("M", DEFAULT_M))
    mult = MultiplierConfig(**spec.get("multiplier", {}))
    rows = []
    for cell in _expand_grid(spec) or [{}]:
        scn_d = json.loads(json.dumps(base_scn))
        cfg_d = dict(base_cfg)
        for key, val in cell.items():
            if key in ("gamma", "p", "detector", "alpha", "delta"):
                cfg_d[key] = val
            elif key == "m":
                scn_d["m"] = val
            elif key == "T":
                scn_d["T"] = val
            else:
                scn_d["null"][key] = val
        if "T" in scn_d:
            scn_d["n"] = math.floor(scn_d["m"] * (scn_d.pop("T") + 1) + 1e-9)
        scn = scenario_from_dict(scn_d)
        cfg = MonitorConfig.from_dict({**cfg_d, "m": scn.m, "n": scn.n, "dim": scn.dim})
        runner = run_level_experiment if kind == "level" else run_power_experiment
        res = runner(scn, cfg, mode, trials, seed=seed, M=M, mult=mult)
        log.info("%s -> %.1f%%", cell, res.rejection_pct)
        row = {**cell, "m": scn.m, "n": scn.n, "T": scn.n / scn.m - 1, **dataclasses.asdict(res)}
        row.pop("alarm_indices")
        row.pop("changepoints")
        row["model"] = model_to_dict(scn.null)["model"]
        rows.append(row)
    return {"rows": rows, "table": _pivot(rows)}


def _pivot(rows: list[dict[str, Any]]) -> dict[str, Any]:
    col_keys = [k for k in ("T", "p") if any(k in r for r in rows)]
    row_keys = [k for k in rows[0] if k not in col_keys and k in _ROW_KEYS] if rows else []
    index = sorted({tuple(r.get(k) for k in row_keys) for r in rows}, key=str)
    columns = sorted({tuple(r.get(k) for k in col_keys) for r in rows})
    cell = {(tuple(r.get(k) for k in row_keys), tuple(r.get(k) for k in col_keys)): r["rejection_pct"] for r in rows}
    data = [[cell.get((i, c)) for c in columns] for i in index]
    return {"row_keys": row_keys, "col_keys": col_keys, "index": index, "columns": columns, "data": data}


_ROW_KEYS = ("model", "beta", "tau", "omega", "alpha", "mean", "sd", "gamma", "detector", "m")


def cmd_experiment(args: argparse.Namespace) -> int:
    spec = _load_jsonish(args.spec)
    out = run_experiment_spec(spec)
    if args.out.suffix.lower() == ".csv":
        write_report(out["rows"], args.out)
    else:
        write_json(out, args.out)
    for r in out["rows"]:
        print(json.dumps({k: r[k] for k in r if k not in ("alarm_histogram",)}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edfcp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("threshold", help="estimate a threshold function")
    _add_config_args(p)
    p.add_argument("--mode", choices=("mc", "bootstrap"), default="mc")
    p.add_argument("--learning", type=Path, help="learning sample CSV (bootstrap mode)")
    p.add_argument("--replicates", type=int, help=f"M (default {DEFAULT_M}) or B (default {DEFAULT_B})")
    p.add_argument("--ell", type=int, help="fixed multiplier bandwidth (bootstrap mode)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("monitor", help="monitor a stream against a threshold")
    _add_config_args(p)
    p.add_argument("--learning", type=Path, required=True)
    p.add_argument("--stream", type=Path, required=True)
    p.add_argument("--threshold", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("simulate", help="write one scenario sample to CSV")
    p.add_argument("--scenario", required=True, help="scenario JSON file or inline JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="run a level/power study from a JSON spec")
    p.add_argument("--spec", required=True, help="experiment JSON file or inline JSON")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
