"""Command-line entry point: ``pairzero run | sweep | verify``."""

import argparse
import csv
import json
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import fedsim, verify
from .config import SEED_NAMES, SweepSpec, load_config
from .errors import ConfigError, PairZeroError
from .rng import derive_key

EXIT_OK = 0
EXIT_ACCOUNTANT = 1
EXIT_ERROR = 2

SWEEP_SCHEMA = "pairzero-sweep-v1"
SWEEP_COLUMNS = ("axis", "value", "mode", "policy", "repeats", "completed", "mean_gap",
                 "std_gap", "mean_dp_slack", "status", "error")
_REPEAT_TAG = 0x5EED


def error_payload(exc):
    """Machine-readable description of a failure."""
    out = {"schema": "pairzero-error-v1", "error": type(exc).__name__, "message": str(exc)}
    for attr in ("solver", "field", "where"):
        value = getattr(exc, attr, None)
        if value is not None:
            out[attr] = value
    diagnostics = getattr(exc, "diagnostics", None)
    if diagnostics:
        out["diagnostics"] = {k: (v if isinstance(v, (int, float, str, bool)) else repr(v))
                              for k, v in diagnostics.items()}
    return out


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_single(config, out_dir):
    """Run one experiment into ``out_dir``; return the process exit status."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = fedsim.run(config)
    except PairZeroError as exc:
        _write_json(out / "error.json", error_payload(exc))
        return EXIT_ERROR
    result.write_csv(out / "trajectory.csv")
    result.write_summary(out / "summary.json")
    if result.verdict is not None and not result.verdict.passed:
        return EXIT_ACCOUNTANT
    return EXIT_OK


def repeat_seeds(seeds, repeat):
    """Distinct per-repeat seeds derived from the base ones (repeat 0 keeps them)."""
    if repeat == 0:
        return dict(seeds)
    return {name: derive_key(seeds[name], _REPEAT_TAG, repeat) for name in SEED_NAMES}


def _sweep_point(job):
    index, value, config, repeats, out_dir = job
    gaps, slacks = [], []
    for r in range(repeats):
        cfg = config.replace(seeds=repeat_seeds(config.seeds, r))
        point_dir = Path(out_dir) / "points" / f"{index:03d}" / f"repeat_{r}"
        status = run_single(cfg, point_dir)
        if status == EXIT_ERROR:
            err = json.loads((point_dir / "error.json").read_text())
            return index, value, config, gaps, slacks, f"{err['error']}: {err['message']}"
        summary = json.loads((point_dir / "summary.json").read_text())
        gaps.append(summary["final_gap"])
        acct = summary["accountant"]
        if acct is not None:
            slacks.append(acct["slack"])
        if status == EXIT_ACCOUNTANT:
            return index, value, config, gaps, slacks, "accountant check failed"
    return index, value, config, gaps, slacks, None


def _aggregate_row(spec, index, value, config, gaps, slacks, error):
    failed = error is not None
    row = {
        "axis": spec.axis, "value": value, "mode": config.mode if config else "",
        "policy": config.policy if config else "", "repeats": spec.repeats,
        "completed": len(gaps), "status": "failed" if failed else "ok", "error": error or "",
    }
    if failed or not gaps:
        row.update(mean_gap="", std_gap="", mean_dp_slack="")
    else:
        row["mean_gap"] = repr(float(np.mean(gaps)))
        row["std_gap"] = repr(float(np.std(gaps)))
        row["mean_dp_slack"] = repr(float(np.mean(slacks))) if slacks else ""
    return row


def _workers():
    raw = os.environ.get("PAIRZERO_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"PAIRZERO_WORKERS must be an integer, got {raw!r}",
                          field="PAIRZERO_WORKERS") from exc
    if n < 1:
        raise ConfigError("PAIRZERO_WORKERS must be >= 1", field="PAIRZERO_WORKERS")
    return n


def run_sweep(spec):
    """Run every sweep point; return the path of the aggregate CSV.

    A point whose configuration or run fails becomes a ``failed`` row and the
    sweep carries on.  Points run in ``PAIRZERO_WORKERS`` processes; the
    aggregate is written after all of them finish.
    """
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs, rows = [], {}
    for i, value in enumerate(spec.values):
        try:
            config = spec.point_config(value)
        except PairZeroError as exc:
            rows[i] = _aggregate_row(spec, i, value, None, [], [], f"{type(exc).__name__}: {exc}")
            continue
        jobs.append((i, value, config, spec.repeats, str(out)))

    workers = _workers()
    if workers == 1 or len(jobs) <= 1:
        results = [_sweep_point(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    for index, value, config, gaps, slacks, error in results:
        rows[index] = _aggregate_row(spec, index, value, config, gaps, slacks, error)

    path = out / "sweep.csv"
    with open(path, "w", newline="") as fh:
        fh.write(f"#schema={SWEEP_SCHEMA}\n")
        writer = csv.DictWriter(fh, SWEEP_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for i in sorted(rows):
            writer.writerow(rows[i])
    return path


def print_table(results, stream=None):
    stream = stream or sys.stdout
    width = max(len(r.name) for r in results)
    print(f"{'id':>3}  {'check':<{width}}  {'status':<6}  {'time':>7}  detail", file=stream)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.id:>3}  {r.name:<{width}}  {status:<6}  {r.seconds:>6.1f}s  {r.detail}",
              file=stream)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} passed", file=stream)


def _parse_values(text):
    values = [v.strip() for v in text.split(",") if v.strip()]
    if not values:
        raise ConfigError("values: must be a non-empty comma-separated list", field="values")
    return values


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pairzero",
        description="Private zeroth-order federated fine-tuning over simulated wireless uplinks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    p_run.add_argument("--config", required=True, help="JSON experiment config")
    p_run.add_argument("--out", required=True, help="output directory")

    p_sweep = sub.add_parser("sweep", help="sweep one config field over several values")
    p_sweep.add_argument("--config", required=True, help="JSON base config")
    p_sweep.add_argument("--axis", required=True, help="snr_max, policy, mode or eta")
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--repeats", type=int, default=4, help="runs per point (default 4)")
    p_sweep.add_argument("--out", required=True, help="output directory")

    p_verify = sub.add_parser("verify", help="run an acceptance suite")
    p_verify.add_argument("--suite", required=True, choices=sorted(verify.SUITES))
    return parser


def _fail(exc, out_dir=None):
    payload = error_payload(exc)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        _write_json(Path(out_dir) / "error.json", payload)
    print(f"error: {payload['error']}: {payload['message']}", file=sys.stderr)
    return EXIT_ERROR


def main(argv=None):
    args = build_parser().parse_args(argv)
    out_dir = getattr(args, "out", None)
    try:
        if args.command == "run":
            return run_single(load_config(args.config), args.out)
        if args.command == "sweep":
            spec = SweepSpec(load_config(args.config), args.axis, _parse_values(args.values),
                             args.repeats, args.out)
            path = run_sweep(spec)
            print(path)
            return EXIT_OK
        results = verify.run_suite(args.suite)
        print_table(results)
        return EXIT_OK if all(r.passed for r in results) else EXIT_ACCOUNTANT
    except (PairZeroError, OSError) as exc:
        return _fail(exc, out_dir)
    except Exception as exc:  # unexpected: still leave a machine-readable trace
        traceback.print_exc()
        return _fail(exc, out_dir)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
