"""Command-line runner.

Verbs: ``run <config>`` executes a scenario and writes artifacts,
``validate <config>`` echoes the normalized configuration,
``thresholds <config>`` prints the threshold record without simulating,
``presets list`` names the bundled scenarios.  A config argument is a file
path or a preset name.  Exit codes: 0 success, 2 configuration error,
3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import simulate_ensemble
from .errors import ConfigError, NumericalBlowup, SirLevyError
from .estimators import EnsembleSummary
from .scenarios import (
    Scenario,
    dump_toml,
    load_preset,
    preset_names,
    scenario_to_dict,
    validate_config,
)
from .sde import integrate_sir_jump, write_jump_events, write_trajectory
from .thresholds import ThresholdReport, classify

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

ENV_OUTPUT_DIR = "SIRLEVY_OUTPUT_DIR"
ENV_WORKERS = "SIRLEVY_WORKERS"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _write_row_table(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(v) for v in row) + "\n")


def write_threshold_record(report: ThresholdReport, path: Path) -> None:
    rec = report.to_record()
    _write_row_table(path, list(rec.keys()), [list(rec.values())])


def write_path_table(summary: EnsembleSummary, path: Path) -> None:
    header = [
        "path_id", "time_avg_I", "lyapunov_I", "lyapunov_truncated",
        "final_S", "final_I", "final_R",
        "time_avg_X", "time_avg_X2", "final_X",
        "floor_hits", "jump_count",
    ]
    nan = float("nan")
    rows = []
    for k in range(summary.n_paths):
        def col(arr, cast=float):
            return cast(arr[k]) if arr is not None else nan

        rows.append([
            int(summary.path_ids[k]),
            col(summary.time_avg_i),
            col(summary.lyapunov_i),
            "true" if (summary.lyapunov_truncated is not None and summary.lyapunov_truncated[k]) else "false",
            col(summary.final_s), col(summary.final_i), col(summary.final_r),
            col(summary.time_avg_x), col(summary.time_avg_x2), col(summary.final_x),
            int(summary.floor_hits[k]), int(summary.jump_counts[k]),
        ])
    _write_row_table(path, header, rows)


def write_histograms(summary: EnsembleSummary, out_dir: Path) -> list[Path]:
    paths = []
    if not summary.histograms:
        return paths
    for name, hist in summary.histograms.items():
        p = out_dir / f"hist_{name}.tsv"
        rows = zip(hist.bin_left, hist.bin_right, hist.mass)
        _write_row_table(p, ["bin_left", "bin_right", "mass"], rows)
        paths.append(p)
    return paths


def write_summary_table(summary: EnsembleSummary, path: Path) -> None:
    nan = float("nan")
    row = {
        "n_paths": summary.n_paths,
        "t_end": float(summary.times[-1]),
        "mean_time_avg_I": summary.mean_time_avg_i if summary.time_avg_i is not None else nan,
        "sem_time_avg_I": summary.sem_time_avg_i if summary.time_avg_i is not None else nan,
        "mean_lyapunov_I": float(np.mean(summary.lyapunov_i)) if summary.lyapunov_i is not None else nan,
        "frac_lyapunov_negative": (
            float(np.mean(summary.lyapunov_i < 0)) if summary.lyapunov_i is not None else nan
        ),
        "extinct_fraction": summary.extinct_fraction if summary.extinct_fraction is not None else nan,
        "extinction_cutoff": summary.extinction_cutoff,
        "moment_2p_final": float(summary.moment_2p_mean[-1]),
        "total_floor_hits": int(np.sum(summary.floor_hits)),
        "total_jumps": int(np.sum(summary.jump_counts)),
    }
    _write_row_table(path, list(row.keys()), [list(row.values())])


@dataclass
class RunResult:
    scenario: Scenario
    report: ThresholdReport
    summary: EnsembleSummary
    out_dir: Path
    artifacts: list[Path]


def config_digest(sc: Scenario) -> str:
    return hashlib.sha256(dump_toml(scenario_to_dict(sc)).encode()).hexdigest()


def run_scenario(sc: Scenario, worker_count: int = 1, out_root: Path | str = "runs") -> RunResult:
    """Thresholds first, then the ensemble, then every requested artifact."""
    out_dir = Path(out_root) / sc.name
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts: list[Path] = []

    report = classify(sc.params, sc.noise, pexp=sc.pexp)
    if "thresholds" in sc.outputs:
        p = out_dir / "thresholds.tsv"
        write_threshold_record(report, p)
        artifacts.append(p)

    summary = simulate_ensemble(
        sc.params, sc.noise, sc.init, sc.sim, sc.n_paths,
        workers=worker_count,
        pexp=sc.pexp,
        extinction_cutoff=sc.extinction_cutoff,
        with_aux=sc.with_aux,
        hist_bins=sc.histogram_bins,
    )
    if "summary" in sc.outputs:
        p = out_dir / "summary.tsv"
        write_summary_table(summary, p)
        artifacts.append(p)
        p = out_dir / "paths.tsv"
        write_path_table(summary, p)
        artifacts.append(p)
    if "histograms" in sc.outputs:
        artifacts.extend(write_histograms(summary, out_dir))
    if "trajectories" in sc.outputs:
        # paths are pure functions of (seed, path_id); re-integrating the
        # first few is cheaper than shipping them through the worker pool
        for pid in range(min(sc.trajectory_paths, sc.n_paths)):
            traj = integrate_sir_jump(
                sc.params, sc.noise, sc.init, sc.sim, path_id=pid, with_aux=sc.with_aux
            )
            p = out_dir / f"traj_{pid:04d}.tsv"
            write_trajectory(traj, p)
            artifacts.append(p)
            p = out_dir / f"events_{pid:04d}.tsv"
            write_jump_events(traj, p)
            artifacts.append(p)

    manifest = {
        "name": sc.name,
        "config_sha256": config_digest(sc),
        "seed": sc.sim.seed,
        "n_paths": sc.n_paths,
        "worker_count": worker_count,
        "sirlevy_version": __version__,
        "numpy_version": np.__version__,
        "created": datetime.now(timezone.utc).isoformat(),
        "artifacts": [p.name for p in artifacts],
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return RunResult(sc, report, summary, out_dir, artifacts)


def _resolve_scenario(token: str) -> Scenario:
    if Path(token).is_file():
        return validate_config(token)
    if token in preset_names():
        return load_preset(token)
    raise ConfigError([f"{token}: not a config file or preset name"])


def _apply_overrides(sc: Scenario, seed: int | None) -> Scenario:
    if seed is None:
        return sc
    from dataclasses import replace

    return replace(sc, sim=replace(sc.sim, seed=seed))


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sirlevy", description=__doc__)
    sub = ap.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="execute a scenario and write artifacts")
    p_run.add_argument("config", help="scenario file or preset name")
    p_run.add_argument("--seed", type=int, default=None, help="override sim.seed")
    p_run.add_argument("--workers", type=int, default=None, help="worker process count")
    p_run.add_argument("--output-dir", default=None, help="artifact root directory")

    p_val = sub.add_parser("validate", help="validate a scenario and echo it normalized")
    p_val.add_argument("config")

    p_thr = sub.add_parser("thresholds", help="print the threshold record only")
    p_thr.add_argument("config")

    p_pre = sub.add_parser("presets", help="bundled scenarios")
    p_pre.add_argument("action", choices=["list"])
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.verb == "presets":
            for name in preset_names():
                print(name)
            return EXIT_OK
        sc = _resolve_scenario(args.config)
        if args.verb == "validate":
            print(dump_toml(scenario_to_dict(sc)), end="")
            return EXIT_OK
        if args.verb == "thresholds":
            for key, value in classify(sc.params, sc.noise, pexp=sc.pexp).to_record().items():
                print(f"{key}\t{_fmt(value)}")
            return EXIT_OK
        workers = args.workers
        if workers is None:
            workers = int(os.environ.get(ENV_WORKERS, "1"))
        out_root = args.output_dir or os.environ.get(ENV_OUTPUT_DIR, "runs")
        sc = _apply_overrides(sc, args.seed)
        result = run_scenario(sc, worker_count=workers, out_root=out_root)
        rep = result.report
        print(f"scenario {sc.name}: classification={rep.classification.value}", end="")
        if rep.r0s is not None:
            print(f" r0s={rep.r0s:.6g}", end="")
        ef = result.summary.extinct_fraction
        if ef is not None:
            print(f" extinct_fraction={ef:.4g}", end="")
        print(f" artifacts={result.out_dir}")
        return EXIT_OK
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalBlowup as exc:
        loc = f" (path {exc.path_id}, t={exc.t:g})" if exc.path_id is not None else ""
        print(f"numerical failure: {exc}{loc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SirLevyError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
