"""Monte Carlo ensembles with per-path random streams and mergeable reductions.

Each path is a pure function of (seed, path_id), so the partition of paths
over workers never changes per-path results.  Workers reduce their block to
small per-path records plus running sums of the 2p-th population moment per
recorded time; the parent merges blocks in path order.
"""

from __future__ import annotations

import multiprocessing as mp

import numpy as np

from .estimators import (
    EXTINCTION_CUTOFF_DEFAULT,
    EnsembleSummary,
    lyapunov_exponent,
    stationary_histogram,
    time_average,
)
from .sde import SimConfig, State, Trajectory, _recorded_indices, integrate_aux, integrate_sir_jump
from .thresholds import EpidemicParameters, NoiseSpec

HIST_BINS_DEFAULT = 60

_COL_PATH = 0
_COL_TAVG_I = 1
_COL_LYAP = 2
_COL_LYAP_TRUNC = 3
_COL_FINAL_S = 4
_COL_FINAL_I = 5
_COL_FINAL_R = 6
_COL_TAVG_X = 7
_COL_TAVG_X2 = 8
_COL_FINAL_X = 9
_COL_FLOOR = 10
_COL_JUMPS = 11
_N_COLS = 12


def _reduce_path(traj: Trajectory, pid: int, cfg: SimConfig, pexp: float, aux_only: bool):
    rec = np.full(_N_COLS, np.nan)
    rec[_COL_PATH] = pid
    rec[_COL_FLOOR] = traj.floor_hits
    rec[_COL_JUMPS] = traj.jump_count
    if not aux_only:
        rec[_COL_TAVG_I] = time_average(traj, "i")
        lyap = lyapunov_exponent(traj, floor=cfg.positivity_floor)
        rec[_COL_LYAP] = lyap.value
        rec[_COL_LYAP_TRUNC] = 1.0 if lyap.floor_truncated else 0.0
        rec[_COL_FINAL_S] = traj.s[-1]
        rec[_COL_FINAL_I] = traj.i[-1]
        rec[_COL_FINAL_R] = traj.r[-1]
        moments = traj.component("n") ** (2.0 * pexp)
    else:
        moments = traj.component("x") ** (2.0 * pexp)
    if traj.x is not None:
        rec[_COL_TAVG_X] = time_average(traj, "x")
        rec[_COL_TAVG_X2] = time_average(traj, "x", power=2)
        rec[_COL_FINAL_X] = traj.x[-1]
    return rec, moments


def _simulate_block(args):
    (params, noise, init, cfg, pexp, aux_only, with_aux, x0, lo, hi) = args
    n_rec = _recorded_indices(cfg.n_steps, cfg.stride).size
    records = np.empty((hi - lo, _N_COLS))
    mom_sum = np.zeros(n_rec)
    mom_sq = np.zeros(n_rec)
    for j, pid in enumerate(range(lo, hi)):
        if aux_only:
            traj = integrate_aux(params, noise, x0, cfg, path_id=pid)
        else:
            traj = integrate_sir_jump(params, noise, init, cfg, path_id=pid, with_aux=with_aux, x0=x0)
        rec, moments = _reduce_path(traj, pid, cfg, pexp, aux_only)
        records[j] = rec
        mom_sum += moments
        mom_sq += moments * moments
    return records, mom_sum, mom_sq


def _blocks(n_paths: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, n_paths))
    size = -(-n_paths // workers)
    return [(lo, min(lo + size, n_paths)) for lo in range(0, n_paths, size)]


def simulate_ensemble(
    params: EpidemicParameters,
    noise: NoiseSpec,
    init: State | None,
    cfg: SimConfig,
    n_paths: int,
    *,
    workers: int = 1,
    pexp: float = 1.0,
    extinction_cutoff: float = EXTINCTION_CUTOFF_DEFAULT,
    with_aux: bool = False,
    aux_only: bool = False,
    x0: float | None = None,
    hist_bins: int = HIST_BINS_DEFAULT,
) -> EnsembleSummary:
    """Integrate ``n_paths`` independent paths and reduce them to a summary.

    ``aux_only`` runs the scalar bound process alone (requires ``x0``);
    otherwise the full system runs, optionally with the bound process
    co-integrated on the same drivers.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if aux_only:
        if x0 is None:
            raise ValueError("aux_only ensembles need x0")
    elif init is None:
        raise ValueError("full-system ensembles need an initial state")

    job_args = [
        (params, noise, init, cfg, pexp, aux_only, with_aux, x0, lo, hi)
        for lo, hi in _blocks(n_paths, workers)
    ]
    if len(job_args) == 1 or workers <= 1:
        partials = [_simulate_block(a) for a in job_args]
    else:
        try:
            ctx = mp.get_context("fork")
        except ValueError:  # pragma: no cover - non-posix fallback
            ctx = mp.get_context("spawn")
        with ctx.Pool(processes=len(job_args)) as pool:
            partials = pool.map(_simulate_block, job_args)

    records = np.concatenate([p[0] for p in partials], axis=0)
    mom_sum = np.sum([p[1] for p in partials], axis=0)
    mom_sq = np.sum([p[2] for p in partials], axis=0)

    mean = mom_sum / n_paths
    if n_paths > 1:
        var = np.maximum(mom_sq - n_paths * mean**2, 0.0) / (n_paths - 1)
        sem = np.sqrt(var / n_paths)
    else:
        sem = np.zeros_like(mean)

    times = _recorded_indices(cfg.n_steps, cfg.stride) * cfg.dt
    has_aux = aux_only or with_aux
    summary = EnsembleSummary(
        n_paths=n_paths,
        times=times,
        pexp=pexp,
        extinction_cutoff=extinction_cutoff,
        path_ids=records[:, _COL_PATH].astype(int),
        moment_2p_mean=mean,
        moment_2p_sem=sem,
        initial_total=float(x0) if aux_only else init.n,
        time_avg_i=None if aux_only else records[:, _COL_TAVG_I],
        lyapunov_i=None if aux_only else records[:, _COL_LYAP],
        lyapunov_truncated=None if aux_only else records[:, _COL_LYAP_TRUNC] > 0.5,
        final_s=None if aux_only else records[:, _COL_FINAL_S],
        final_i=None if aux_only else records[:, _COL_FINAL_I],
        final_r=None if aux_only else records[:, _COL_FINAL_R],
        time_avg_x=records[:, _COL_TAVG_X] if has_aux else None,
        time_avg_x2=records[:, _COL_TAVG_X2] if has_aux else None,
        final_x=records[:, _COL_FINAL_X] if has_aux else None,
        floor_hits=records[:, _COL_FLOOR].astype(int),
        jump_counts=records[:, _COL_JUMPS].astype(int),
    )
    if not aux_only:
        summary.extinct_fraction = float(np.mean(summary.final_i < extinction_cutoff))
    if n_paths >= 100:
        finals = (
            {"x": summary.final_x}
            if aux_only
            else {"s": summary.final_s, "i": summary.final_i, "r": summary.final_r}
        )
        summary.histograms = stationary_histogram(finals, bins=hist_bins)
    return summary
