"""Statistics over trajectories and ensembles: time averages, moment bounds,
exponential decay rates, stationary histograms and empirical verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolated, EmptyTrajectory, TooFewSamples
from .sde import Trajectory
from .thresholds import (
    Classification,
    EpidemicParameters,
    NoiseSpec,
    ThresholdReport,
    chi1_chi2,
)

EXTINCTION_CUTOFF_DEFAULT = 1e-4
SE_MULTIPLE = 3.0


def _trapezoid(y: np.ndarray, x: np.ndarray) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def time_average(traj: Trajectory, component: str, power: int = 1) -> float:
    """Trapezoidal (1/T) integral of component**power over the recorded grid."""
    if traj.times is None or traj.times.size < 2:
        raise EmptyTrajectory("time average needs at least two recorded points")
    y = traj.component(component) ** power
    span = traj.times[-1] - traj.times[0]
    return _trapezoid(y, traj.times) / span


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float
    floor_truncated: bool
    horizon: float


def lyapunov_exponent(traj: Trajectory, floor: float = 0.0) -> LyapunovEstimate:
    """Finite-horizon decay rate ln(I(T)/I(0)) / T.

    If the infected path reached the positivity floor, the first floored
    instant replaces T and the estimate is flagged as truncated: past that
    point the recorded values measure the safeguard, not the dynamics.
    """
    if traj.times is None or traj.times.size < 2:
        raise EmptyTrajectory("decay-rate estimate needs at least two recorded points")
    ipath = traj.component("i")
    if not ipath[0] > 0:
        raise EmptyTrajectory("infected path must start positive")
    hit = np.flatnonzero(ipath <= floor) if floor > 0 else np.empty(0, dtype=int)
    if hit.size and hit[0] > 0:
        k = int(hit[0])
        return LyapunovEstimate(
            value=float(math.log(ipath[k] / ipath[0]) / traj.times[k]),
            floor_truncated=True,
            horizon=float(traj.times[k]),
        )
    horizon = float(traj.times[-1])
    return LyapunovEstimate(
        value=float(math.log(ipath[-1] / ipath[0]) / horizon),
        floor_truncated=False,
        horizon=horizon,
    )


@dataclass(frozen=True)
class Histogram:
    """Equal-width normalized histogram with moments of the raw sample."""

    bin_left: np.ndarray
    bin_right: np.ndarray
    mass: np.ndarray
    mean: float
    variance: float

    def mass_below(self, cutoff: float) -> float:
        """Mass of bins entirely below the cutoff plus the straddling fraction."""
        out = 0.0
        for left, right, m in zip(self.bin_left, self.bin_right, self.mass):
            if right <= cutoff:
                out += m
            elif left < cutoff:
                out += m * (cutoff - left) / (right - left)
        return out


def stationary_histogram(finals: dict[str, np.ndarray], bins: int = 60) -> dict[str, Histogram]:
    """Per-compartment empirical distribution of final states."""
    out = {}
    for name, values in finals.items():
        values = np.asarray(values, dtype=float)
        if values.size < 100:
            raise TooFewSamples(f"histogram for {name!r} needs >= 100 samples, got {values.size}")
        lo, hi = float(values.min()), float(values.max())
        if hi <= lo:
            edges = np.array([lo, lo + max(abs(lo), 1.0) * 1e-15])
            mass = np.array([1.0])
        else:
            counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
            mass = counts / values.size
        out[name] = Histogram(
            bin_left=edges[:-1],
            bin_right=edges[1:],
            mass=mass,
            mean=float(values.mean()),
            variance=float(values.var()),
        )
    return out


@dataclass
class EnsembleSummary:
    """Per-path reductions and per-time aggregates of a Monte Carlo ensemble."""

    n_paths: int
    times: np.ndarray
    pexp: float
    extinction_cutoff: float
    path_ids: np.ndarray
    moment_2p_mean: np.ndarray
    moment_2p_sem: np.ndarray
    initial_total: float
    time_avg_i: np.ndarray | None = None
    lyapunov_i: np.ndarray | None = None
    lyapunov_truncated: np.ndarray | None = None
    final_s: np.ndarray | None = None
    final_i: np.ndarray | None = None
    final_r: np.ndarray | None = None
    time_avg_x: np.ndarray | None = None
    time_avg_x2: np.ndarray | None = None
    final_x: np.ndarray | None = None
    floor_hits: np.ndarray | None = None
    jump_counts: np.ndarray | None = None
    histograms: dict[str, Histogram] | None = None
    extinct_fraction: float | None = None

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("ensemble needs at least one path")

    @property
    def mean_time_avg_i(self) -> float:
        return float(np.mean(self.time_avg_i))

    @property
    def sem_time_avg_i(self) -> float:
        return float(np.std(self.time_avg_i, ddof=1) / math.sqrt(self.n_paths)) if self.n_paths > 1 else 0.0

    def final_values(self, component: str) -> np.ndarray:
        arr = {"s": self.final_s, "i": self.final_i, "r": self.final_r, "x": self.final_x}.get(component)
        if arr is None:
            raise ValueError(f"final values for component {component!r} not available")
        return arr


@dataclass(frozen=True)
class MomentBoundCheck:
    ok: bool
    worst_margin: float
    worst_time: float
    bound_tail: float  # 2*chi1/chi2, the late-time ceiling


def moment_bound_check(
    ensemble: EnsembleSummary,
    p: EpidemicParameters,
    n: NoiseSpec,
    pexp: float,
    n0: float,
) -> MomentBoundCheck:
    """Check E[N^(2p)](t) <= N(0)^(2p) exp(-p chi2 t) + 2 chi1/chi2 at every
    recorded time, with a three-standard-error Monte Carlo allowance."""
    if abs(pexp - ensemble.pexp) > 1e-12:
        raise AssumptionViolated(f"ensemble carries moments at p={ensemble.pexp}, requested {pexp}")
    try:
        c1, c2 = chi1_chi2(p, n, pexp)
    except Exception as exc:
        raise AssumptionViolated(str(exc)) from exc
    bound = n0 ** (2.0 * pexp) * np.exp(-pexp * c2 * ensemble.times) + 2.0 * c1 / c2
    margin = bound + SE_MULTIPLE * ensemble.moment_2p_sem - ensemble.moment_2p_mean
    worst = int(np.argmin(margin))
    return MomentBoundCheck(
        ok=bool(np.all(margin >= 0.0)),
        worst_margin=float(margin[worst]),
        worst_time=float(ensemble.times[worst]),
        bound_tail=2.0 * c1 / c2,
    )


@dataclass(frozen=True)
class ErgodicityCheck:
    discrepancy: float
    tolerance: float
    ok: bool
    long_path_average: float
    ensemble_mean: float


def ergodicity_check(long_path: Trajectory, ensemble: EnsembleSummary, component: str) -> ErgodicityCheck:
    """Compare the second-half time average of one long path against the
    ensemble mean of the same component at the snapshot time.

    Tolerance is three combined standard errors; the long-path error is
    estimated from batch means to absorb autocorrelation.
    """
    if long_path.times is None or long_path.times.size < 4:
        raise EmptyTrajectory("long path too short")
    snapshot_t = float(ensemble.times[-1])
    if long_path.times[-1] < 10.0 * snapshot_t:
        raise EmptyTrajectory(
            f"long path must cover >= 10x the snapshot time ({long_path.times[-1]:g} < {10 * snapshot_t:g})"
        )
    finals = ensemble.final_values(component)
    if finals.size < 100:
        raise TooFewSamples("ensemble snapshot needs >= 100 paths")

    y = long_path.component(component)
    t = long_path.times
    half = int(np.searchsorted(t, 0.5 * t[-1]))
    y2, t2 = y[half:], t[half:]
    long_avg = _trapezoid(y2, t2) / (t2[-1] - t2[0])

    n_batches = 10
    edges = np.linspace(0, y2.size, n_batches + 1).astype(int)
    batch_means = np.array(
        [_trapezoid(y2[a:b], t2[a:b]) / (t2[b - 1] - t2[a]) for a, b in zip(edges[:-1], edges[1:])]
    )
    se_path = float(np.std(batch_means, ddof=1) / math.sqrt(n_batches))
    se_ens = float(np.std(finals, ddof=1) / math.sqrt(finals.size))

    ens_mean = float(finals.mean())
    disc = abs(long_avg - ens_mean)
    tol = SE_MULTIPLE * math.hypot(se_path, se_ens) + 1e-12
    return ErgodicityCheck(
        discrepancy=disc, tolerance=tol, ok=disc <= tol, long_path_average=long_avg, ensemble_mean=ens_mean
    )


@dataclass(frozen=True)
class PersistenceVerdict:
    classification: Classification
    agreement: bool | None
    empirical: float
    threshold: float
    note: str


def persistence_verdict(ensemble: EnsembleSummary, report: ThresholdReport) -> PersistenceVerdict:
    """Confront the threshold classification with the ensemble data.

    Persistent: the ensemble-mean time average of I must clear the predicted
    lower bound up to three standard errors.  Extinct: at least 95% of paths
    must finish below the extinction cutoff.
    """
    if report.classification is Classification.PERSISTENT:
        bound = report.persistence_lower_bound
        emp = ensemble.mean_time_avg_i
        ok = emp >= bound - SE_MULTIPLE * ensemble.sem_time_avg_i
        note = "mean time-average of I vs predicted lower bound"
        return PersistenceVerdict(report.classification, bool(ok), emp, float(bound), note)
    if report.classification is Classification.EXTINCT:
        emp = ensemble.extinct_fraction if ensemble.extinct_fraction is not None else math.nan
        ok = emp >= 0.95
        note = f"fraction of paths with final I below {ensemble.extinction_cutoff:g}"
        return PersistenceVerdict(report.classification, bool(ok), float(emp), 0.95, note)
    return PersistenceVerdict(
        report.classification, None, math.nan, math.nan, "no empirical test for an indeterminate classification"
    )
