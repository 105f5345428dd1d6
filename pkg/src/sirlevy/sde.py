"""Path generation for the SIR system, its noisy version and the scalar bound process.

Scheme: Euler-Maruyama between jump events, with events sampled as a compound
Poisson stream (exponential gaps, rate lam = total measure mass) and applied
exactly by splitting the step at each event time and multiplying every
compartment by (1 + eta).  The compensator of the jump integral is folded
into the drift as ``-x * m1`` with ``m1 = integral of eta``, so the raw jump
stream plus this correction has the mean dynamics of the compensated model.

Randomness is organised as one independent sub-stream per (path, channel):
channel 0 drives the shared Brownian factor, channel 1 the transmission
Brownian factor, channels 2 and 3 the jump times and marks.  Identical
(seed, path_id) always reproduce a bit-identical trajectory, and a scalar
bound-process run with the same (seed, path_id) consumes the same shared
Brownian increments and jump events as the full run, which makes the two
paths directly comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalBlowup, StepSizeTooLarge
from .jumps import JumpMeasure, first_moment
from .thresholds import EpidemicParameters, NoiseSpec

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dep, kept soft for safety
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


CHANNEL_BROWNIAN_1 = 0
CHANNEL_BROWNIAN_2 = 1
CHANNEL_JUMP_TIMES = 2
CHANNEL_JUMP_MARKS = 3
N_CHANNELS = 4

MAX_RECORD_POINTS = 100_000


def rng_stream(seed: int, stream_id: int) -> np.random.Generator:
    """Deterministic, statistically independent generator for a sub-stream."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(ss))


def path_channel_stream(seed: int, path_id: int, channel: int) -> np.random.Generator:
    return rng_stream(seed, path_id * N_CHANNELS + channel)


@dataclass(frozen=True)
class State:
    """Compartment sizes (susceptible, infected, recovered)."""

    s: float
    i: float
    r: float

    def __post_init__(self):
        for name in ("s", "i", "r"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"state component {name} must be finite and >= 0, got {v!r}")

    @property
    def n(self) -> float:
        return self.s + self.i + self.r


@dataclass(frozen=True)
class SimConfig:
    """Grid, seed and safeguards for one integration."""

    t_end: float
    dt: float = 1e-2
    seed: int = 0
    positivity_floor: float = 1e-12
    record_stride: int | None = None  # None: auto, at most MAX_RECORD_POINTS points
    blowup_ceiling: float = 1e9

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.t_end >= self.dt:
            raise ValueError("t_end must be at least dt")
        if self.positivity_floor < 0.0:
            raise ValueError("positivity_floor must be >= 0")
        if self.record_stride is not None and self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if int(self.seed) < 0:
            raise ValueError("seed must be a nonnegative integer")

    @property
    def n_steps(self) -> int:
        n = int(round(self.t_end / self.dt))
        if n >= 1 and abs(n * self.dt - self.t_end) <= 1e-9 * max(1.0, self.t_end):
            return n
        return max(1, int(math.ceil(self.t_end / self.dt - 1e-12)))

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    @property
    def stride(self) -> int:
        if self.record_stride is not None:
            return self.record_stride
        return max(1, -(-(self.n_steps + 1) // MAX_RECORD_POINTS))


@dataclass
class Trajectory:
    """Recorded path: time grid, compartments, optional bound process, events."""

    times: np.ndarray
    s: np.ndarray | None = None
    i: np.ndarray | None = None
    r: np.ndarray | None = None
    x: np.ndarray | None = None
    jump_times: np.ndarray | None = None
    jump_marks: np.ndarray | None = None
    floor_hits: int = 0
    first_floor_time: dict | None = None

    def component(self, name: str) -> np.ndarray:
        """Recorded values of 's', 'i', 'r', 'x' or the total 'n'."""
        if name == "n":
            if self.s is None:
                raise ValueError("total population requires the compartment paths")
            return self.s + self.i + self.r
        arr = getattr(self, name, None)
        if arr is None:
            raise ValueError(f"component {name!r} not recorded on this trajectory")
        return arr

    @property
    def jump_events(self) -> list[tuple[float, float]]:
        if self.jump_times is None:
            return []
        return list(zip(self.jump_times.tolist(), self.jump_marks.tolist()))

    @property
    def jump_count(self) -> int:
        return 0 if self.jump_times is None else int(self.jump_times.size)

    def state(self, k: int) -> State:
        return State(float(self.s[k]), float(self.i[k]), float(self.r[k]))

    def final_state(self) -> State:
        return self.state(-1)


def _recorded_indices(n_steps: int, stride: int) -> np.ndarray:
    ks = np.arange(0, n_steps + 1, stride)
    if ks[-1] != n_steps:
        ks = np.append(ks, n_steps)
    return ks


def sample_jump_events(
    jm: JumpMeasure, horizon: float, rng_times: np.random.Generator, rng_marks: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Compound Poisson event stream on [0, horizon): times and marks."""
    lam = jm.total_mass
    times = []
    t = 0.0
    while True:
        t += rng_times.exponential(1.0 / lam)
        if t >= horizon:
            break
        times.append(t)
    times = np.asarray(times, dtype=float)
    marks = jm.sample_marks(rng_marks, times.size)
    return times, marks


def _build_schedule(n_steps: int, dt: float, stride: int, ev_times: np.ndarray, ev_marks: np.ndarray):
    """Merge grid boundaries with event times into one substep schedule.

    Returns boundary times, substep lengths, event flags/marks per boundary and
    the recording slot (-1 when the boundary is not a recorded grid point).
    """
    grid_t = np.arange(1, n_steps + 1, dtype=float) * dt
    n_rec = _recorded_indices(n_steps, stride).size
    k = np.arange(1, n_steps + 1)
    grid_slot = np.where(k % stride == 0, k // stride, -1)
    grid_slot[-1] = n_rec - 1

    tb = np.concatenate([grid_t, ev_times])
    flag = np.concatenate([np.zeros(n_steps, dtype=np.int8), np.ones(ev_times.size, dtype=np.int8)])
    mark = np.concatenate([np.zeros(n_steps), ev_marks])
    slot = np.concatenate([grid_slot, np.full(ev_times.size, -1, dtype=np.int64)]).astype(np.int64)

    order = np.argsort(tb, kind="stable")
    tb = tb[order]
    h = np.diff(tb, prepend=0.0)
    return tb, h, flag[order], mark[order], slot[order]


@njit(cache=True)
def _sim_core(
    tb, h, ev_flag, ev_mark, rec_slot, xi1, xi2,
    a, mu1, mu2, beta, gamma, sig1, sig2, m1,
    s0, i0, r0, x0, sir_on, aux_on, floor, ceiling,
    out_s, out_i, out_r, out_x, ff,
):
    s = s0
    i = i0
    r = r0
    x = x0
    floor_count = 0
    for k in range(h.shape[0]):
        hk = h[k]
        sq = math.sqrt(hk)
        dw1 = sq * xi1[k]
        dw2 = sq * xi2[k]
        if sir_on:
            si = s * i
            ds = (a - mu1 * s - beta * si - m1 * s) * hk + sig1 * s * dw1 - sig2 * si * dw2
            di = (beta * si - (mu2 + gamma) * i - m1 * i) * hk + sig1 * i * dw1 + sig2 * si * dw2
            dr = (gamma * i - mu1 * r - m1 * r) * hk + sig1 * r * dw1
            s = s + ds
            i = i + di
            r = r + dr
        if aux_on:
            x = x + (a - mu1 * x - m1 * x) * hk + sig1 * x * dw1
        if ev_flag[k]:
            g = 1.0 + ev_mark[k]
            if sir_on:
                s *= g
                i *= g
                r *= g
            if aux_on:
                x *= g
        tk = tb[k]
        if sir_on:
            if s < floor:
                s = floor
                floor_count += 1
                if math.isnan(ff[0]):
                    ff[0] = tk
            if i < floor:
                i = floor
                floor_count += 1
                if math.isnan(ff[1]):
                    ff[1] = tk
            if r < floor:
                r = floor
                floor_count += 1
                if math.isnan(ff[2]):
                    ff[2] = tk
            bad = not (math.isfinite(s) and math.isfinite(i) and math.isfinite(r))
            if bad or s > ceiling or i > ceiling or r > ceiling:
                return floor_count, k
        if aux_on:
            if x < floor:
                x = floor
                floor_count += 1
                if math.isnan(ff[3]):
                    ff[3] = tk
            if not math.isfinite(x) or x > ceiling:
                return floor_count, k
        slot = rec_slot[k]
        if slot >= 0:
            if sir_on:
                out_s[slot] = s
                out_i[slot] = i
                out_r[slot] = r
            if aux_on:
                out_x[slot] = x
    return floor_count, -1


@njit(cache=True)
def _rk4_core(n_steps, dt, stride, n_rec, a, mu1, mu2, beta, gamma, s0, i0, r0, neg_tol, out_s, out_i, out_r):
    s = s0
    i = i0
    r = r0
    for k in range(1, n_steps + 1):
        ks1, ki1, kr1 = _sir_rhs(s, i, r, a, mu1, mu2, beta, gamma)
        ks2, ki2, kr2 = _sir_rhs(s + 0.5 * dt * ks1, i + 0.5 * dt * ki1, r + 0.5 * dt * kr1, a, mu1, mu2, beta, gamma)
        ks3, ki3, kr3 = _sir_rhs(s + 0.5 * dt * ks2, i + 0.5 * dt * ki2, r + 0.5 * dt * kr2, a, mu1, mu2, beta, gamma)
        ks4, ki4, kr4 = _sir_rhs(s + dt * ks3, i + dt * ki3, r + dt * kr3, a, mu1, mu2, beta, gamma)
        s = s + dt * (ks1 + 2.0 * ks2 + 2.0 * ks3 + ks4) / 6.0
        i = i + dt * (ki1 + 2.0 * ki2 + 2.0 * ki3 + ki4) / 6.0
        r = r + dt * (kr1 + 2.0 * kr2 + 2.0 * kr3 + kr4) / 6.0
        if s < -neg_tol or i < -neg_tol or r < -neg_tol:
            return k
        if k % stride == 0 or k == n_steps:
            slot = k // stride
            if k == n_steps:
                slot = n_rec - 1
            out_s[slot] = s
            out_i[slot] = i
            out_r[slot] = r
    return -1


@njit(cache=True, inline="always")
def _sir_rhs(s, i, r, a, mu1, mu2, beta, gamma):
    ds = a - mu1 * s - beta * s * i
    di = beta * s * i - (mu2 + gamma) * i
    dr = gamma * i - mu1 * r
    return ds, di, dr


def integrate_deterministic(p: EpidemicParameters, init: State, cfg: SimConfig) -> Trajectory:
    """Fixed-step classical Runge-Kutta solution of the noise-free system."""
    n_steps, stride = cfg.n_steps, cfg.stride
    ks = _recorded_indices(n_steps, stride)
    out = [np.empty(ks.size) for _ in range(3)]
    out[0][0], out[1][0], out[2][0] = init.s, init.i, init.r
    neg_tol = max(cfg.positivity_floor, 1e-12)
    bad = _rk4_core(
        n_steps, cfg.dt, stride, ks.size,
        p.a, p.mu1, p.mu2, p.beta, p.gamma,
        init.s, init.i, init.r, neg_tol, out[0], out[1], out[2],
    )
    if bad >= 0:
        raise StepSizeTooLarge(f"component went negative at t={bad * cfg.dt:g}; reduce dt={cfg.dt:g}")
    return Trajectory(
        times=ks * cfg.dt,
        s=out[0], i=out[1], r=out[2],
        jump_times=np.empty(0), jump_marks=np.empty(0),
        first_floor_time={"s": math.nan, "i": math.nan, "r": math.nan, "x": math.nan},
    )


def _prepare_events(noise, cfg, path_id, events):
    if events is None:
        ev_t, ev_m = sample_jump_events(
            noise.jump,
            cfg.horizon,
            path_channel_stream(cfg.seed, path_id, CHANNEL_JUMP_TIMES),
            path_channel_stream(cfg.seed, path_id, CHANNEL_JUMP_MARKS),
        )
        return ev_t, ev_m
    pairs = list(events)
    ev_t = np.asarray([e[0] for e in pairs], dtype=float)
    ev_m = np.asarray([e[1] for e in pairs], dtype=float)
    if ev_t.size:
        if np.any(ev_m <= -1.0):
            raise ValueError("forced event mark violates 1+eta>0")
        if np.any((ev_t < 0.0) | (ev_t > cfg.horizon)):
            raise ValueError("forced event time outside [0, horizon]")
        order = np.argsort(ev_t, kind="stable")
        ev_t, ev_m = ev_t[order], ev_m[order]
    return ev_t, ev_m


def _run_core(p, noise, cfg, path_id, init, x0, sir_on, aux_on, events, normals):
    n_steps, stride = cfg.n_steps, cfg.stride
    ks = _recorded_indices(n_steps, stride)
    ev_t, ev_m = _prepare_events(noise, cfg, path_id, events)
    tb, h, flag, mark, slot = _build_schedule(n_steps, cfg.dt, stride, ev_t, ev_m)
    n_sub = tb.size

    if normals is None:
        xi1 = path_channel_stream(cfg.seed, path_id, CHANNEL_BROWNIAN_1).standard_normal(n_sub)
        xi2 = (
            path_channel_stream(cfg.seed, path_id, CHANNEL_BROWNIAN_2).standard_normal(n_sub)
            if sir_on
            else np.zeros(n_sub)
        )
    else:
        xi1 = np.asarray(normals[0], dtype=float)
        xi2 = np.asarray(normals[1], dtype=float) if sir_on else np.zeros(n_sub)
        if xi1.size != n_sub or xi2.size != n_sub:
            raise ValueError(f"normals must have one draw per substep ({n_sub})")

    out_s = np.empty(ks.size) if sir_on else np.zeros(1)
    out_i = np.empty(ks.size) if sir_on else np.zeros(1)
    out_r = np.empty(ks.size) if sir_on else np.zeros(1)
    out_x = np.empty(ks.size) if aux_on else np.zeros(1)
    if sir_on:
        out_s[0], out_i[0], out_r[0] = init.s, init.i, init.r
    if aux_on:
        out_x[0] = x0
    ff = np.full(4, np.nan)

    floor_count, bad = _sim_core(
        tb, h, flag, mark, slot, xi1, xi2,
        p.a, p.mu1, p.mu2, p.beta, p.gamma,
        noise.sigma1, noise.sigma2, first_moment(noise.jump),
        init.s if sir_on else 0.0, init.i if sir_on else 0.0, init.r if sir_on else 0.0,
        x0 if aux_on else 0.0,
        sir_on, aux_on, cfg.positivity_floor, cfg.blowup_ceiling,
        out_s, out_i, out_r, out_x, ff,
    )
    if bad >= 0:
        raise NumericalBlowup(
            f"component exceeded {cfg.blowup_ceiling:g} or became non-finite at t={tb[bad]:g}",
            t=float(tb[bad]),
            path_id=path_id,
        )
    return Trajectory(
        times=ks * cfg.dt,
        s=out_s if sir_on else None,
        i=out_i if sir_on else None,
        r=out_r if sir_on else None,
        x=out_x if aux_on else None,
        jump_times=ev_t,
        jump_marks=ev_m,
        floor_hits=int(floor_count),
        first_floor_time={"s": ff[0], "i": ff[1], "r": ff[2], "x": ff[3]},
    )


def integrate_sir_jump(
    p: EpidemicParameters,
    n: NoiseSpec,
    init: State,
    cfg: SimConfig,
    *,
    path_id: int = 0,
    with_aux: bool = False,
    x0: float | None = None,
    events=None,
    normals=None,
) -> Trajectory:
    """One path of the perturbed system; optionally co-integrates the scalar
    bound process with the same Brownian factor and jump events.

    ``events`` replaces the sampled jump stream with explicit (time, mark)
    pairs, and ``normals`` replaces the per-substep standard normal draws with
    supplied arrays; both exist for forced-event tests and grid-coupling
    convergence studies.
    """
    if not (init.s > 0 and init.i > 0 and init.r > 0):
        raise ValueError("initial state must be strictly positive")
    if x0 is None:
        x0 = init.n
    if with_aux and not x0 > 0:
        raise ValueError("x0 must be positive")
    return _run_core(p, n, cfg, path_id, init, x0, True, with_aux, events, normals)


def integrate_aux(
    p: EpidemicParameters,
    n: NoiseSpec,
    x0: float,
    cfg: SimConfig,
    *,
    path_id: int = 0,
    events=None,
    normals=None,
) -> Trajectory:
    """One path of the scalar process dX = (a - mu1 X)dt + sigma1 X dW + jumps.

    Shares the Brownian-factor and jump channels of the full system under the
    same (seed, path_id), so the recorded total population of a companion run
    is dominated by this path.
    """
    if not x0 > 0:
        raise ValueError("x0 must be positive")
    if normals is not None and (not isinstance(normals, (tuple, list)) or len(normals) != 2):
        normals = (normals, None)
    return _run_core(p, n, cfg, path_id, State(1.0, 1.0, 1.0), float(x0), False, True, events, normals)


def write_trajectory(traj: Trajectory, path) -> None:
    """Delimited text export: one header row, columns t, S, I, R and optional X."""
    cols = [("t", traj.times)]
    for label, arr in (("S", traj.s), ("I", traj.i), ("R", traj.r), ("X", traj.x)):
        if arr is not None:
            cols.append((label, arr))
    with open(path, "w") as fh:
        fh.write("\t".join(label for label, _ in cols) + "\n")
        for k in range(traj.times.size):
            fh.write("\t".join("%.17g" % arr[k] for _, arr in cols) + "\n")


def write_jump_events(traj: Trajectory, path) -> None:
    with open(path, "w") as fh:
        fh.write("t\teta\n")
        if traj.jump_times is not None:
            for t, m in zip(traj.jump_times, traj.jump_marks):
                fh.write("%.17g\t%.17g\n" % (t, m))
