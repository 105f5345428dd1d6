import math

import numpy as np
import pytest

from sirlevy import (
    EpidemicParameters,
    JumpMeasure,
    NoiseSpec,
    NumericalBlowup,
    SimConfig,
    State,
    StepSizeTooLarge,
    integrate_aux,
    integrate_deterministic,
    integrate_sir_jump,
    rng_stream,
)
from sirlevy.sde import write_jump_events, write_trajectory


class TestRngStreams:
    def test_same_stream_reproduces(self):
        a = rng_stream(42, 0).standard_normal(1000)
        b = rng_stream(42, 0).standard_normal(1000)
        assert np.array_equal(a, b)

    def test_distinct_streams_uncorrelated(self):
        a = rng_stream(42, 0).standard_normal(100_000)
        b = rng_stream(42, 1).standard_normal(100_000)
        corr = np.corrcoef(a, b)[0, 1]
        assert abs(corr) < 0.01

    def test_seed_sensitivity(self):
        a = rng_stream(1, 0).standard_normal(10)
        b = rng_stream(2, 0).standard_normal(10)
        assert not np.allclose(a, b)


class TestConfigAndState:
    def test_state_validation(self):
        with pytest.raises(ValueError):
            State(-0.1, 0.3, 0.1)
        with pytest.raises(ValueError):
            State(math.nan, 0.3, 0.1)
        assert State(0.4, 0.3, 0.1).n == pytest.approx(0.8)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SimConfig(t_end=1.0, dt=0.0)
        with pytest.raises(ValueError):
            SimConfig(t_end=0.005, dt=0.01)
        with pytest.raises(ValueError):
            SimConfig(t_end=1.0, dt=0.01, record_stride=0)
        with pytest.raises(ValueError):
            SimConfig(t_end=1.0, dt=0.01, seed=-1)

    def test_auto_stride_caps_recorded_points(self):
        cfg = SimConfig(t_end=5000.0, dt=0.01)
        n_rec = cfg.n_steps // cfg.stride + 1
        assert n_rec <= 100_000
        assert SimConfig(t_end=10.0, dt=0.01).stride == 1


class TestDeterministic:
    def test_converges_to_endemic_equilibrium(self, table2, init_default):
        cfg = SimConfig(t_end=3000.0, dt=0.01)
        traj = integrate_deterministic(table2, init_default, cfg)
        s, i, r = table2.endemic_equilibrium()
        assert abs(traj.s[-1] - s) < 1e-3
        assert abs(traj.i[-1] - i) < 1e-3
        assert abs(traj.r[-1] - r) < 1e-3

    def test_vanishing_transmission_decouples(self, init_default):
        p = EpidemicParameters(a=0.09, mu1=0.05, alpha=0.04, beta=1e-12, gamma=0.01)
        traj = integrate_deterministic(p, init_default, SimConfig(t_end=600.0, dt=0.01))
        assert np.all(np.diff(traj.i) < 0)
        assert abs(traj.s[-1] - p.a / p.mu1) < 1e-3
        assert traj.i[-1] < 1e-12

    def test_equilibrium_is_fixed_point(self, table2):
        s, i, r = table2.endemic_equilibrium()
        traj = integrate_deterministic(table2, State(s, i, r), SimConfig(t_end=100.0, dt=0.01))
        assert np.max(np.abs(traj.i - i)) < 1e-12

    def test_oversized_step_raises(self, table2, init_default):
        with pytest.raises(StepSizeTooLarge):
            integrate_deterministic(table2, init_default, SimConfig(t_end=200.0, dt=200.0))


class TestJumpSystem:
    def test_bit_identical_reruns(self, table2, example1_noise, init_default):
        cfg = SimConfig(t_end=50.0, dt=0.01, seed=7)
        a = integrate_sir_jump(table2, example1_noise, init_default, cfg, path_id=2)
        b = integrate_sir_jump(table2, example1_noise, init_default, cfg, path_id=2)
        for name in ("s", "i", "r"):
            assert np.array_equal(a.component(name), b.component(name))
        assert np.array_equal(a.jump_times, b.jump_times)

    def test_distinct_paths_differ(self, table2, example1_noise, init_default):
        cfg = SimConfig(t_end=50.0, dt=0.01, seed=7)
        a = integrate_sir_jump(table2, example1_noise, init_default, cfg, path_id=0)
        b = integrate_sir_jump(table2, example1_noise, init_default, cfg, path_id=1)
        assert not np.allclose(a.i, b.i)

    def test_noise_free_matches_deterministic(self, table2, zero_noise, init_default):
        cfg = SimConfig(t_end=300.0, dt=0.01, seed=3)
        em = integrate_sir_jump(table2, zero_noise, init_default, cfg)
        rk = integrate_deterministic(table2, init_default, cfg)
        err = max(
            np.max(np.abs(em.s - rk.s)), np.max(np.abs(em.i - rk.i)), np.max(np.abs(em.r - rk.r))
        )
        assert err <= 10.0 * cfg.dt

    def test_positivity_and_no_floor_hits(self, table2, example1_noise, init_default):
        cfg = SimConfig(t_end=300.0, dt=0.01, seed=5)
        traj = integrate_sir_jump(table2, example1_noise, init_default, cfg)
        for name in ("s", "i", "r"):
            assert np.all(traj.component(name) >= cfg.positivity_floor)
        assert traj.floor_hits == 0

    def test_jump_count_poisson_concentration(self, table2, example1_noise, init_default):
        cfg = SimConfig(t_end=300.0, dt=0.01, seed=11)
        lam_t = example1_noise.jump.total_mass * cfg.t_end
        counts = [
            integrate_sir_jump(table2, example1_noise, init_default, cfg, path_id=k).jump_count
            for k in range(5)
        ]
        for c in counts:
            assert abs(c - lam_t) <= 4.0 * math.sqrt(lam_t)

    def test_forced_event_multiplies_all_compartments(self, table2, init_default):
        # drift-only elsewhere: replicate the split step by hand and compare
        noise = NoiseSpec(sigma1=0.0, sigma2=0.0, jump=JumpMeasure.constant(-0.5, 1.0))
        cfg = SimConfig(t_end=1.0, dt=0.01, seed=0, record_stride=1)
        tau, eta = 0.505, -0.5
        traj = integrate_sir_jump(table2, noise, init_default, cfg, events=[(tau, eta)])
        assert traj.jump_events == [(tau, eta)]

        m1 = noise.jump.total_mass * eta
        k = int(tau / cfg.dt)  # grid index just before the event

        def euler(state, h):
            s, i, r = state
            ds = (table2.a - table2.mu1 * s - table2.beta * s * i - m1 * s) * h
            di = (table2.beta * s * i - (table2.mu2 + table2.gamma) * i - m1 * i) * h
            dr = (table2.gamma * i - table2.mu1 * r - m1 * r) * h
            return s + ds, i + di, r + dr

        before = (traj.s[k], traj.i[k], traj.r[k])
        at_tau = euler(before, tau - traj.times[k])
        after_jump = tuple(v * (1.0 + eta) for v in at_tau)
        expected = euler(after_jump, traj.times[k + 1] - tau)
        assert traj.s[k + 1] == pytest.approx(expected[0], rel=1e-12)
        assert traj.i[k + 1] == pytest.approx(expected[1], rel=1e-12)
        assert traj.r[k + 1] == pytest.approx(expected[2], rel=1e-12)

    def test_blowup_raises_with_location(self, table2, example1_noise, init_default):
        cfg = SimConfig(t_end=50.0, dt=0.01, seed=1, blowup_ceiling=0.5)
        with pytest.raises(NumericalBlowup) as err:
            integrate_sir_jump(table2, example1_noise, init_default, cfg, path_id=9)
        assert err.value.path_id == 9
        assert err.value.t is not None

    def test_requires_strictly_positive_init(self, table2, example1_noise):
        cfg = SimConfig(t_end=1.0, dt=0.01)
        with pytest.raises(ValueError):
            integrate_sir_jump(table2, example1_noise, State(0.4, 0.0, 0.1), cfg)

    def test_extinction_path_floors_and_records_first_hit(self, table2, example2a_noise, init_default):
        cfg = SimConfig(t_end=500.0, dt=0.01, seed=21)
        traj = integrate_sir_jump(table2, example2a_noise, init_default, cfg)
        assert traj.floor_hits > 0
        t_hit = traj.first_floor_time["i"]
        assert math.isfinite(t_hit) and 0.0 < t_hit < cfg.t_end
        assert np.min(traj.i) >= cfg.positivity_floor


class TestAuxProcess:
    def test_fixed_point_without_noise(self, table2):
        noise = NoiseSpec(sigma1=0.0, sigma2=0.0, jump=JumpMeasure.constant(0.0, 1.0))
        x0 = table2.a / table2.mu1
        traj = integrate_aux(table2, noise, x0, SimConfig(t_end=100.0, dt=0.01, seed=2))
        assert np.max(np.abs(traj.x - x0)) < 1e-12

    def test_matches_linear_ode_solution(self, table2):
        noise = NoiseSpec(sigma1=0.0, sigma2=0.0, jump=JumpMeasure.constant(0.0, 1.0))
        cfg = SimConfig(t_end=10.0, dt=1e-3, seed=2)
        x0 = 0.8
        traj = integrate_aux(table2, noise, x0, cfg)
        xbar = table2.a / table2.mu1
        exact = xbar + (x0 - xbar) * np.exp(-table2.mu1 * traj.times)
        assert np.max(np.abs(traj.x - exact)) < 1e-4

    def test_pathwise_domination_of_total_population(self, table2, example1_noise, init_default):
        cfg = SimConfig(t_end=200.0, dt=0.01, seed=31)
        for pid in range(5):
            traj = integrate_sir_jump(
                table2, example1_noise, init_default, cfg, path_id=pid, with_aux=True
            )
            total = traj.component("n")
            assert np.all(total <= traj.x + 1e-9)

    def test_standalone_aux_couples_to_companion_run(self, table2, example1_noise, init_default):
        cfg = SimConfig(t_end=100.0, dt=0.01, seed=13)
        joint = integrate_sir_jump(
            table2, example1_noise, init_default, cfg, path_id=4, with_aux=True, x0=0.8
        )
        alone = integrate_aux(table2, example1_noise, 0.8, cfg, path_id=4)
        assert np.array_equal(joint.x, alone.x)
        assert np.array_equal(joint.jump_times, alone.jump_times)

    def test_compensated_jumps_preserve_mean_dynamics(self, table2):
        # sigma = 0, jumps on: ensemble mean of X follows dX = (a - mu1 X)dt
        noise = NoiseSpec(sigma1=0.0, sigma2=0.0, jump=JumpMeasure.constant(0.05, 1.0))
        cfg = SimConfig(t_end=10.0, dt=0.01, seed=17, record_stride=100)
        x0 = 0.8
        n_paths = 10_000
        finals = np.empty((n_paths, 3))
        checkpoints = None
        acc = None
        for pid in range(n_paths):
            traj = integrate_aux(table2, noise, x0, cfg, path_id=pid)
            if acc is None:
                checkpoints = traj.times
                acc = np.zeros((2, traj.times.size))
            acc[0] += traj.x
            acc[1] += traj.x**2
        mean = acc[0] / n_paths
        sem = np.sqrt(np.maximum(acc[1] / n_paths - mean**2, 0.0) / n_paths)
        xbar = table2.a / table2.mu1
        exact = xbar + (x0 - xbar) * np.exp(-table2.mu1 * checkpoints)
        for t_ref in (1.0, 5.0, 10.0):
            k = int(np.argmin(np.abs(checkpoints - t_ref)))
            assert abs(mean[k] - exact[k]) <= 3.0 * sem[k] + 1e-4


class TestTrajectoryExport:
    def test_round_trip_columns(self, table2, example1_noise, init_default, tmp_path):
        cfg = SimConfig(t_end=5.0, dt=0.01, seed=1)
        traj = integrate_sir_jump(table2, example1_noise, init_default, cfg, with_aux=True)
        out = tmp_path / "traj.tsv"
        write_trajectory(traj, out)
        header, *rows = out.read_text().strip().split("\n")
        assert header.split("\t") == ["t", "S", "I", "R", "X"]
        got = np.array([[float(v) for v in row.split("\t")] for row in rows])
        assert np.array_equal(got[:, 0], traj.times)
        assert np.array_equal(got[:, 2], traj.i)

        evts = tmp_path / "events.tsv"
        write_jump_events(traj, evts)
        lines = evts.read_text().strip().split("\n")
        assert lines[0] == "t\teta"
        assert len(lines) - 1 == traj.jump_count

    def test_component_accessors(self, table2, example1_noise, init_default):
        cfg = SimConfig(t_end=5.0, dt=0.01, seed=1)
        traj = integrate_sir_jump(table2, example1_noise, init_default, cfg)
        assert np.array_equal(traj.component("n"), traj.s + traj.i + traj.r)
        with pytest.raises(ValueError):
            traj.component("x")
        st0 = traj.state(0)
        assert (st0.s, st0.i, st0.r) == (0.4, 0.3, 0.1)
