import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sirlevy import (
    AssumptionViolated,
    Classification,
    EmptyTrajectory,
    JumpMeasure,
    NoiseSpec,
    SimConfig,
    State,
    TooFewSamples,
    classify,
    ergodicity_check,
    integrate_deterministic,
    lyapunov_exponent,
    moment_bound_check,
    persistence_verdict,
    simulate_ensemble,
    stationary_histogram,
    time_average,
)
from conftest import make_trajectory


class TestTimeAverage:
    def test_constant_path(self):
        traj = make_trajectory(np.linspace(0, 10, 101), i=np.full(101, 2.5))
        assert time_average(traj, "i") == pytest.approx(2.5, rel=1e-14)
        assert time_average(traj, "i", power=3) == pytest.approx(2.5**3, rel=1e-14)

    def test_linear_path(self):
        t = np.linspace(0, 1, 1001)
        traj = make_trajectory(t, i=t.copy())
        assert time_average(traj, "i") == pytest.approx(0.5, rel=1e-9)

    def test_requires_two_points(self):
        traj = make_trajectory([0.0], i=[1.0])
        with pytest.raises(EmptyTrajectory):
            time_average(traj, "i")

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_power_two_dominates_square_of_mean(self, seed):
        rng = np.random.default_rng(seed)
        t = np.linspace(0, 5, 64)
        traj = make_trajectory(t, i=rng.uniform(0.1, 2.0, t.size))
        assert time_average(traj, "i", power=2) >= time_average(traj, "i") ** 2 - 1e-12


class TestLyapunov:
    def test_constant_path_is_zero(self):
        traj = make_trajectory(np.linspace(0, 10, 11), i=np.full(11, 0.3))
        est = lyapunov_exponent(traj)
        assert est.value == 0.0 and not est.floor_truncated

    def test_scale_invariance(self):
        t = np.linspace(0, 10, 11)
        base = np.exp(-0.2 * t) * 0.3
        a = lyapunov_exponent(make_trajectory(t, i=base))
        b = lyapunov_exponent(make_trajectory(t, i=5.0 * base))
        assert a.value == pytest.approx(b.value, rel=1e-14)
        assert a.value == pytest.approx(-0.2, rel=1e-12)

    def test_floor_truncation_uses_first_hit(self):
        t = np.linspace(0, 10, 11)
        i = np.exp(-2.0 * t) * 0.3
        floor = 1e-6
        i[i < floor] = floor
        est = lyapunov_exponent(make_trajectory(t, i=i), floor=floor)
        first = t[np.flatnonzero(i <= floor)[0]]
        assert est.floor_truncated
        assert est.horizon == first
        assert est.value == pytest.approx(math.log(floor / 0.3) / first, rel=1e-12)

    def test_deterministic_supercritical_rate_vanishes(self, table2):
        s, i, r = table2.endemic_equilibrium()
        init = State(1.1 * s, 1.1 * i, 1.1 * r)
        traj = integrate_deterministic(table2, init, SimConfig(t_end=3000.0, dt=0.01))
        assert abs(lyapunov_exponent(traj).value) < 1e-3


class TestHistogram:
    def test_identical_states_single_bin(self):
        h = stationary_histogram({"i": np.full(200, 0.25)}, bins=10)["i"]
        assert h.mass.tolist() == [1.0]
        assert h.mean == 0.25 and h.variance == 0.0

    def test_mass_normalized_and_mean_consistent(self):
        rng = np.random.default_rng(3)
        vals = rng.gamma(2.0, 0.05, 5000)
        h = stationary_histogram({"i": vals}, bins=40)["i"]
        assert h.mass.sum() == pytest.approx(1.0, abs=1e-12)
        width = h.bin_right[0] - h.bin_left[0]
        centers = 0.5 * (h.bin_left + h.bin_right)
        assert abs(float(centers @ h.mass) - h.mean) < width
        assert h.mean == pytest.approx(vals.mean(), rel=1e-12)

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            stationary_histogram({"i": np.ones(99)})

    def test_mass_below_cutoff_interpolates(self):
        h = stationary_histogram({"i": np.linspace(0.0, 1.0, 1000)}, bins=10)["i"]
        assert h.mass_below(0.5) == pytest.approx(0.5, abs=0.01)


def _small_ensemble(params, noise, init, seed=5, n_paths=200, t_end=50.0, **kw):
    cfg = SimConfig(t_end=t_end, dt=0.01, seed=seed)
    return simulate_ensemble(params, noise, init, cfg, n_paths, **kw)


class TestMomentBound:
    def test_noise_free_near_carrying_capacity(self, table2, zero_noise):
        init = State(1.8 - 2e-8, 1e-8, 1e-8)
        summary = _small_ensemble(table2, zero_noise, init, n_paths=50)
        chk = moment_bound_check(summary, table2, zero_noise, 1.0, init.n)
        assert chk.ok
        # noise-free ceiling is (a/mu1)^2 and the estimate sits right on it
        assert chk.bound_tail == pytest.approx((table2.a / table2.mu1) ** 2, rel=1e-12)

    def test_example1_holds(self, table2, example1_noise, init_default):
        summary = _small_ensemble(table2, example1_noise, init_default, n_paths=300, t_end=100.0)
        chk = moment_bound_check(summary, table2, example1_noise, 1.0, init_default.n)
        assert chk.ok and chk.worst_margin > 0

    def test_doubled_estimates_break_check_late(self, table2, zero_noise):
        init = State(1.8 - 2e-8, 1e-8, 1e-8)
        summary = _small_ensemble(table2, zero_noise, init, n_paths=50, t_end=200.0)
        forged = replace(summary, moment_2p_mean=2.0 * summary.moment_2p_mean)
        chk = moment_bound_check(forged, table2, zero_noise, 1.0, init.n)
        assert not chk.ok
        assert chk.worst_time > 100.0

    def test_pexp_mismatch_rejected(self, table2, example1_noise, init_default):
        summary = _small_ensemble(table2, example1_noise, init_default, n_paths=10)
        with pytest.raises(AssumptionViolated):
            moment_bound_check(summary, table2, example1_noise, 2.0, init_default.n)

    def test_failed_moment_assumption_rejected(self, table2, init_default):
        noisy = NoiseSpec(sigma1=0.35, sigma2=0.0, jump=JumpMeasure.constant(0.05, 1.0))
        summary = _small_ensemble(table2, noisy, init_default, n_paths=10)
        with pytest.raises(AssumptionViolated):
            moment_bound_check(summary, table2, noisy, 1.0, init_default.n)


class TestErgodicity:
    def test_deterministic_fixed_point_has_zero_discrepancy(self, table2, zero_noise):
        s, i, r = table2.endemic_equilibrium()
        init = State(s, i, r)
        long = integrate_deterministic(table2, init, SimConfig(t_end=3000.0, dt=0.01))
        summary = _small_ensemble(table2, zero_noise, init, n_paths=120, t_end=300.0)
        chk = ergodicity_check(long, summary, "i")
        assert chk.ok
        assert chk.discrepancy < 1e-9

    def test_rejects_short_long_path(self, table2, zero_noise, init_default):
        short = integrate_deterministic(table2, init_default, SimConfig(t_end=100.0, dt=0.01))
        summary = _small_ensemble(table2, zero_noise, init_default, n_paths=120, t_end=300.0)
        with pytest.raises(EmptyTrajectory):
            ergodicity_check(short, summary, "i")


class TestPersistenceVerdict:
    def test_noise_free_supercritical_agrees(self, table2, zero_noise, init_default):
        summary = _small_ensemble(table2, zero_noise, init_default, n_paths=2, t_end=300.0)
        report = classify(table2, zero_noise)
        assert report.classification is Classification.PERSISTENT
        verdict = persistence_verdict(summary, report)
        assert verdict.agreement is True
        assert verdict.empirical >= verdict.threshold

    def test_extinct_scenario_agrees(self, table2, example2a_noise, init_default):
        summary = _small_ensemble(table2, example2a_noise, init_default, n_paths=60, t_end=400.0)
        report = classify(table2, example2a_noise)
        verdict = persistence_verdict(summary, report)
        assert report.classification is Classification.EXTINCT
        assert verdict.agreement is True

    def test_indeterminate_has_no_empirical_test(self, table2, init_default):
        # r0s just below 1 while r0s_hat sits just above it: no verdict fires
        noisy = NoiseSpec(sigma1=0.0, sigma2=0.0644, jump=JumpMeasure.constant(0.05, 1.0))
        report = classify(table2, noisy)
        assert report.classification is Classification.INDETERMINATE
        summary = _small_ensemble(table2, noisy, init_default, n_paths=10)
        assert persistence_verdict(summary, report).agreement is None


class TestEnsemble:
    def test_worker_partition_invariance(self, table2, example1_noise, init_default):
        cfg = SimConfig(t_end=20.0, dt=0.01, seed=9)
        one = simulate_ensemble(table2, example1_noise, init_default, cfg, 16, workers=1)
        four = simulate_ensemble(table2, example1_noise, init_default, cfg, 16, workers=4)
        eight = simulate_ensemble(table2, example1_noise, init_default, cfg, 16, workers=8)
        for other in (four, eight):
            assert np.array_equal(one.time_avg_i, other.time_avg_i)
            assert np.array_equal(one.final_i, other.final_i)
            assert np.array_equal(one.lyapunov_i, other.lyapunov_i)
            assert np.array_equal(one.path_ids, other.path_ids)

    def test_aux_only_summary(self, table2, example1_noise):
        cfg = SimConfig(t_end=50.0, dt=0.01, seed=9)
        summary = simulate_ensemble(
            table2, example1_noise, None, cfg, 8, aux_only=True, x0=1.8
        )
        assert summary.time_avg_i is None and summary.extinct_fraction is None
        assert summary.time_avg_x.shape == (8,)
        assert np.all(summary.time_avg_x2 >= summary.time_avg_x**2 - 1e-12)

    def test_histograms_built_at_hundred_paths(self, table2, example1_noise, init_default):
        cfg = SimConfig(t_end=10.0, dt=0.01, seed=2)
        small = simulate_ensemble(table2, example1_noise, init_default, cfg, 99)
        full = simulate_ensemble(table2, example1_noise, init_default, cfg, 100)
        assert small.histograms is None
        assert set(full.histograms) == {"s", "i", "r"}

    def test_stationary_second_moment_of_bound_process(self, table2):
        # generator of the linear jump diffusion: E[X^2] solves
        # 0 = 2 a E[X] - (2 mu1 - sigma1^2 - integral eta^2) E[X^2]
        noise = NoiseSpec(sigma1=0.03, sigma2=0.0, jump=JumpMeasure.constant(0.05, 1.0))
        cfg = SimConfig(t_end=4000.0, dt=0.01, seed=23)
        summary = simulate_ensemble(table2, noise, None, cfg, 24, aux_only=True, x0=1.8, workers=4)
        eta2 = float(noise.jump.weights @ noise.jump.marks**2)
        denom = 2 * table2.mu1 - noise.sigma1**2 - eta2
        expected = 2 * table2.a**2 / (table2.mu1 * denom)
        assert summary.time_avg_x2.mean() == pytest.approx(expected, rel=0.05)
