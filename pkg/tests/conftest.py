import numpy as np
import pytest

from sirlevy import EpidemicParameters, JumpMeasure, NoiseSpec, State

ACCEPTANCE_RESULTS: list[tuple[str, str, bool, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, ok, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if ok else "FAIL"
        suffix = f"  [{detail}]" if detail else ""
        terminalreporter.write_line(f"criterion {number} {status}: {description}{suffix}")


@pytest.fixture
def table2() -> EpidemicParameters:
    return EpidemicParameters.from_mortalities(a=0.09, mu1=0.05, mu2=0.09, beta=0.06, gamma=0.01)


@pytest.fixture
def example1_noise() -> NoiseSpec:
    return NoiseSpec(sigma1=0.03, sigma2=0.02, jump=JumpMeasure.constant(0.05, 1.0))


@pytest.fixture
def example2a_noise() -> NoiseSpec:
    return NoiseSpec(sigma1=0.2, sigma2=0.3, jump=JumpMeasure.constant(0.05, 1.0))


@pytest.fixture
def example2b() -> tuple[EpidemicParameters, NoiseSpec]:
    params = EpidemicParameters.from_mortalities(a=0.09, mu1=0.05, mu2=0.43, beta=0.145, gamma=0.01)
    noise = NoiseSpec(sigma1=0.01, sigma2=0.02, jump=JumpMeasure.constant(0.05, 1.0))
    return params, noise


@pytest.fixture
def zero_noise() -> NoiseSpec:
    return NoiseSpec(sigma1=0.0, sigma2=0.0, jump=JumpMeasure.constant(0.0, 1.0))


@pytest.fixture
def init_default() -> State:
    return State(0.4, 0.3, 0.1)


def make_trajectory(times, i=None, s=None, r=None, x=None):
    """Hand-built trajectory for estimator unit tests."""
    from sirlevy import Trajectory

    times = np.asarray(times, dtype=float)
    return Trajectory(
        times=times,
        s=None if s is None else np.asarray(s, dtype=float),
        i=None if i is None else np.asarray(i, dtype=float),
        r=None if r is None else np.asarray(r, dtype=float),
        x=None if x is None else np.asarray(x, dtype=float),
        jump_times=np.empty(0),
        jump_marks=np.empty(0),
    )
