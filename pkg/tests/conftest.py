import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from rtk5g.config import ExperimentConfig
from rtk5g.harness import build_scenario, sky_view
from rtk5g.hybrid import StateVector, make_data
from rtk5g.observation import (CommonErrors, NoiseConfig, Scenario, double_difference,
                               generate_5g, generate_raw)

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def config():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def sky(config):
    return sky_view(config)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_problem(config, N, L, rng, sigma=1e-3, noise=True, epsilon=None, sky=None, baseline=None):
    """Scenario plus solver data; returns (scenario, data, truth)."""
    if baseline is not None:
        config = ExperimentConfig(baseline=tuple(baseline))
    scen = build_scenario(config, N, L, rng, sigma, sky)
    dd = fg = None
    if N >= 2:
        dd = double_difference(*generate_raw(scen, rng, noise))
    if L:
        fg = generate_5g(scen, rng, noise)
    eps = config.epsilon if epsilon is None else epsilon
    data = make_data(dd, fg, scen.bs_positions, scen.bs_rotations, eps, config.w2_norm,
                     config.clock_cycle, n_sat=N)
    truth = StateVector(scen.p_u, scen.truth_dd_ambiguities(0) if N >= 2 else np.zeros(0),
                        scen.clock_bias if L else None)
    return scen, data, truth


def simple_scenario(rng, N=5, L=1, noise=None, common=None, clock_bias=0.0):
    """Hand-built scenario around a point on the equator (no almanac)."""
    p_u = np.array([6378137.0, 0.0, 0.0])
    dirs = rng.normal(size=(N, 3))
    dirs[:, 0] = np.abs(dirs[:, 0]) + 1.0
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    sats = p_u + 2.1e7 * dirs
    bs = p_u + rng.uniform(-25, 25, (L, 3))
    rot = Rotation.random(L, random_state=rng).as_matrix().reshape(L, 3, 3) if L else np.zeros((0, 3, 3))
    return Scenario(
        p_u=p_u,
        p_b=p_u + np.array([3.0, -2.0, 1.0]),
        bs_positions=bs,
        bs_rotations=rot,
        sat_positions=sats,
        truth_ambiguities=rng.integers(-100, 101, N),
        clock_bias=clock_bias,
        noise=NoiseConfig() if noise is None else noise,
        common_errors=CommonErrors.zeros(N) if common is None else common,
    )


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
