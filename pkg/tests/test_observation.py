import numpy as np
import pytest
from conftest import simple_scenario

from rtk5g.constants import SPEED_OF_LIGHT
from rtk5g.errors import DimensionError, DomainError
from rtk5g.fiveg import direction_in_frame
from rtk5g.observation import (CommonErrors, NoiseConfig, dd_operator, double_difference,
                               generate_5g, generate_raw, los_unit_vector)

C = SPEED_OF_LIGHT


def test_los_axis_aligned():
    rx = np.array([1.0, 2.0, 3.0])
    assert np.allclose(los_unit_vector(rx + [1e7, 0, 0], rx), [1, 0, 0], atol=0)


def test_los_random_recompute(rng):
    for _ in range(50):
        a, b = rng.normal(size=3) * 1e7, rng.normal(size=3) * 6e6
        u = los_unit_vector(a, b)
        assert abs(np.linalg.norm(u) - 1.0) < 1e-14
        d = a - b
        assert np.allclose(u, d / np.sqrt(np.sum(d * d)), rtol=1e-14)


def test_los_coincident():
    with pytest.raises(DomainError):
        los_unit_vector([1.0, 1.0, 1.0], [1.0, 1.0, 1.0])


def test_raw_degenerate_equals_range(rng):
    sc = simple_scenario(rng, N=4, L=0, noise=NoiseConfig.noise_free())
    sc.truth_ambiguities[:] = 0
    u, _ = generate_raw(sc, rng)
    rho = np.linalg.norm(sc.sat_positions - sc.p_u, axis=1)
    assert np.allclose(u.code.astype(float), rho, atol=1e-6)
    assert np.allclose(u.phase.astype(float), rho, atol=1e-6)


def test_raw_ambiguity_offset(rng):
    sc = simple_scenario(rng, N=3, L=0, noise=NoiseConfig.noise_free())
    sc.wavelength = 0.19
    sc.truth_ambiguities[:] = 5
    u, _ = generate_raw(sc, rng)
    assert np.allclose((u.phase - u.code).astype(float), 0.95, atol=1e-9)


def test_raw_phase_noise_unbiased(rng):
    sc = simple_scenario(rng, N=1, L=0, noise=NoiseConfig(sigma_phase=2e-3))
    sc.truth_ambiguities[:] = 0
    rho = np.linalg.norm(sc.sat_positions[0] - sc.p_u)
    errs = np.array([float(generate_raw(sc, rng)[0].phase[0]) - rho for _ in range(10_000)])
    assert abs(errs.mean()) < 4 * 2e-3 / np.sqrt(10_000)


def test_dd_identical_receivers(rng):
    sc = simple_scenario(rng, N=5, L=0)
    u, _ = generate_raw(sc, rng)
    dd = double_difference(u, u)
    assert np.all(dd.p == 0) and np.all(dd.phi == 0)


def test_dd_two_satellites_closed_form(rng):
    sc = simple_scenario(rng, N=2, L=0, noise=NoiseConfig.noise_free())
    dd = double_difference(*generate_raw(sc, rng), ref_index=0)
    K = sc.truth_ambiguities
    assert dd.phi[0] - dd.p[0] == pytest.approx(sc.wavelength * (K[1] - K[0]), abs=1e-9)


def test_dd_linearized_model(config, sky, rng):
    from rtk5g.harness import build_scenario
    for _ in range(20):
        sc = build_scenario(config, 7, 0, rng, 1e-3, sky)
        dd = double_difference(*generate_raw(sc, rng, add_noise=False))
        h = (sc.p_u - sc.sat_positions) / np.linalg.norm(sc.p_u - sc.sat_positions, axis=1)[:, None]
        lin = (h[1:] - h[0]) @ (sc.p_u - sc.p_b)
        assert np.max(np.abs(dd.p - lin)) < 1e-3
        # y1 = B p_u + C k - b within the same bound
        model = dd.B @ sc.p_u + dd.C @ sc.truth_dd_ambiguities(0) - dd.b
        assert np.max(np.abs(dd.y1 - model)) < 1e-3


def test_dd_structure(rng):
    sc = simple_scenario(rng, N=6, L=0)
    dd = double_difference(*generate_raw(sc, rng), ref_index=2)
    n = 5
    assert np.array_equal(dd.B, np.vstack([dd.H, dd.H]))
    assert np.array_equal(dd.C, np.vstack([np.zeros((n, n)), dd.wavelength * np.eye(n)]))
    assert np.allclose(dd.b, dd.B @ sc.p_b)
    assert dd.A.shape == (2 * n, 6 + 3)
    assert np.all(np.linalg.norm(dd.H, axis=1) <= 2.0)
    assert np.allclose(dd.Q_y1, dd.Q_y1.T)
    assert np.all(np.linalg.eigvalsh(dd.Q_y1) > 0)
    assert np.array_equal(sc.truth_dd_ambiguities(2), np.delete(sc.truth_ambiguities - sc.truth_ambiguities[2], 2))


def test_dd_errors(rng):
    sc = simple_scenario(rng, N=1, L=0)
    u, b = generate_raw(sc, rng)
    with pytest.raises(DimensionError):
        double_difference(u, b)
    sc = simple_scenario(rng, N=3, L=0)
    u, b = generate_raw(sc, rng)
    with pytest.raises(IndexError):
        double_difference(u, b, ref_index=3)


def test_dd_cancellation(rng):
    N = 7
    for _ in range(10):
        sc = simple_scenario(rng, N=N, L=0, noise=NoiseConfig.noise_free())
        clean = double_difference(*generate_raw(sc, rng))
        sc.common_errors = CommonErrors(
            iono=rng.uniform(0, 30, N), tropo=rng.uniform(0, 30, N),
            sat_clock=rng.uniform(-1e-3, 1e-3, N),
            user_clock=rng.uniform(-1e-3, 1e-3), base_clock=rng.uniform(-1e-3, 1e-3),
        )
        dirty = double_difference(*generate_raw(sc, rng))
        assert np.max(np.abs(dirty.p - clean.p)) < 1e-9
        assert np.max(np.abs(dirty.phi - clean.phi)) < 1e-9


def test_dd_operator_matches_formula():
    D = dd_operator(4, 1)
    raw = np.arange(8.0) ** 2
    sd = raw[:4] - raw[4:]
    assert np.allclose(D @ raw, np.delete(sd - sd[1], 1))


def test_dd_covariance_monte_carlo(rng):
    sc = simple_scenario(rng, N=4, L=0, noise=NoiseConfig(sigma_phase=1e-3, sigma_code=0.1))
    clean = double_difference(*generate_raw(sc, rng, add_noise=False))
    n = 100_000
    samples = np.empty((n, 6))
    for i in range(n):
        dd = double_difference(*generate_raw(sc, rng))
        samples[i] = dd.y1 - clean.y1
    emp = np.cov(samples.T)
    d_emp, d_q = np.diag(emp), np.diag(clean.Q_y1)
    assert np.all(np.abs(d_emp / d_q - 1) < 0.05)


def test_5g_boresight():
    from rtk5g.observation import Scenario
    d = 40.0
    p_b = np.array([6378137.0, 10.0, 20.0])
    sc = Scenario(p_u=p_b + [d, 0, 0], p_b=p_b, bs_positions=[p_b], bs_rotations=[np.eye(3)],
                  sat_positions=np.zeros((0, 3)), truth_ambiguities=[], clock_bias=1e-10,
                  noise=NoiseConfig.noise_free())
    fg = generate_5g(sc)
    assert fg.az[0] == 0.0 and fg.el[0] == 0.0
    assert fg.tau[0] == pytest.approx(d / C + 1e-10, rel=1e-15)


def test_5g_zenith():
    from rtk5g.observation import Scenario
    p_b = np.array([6378137.0, 0.0, 0.0])
    sc = Scenario(p_u=p_b + [0, 0, 12.0], p_b=p_b, bs_positions=[p_b], bs_rotations=[np.eye(3)],
                  sat_positions=np.zeros((0, 3)), truth_ambiguities=[], noise=NoiseConfig.noise_free())
    assert generate_5g(sc).el[0] == pytest.approx(np.pi / 2, abs=1e-15)


def test_5g_inversion_oracle(rng):
    for _ in range(50):
        sc = simple_scenario(rng, N=0, L=3, noise=NoiseConfig.noise_free(), clock_bias=3e-10)
        fg = generate_5g(sc)
        t = direction_in_frame(fg.az, fg.el)
        rec = sc.bs_positions + (C * (fg.tau - sc.clock_bias))[:, None] * np.einsum("lij,lj->li", sc.bs_rotations, t)
        assert np.max(np.abs(rec - sc.p_u)) < 1e-9


def test_5g_angle_ranges_with_noise(rng):
    noise = NoiseConfig(sigma_az=0.5, sigma_el=0.5, sigma_tau=1e-9)
    for _ in range(200):
        sc = simple_scenario(rng, N=0, L=4, noise=noise)
        fg = generate_5g(sc, rng)
        assert np.all((fg.az > -np.pi) & (fg.az <= np.pi))
        assert np.all(np.abs(fg.el) <= np.pi / 2)
    assert np.allclose(np.diag(fg.Q_y2), np.repeat([0.25, 0.25, 1e-18], 4))


def test_5g_coincident(rng):
    sc = simple_scenario(rng, N=0, L=1)
    sc.bs_positions[0] = sc.p_u
    with pytest.raises(DomainError):
        generate_5g(sc)


def test_scenario_invariants(rng):
    sc = simple_scenario(rng, N=3, L=1)
    with pytest.raises(DomainError):
        sc.bs_rotations[0] = 2 * np.eye(3)
        sc.validate()
    with pytest.raises(DomainError):
        simple_scenario(rng, N=3, L=1, clock_bias=1.0)
