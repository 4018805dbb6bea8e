import math

import numpy as np
import pytest

from jpta.array_model import (
    SteeringAngle,
    SystemConfig,
    array_gain,
    array_response,
    build_grid,
    contiguous_ttd_groups,
    default_theta_grid,
    effective_beamformer,
    effective_beamformer_matrix,
    gain_map,
)
from jpta.design import JptaBeamformer

from helpers import make_config


def test_build_grid_full_band():
    cfg = make_config(num_antennas=64, num_ttds=64, num_subcarriers=2048, delay_range=64.0)
    grid = build_grid(cfg)
    assert grid.indices[0] == -1024 and grid.indices[-1] == 1023
    assert grid.frequency(-1024) == pytest.approx(95e9, rel=1e-14)
    assert grid.frequency(0) == pytest.approx(100e9, rel=1e-14)
    assert grid.frequency(1023) == pytest.approx(104.9951171875e9, rel=1e-14)


def test_build_grid_single_subcarrier():
    cfg = make_config(num_antennas=1, num_ttds=1, num_subcarriers=1, carrier_freq=37e9, bandwidth=1e9)
    grid = build_grid(cfg)
    assert grid.num_subcarriers == 1
    assert grid.indices[0] == 0
    assert grid.frequency(0) == 37e9


def test_build_grid_small():
    cfg = make_config(num_antennas=2, num_ttds=1, num_subcarriers=4, carrier_freq=10.0, bandwidth=4.0)
    grid = build_grid(cfg)
    assert list(grid.indices) == [-2, -1, 0, 1]
    assert list(grid.frequencies) == [8.0, 9.0, 10.0, 11.0]


def test_build_grid_odd_count():
    cfg = make_config(num_antennas=2, num_ttds=1, num_subcarriers=5)
    grid = build_grid(cfg)
    assert list(grid.indices) == [-2, -1, 0, 1, 2]


def test_grid_rejects_malformed_index_sets():
    from jpta.array_model import SubcarrierGrid

    with pytest.raises(ValueError):
        SubcarrierGrid(indices=np.array([-1, 0, 1, 2]), frequencies=np.array([8.0, 9.0, 10.0, 11.0]))
    with pytest.raises(ValueError):
        SubcarrierGrid(indices=np.array([-2, 0, 1, 2]), frequencies=np.array([8.0, 9.0, 10.0, 11.0]))


def test_array_response_boresight():
    cfg = make_config()
    grid = build_grid(cfg)
    for k in (-8, 0, 7):
        assert np.allclose(array_response(cfg, grid, k, 0.0), np.ones(cfg.num_antennas))


def test_array_response_endfire_center():
    cfg = make_config(num_antennas=2, num_ttds=1)
    grid = build_grid(cfg)
    a = array_response(cfg, grid, 0, math.pi / 2)
    assert np.allclose(a, [1.0, -1.0], atol=1e-12)


def test_array_response_quarter_band_phases():
    # subcarrier at f0 + W/4; element phases grow as (m-1)*pi*sin(theta)*f_k/f0
    cfg = make_config(num_antennas=4, num_ttds=4, num_subcarriers=8)
    grid = build_grid(cfg)
    a = array_response(cfg, grid, 2, math.pi / 6)
    expected = (np.arange(4)) * np.pi * 0.5 * (1.0 + cfg.bandwidth / (4.0 * cfg.carrier_freq))
    assert np.allclose(np.unwrap(np.angle(a)), expected, atol=1e-12)


def test_array_response_unit_modulus():
    rng = np.random.default_rng(11)
    cfg = make_config(num_antennas=8, num_ttds=4)
    grid = build_grid(cfg)
    for _ in range(50):
        k = int(rng.choice(grid.indices))
        theta = rng.uniform(-np.pi / 2, np.pi / 2)
        a = array_response(cfg, grid, k, theta)
        assert np.max(np.abs(np.abs(a) - 1.0)) < 1e-12


def test_array_response_rejects_off_grid_subcarrier():
    cfg = make_config()
    grid = build_grid(cfg)
    with pytest.raises(ValueError):
        array_response(cfg, grid, 99, 0.0)


def test_steering_angle_range():
    SteeringAngle(math.pi / 2)
    with pytest.raises(ValueError):
        SteeringAngle(1.7)


def test_array_response_accepts_steering_angle_objects():
    cfg = make_config()
    grid = build_grid(cfg)
    assert np.array_equal(
        array_response(cfg, grid, 0, SteeringAngle(0.4)),
        array_response(cfg, grid, 0, 0.4),
    )


def _random_beamformer(cfg, rng):
    return JptaBeamformer(
        delays=rng.uniform(0.0, cfg.max_delay, cfg.num_ttds),
        phases=rng.uniform(-np.pi, np.pi, cfg.num_antennas),
        alpha=np.ones(cfg.num_subcarriers, dtype=complex),
    )


def test_effective_beamformer_identity_settings():
    cfg = make_config()
    grid = build_grid(cfg)
    bf = JptaBeamformer(
        delays=np.zeros(cfg.num_ttds),
        phases=np.zeros(cfg.num_antennas),
        alpha=np.ones(cfg.num_subcarriers, dtype=complex),
    )
    for k in grid.indices:
        w = effective_beamformer(cfg, grid, bf, int(k))
        assert np.allclose(w, np.full(cfg.num_antennas, 1.0 / math.sqrt(cfg.num_antennas)))


def test_effective_beamformer_scalar_case():
    cfg = make_config(num_antennas=1, num_ttds=1, num_subcarriers=4)
    grid = build_grid(cfg)
    t, p = 0.4e-9, 1.1
    bf = JptaBeamformer(delays=[t], phases=[p], alpha=np.ones(4, dtype=complex))
    for k in grid.indices:
        w = effective_beamformer(cfg, grid, bf, int(k))
        assert w[0] == pytest.approx(np.exp(1j * (p - 2 * np.pi * grid.frequency(int(k)) * t)), abs=1e-12)


def test_effective_beamformer_unit_norm():
    rng = np.random.default_rng(5)
    cfg = make_config(num_antennas=6, num_ttds=3)
    grid = build_grid(cfg)
    for _ in range(20):
        beams = effective_beamformer_matrix(cfg, grid, _random_beamformer(cfg, rng))
        assert np.max(np.abs(np.linalg.norm(beams, axis=1) - 1.0)) < 1e-12


def test_effective_beamformer_dimension_mismatch():
    cfg = make_config()
    grid = build_grid(cfg)
    bad = JptaBeamformer(delays=np.zeros(3), phases=np.zeros(cfg.num_antennas),
                         alpha=np.ones(cfg.num_subcarriers, dtype=complex))
    with pytest.raises(ValueError):
        effective_beamformer_matrix(cfg, grid, bad)


def test_array_gain_matched_beamformer():
    cfg = make_config(num_antennas=64, num_ttds=64)
    grid = build_grid(cfg)
    theta = 0.3
    a = array_response(cfg, grid, 3, theta)
    gain = array_gain(cfg, grid, a / math.sqrt(64), 3, theta)
    assert gain == pytest.approx(64.0, rel=1e-12)
    assert 10 * math.log10(gain) == pytest.approx(18.0618, abs=1e-3)


def test_array_gain_orthogonal_beam():
    cfg = make_config(num_antennas=2, num_ttds=1)
    grid = build_grid(cfg)
    w = np.array([1.0, -1.0]) / math.sqrt(2.0)
    assert array_gain(cfg, grid, w, 0, 0.0) == pytest.approx(0.0, abs=1e-24)


def test_array_gain_bounded_by_antenna_count():
    rng = np.random.default_rng(17)
    cfg = make_config(num_antennas=8, num_ttds=8)
    grid = build_grid(cfg)
    for _ in range(200):
        w = rng.normal(size=8) + 1j * rng.normal(size=8)
        w /= np.linalg.norm(w)
        theta = rng.uniform(-np.pi / 2, np.pi / 2)
        k = int(rng.choice(grid.indices))
        assert array_gain(cfg, grid, w, k, theta) <= 8.0 + 1e-9


def test_common_delay_shift_leaves_gain_unchanged():
    rng = np.random.default_rng(23)
    cfg = make_config(num_antennas=6, num_ttds=3, delay_range=20.0)
    grid = build_grid(cfg)
    bf = _random_beamformer(cfg, rng)
    shifted = JptaBeamformer(delays=bf.delays + 0.31e-9, phases=bf.phases, alpha=bf.alpha)
    for _ in range(30):
        k = int(rng.choice(grid.indices))
        theta = rng.uniform(-np.pi / 2, np.pi / 2)
        w0 = effective_beamformer(cfg, grid, bf, k)
        w1 = effective_beamformer(cfg, grid, shifted, k)
        assert array_gain(cfg, grid, w0, k, theta) == pytest.approx(
            array_gain(cfg, grid, w1, k, theta), abs=1e-10
        )


def test_gain_map_degenerate_grid():
    cfg = make_config(num_antennas=4, num_ttds=2, num_subcarriers=1)
    grid = build_grid(cfg)
    w = array_response(cfg, grid, 0, 0.2)[None, :] / 2.0
    out = gain_map(cfg, grid, w, np.array([0.2]))
    assert out.shape == (1, 1)
    assert out[0, 0] == pytest.approx(array_gain(cfg, grid, w[0], 0, 0.2), rel=1e-12)


def test_gain_map_matched_set_peaks_at_steering_angle():
    cfg = make_config(num_antennas=16, num_ttds=16, num_subcarriers=8)
    grid = build_grid(cfg)
    theta0 = np.deg2rad(20.0)
    beams = np.stack(
        [array_response(cfg, grid, int(k), theta0) / 4.0 for k in grid.indices]
    )
    thetas = default_theta_grid()
    gains = gain_map(cfg, grid, beams, thetas)
    center = grid.position(0)
    for row in (center - 1, center, center + 1):
        best = thetas[np.argmax(gains[row])]
        assert abs(best - theta0) < np.deg2rad(1.01)


def test_gain_map_beam_squint_at_band_edges():
    # frequency-flat steering loses gain away from the carrier over a wide band
    cfg = make_config(num_antennas=64, num_ttds=64, num_subcarriers=64)
    grid = build_grid(cfg)
    theta0 = np.deg2rad(30.0)
    w0 = array_response(cfg, grid, 0, theta0) / 8.0
    g_center = array_gain(cfg, grid, w0, 0, theta0)
    g_low = array_gain(cfg, grid, w0, int(grid.indices[0]), theta0)
    g_high = array_gain(cfg, grid, w0, int(grid.indices[-1]), theta0)
    assert g_low < g_center and g_high < g_center
    assert g_center == pytest.approx(64.0, rel=1e-12)


def test_gain_map_rejects_empty_theta_grid():
    cfg = make_config()
    grid = build_grid(cfg)
    beams = np.ones((cfg.num_subcarriers, cfg.num_antennas)) / 2.0
    with pytest.raises(ValueError):
        gain_map(cfg, grid, beams, np.array([]))


def test_config_validation():
    with pytest.raises(ValueError):
        make_config(num_ttds=3)  # default mapping needs N | M
    with pytest.raises(ValueError):
        make_config(num_ttds=5, num_antennas=4)
    with pytest.raises(ValueError):
        make_config(carrier_freq=4e9, bandwidth=10e9)
    with pytest.raises(ValueError):
        make_config(delay_range=-1.0)
    with pytest.raises(ValueError):
        SystemConfig(num_antennas=4, num_ttds=2, carrier_freq=100e9, bandwidth=10e9,
                     num_subcarriers=8, delay_range=4.0, ttd_groups=((1, 2), (2, 3)))
    with pytest.raises(ValueError):
        SystemConfig(num_antennas=4, num_ttds=2, carrier_freq=100e9, bandwidth=10e9,
                     num_subcarriers=8, delay_range=4.0, ttd_groups=((1, 2), (3,)))


def test_custom_groups_and_default_power():
    cfg = SystemConfig(num_antennas=4, num_ttds=2, carrier_freq=100e9, bandwidth=10e9,
                       num_subcarriers=8, delay_range=4.0, ttd_groups=((1, 4), (2, 3)))
    assert cfg.total_power == 8.0
    assert list(cfg.ttd_index_per_antenna()) == [0, 1, 1, 0]
    assert contiguous_ttd_groups(4, 2) == ((1, 2), (3, 4))
