import numpy as np
import pytest

from sinest.cascade import CascadeConfig, estimate
from sinest.doa import (
    ArrayScenario,
    SourceModel,
    doa_estimate,
    frequencies_to_angles,
    steering_vector,
    synthesize_snapshots,
)
from sinest.signal import Scenario, synthesize


def test_steering_vector_broadside_and_endfire():
    np.testing.assert_allclose(steering_vector(0.0, 4)[:, 0], np.ones(4))
    np.testing.assert_allclose(steering_vector(30.0, 3)[:, 0], [1, 1j, -1], atol=1e-15)


def test_angle_frequency_roundtrip():
    s = ArrayScenario(p=2, m_ant=10, k_snap=10, angles_deg=[35, 37])
    np.testing.assert_allclose(frequencies_to_angles(s.spatial_frequencies), [35, 37], atol=1e-12)
    np.testing.assert_allclose(frequencies_to_angles([0.75]), [-30.0], atol=1e-12)
    np.testing.assert_allclose(frequencies_to_angles([0.5]), [-90.0])


def test_noiseless_doa_recovers_angles():
    s = ArrayScenario(p=2, m_ant=10, k_snap=10, angles_deg=[35, 37])
    res = doa_estimate(synthesize_snapshots(s, seed=1), CascadeConfig(m=10, beta=0.72, p=2))
    np.testing.assert_allclose(res.angles_deg, [35, 37], atol=1e-6)


def test_gaussian_source_power():
    s = ArrayScenario(p=1, m_ant=4, k_snap=20000, angles_deg=[10.0])
    x = synthesize_snapshots(s, seed=2)
    assert np.mean(np.abs(x) ** 2) == pytest.approx(1.0, rel=0.03)


def test_noise_power_matches_snr():
    s = ArrayScenario(p=1, m_ant=8, k_snap=5000, angles_deg=[0.0], snr_db=10.0,
                      source_model="constant-modulus", source_phases=[0.0])
    x = synthesize_snapshots(s, seed=3) - 1.0
    assert np.mean(np.abs(x) ** 2) == pytest.approx(0.1, rel=0.03)


def test_single_snapshot_constant_modulus_matches_time_series():
    phases = [0.4, 2.0]
    arr = ArrayScenario(p=2, m_ant=25, k_snap=1, angles_deg=[10.0, 60.0],
                        source_model=SourceModel.CONSTANT_MODULUS, source_phases=phases)
    snap = synthesize_snapshots(arr)
    f = np.sin(np.deg2rad([10.0, 60.0])) / 2
    series = synthesize(Scenario(25, [1, 1], phases, f))
    np.testing.assert_allclose(snap[:, 0], series, atol=1e-12)
    cfg = CascadeConfig(m=18, beta=0.72, p=2)
    a = doa_estimate(snap, cfg).estimate
    b, _ = estimate(series, cfg)
    np.testing.assert_allclose(a.frequencies, b.frequencies, atol=1e-12)


def test_scenario_validation_and_text():
    with pytest.raises(ValueError):
        ArrayScenario(p=2, m_ant=10, k_snap=10, angles_deg=[35, 95])
    with pytest.raises(ValueError):
        ArrayScenario(p=2, m_ant=2, k_snap=10, angles_deg=[1, 2])
    with pytest.raises(ValueError):
        ArrayScenario(p=2, m_ant=10, k_snap=10, angles_deg=[1])
    s = ArrayScenario(p=2, m_ant=10, k_snap=10, angles_deg=[35, 37], snr_db=4.0)
    back = ArrayScenario.from_text(s.to_text())
    np.testing.assert_allclose(back.angles_deg, [35, 37])
    assert back.m_ant == 10 and back.k_snap == 10 and back.snr_db == 4.0


def test_subarray_size_checks():
    s = ArrayScenario(p=2, m_ant=10, k_snap=10, angles_deg=[35, 37])
    x = synthesize_snapshots(s, seed=0)
    with pytest.raises(ValueError):
        doa_estimate(x, CascadeConfig(m=11, beta=0.72, p=2))
