import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from sinest import signal
from sinest.errors import InfeasibleScenarioError
from sinest.signal import (
    Scenario,
    circular_gaps,
    noise_variance,
    random_scenario,
    synthesize,
    trial_seed,
    wrapped_error,
)


def test_noiseless_dc_is_all_ones():
    x = synthesize(Scenario(25, [1.0], [0.0], [0.0]))
    assert np.array_equal(x, np.ones(25, dtype=complex))


def test_noiseless_two_cisoids_match_closed_form(kt82):
    n = np.arange(25)
    expected = np.exp(1j * np.pi * n) + np.exp(2j * np.pi * 0.52 * n)
    np.testing.assert_allclose(synthesize(kt82), expected, rtol=0, atol=1e-13)


def test_noise_only_sample_variance():
    scen = Scenario(100_000, [0.0], [0.0], [0.1], snr_db=0.0)
    x = synthesize(scen, seed=5)
    assert abs(np.mean(np.abs(x) ** 2) - 1.0) < 0.02
    # circular: real and imaginary parts carry half each
    assert abs(np.var(x.real) - 0.5) < 0.01
    assert abs(np.var(x.imag) - 0.5) < 0.01


def test_ensemble_noise_power():
    scen = Scenario(25, [0.0], [0.0], [0.1], snr_db=7.0)
    power = np.mean([np.mean(np.abs(synthesize(scen, trial_seed(1, t))) ** 2) for t in range(10_000)])
    assert abs(power / noise_variance(7.0) - 1.0) < 0.03


def test_synthesis_is_reproducible(kt82):
    s = kt82.with_snr(3.0)
    a = synthesize(s, seed=trial_seed(9, 1, 2))
    b = synthesize(s, seed=trial_seed(9, 1, 2))
    c = synthesize(s, seed=trial_seed(9, 1, 3))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_infinite_snr_is_noiseless():
    assert noise_variance(math.inf) == 0.0
    assert noise_variance(10.0) == pytest.approx(0.1)


def test_scenario_sorts_components():
    s = Scenario(25, [1.0, 0.5], [0.1, 0.2], [0.52, 0.5])
    assert s.frequencies.tolist() == [0.5, 0.52]
    assert s.amplitudes.tolist() == [0.5, 1.0]
    assert s.phases.tolist() == [0.2, 0.1]


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(amplitudes=[1.0, 1.0], phases=[0.0], frequencies=[0.1, 0.2]),
        dict(amplitudes=[1.0], phases=[0.0], frequencies=[1.0]),
        dict(amplitudes=[-1.0], phases=[0.0], frequencies=[0.2]),
        dict(amplitudes=[1.0, 1.0], phases=[0.0, 0.0], frequencies=[0.2, 0.2]),
        dict(amplitudes=[], phases=[], frequencies=[]),
    ],
)
def test_scenario_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        Scenario(25, **kwargs)


def test_scenario_text_roundtrip(sec3_scenario):
    text = sec3_scenario.with_snr(12.5).to_text()
    assert "freq=0.35,0.5,0.52" in text
    back = Scenario.from_text(text)
    np.testing.assert_allclose(back.frequencies, sec3_scenario.frequencies, rtol=1e-12)
    np.testing.assert_allclose(back.phases, sec3_scenario.phases, rtol=1e-11)
    assert back.snr_db == 12.5 and back.n == 25 and back.p == 3


def test_scenario_text_accepts_pi_tokens():
    s = Scenario.from_text("n=25\nfreq=0.3, 0.5\nphase=0, pi/4\namp=1,1\n")
    assert s.phases[1] == pytest.approx(np.pi / 4)


@pytest.mark.parametrize(
    "est,true,expected",
    [(0.52, 0.50, 0.02), (0.01, 0.99, 0.02), (0.25, 0.75, 0.5), (0.75, 0.25, 0.5), (0.3, 0.3, 0.0)],
)
def test_wrapped_error(est, true, expected):
    assert wrapped_error(est, true) == pytest.approx(expected, abs=1e-12)


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_wrapped_error_range(a, b):
    d = wrapped_error(a, b)
    assert -0.5 < d <= 0.5
    assert math.isclose((a - b - d) % 1.0, 0.0, abs_tol=1e-12) or math.isclose((a - b - d) % 1.0, 1.0, abs_tol=1e-12)


def test_random_scenario_single_component():
    s = random_scenario(1, 25, seed=3)
    assert s.p == 1 and 0.0 <= s.frequencies[0] < 1.0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_random_scenario_separation(p, seed):
    s = random_scenario(p, 25, seed=seed)
    assert s.p == p
    if p > 1:
        assert circular_gaps(s.frequencies).min() >= 1 / 50
    assert np.all((s.amplitudes >= 0.5) & (s.amplitudes <= 1.0))
    assert np.all((s.phases >= 0) & (s.phases < 2 * np.pi))


def test_random_scenario_two_component_gap():
    for seed in range(200):
        s = random_scenario(2, 25, seed=seed)
        assert circular_gaps(s.frequencies).min() >= 0.02


def test_random_scenario_is_deterministic():
    a = random_scenario(3, 25, seed=trial_seed(4, 0, 7))
    b = random_scenario(3, 25, seed=trial_seed(4, 0, 7))
    assert np.array_equal(a.frequencies, b.frequencies)
    assert np.array_equal(a.phases, b.phases)


def test_random_amplitudes_uniform_ks():
    amps = np.concatenate([random_scenario(1, 25, seed=s).amplitudes for s in range(10_000)])
    assert stats.kstest(amps, "uniform", args=(0.5, 0.5)).pvalue > 0.01


def test_random_scenario_rejection_budget(monkeypatch):
    # 20 components at the minimum separation almost never fit in a few draws
    monkeypatch.setattr(signal, "REJECTION_BUDGET", 3)
    with pytest.raises(InfeasibleScenarioError):
        random_scenario(20, 40, seed=0)


def test_random_scenario_rejects_bad_order():
    with pytest.raises(ValueError):
        random_scenario(3, 5)
