import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sinest.doa import ArrayScenario
from sinest.harness import (
    ArraySource,
    EstimatorSettings,
    FixedSource,
    Method,
    MethodStats,
    RandomSource,
    histogram,
    pair_estimates,
    run_method,
    run_sweep,
    run_trial,
)
from sinest.signal import Scenario, random_scenario, synthesize, wrapped_error


def _brute_pairing(fe, ft):
    best, arg = math.inf, None
    for perm in itertools.permutations(range(len(ft))):
        c = float(np.sum(wrapped_error(np.asarray(fe)[list(perm)], ft) ** 2))
        if c < best - 1e-15:
            best, arg = c, perm
    return best


unit = st.floats(0, 1, exclude_max=True, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 5).flatmap(lambda p: st.tuples(st.lists(unit, min_size=p, max_size=p),
                                                      st.lists(unit, min_size=p, max_size=p))))
def test_pairing_matches_brute_force(pair):
    fe, ft = map(np.array, pair)
    perm = pair_estimates(fe, ft)
    assert sorted(perm) == list(range(len(ft)))
    got = float(np.sum(wrapped_error(fe[perm], ft) ** 2))
    assert got == pytest.approx(_brute_pairing(fe, ft), abs=1e-12)


def test_pairing_beats_greedy_nearest():
    # greedy nearest-first would give 0.03 to 0.0 and leave 0.9 for 0.05
    f_true = np.array([0.0, 0.05])
    f_est = np.array([0.03, 0.9])
    perm = pair_estimates(f_est, f_true)
    assert perm.tolist() == [1, 0]
    np.testing.assert_allclose(wrapped_error(f_est[perm], f_true), [-0.1, -0.02], atol=1e-12)


def test_pairing_length_mismatch():
    with pytest.raises(ValueError):
        pair_estimates([0.1], [0.1, 0.2])


@pytest.mark.parametrize("method", list(Method))
def test_every_method_noiseless_p2(method, kt82):
    est, branch = run_method(method, synthesize(kt82), 2, EstimatorSettings())
    err = np.abs(wrapped_error(est.frequencies, kt82.frequencies)).max()
    if method is Method.ESPRIT_AC:
        assert err == pytest.approx(0.0034, abs=5e-4)
    else:
        assert err < 1e-6
    assert (branch is not None) == method.is_cascade


def test_sources_draw_deterministically():
    rs = RandomSource(3, 25, 4)
    a, b = rs.draw(1, 2, 0), rs.draw(1, 2, 5)
    np.testing.assert_array_equal(a.frequencies, b.frequencies)  # scenario keyed by r only
    assert not np.array_equal(rs.draw(1, 3, 0).frequencies, a.frequencies)
    fs = FixedSource(Scenario(25, [1, 1], [0, 0], [0.5, 0.52]), random_phase=True)
    assert fs.draw(0, 0, 1).phases.tolist() != fs.draw(0, 0, 2).phases.tolist()
    np.testing.assert_array_equal(fs.draw(0, 0, 1).frequencies, [0.5, 0.52])


def test_trial_failure_is_recorded(monkeypatch):
    import sinest.harness as h

    def boom(*a, **k):
        raise h.SinestError("forced")

    monkeypatch.setattr(h, "esprit", boom)
    out = run_trial(FixedSource(Scenario(25, [1], [0], [0.2])), [Method.ESPRIT], 10.0, 0, 0, 0, EstimatorSettings())
    assert out[0].failed and np.isnan(out[0].wrapped_errors).all()
    stats = MethodStats.from_trials(out, 1, False)
    assert stats.n_failed == 1 and math.isnan(stats.overall_mse)


def test_stats_oracle():
    src = FixedSource(Scenario(25, [1, 1], [0, 0], [0.5, 0.52]))
    res = run_sweep(src, ["esprit"], [10.0], 40, seed=3, keep_trials=True)
    err = np.array([t.wrapped_errors for t in res.trials])
    st_ = res.stats[Method.ESPRIT][0]
    assert st_.overall_mse == pytest.approx(np.sum(np.mean(err ** 2, axis=0)))
    assert st_.avg_bias == pytest.approx(np.mean(err))
    per = (err ** 2).sum(axis=1)
    assert st_.mse_stderr == pytest.approx(per.std(ddof=1) / math.sqrt(40))
    assert st_.n_trials == 40 and st_.branch_fractions is None


def test_branch_fractions_sum_to_one():
    src = FixedSource(Scenario(25, [1, 1], [0, 0], [0.5, 0.52]), random_phase=True)
    res = run_sweep(src, ["proposed"], [4.0, 20.0], 30, seed=2)
    fr = res.branch_fractions()
    np.testing.assert_allclose(fr.sum(axis=1), 1.0)
    assert fr[1, 0] >= fr[0, 0]


def test_noise_shared_across_snr_points():
    src = FixedSource(Scenario(25, [1], [0], [0.2]))
    res = run_sweep(src, ["esprit"], [40.0, 60.0], 5, seed=1, keep_trials=True)
    lo = np.array([t.wrapped_errors[0] for t in res.trials if t.snr_db == 40.0])
    hi = np.array([t.wrapped_errors[0] for t in res.trials if t.snr_db == 60.0])
    # 20 dB apart means the same noise at a tenth of the amplitude
    assert np.all(np.sign(lo) == np.sign(hi))
    np.testing.assert_allclose(hi / lo, 0.1, rtol=0.01)


def test_sweep_csv_columns():
    src = FixedSource(Scenario(25, [1, 1], [0, 0], [0.5, 0.52]))
    res = run_sweep(src, ["proposed", "esprit"], [0.0, 10.0], 3, seed=0, keep_trials=True)
    lines = res.to_csv().splitlines()
    assert lines[0] == ("snr_db,method,overall_mse,avg_bias,n_trials,n_failed,"
                        "frac_branch_esprit,frac_branch_espritac,frac_branch_rr")
    assert len(lines) == 1 + 4
    assert lines[2].split(",")[1] == "esprit" and lines[2].endswith("nan,nan,nan")
    tl = res.trials_csv().splitlines()
    assert tl[0].startswith("scenario_id,trial_seed,method,snr_db,f_true_0,f_true_1,f_est_0")
    assert len(tl) == 1 + 2 * 2 * 3


def test_sweep_argument_checks():
    src = FixedSource(Scenario(25, [1], [0], [0.2]))
    with pytest.raises(ValueError):
        run_sweep(src, ["esprit"], [0.0], 0, seed=0)
    with pytest.raises(ValueError):
        run_sweep(src, [], [0.0], 1, seed=0)
    with pytest.raises(ValueError):
        run_sweep(src, ["nonsense"], [0.0], 1, seed=0)


def test_sweep_bit_reproducible_across_workers():
    src = RandomSource(3, 25, 8)
    methods = ["proposed", "esprit", "ml"]
    kw = dict(snr_grid=[6.0, 14.0], trials=3, seed=11, keep_trials=True)
    a = run_sweep(src, methods, jobs=1, **kw)
    b = run_sweep(src, methods, jobs=4, **kw)
    assert a.to_csv() == b.to_csv()
    assert a.trials_csv() == b.trials_csv()


def test_array_sweep_runs():
    s = ArrayScenario(p=2, m_ant=10, k_snap=10, angles_deg=[35, 37])
    res = run_sweep(ArraySource(s), ["proposed", "esprit"], [20.0], 5, seed=0,
                    settings=EstimatorSettings(m=10))
    assert res.overall_mse("esprit")[0] < 1e-3


def test_histogram_counts():
    h = histogram([-1.0, -0.04, 0.001, 0.01, 0.06, 2.0, np.nan], 4, (-0.1, 0.1))
    assert h.underflow == 1 and h.overflow == 1 and h.total == 6
    assert h.counts.tolist() == [0, 1, 2, 1]
    rows = h.to_csv().splitlines()
    assert rows[0] == "bin_lo,bin_hi,count" and rows[1].startswith("-inf") and rows[-1].endswith(",1")
    with pytest.raises(ValueError):
        histogram([0.0], 1, (0, 1))
    with pytest.raises(ValueError):
        histogram([0.0], 4, (1, 1))
