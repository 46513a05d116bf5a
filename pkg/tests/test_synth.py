"""Synthetic path generator: determinism, planted effects, closed loop."""

import numpy as np
import pytest

from jumpvol.ingest import SessionConfig, compute_returns
from jumpvol.measures import build_bin_measures
from jumpvol.synth import SynthSpec, gen_paths, jump_detection_rates, trading_days


CFG = SessionConfig()


def _measures_for(spec):
    panel, mask = gen_paths(spec, CFG)
    rets = compute_returns(panel)
    return build_bin_measures(rets, m=CFG.m, days=panel.days), mask


def test_seed_determinism():
    spec = SynthSpec(days=20, seed=123, jump_times=[(1, 4)], overnight_sigma=0.3)
    a, mask_a = gen_paths(spec, CFG)
    b, mask_b = gen_paths(spec, CFG)
    np.testing.assert_array_equal(a.prices, b.prices)
    np.testing.assert_array_equal(mask_a, mask_b)
    c, _ = gen_paths(SynthSpec(days=20, seed=124), CFG)
    assert not np.array_equal(a.prices, c.prices)


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        SynthSpec(days=0).validate(CFG)
    with pytest.raises(ValueError):
        SynthSpec(days=5, sigma=-1.0).validate(CFG)
    with pytest.raises(ValueError):
        SynthSpec(days=5, jump_times=[(5, 0)]).validate(CFG)
    with pytest.raises(ValueError):
        SynthSpec(days=5, announcement_bins=[(0, 13)]).validate(CFG)
    with pytest.raises(ValueError):
        SynthSpec(days=5, diurnal=np.ones(7)).validate(CFG)
    with pytest.raises(ValueError):
        SynthSpec(days=5, diurnal=np.zeros(13)).validate(CFG)


def test_trading_days_skips_weekends():
    days = trading_days(12)
    assert len(days) == 12
    assert all(d.weekday() < 5 for d in days)
    assert len(set(days)) == 12


def test_null_panel_flag_rate():
    panel, _ = _measures_for(SynthSpec(days=160, seed=11))
    rate = float(panel.jump_flags.mean())
    assert 0.40 <= rate <= 0.50


def test_planted_jump_power():
    spec = SynthSpec(days=200, seed=5, jump_times=[(d, 6) for d in range(200)],
                     jump_size=10.0)
    panel, mask = _measures_for(spec)
    hit = float(panel.jump_flags[mask].mean())
    assert hit > 0.95
    rates = jump_detection_rates(mask, panel.jump_flags)
    assert rates["planted"] == 200
    assert rates["recall"] == pytest.approx(hit)
    assert 0.0 < rates["precision"] <= 1.0


def test_planted_diurnal_shows_in_measures():
    shape = np.linspace(2.0, 0.8, 13)
    shape /= shape.mean()
    spec = SynthSpec(days=400, seed=9, diurnal=shape)
    panel, _ = _measures_for(spec)
    means = panel.bv.mean(axis=0)
    ratio = means / means.mean()
    np.testing.assert_allclose(ratio, shape / shape.mean(), rtol=0.06)


def test_overnight_gap_control():
    flat, _ = gen_paths(SynthSpec(days=10, seed=1), CFG)
    rets = compute_returns(flat)
    assert np.all(rets.overnight == 0.0)
    gapped, _ = gen_paths(SynthSpec(days=10, seed=1, overnight_sigma=0.5), CFG)
    rets2 = compute_returns(gapped)
    assert np.any(rets2.overnight[1:] != 0.0)
    assert rets2.overnight[0] == 0.0
