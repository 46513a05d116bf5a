"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per
criterion lines as they complete.  Tolerances are pinned here, not
configurable.
"""

import dataclasses
import json
import time
from datetime import time as dtime

import numpy as np
import pytest

from conftest import truth_params
from test_measures import brute_bv, brute_j, brute_rv, brute_tq
from test_classify import brute_force_rand, _classified_tables

from jumpvol import ajm
from jumpvol.classify import ClassLabel, adjusted_rand_index, agreement_matrix
from jumpvol.cli import main
from jumpvol.diurnal import apply_profile, estimate_profile
from jumpvol.fit import ljung_box
from jumpvol.ingest import SessionConfig, compute_returns
from jumpvol.measures import (
    bipower_variation,
    build_bin_measures,
    jump_statistic,
    jump_threshold,
    realized_volatility,
    tripower_quarticity,
)
from jumpvol.synth import SynthSpec, gen_paths


def _ok(line: str) -> None:
    print(f"PASS: {line}")


def test_measure_correctness_brute_force():
    rng = np.random.default_rng(1001)
    start = time.perf_counter()
    for _ in range(1000):
        m = int(rng.integers(3, 7))
        r = rng.standard_normal(m) * rng.uniform(0.05, 20.0)
        rv = realized_volatility(r)
        bv = bipower_variation(r)
        tq = tripower_quarticity(r)
        j = jump_statistic(rv, bv, tq, m)
        for got, want in ((rv, brute_rv(r)), (bv, brute_bv(r)), (tq, brute_tq(r)),
                          (j, brute_j(rv, bv, tq, m))):
            assert got == pytest.approx(want, rel=1e-12)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    _ok(f"measure correctness: 1000 random bins match brute force at 1e-12 "
        f"({elapsed:.2f}s)")


def test_null_jump_rate():
    start = time.perf_counter()
    rng = np.random.default_rng(1002)
    r = rng.standard_normal((100_000, 6))
    j = jump_statistic(realized_volatility(r), bipower_variation(r),
                       tripower_quarticity(r), 6)
    rate = float((j > 0.126).mean())
    elapsed = time.perf_counter() - start
    assert 0.40 <= rate <= 0.50
    assert elapsed < 30.0
    _ok(f"null jump rate on 1e5 diffusion bins: {rate:.4f} in [0.40, 0.50] "
        f"({elapsed:.1f}s)")


def test_jump_power_and_bv_robustness():
    cfg = SessionConfig()
    spec = SynthSpec(days=1000, seed=1003, jump_size=10.0,
                     jump_times=[(d, 6) for d in range(1000)])
    panel, mask = gen_paths(spec, cfg)
    measures = build_bin_measures(compute_returns(panel), m=cfg.m, days=panel.days)
    power = float(measures.jump_flags[mask].mean())
    bv_share = float((measures.bv[mask] / measures.rv[mask]).mean())
    assert power > 0.95
    assert bv_share <= 0.60
    _ok(f"jump power: {power:.3f} of 1000 planted 10-sigma jumps flagged; "
        f"BV/RV at planted bins {bv_share:.3f} <= 0.60")


def test_diurnal_recovery_and_flag_invariance():
    cfg = SessionConfig()
    u = np.concatenate([np.linspace(1.35, 0.85, 7), np.linspace(0.85, 1.15, 6)])
    u /= u.mean()
    base_prices, _ = gen_paths(SynthSpec(days=1000, seed=1004), cfg)
    shaped_prices, _ = gen_paths(SynthSpec(days=1000, seed=1004, diurnal=u), cfg)
    base = build_bin_measures(compute_returns(base_prices), m=cfg.m)
    shaped = build_bin_measures(compute_returns(shaped_prices), m=cfg.m)
    # same innovations with and without the plant: the estimator must
    # attribute exactly the planted factor to the seasonal indices
    ratio = (estimate_profile(shaped).seasonal_indices
             / estimate_profile(base).seasonal_indices)
    ratio /= ratio.mean()
    err = float(np.max(np.abs(ratio / u - 1.0)))
    assert err < 0.02

    profile = estimate_profile(shaped)
    adjusted = apply_profile(shaped, profile)
    assert np.array_equal(adjusted.jump_flags, shaped.jump_flags)
    _ok(f"diurnal recovery: planted U-shape within {err:.2%} <= 2%; "
        f"jump flag set identical under adjustment")


def test_filter_identity_and_hand_fixture(recovery_sim, truth):
    state = ajm.filter_state(truth, recovery_sim.panel, recovery_sim.overnight)
    assert np.array_equal(state.mu, state.varsigma + state.kappa)

    from test_ajm import _panel_from_arrays
    panel = _panel_from_arrays([16.0, 16.0, 16.0], [0.0, 1.0, 0.0])
    fixture = ajm.filter_state(truth, panel, np.zeros(1))
    o, a1, a2, b = truth.omega, truth.alpha1, truth.alpha2, truth.beta
    d2, phi, psi = truth.delta2, truth.phi, truth.psi
    vs0 = o + (a1 + a2 + b) * 16.0
    k0 = phi * (16.0 + 1.0 / 3.0) + psi / 3.0
    vs1 = o + (a1 + a2) * 16.0 + b * vs0 + d2 * 16.0
    k1 = phi * (vs0 + k0)
    vs2 = o + (a1 + a2) * 16.0 + b * vs1
    k2 = phi * (vs1 + k1) + psi
    expected_mu = np.array([vs0 + k0, vs1 + k1, vs2 + k2])
    np.testing.assert_allclose(fixture.mu.ravel(), expected_mu, rtol=1e-12)
    _ok("filter identity: mu = varsigma + kappa exact on 26000 bins; "
        "3-bin hand recursion matches at 1e-12")


def test_gradient_correctness(small_sim):
    from test_fit import _random_feasible
    rng = np.random.default_rng(1006)
    worst = 0.0
    for _ in range(20):
        params = _random_feasible(rng)
        _, grad = ajm.loglik_grad(params, small_sim.panel, small_sim.overnight)
        for i, name in enumerate(ajm.PARAM_NAMES):
            h = 1e-6 * max(1.0, abs(getattr(params, name)))
            up = dataclasses.replace(params, **{name: getattr(params, name) + h})
            dn = dataclasses.replace(params, **{name: getattr(params, name) - h})
            num = (ajm.loglik(up, small_sim.panel, small_sim.overnight)
                   - ajm.loglik(dn, small_sim.panel, small_sim.overnight)) / (2 * h)
            rel = abs(num - grad[i]) / max(1.0, abs(grad[i]))
            worst = max(worst, rel)
    assert worst < 1e-5
    _ok(f"gradient check: worst relative error {worst:.2e} < 1e-5 "
        f"at 20 random feasible points")


def test_parameter_recovery(recovery_sim, recovery_fit, truth):
    assert recovery_fit.converged
    lines = []
    for i, name in enumerate(recovery_fit.param_names):
        est = getattr(recovery_fit.params, name)
        tru = getattr(truth, name)
        tol = max(3.0 * recovery_fit.se_robust[i], 0.10 * abs(tru))
        assert abs(est - tru) <= tol, f"{name}: {est:.4f} vs {tru:.4f}"
        lines.append(f"{name}={est:.4f}")
    assert round(ajm.persistence(truth), 4) == 0.9499
    elapsed = recovery_sim.elapsed_seconds + recovery_fit.elapsed_seconds
    assert elapsed < 300.0
    _ok(f"parameter recovery on 2000x13 bins within max(3 SE, 10%): "
        f"{', '.join(lines)}; persistence(truth)=0.9499 ({elapsed:.0f}s)")


def test_nesting(recovery_fit, recovery_fit_restricted):
    assert recovery_fit.loglik >= recovery_fit_restricted.loglik
    _ok(f"nesting: unrestricted loglik {recovery_fit.loglik:.1f} >= "
        f"restricted {recovery_fit_restricted.loglik:.1f}")


def test_ljung_box_calibration():
    rng = np.random.default_rng(42)
    reps, n = 500, 2000
    rejections = {1: 0, 5: 0, 10: 0}
    for _ in range(reps):
        draws = rng.gamma(4.0, 0.25, size=n)
        for record in ljung_box(draws, lags=(1, 5, 10)):
            rejections[record.lag] += record.p_value < 0.05
    rates = {lag: count / reps for lag, count in rejections.items()}
    for lag, rate in rates.items():
        assert 0.03 <= rate <= 0.07, f"lag {lag}: {rate}"
    _ok("Ljung-Box calibration on iid Gamma residuals: rejection rates "
        + ", ".join(f"lag{lag}={rate:.3f}" for lag, rate in rates.items())
        + " all in 5% +/- 2%")


def test_adjusted_rand_index_criteria():
    rng = np.random.default_rng(1010)
    values = list(ClassLabel)
    for _ in range(100):
        n = int(rng.integers(4, 60))
        a = [values[k] for k in rng.integers(0, 4, size=n)]
        b = [values[k] for k in rng.integers(0, 4, size=n)]
        assert adjusted_rand_index(a, b) == pytest.approx(
            brute_force_rand(a, b), rel=1e-12, abs=1e-12)
        assert adjusted_rand_index(a, a) == 1.0
    a = [values[k] for k in rng.integers(0, 4, size=104)]
    b = list(a)
    total = 0.0
    for _ in range(1000):
        rng.shuffle(b)
        total += adjusted_rand_index(a, b)
    mean_ari = total / 1000
    assert abs(mean_ari) < 0.02
    _ok(f"adjusted Rand index: exact vs brute force on 100 vectors, "
        f"ARI(identical)=1, permutation mean {mean_ari:+.4f} within 0.02")


def test_classification_direction():
    tables, _, _ = _classified_tables(n_tickers=3, days=600, seed0=999,
                                      n_events=100)
    res_kappa = agreement_matrix(tables, series="kappa")
    res_surprise = agreement_matrix(tables, series="surprise")
    off = ~np.eye(3, dtype=bool)
    pair_kappa = float(res_kappa.matrix[off].mean())
    pair_surprise = float(res_surprise.matrix[off].mean())
    assert pair_kappa > pair_surprise
    for ticker in res_kappa.tickers:
        assert res_kappa.kappa_vs_surprise[ticker] > res_kappa.kappa_vs_sj[ticker]
    _ok(f"classification direction: pairwise kappa ARI {pair_kappa:.3f} > "
        f"surprise {pair_surprise:.3f}; per-ticker ARI(kappa,surprise) > "
        f"ARI(kappa,SJ) for all tickers")


def test_end_to_end_determinism(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "overnight_sigma": 0.4,
        "announcement_bins": [[15, 8], [40, 8], [70, 5]],
    }))

    def run(base):
        sim, meas, est, cls = (base / s for s in ("sim", "meas", "est", "cls"))
        assert main(["simulate", "--config", str(cfg_path), "--days", "100",
                     "--seed", "17", "--out", str(sim)]) == 0
        assert main(["measures", "--prices", str(sim / "prices.csv"),
                     "--ticker", "E2E", "--out", str(meas)]) == 0
        assert main(["estimate", "--measures", str(meas), "--spec", "restricted",
                     "--seed", "4", "--out", str(est)]) == 0
        assert main(["classify", "--announcements", str(sim / "announcements.csv"),
                     "--run", str(est), "--out", str(cls)]) == 0
        return [sim, meas, est, cls]

    dirs_a = run(tmp_path / "a")
    dirs_b = run(tmp_path / "b")
    compared = 0
    for da, db in zip(dirs_a, dirs_b):
        files_a = sorted(p for p in da.iterdir() if p.is_file())
        files_b = sorted(p for p in db.iterdir() if p.is_file())
        assert [p.name for p in files_a] == [p.name for p in files_b]
        for pa, pb in zip(files_a, files_b):
            assert pa.read_bytes() == pb.read_bytes(), pa.name
            compared += 1
    _ok(f"end-to-end determinism: simulate->measures->estimate->classify "
        f"twice, {compared} output files byte-identical")
