"""Labels, agreement indices and the announcement classification wiring."""

import itertools
from datetime import time

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import truth_params
from jumpvol.ajm import filter_state, simulate
from jumpvol.classify import (
    AgreementResult,
    ClassLabel,
    adjusted_rand_index,
    agreement_matrix,
    classify_announcements,
    classify_triple,
    jump_surprise,
    write_agreement_csv,
    write_classification_csv,
    write_counts_csv,
)
from jumpvol.ingest import AnnouncementEvent, SessionConfig

CFG = SessionConfig()

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False,
                   allow_infinity=False)


def test_classify_triple_definition_cases():
    assert classify_triple(1, 3, 2) is ClassLabel.UPWARD_SPIKE
    assert classify_triple(3, 1, 2) is ClassLabel.DOWNWARD_SPIKE
    assert classify_triple(1, 2, 3) is ClassLabel.BOOST
    assert classify_triple(3, 2, 1) is ClassLabel.DROP


def test_classify_triple_ties():
    assert classify_triple(2, 2, 5) is ClassLabel.DROP
    assert classify_triple(2, 2, 1) is ClassLabel.DROP
    assert classify_triple(1, 2, 2) is ClassLabel.BOOST


def test_classify_triple_rejects_nonfinite():
    with pytest.raises(ValueError):
        classify_triple(float("nan"), 1.0, 2.0)


@given(finite, finite, finite)
@settings(max_examples=300)
def test_classify_triple_total(prev, at, nxt):
    assert classify_triple(prev, at, nxt) in ClassLabel


@given(finite, finite, finite,
       st.floats(min_value=1e-3, max_value=1e3),
       st.floats(min_value=-100.0, max_value=100.0))
@settings(max_examples=300)
def test_classify_triple_affine_invariant(prev, at, nxt, a, b):
    mapped = [a * v + b for v in (prev, at, nxt)]
    original = (prev, at, nxt)
    # classification depends only on the ordering, so any positive
    # affine map that does not collapse values in floating point
    # (absorption can) leaves the label unchanged
    for (i, j) in ((0, 1), (1, 2), (0, 2)):
        assume(np.sign(original[i] - original[j])
               == np.sign(mapped[i] - mapped[j]))
    assert classify_triple(*mapped) is classify_triple(prev, at, nxt)


def test_spike_exclusive_of_drop():
    # an upward spike never satisfies the drop condition on its triple
    for prev, at, nxt in [(1, 3, 2), (0, 1, 0.5), (-2, 0, -1)]:
        assert classify_triple(prev, at, nxt) is ClassLabel.UPWARD_SPIKE
        assert not prev >= at


def test_jump_surprise_values():
    assert jump_surprise(2.0, 2.0) == 0.0
    assert jump_surprise(2.0, 0.5) == 1.5
    assert jump_surprise(0.5, 2.0) == -1.5
    np.testing.assert_allclose(jump_surprise([1.0, 2.0], [0.5, 3.0]), [0.5, -1.0])


def brute_force_rand(a, b):
    n = len(a)
    same_pairs = agree = 0
    expected_pairs = list(itertools.combinations(range(n), 2))
    s_a = s_b = s_ab = 0
    for i, j in expected_pairs:
        in_a = a[i] == a[j]
        in_b = b[i] == b[j]
        s_a += in_a
        s_b += in_b
        s_ab += in_a and in_b
    total = len(expected_pairs)
    expected = s_a * s_b / total
    maximum = 0.5 * (s_a + s_b)
    if maximum == expected:
        return 1.0
    return (s_ab - expected) / (maximum - expected)


def test_ari_identical_and_degenerate():
    labels = [ClassLabel.BOOST, ClassLabel.DROP, ClassLabel.BOOST]
    assert adjusted_rand_index(labels, labels) == 1.0
    ones = [ClassLabel.DROP] * 5
    assert adjusted_rand_index(ones, ones) == 1.0


def test_ari_matches_brute_force():
    rng = np.random.default_rng(23)
    values = list(ClassLabel)
    for _ in range(100):
        n = int(rng.integers(5, 40))
        a = [values[k] for k in rng.integers(0, 4, size=n)]
        b = [values[k] for k in rng.integers(0, 4, size=n)]
        assert adjusted_rand_index(a, b) == pytest.approx(brute_force_rand(a, b),
                                                          rel=1e-12, abs=1e-12)


def test_ari_symmetry_and_errors():
    rng = np.random.default_rng(24)
    values = list(ClassLabel)
    a = [values[k] for k in rng.integers(0, 4, size=30)]
    b = [values[k] for k in rng.integers(0, 4, size=30)]
    assert adjusted_rand_index(a, b) == adjusted_rand_index(b, a)
    with pytest.raises(ValueError):
        adjusted_rand_index(a, b[:-1])
    with pytest.raises(ValueError):
        adjusted_rand_index([ClassLabel.DROP], [ClassLabel.DROP])


def test_ari_near_zero_under_permutation():
    rng = np.random.default_rng(25)
    values = list(ClassLabel)
    a = [values[k] for k in rng.integers(0, 4, size=104)]
    b = list(a)
    total = 0.0
    reps = 1000
    for _ in range(reps):
        rng.shuffle(b)
        total += adjusted_rand_index(a, b)
    assert abs(total / reps) < 0.02


def _classified_tables(n_tickers=3, days=400, seed0=999, n_events=60):
    """Common announcement anticipation plus ticker-specific reactions."""
    truth = truth_params()
    ann_days = list(range(10, days - 1, 6))[:n_events]
    iota = 10
    burst_col, react_col = iota - 2, iota - 1  # 0-based anticipation/reaction bins
    rng = np.random.default_rng(seed0)
    common = np.where(rng.random(len(ann_days)) < 0.5, 0.0,
                      2.0 + rng.exponential(5.0, len(ann_days)))
    tables = []
    for k in range(n_tickers):
        sim = simulate(truth, days=days, seed=seed0 * 10 + k, jump_intensity=0.25,
                       jump_scale=0.75, overnight_sigma=1.0)
        panel = sim.panel
        trng = np.random.default_rng(seed0 * 100 + k)
        for d, s in zip(ann_days, common):
            if s > 0:
                size = s * max(0.2, 1.0 + 0.15 * trng.standard_normal())
                panel.sj[d, burst_col] += size
                panel.rv[d, burst_col] += size
            if trng.random() < 0.35:
                react = trng.exponential(2.5)
                panel.sj[d, react_col] += react
                panel.rv[d, react_col] += react
        state = filter_state(truth, panel, sim.overnight)
        events = [AnnouncementEvent(date=panel.days[d], time=time(14, 0),
                                    forward_guidance=bool(i % 2))
                  for i, d in enumerate(ann_days)]
        panel.ticker = f"T{k}"
        tables.append(classify_announcements(state, panel, events, CFG,
                                             ticker=f"T{k}"))
    return tables, common, ann_days


def test_classify_announcements_rows_and_counts():
    tables, common, ann_days = _classified_tables(n_tickers=1)
    table = tables[0]
    assert table.n_matched == len(ann_days)
    # one row per (event, series)
    assert len(table.rows) == 3 * len(ann_days)
    counts = table.counts("kappa")
    assert sum(v[0] for v in counts.values()) == len(ann_days)
    assert sum(v[1] for v in counts.values()) == sum(1 for i in range(len(ann_days)) if i % 2)
    assert not table.unmatched


def test_planted_bursts_push_kappa_up():
    tables, common, ann_days = _classified_tables(n_tickers=1, n_events=60)
    labelled = tables[0].labels("kappa")
    ids = sorted(labelled)
    burst_ids = [i for i, s in zip(ids, common) if s > 0]
    up = sum(labelled[i] in (ClassLabel.UPWARD_SPIKE, ClassLabel.BOOST)
             for i in burst_ids)
    assert up / len(burst_ids) > 0.80


def test_empty_calendar_gives_empty_table(small_sim, truth):
    state = filter_state(truth, small_sim.panel, small_sim.overnight)
    table = classify_announcements(state, small_sim.panel, [], CFG)
    assert table.rows == [] and table.unmatched == []


def test_unmatched_and_boundary_flags(small_sim, truth):
    state = filter_state(truth, small_sim.panel, small_sim.overnight)
    panel = small_sim.panel
    events = [
        AnnouncementEvent(date=panel.days[5], time=time(9, 30)),    # iota = 1
        AnnouncementEvent(date=panel.days[5], time=time(15, 30)),   # iota = 13
        AnnouncementEvent(date=panel.days[5], time=time(15, 59)),   # past last start
        AnnouncementEvent(date=panel.days[0], time=time(9, 30)),    # no previous bin
    ]
    table = classify_announcements(state, panel, events, CFG)
    reasons = [r for _, r in table.unmatched]
    assert "after the last bin start" in reasons
    assert "no bin before the announcement" in reasons
    by_id = {(r.announcement_id, r.series): r for r in table.rows}
    first = by_id[(events[0].event_id, "kappa")]
    assert "prev_from_previous_day" in first.flags
    last = by_id[(events[1].event_id, "kappa")]
    assert "next_from_next_day" in last.flags


def test_agreement_matrix_identical_tickers():
    tables, _, _ = _classified_tables(n_tickers=1)
    clone = tables[0]
    import copy
    other = copy.deepcopy(clone)
    other.ticker = "T1"
    for row in other.rows:
        row.ticker = "T1"
    result = agreement_matrix([clone, other], series="kappa")
    np.testing.assert_allclose(result.matrix, 1.0)


def test_agreement_orderings_on_common_factor_panel():
    tables, _, _ = _classified_tables(n_tickers=3)
    res_kappa = agreement_matrix(tables, series="kappa")
    res_surprise = agreement_matrix(tables, series="surprise")
    off = ~np.eye(3, dtype=bool)
    assert res_kappa.matrix[off].mean() > res_surprise.matrix[off].mean()
    for ticker in res_kappa.tickers:
        assert res_kappa.kappa_vs_surprise[ticker] > res_kappa.kappa_vs_sj[ticker]


def test_agreement_requires_two_tickers():
    tables, _, _ = _classified_tables(n_tickers=1)
    with pytest.raises(ValueError):
        agreement_matrix(tables)


def test_csv_writers(tmp_path):
    tables, _, _ = _classified_tables(n_tickers=2, n_events=20)
    write_classification_csv(tables[0], tmp_path / "cls.csv")
    write_counts_csv(tables[0], tmp_path / "counts.csv")
    result = agreement_matrix(tables, series="kappa")
    write_agreement_csv(result, tmp_path / "agree.csv")
    text = (tmp_path / "cls.csv").read_text()
    assert text.startswith("announcement_id,date,ticker,series,label,flags")
    counts = (tmp_path / "counts.csv").read_text().strip().splitlines()
    assert len(counts) == 1 + 2 * len(ClassLabel)
    assert "kappa_vs_surprise" in (tmp_path / "agree.csv").read_text()
