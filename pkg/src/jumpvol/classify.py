"""Announcement-effect classification and cross-ticker agreement.

Each announcement is labelled by the local shape of a series (the
expected-jump path, the jump surprise, or the raw significant jumps)
around the first bin past the announcement time; agreement between
label vectors is measured with the adjusted Rand index.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from math import comb
from pathlib import Path

import numpy as np

from .ajm import AjmState
from .ingest import SessionConfig, locate_announcements
from .measures import BinMeasures

__all__ = [
    "ClassLabel",
    "ClassificationRow",
    "ClassificationTable",
    "AgreementResult",
    "jump_surprise",
    "classify_triple",
    "classify_announcements",
    "adjusted_rand_index",
    "agreement_matrix",
    "write_classification_csv",
    "write_counts_csv",
    "write_agreement_csv",
]

SERIES_NAMES = ("kappa", "surprise", "sj")


class ClassLabel(Enum):
    UPWARD_SPIKE = "UpwardSpike"
    DOWNWARD_SPIKE = "DownwardSpike"
    BOOST = "Boost"
    DROP = "Drop"

    def __str__(self) -> str:
        return self.value


def jump_surprise(kappa, sj):
    """Expected minus observed jump, kappa - SJ (sign preserved)."""
    return np.asarray(kappa, dtype=float) - np.asarray(sj, dtype=float)


def classify_triple(prev: float, at: float, nxt: float) -> ClassLabel:
    """Label the local shape of (prev, at, next).

    Strict local maximum -> UpwardSpike, strict local minimum ->
    DownwardSpike, otherwise rising into the bin -> Boost and anything
    else (prev >= at) -> Drop.  Ties break toward the non-spike labels:
    prev == at is a Drop, at == next with prev < at is a Boost.
    """
    for v in (prev, at, nxt):
        if not np.isfinite(v):
            raise ValueError(f"triple values must be finite, got {(prev, at, nxt)}")
    if prev < at > nxt:
        return ClassLabel.UPWARD_SPIKE
    if prev > at < nxt:
        return ClassLabel.DOWNWARD_SPIKE
    if prev < at:
        return ClassLabel.BOOST
    return ClassLabel.DROP


@dataclass
class ClassificationRow:
    announcement_id: str
    date: str
    ticker: str
    series: str
    label: ClassLabel
    iota: int
    day_index: int
    forward_guidance: bool
    flags: list = field(default_factory=list)


@dataclass
class ClassificationTable:
    ticker: str
    rows: list = field(default_factory=list)
    unmatched: list = field(default_factory=list)

    def labels(self, series: str) -> dict[str, ClassLabel]:
        """announcement_id -> label for one series, insertion ordered."""
        return {r.announcement_id: r.label for r in self.rows if r.series == series}

    def counts(self, series: str) -> dict[ClassLabel, tuple[int, int]]:
        """Per label: (all announcements, forward-guidance subset)."""
        out = {label: [0, 0] for label in ClassLabel}
        for r in self.rows:
            if r.series != series:
                continue
            out[r.label][0] += 1
            if r.forward_guidance:
                out[r.label][1] += 1
        return {k: tuple(v) for k, v in out.items()}

    @property
    def n_matched(self) -> int:
        ids = {r.announcement_id for r in self.rows}
        return len(ids)


def _triple_at(series: np.ndarray, day: int, iota: int):
    """Values around 1-based bin iota, stepping across day boundaries."""
    n_days, n_bins = series.shape
    i = iota - 1
    flags = []
    if i - 1 >= 0:
        prev = series[day, i - 1]
    elif day - 1 >= 0:
        prev = series[day - 1, n_bins - 1]
        flags.append("prev_from_previous_day")
    else:
        return None, ["no bin before the announcement"]
    if i + 1 < n_bins:
        nxt = series[day, i + 1]
    elif day + 1 < n_days:
        nxt = series[day + 1, 0]
        flags.append("next_from_next_day")
    else:
        return None, ["no bin after the announcement"]
    return (float(prev), float(series[day, i]), float(nxt)), flags


def classify_announcements(state: AjmState, panel: BinMeasures, events,
                           config: SessionConfig, ticker: str = "") -> ClassificationTable:
    """Label every matched announcement on all three series.

    Series: the expected-jump path kappa, the jump surprise kappa - SJ
    and the raw SJ path (the last one feeds the agreement diagnostics).
    Unmatched events are reported, never silently dropped; triples that
    borrow a bin from the neighbouring day carry a flag.
    """
    if state.mu.shape != panel.rv.shape:
        raise ValueError("state and panel cover different grids")
    ticker = ticker or panel.ticker
    table = ClassificationTable(ticker=ticker)
    matched, unmatched = locate_announcements(events, config, panel.days)
    table.unmatched.extend(unmatched)
    series_panels = {
        "kappa": state.kappa,
        "surprise": jump_surprise(state.kappa, panel.sj),
        "sj": panel.sj,
    }
    for event, day, iota in matched:
        for name in SERIES_NAMES:
            triple, flags = _triple_at(series_panels[name], day, iota)
            if triple is None:
                if name == "kappa":
                    table.unmatched.append((event, flags[0]))
                break
            table.rows.append(ClassificationRow(
                announcement_id=event.event_id,
                date=event.date.isoformat(),
                ticker=ticker,
                series=name,
                label=classify_triple(*triple),
                iota=iota,
                day_index=day,
                forward_guidance=event.forward_guidance,
                flags=flags,
            ))
    return table


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected pair-counting agreement between two partitions.

    Equals 1 for identical partitions (including the degenerate case
    where both sides form a single cluster) and is approximately 0 for
    independent random labellings.
    """
    a = list(labels_a)
    b = list(labels_b)
    if len(a) != len(b):
        raise ValueError(f"label vectors differ in length: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise ValueError("need at least two labelled items")
    contingency = Counter(zip(a, b))
    sum_cells = sum(comb(v, 2) for v in contingency.values())
    sum_rows = sum(comb(v, 2) for v in Counter(a).values())
    sum_cols = sum(comb(v, 2) for v in Counter(b).values())
    pairs = comb(n, 2)
    expected = sum_rows * sum_cols / pairs
    maximum = 0.5 * (sum_rows + sum_cols)
    if maximum == expected:
        return 1.0
    return (sum_cells - expected) / (maximum - expected)


@dataclass
class AgreementResult:
    tickers: list
    series: str
    matrix: np.ndarray
    kappa_vs_surprise: dict
    kappa_vs_sj: dict
    announcement_ids: list


def agreement_matrix(tables, series: str = "kappa") -> AgreementResult:
    """Pairwise ARI across tickers plus per-ticker diagnostics.

    The matrix compares the chosen series between tickers over the
    announcements every table labelled; the diagnostics compare, per
    ticker, the kappa labels against the surprise labels and against
    the raw-SJ shape labels.
    """
    tables = list(tables)
    if len(tables) < 2:
        raise ValueError("need at least two tickers for an agreement matrix")
    common = None
    for table in tables:
        ids = set(table.labels(series))
        common = ids if common is None else common & ids
    common = sorted(common)
    if len(common) < 2:
        raise ValueError("fewer than two announcements shared by all tickers")

    def vector(table, name):
        labelled = table.labels(name)
        return [labelled[i] for i in common]

    nt = len(tables)
    matrix = np.eye(nt)
    for i in range(nt):
        for j in range(i + 1, nt):
            ari = adjusted_rand_index(vector(tables[i], series), vector(tables[j], series))
            matrix[i, j] = matrix[j, i] = ari
    kappa_vs_surprise = {t.ticker: adjusted_rand_index(vector(t, "kappa"), vector(t, "surprise"))
                         for t in tables}
    kappa_vs_sj = {t.ticker: adjusted_rand_index(vector(t, "kappa"), vector(t, "sj"))
                   for t in tables}
    return AgreementResult(tickers=[t.ticker for t in tables], series=series,
                           matrix=matrix, kappa_vs_surprise=kappa_vs_surprise,
                           kappa_vs_sj=kappa_vs_sj, announcement_ids=common)


def write_classification_csv(table: ClassificationTable, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["announcement_id", "date", "ticker", "series", "label", "flags"])
        for r in table.rows:
            w.writerow([r.announcement_id, r.date, r.ticker, r.series,
                        str(r.label), ";".join(r.flags)])


def write_counts_csv(table: ClassificationTable, path) -> None:
    """Label counts split all/forward-guidance for kappa and surprise."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ticker", "series", "label", "count_all", "count_forward_guidance"])
        for series in ("kappa", "surprise"):
            for label, (n_all, n_fg) in table.counts(series).items():
                w.writerow([table.ticker, series, str(label), n_all, n_fg])


def write_agreement_csv(result: AgreementResult, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ticker"] + result.tickers)
        for i, t in enumerate(result.tickers):
            w.writerow([t] + [repr(float(v)) for v in result.matrix[i]])
        w.writerow([])
        w.writerow(["ticker", "kappa_vs_surprise", "kappa_vs_sj"])
        for t in result.tickers:
            w.writerow([t, repr(float(result.kappa_vs_surprise[t])),
                        repr(float(result.kappa_vs_sj[t]))])
