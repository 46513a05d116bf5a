"""Time-of-day scale factors and deseasonalised panels.

A stable seasonal filter on the bipower series produces one
multiplicative factor per bin; multiplying RV and BV by that factor
removes the intraday U-shape without disturbing per-bin RV/BV ratios
or the significant-jump flags.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .measures import BinMeasures

__all__ = [
    "SeasonalProfile",
    "BinDiagnostics",
    "estimate_profile",
    "apply_profile",
    "bin_diagnostics",
    "write_profile_csv",
    "read_profile_csv",
]


@dataclass
class SeasonalProfile:
    """Multiplicative per-bin scale factors; adjusted = raw * factor."""

    factors: np.ndarray
    source: str = "bv"
    normalization: float = 1.0

    def __post_init__(self):
        self.factors = np.asarray(self.factors, dtype=float)
        if self.factors.ndim != 1:
            raise ValueError("factors must be a vector")
        if not np.all(np.isfinite(self.factors)) or np.any(self.factors <= 0.0):
            raise ValueError("factors must be positive and finite")

    @property
    def n_bins(self) -> int:
        return self.factors.shape[0]

    @property
    def seasonal_indices(self) -> np.ndarray:
        """Raw indices 1/factor; they average to one by construction."""
        return 1.0 / self.factors


def _centered_trend(series: np.ndarray, window: int) -> np.ndarray:
    # Centered moving average; the window shrinks to what is available
    # near the sample edges instead of discarding those days.
    half = window // 2
    n = series.shape[0]
    cum = np.concatenate(([0.0], np.cumsum(series)))
    lo = np.maximum(np.arange(n) - half, 0)
    hi = np.minimum(np.arange(n) + half + 1, n)
    return (cum[hi] - cum[lo]) / (hi - lo)


def estimate_profile(panel: BinMeasures, source: str = "bv") -> SeasonalProfile:
    """Stable seasonal filter on the chosen series (BV by default).

    Steps: centered moving average of one full day over the day-major
    concatenated series; ratios of series to trend; per-bin means of
    the ratios; normalisation to average one; factors are the
    reciprocals of the normalised indices.
    """
    if panel.n_days < 2:
        raise ValueError("need at least two full days to estimate a profile")
    series = getattr(panel, source).reshape(-1).astype(float)
    n_bins = panel.n_bins
    trend = _centered_trend(series, n_bins)
    if np.any(trend <= 0.0):
        raise ValueError("trend has a non-positive segment; series too sparse")
    ratio = series / trend
    idx = np.arange(series.shape[0]) % n_bins
    raw = np.array([ratio[idx == i].mean() for i in range(n_bins)])
    norm_const = raw.mean()
    indices = raw / norm_const
    return SeasonalProfile(factors=1.0 / indices, source=source, normalization=float(norm_const))


def apply_profile(panel: BinMeasures, profile: SeasonalProfile) -> BinMeasures:
    """Rescale RV and BV by the per-bin factors.

    The jump statistic is scale-free, so the significant-jump flag set
    is reused as is; C and SJ are rebuilt from the adjusted series so
    the additive identity keeps holding.  TQ picks up the fourth power
    of the factor (quarticity scale).
    """
    if profile.n_bins != panel.n_bins:
        raise ValueError(f"profile covers {profile.n_bins} bins, panel has {panel.n_bins}")
    f = profile.factors[np.newaxis, :]
    rv = panel.rv * f
    bv = panel.bv * f
    flagged = panel.jump_flags
    sj = np.where(flagged, np.maximum(rv - bv, 0.0), 0.0)
    c = rv - sj
    return replace(panel, rv=rv, bv=bv, tq=panel.tq * f ** 4, c=c, sj=sj)


@dataclass
class BinDiagnostics:
    """Per-bin sample means and adjacent-bin correlations across days."""

    rv_means: np.ndarray
    bv_means: np.ndarray
    rv_adjacent_corr: np.ndarray
    bv_adjacent_corr: np.ndarray


def _adjacent_corr(panel: np.ndarray) -> np.ndarray:
    cols = panel.shape[1]
    out = np.empty(cols - 1)
    for h in range(cols - 1):
        out[h] = np.corrcoef(panel[:, h], panel[:, h + 1])[0, 1]
    return out


def bin_diagnostics(panel: BinMeasures, min_days: int = 30) -> BinDiagnostics:
    """Bin means and the rho_{h+1,h} sequence for RV and BV."""
    if panel.n_days < min_days:
        raise ValueError(f"need at least {min_days} days, have {panel.n_days}")
    return BinDiagnostics(
        rv_means=panel.rv.mean(axis=0),
        bv_means=panel.bv.mean(axis=0),
        rv_adjacent_corr=_adjacent_corr(panel.rv),
        bv_adjacent_corr=_adjacent_corr(panel.bv),
    )


def write_profile_csv(profile: SeasonalProfile, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin", "factor"])
        for i, f in enumerate(profile.factors, start=1):
            w.writerow([i, repr(float(f))])


def read_profile_csv(path) -> SeasonalProfile:
    path = Path(path)
    factors = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["bin", "factor"]:
            raise ValueError(f"unexpected profile header {header!r}")
        for row in reader:
            factors[int(row[0])] = float(row[1])
    if sorted(factors) != list(range(1, len(factors) + 1)):
        raise ValueError("profile bins must cover 1..N")
    return SeasonalProfile(factors=np.array([factors[i] for i in sorted(factors)]))
