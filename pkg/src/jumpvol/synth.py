"""Synthetic elementary price paths with known ground truth.

Gaussian diffusion returns with optional planted jumps, a planted
time-of-day shape and announcement bursts; everything upstream of the
model (ingestion, measures, diurnal adjustment) is exercised against
panels produced here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .ingest import PricePanel, SessionConfig

__all__ = ["SynthSpec", "gen_paths", "trading_days", "jump_detection_rates"]


def trading_days(n: int, start: date = date(2015, 1, 5)) -> list[date]:
    """``n`` consecutive weekdays from ``start`` (a Monday by default)."""
    days, d = [], start
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return days


@dataclass
class SynthSpec:
    """Recipe for one synthetic panel.

    ``jump_times`` and ``announcement_bins`` hold 0-based ``(day, bin)``
    coordinates on the aggregated grid; each receives one additive
    elementary return of magnitude ``size * sigma * sqrt(M)`` (random
    sign, random slot within the bin).  ``diurnal`` optionally scales
    the elementary volatility per aggregated bin.  ``overnight_sigma``
    adds a Gaussian open gap (0 keeps days glued to the previous
    close).
    """

    days: int
    sigma: float = 1.0
    jump_times: list = field(default_factory=list)
    jump_size: float = 10.0
    diurnal: np.ndarray | None = None
    announcement_bins: list = field(default_factory=list)
    burst_size: float | None = None
    overnight_sigma: float = 0.0
    seed: int = 0
    start_day: date = date(2015, 1, 5)

    def validate(self, config: SessionConfig) -> None:
        if self.days <= 0:
            raise ValueError("need at least one day")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        if self.overnight_sigma < 0.0:
            raise ValueError("overnight_sigma must be non-negative")
        for kind, coords in (("jump", self.jump_times), ("announcement", self.announcement_bins)):
            for t, i in coords:
                if not (0 <= t < self.days and 0 <= i < config.n_bins):
                    raise ValueError(f"{kind} coordinate ({t}, {i}) outside the grid")
        if self.diurnal is not None:
            shape = np.asarray(self.diurnal, dtype=float)
            if shape.shape != (config.n_bins,):
                raise ValueError(f"diurnal shape must have length {config.n_bins}")
            if np.any(shape <= 0.0):
                raise ValueError("diurnal factors must be positive")


def gen_paths(spec: SynthSpec, config: SessionConfig | None = None):
    """Generate a log-price panel plus the ground-truth jump mask.

    Returns
    -------
    (panel, mask) : PricePanel and a boolean ``(days, n_bins)`` array
        marking aggregated bins that received a planted jump or burst.
        Identical specs produce bit-identical panels.
    """
    if config is None:
        config = SessionConfig()
    spec.validate(config)
    rng = np.random.default_rng(spec.seed)
    n_days, n_elem, m = spec.days, config.n_elementary, config.m
    n_bins = config.n_bins

    scale = np.full(n_elem, spec.sigma)
    if spec.diurnal is not None:
        scale = spec.sigma * np.repeat(np.asarray(spec.diurnal, dtype=float), m)
    returns = rng.standard_normal((n_days, n_elem)) * scale

    mask = np.zeros((n_days, n_bins), dtype=bool)
    planted = [(t, i, spec.jump_size) for t, i in spec.jump_times]
    burst = spec.jump_size if spec.burst_size is None else spec.burst_size
    planted += [(t, i, burst) for t, i in spec.announcement_bins]
    for t, i, size in planted:
        slot = i * m + int(rng.integers(0, m))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        returns[t, slot] += sign * size * spec.sigma * np.sqrt(m)
        mask[t, i] = True

    overnight = np.zeros(n_days)
    if spec.overnight_sigma > 0.0 and n_days > 1:
        overnight[1:] = rng.normal(0.0, spec.overnight_sigma, size=n_days - 1)

    prices = np.empty((n_days, n_elem + 1))
    open_log = float(np.log(100.0))
    for t in range(n_days):
        if t > 0:
            open_log = prices[t - 1, -1] + overnight[t]
        prices[t, 0] = open_log
        prices[t, 1:] = open_log + np.cumsum(returns[t])

    panel = PricePanel(ticker="SYNTH", days=trading_days(n_days, spec.start_day),
                       prices=prices, elementary_minutes=config.elementary_minutes)
    return panel, mask


def jump_detection_rates(mask: np.ndarray, flags: np.ndarray) -> dict:
    """Recall/precision of flagged significant jumps against the planted mask."""
    mask = np.asarray(mask, dtype=bool)
    flags = np.asarray(flags, dtype=bool)
    planted = int(mask.sum())
    flagged = int(flags.sum())
    hits = int((mask & flags).sum())
    return {
        "planted": planted,
        "flagged": flagged,
        "recall": hits / planted if planted else float("nan"),
        "precision": hits / flagged if flagged else float("nan"),
    }
