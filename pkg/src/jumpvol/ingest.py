"""Price/announcement file ingestion, session geometry and return panels.

Price files are ``timestamp,price`` CSVs sampled on the elementary
grid declared by a :class:`SessionConfig`; announcement files are
``date,time,forward_guidance`` CSVs.  Prices arrive in levels and are
stored as logs.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from pathlib import Path

import numpy as np

__all__ = [
    "IngestError",
    "UnmatchedAnnouncement",
    "SessionConfig",
    "PricePanel",
    "ReturnPanel",
    "AnnouncementEvent",
    "load_price_panel",
    "write_price_panel",
    "compute_returns",
    "load_announcements",
    "write_announcements",
    "map_announcement_to_bin",
    "locate_announcements",
]


class IngestError(ValueError):
    """Malformed or inconsistent input file content."""


class UnmatchedAnnouncement(ValueError):
    """Announcement that cannot be placed on the trading grid."""

    def __init__(self, event, reason: str):
        super().__init__(f"{event.date}T{event.time}: {reason}")
        self.event = event
        self.reason = reason


@dataclass(frozen=True)
class SessionConfig:
    """Trading session geometry; everything downstream derives from it.

    Defaults give the usual cash session: 9:30-16:00, 5-minute
    elementary grid, 30-minute bins, hence 78 elementary returns and 13
    bins per day.
    """

    open_time: time = time(9, 30)
    close_time: time = time(16, 0)
    elementary_minutes: int = 5
    bin_minutes: int = 30
    max_missing_frac: float = 0.20
    q: float = 0.55

    def __post_init__(self):
        if self.elementary_minutes <= 0 or self.bin_minutes <= 0:
            raise ValueError("interval lengths must be positive")
        span = self.session_minutes
        if span <= 0:
            raise ValueError("close must be after open")
        if span % self.elementary_minutes:
            raise ValueError("session length is not a multiple of the elementary interval")
        if self.bin_minutes % self.elementary_minutes:
            raise ValueError("bin length is not a multiple of the elementary interval")
        if span % self.bin_minutes:
            raise ValueError("session length is not a multiple of the bin length")
        if not 0.0 <= self.max_missing_frac < 1.0:
            raise ValueError("max_missing_frac must lie in [0, 1)")
        if not 0.0 < self.q < 1.0:
            raise ValueError("q must lie in (0, 1)")

    @property
    def session_minutes(self) -> int:
        o = self.open_time.hour * 60 + self.open_time.minute
        c = self.close_time.hour * 60 + self.close_time.minute
        return c - o

    @property
    def n_elementary(self) -> int:
        """Elementary returns per day (grid points minus the open)."""
        return self.session_minutes // self.elementary_minutes

    @property
    def m(self) -> int:
        """Elementary returns per aggregated bin."""
        return self.bin_minutes // self.elementary_minutes

    @property
    def n_bins(self) -> int:
        return self.session_minutes // self.bin_minutes

    def grid_times(self) -> list[time]:
        """All elementary timestamps of a day, open through close."""
        base = datetime(2000, 1, 1, self.open_time.hour, self.open_time.minute)
        step = timedelta(minutes=self.elementary_minutes)
        return [(base + k * step).time() for k in range(self.n_elementary + 1)]

    def bin_start(self, i: int) -> time:
        """Start time of 1-based bin ``i``."""
        if not 1 <= i <= self.n_bins:
            raise ValueError(f"bin index {i} outside 1..{self.n_bins}")
        base = datetime(2000, 1, 1, self.open_time.hour, self.open_time.minute)
        return (base + timedelta(minutes=(i - 1) * self.bin_minutes)).time()

    @classmethod
    def from_mapping(cls, cfg: dict) -> "SessionConfig":
        kwargs = {}
        if "open" in cfg:
            kwargs["open_time"] = _parse_time(cfg["open"])
        if "close" in cfg:
            kwargs["close_time"] = _parse_time(cfg["close"])
        for key in ("elementary_minutes", "bin_minutes"):
            if key in cfg:
                kwargs[key] = int(cfg[key])
        for key in ("max_missing_frac", "q"):
            if key in cfg:
                kwargs[key] = float(cfg[key])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "SessionConfig":
        return cls.from_mapping(load_config_file(path))


def load_config_file(path) -> dict:
    """Read a JSON or TOML key-value config file."""
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text.decode())
    return json.loads(text.decode())


def _parse_time(value) -> time:
    if isinstance(value, time):
        return value
    return time.fromisoformat(str(value))


@dataclass
class PricePanel:
    """Grid of elementary log prices: one row per day, column 0 the open."""

    ticker: str
    days: list[date]
    prices: np.ndarray
    elementary_minutes: int = 5
    fill_count: int = 0
    rejected_days: list = field(default_factory=list)

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=float)
        if self.prices.ndim != 2 or self.prices.shape[0] != len(self.days):
            raise ValueError("price matrix must be (n_days, n_elementary + 1)")
        if not np.all(np.isfinite(self.prices)):
            raise ValueError("log prices must be finite")
        for a, b in zip(self.days, self.days[1:]):
            if b <= a:
                raise ValueError(f"days not strictly increasing at {a} -> {b}")

    @property
    def n_days(self) -> int:
        return self.prices.shape[0]

    @property
    def n_elementary(self) -> int:
        return self.prices.shape[1] - 1


@dataclass
class ReturnPanel:
    """Elementary intraday returns plus the per-day overnight return."""

    days: list[date]
    intraday: np.ndarray
    overnight: np.ndarray

    @property
    def n_days(self) -> int:
        return self.intraday.shape[0]


@dataclass(frozen=True, order=True)
class AnnouncementEvent:
    date: date
    time: time
    forward_guidance: bool = False
    note: str = ""

    @property
    def event_id(self) -> str:
        return f"{self.date.isoformat()}T{self.time.strftime('%H:%M')}"


def load_price_panel(path, config: SessionConfig, ticker: str = "") -> PricePanel:
    """Parse a ``timestamp,price`` CSV into a validated log-price panel.

    Missing grid points are forward-filled within the day (a leading
    gap is back-filled from the first observation) and counted; days
    missing more than ``config.max_missing_frac`` of their grid are
    dropped and recorded in ``rejected_days``.
    """
    path = Path(path)
    if not ticker:
        ticker = path.stem
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    per_day: dict[date, dict[time, float]] = {}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["timestamp", "price"]:
            raise IngestError(f"expected 'timestamp,price' header in {path}, got {header!r}")
        last_ts = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ts = datetime.fromisoformat(row[0])
                price = float(row[1])
            except (ValueError, IndexError) as exc:
                raise IngestError(f"{path}:{lineno}: bad row {row!r}") from exc
            if last_ts is not None and ts <= last_ts:
                raise IngestError(f"{path}:{lineno}: timestamps not strictly increasing at {ts}")
            last_ts = ts
            if price <= 0.0 or not math.isfinite(price):
                raise IngestError(f"{path}:{lineno}: non-positive price {price}")
            per_day.setdefault(ts.date(), {})[ts.time()] = price
    if not per_day:
        raise IngestError(f"{path} contains no price rows")

    grid = config.grid_times()
    grid_set = set(grid)
    n_points = len(grid)
    days, rows, rejected = [], [], []
    fill_count = 0
    for d in sorted(per_day):
        ticks = per_day[d]
        off_grid = [t for t in ticks if t not in grid_set]
        if off_grid:
            raise IngestError(f"{path}: {d} has off-grid timestamp {off_grid[0]}")
        missing = n_points - len(ticks)
        if missing > config.max_missing_frac * n_points:
            rejected.append((d, f"{missing}/{n_points} grid points missing"))
            continue
        row = np.empty(n_points)
        prev = None
        pending_lead = 0
        for k, t in enumerate(grid):
            if t in ticks:
                prev = ticks[t]
                if pending_lead:
                    row[:k] = prev
                    pending_lead = 0
            elif prev is None:
                pending_lead += 1
                fill_count += 1
                continue
            else:
                fill_count += 1
            row[k] = prev
        days.append(d)
        rows.append(np.log(row))
    if not days:
        raise IngestError(f"{path}: every day rejected for missing data")
    return PricePanel(ticker=ticker, days=days, prices=np.vstack(rows),
                      elementary_minutes=config.elementary_minutes,
                      fill_count=fill_count, rejected_days=rejected)


def _level_for_log(x: float) -> float:
    # exp/log are not exact inverses in float64; nudge the emitted level
    # by a few ULPs so the reloaded log reproduces x bit for bit.
    level = math.exp(x)
    if math.log(level) == x:
        return level
    for direction in (math.inf, -math.inf):
        cand = level
        for _ in range(4):
            cand = math.nextafter(cand, direction)
            if math.log(cand) == x:
                return cand
    return level


def write_price_panel(panel: PricePanel, path, config: SessionConfig) -> None:
    """Emit the panel in the same ``timestamp,price`` format ingestion reads."""
    grid = config.grid_times()
    if len(grid) != panel.prices.shape[1]:
        raise ValueError("panel does not match the session grid")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "price"])
        for d, row in zip(panel.days, panel.prices):
            for t, logp in zip(grid, row):
                stamp = datetime.combine(d, t).isoformat(sep="T")
                w.writerow([stamp, repr(_level_for_log(float(logp)))])


def compute_returns(panel: PricePanel) -> ReturnPanel:
    """Elementary intraday returns and open-minus-previous-close overnights."""
    intraday = np.diff(panel.prices, axis=1)
    overnight = np.zeros(panel.n_days)
    if panel.n_days > 1:
        overnight[1:] = panel.prices[1:, 0] - panel.prices[:-1, -1]
    return ReturnPanel(days=list(panel.days), intraday=intraday, overnight=overnight)


def load_announcements(path) -> list[AnnouncementEvent]:
    """Read a ``date,time,forward_guidance[,note]`` calendar, sorted by timestamp."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    events = []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        expected = ["date", "time", "forward_guidance"]
        if [h.strip() for h in header[:3]] != expected:
            raise IngestError(f"expected header {expected} in {path}, got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                d = date.fromisoformat(row[0])
                t = time.fromisoformat(row[1])
                fg = row[2].strip()
            except (ValueError, IndexError) as exc:
                raise IngestError(f"{path}:{lineno}: bad row {row!r}") from exc
            if fg not in ("0", "1"):
                raise IngestError(f"{path}:{lineno}: forward_guidance must be 0 or 1, got {fg!r}")
            note = row[3] if len(row) > 3 else ""
            events.append(AnnouncementEvent(date=d, time=t, forward_guidance=fg == "1", note=note))
    events.sort(key=lambda e: (e.date, e.time))
    for a, b in zip(events, events[1:]):
        if (a.date, a.time) == (b.date, b.time):
            raise IngestError(f"duplicate announcement at {a.date} {a.time}")
    return events


def write_announcements(events, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "time", "forward_guidance", "note"])
        for e in events:
            w.writerow([e.date.isoformat(), e.time.strftime("%H:%M"), int(e.forward_guidance), e.note])


def map_announcement_to_bin(event: AnnouncementEvent, config: SessionConfig,
                            days) -> tuple[int, int]:
    """Locate ``(day index, iota)`` for an announcement.

    ``iota`` (1-based) is the first aggregated bin whose start time is
    at or after the announcement time; a boundary timestamp selects the
    bin it opens.  Raises :class:`UnmatchedAnnouncement` for dates off
    the trading calendar or times past the last bin start.
    """
    day_index = {d: t for t, d in enumerate(days)}
    if event.date not in day_index:
        raise UnmatchedAnnouncement(event, "not a trading day")
    open_min = config.open_time.hour * 60 + config.open_time.minute
    ev_min = event.time.hour * 60 + event.time.minute
    offset = ev_min - open_min
    if offset <= 0:
        iota = 1
    else:
        iota = math.ceil(offset / config.bin_minutes) + 1
    if iota > config.n_bins:
        raise UnmatchedAnnouncement(event, "after the last bin start")
    return day_index[event.date], iota


def locate_announcements(events, config: SessionConfig, days):
    """Map a calendar onto the grid; returns (matched, unmatched) lists.

    ``matched`` holds ``(event, day_index, iota)`` triples; ``unmatched``
    holds ``(event, reason)`` pairs, never silently dropped.
    """
    matched, unmatched = [], []
    for event in events:
        try:
            t, iota = map_announcement_to_bin(event, config, days)
        except UnmatchedAnnouncement as exc:
            unmatched.append((event, exc.reason))
        else:
            matched.append((event, t, iota))
    return matched, unmatched
