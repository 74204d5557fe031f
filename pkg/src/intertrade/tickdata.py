"""Tick ingestion and intertrade-duration extraction.

Durations are only formed between consecutive trades inside the same
continuous-auction session of the same day; the lunch break and the overnight
gap never produce a duration.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DataError

log = logging.getLogger(__name__)

#: Shanghai Stock Exchange continuous double auction, seconds of day.
SHSE_SESSIONS = ((34200, 41400), (46800, 54000))

_EPOCH = date(1970, 1, 1)
_MAX_ERROR_LINES = 1000


def hms_to_seconds(text: str) -> int:
    parts = text.strip().split(":")
    if len(parts) != 3:
        raise ValueError(f"bad time {text!r}")
    h, m, s = (int(p) for p in parts)
    if not (0 <= h < 24 and 0 <= m < 60 and 0 <= s < 60):
        raise ValueError(f"bad time {text!r}")
    return h * 3600 + m * 60 + s


def seconds_to_hms(sec: int) -> str:
    sec = int(sec)
    return f"{sec // 3600:02d}:{sec % 3600 // 60:02d}:{sec % 60:02d}"


@dataclass(frozen=True)
class SessionConfig:
    """Ordered, disjoint trading sessions as half-open ``[open, close)`` second-of-day intervals."""

    sessions: tuple = SHSE_SESSIONS

    def __post_init__(self):
        sess = tuple((int(a), int(b)) for a, b in self.sessions)
        if not sess:
            raise ConfigError("at least one session is required")
        prev_close = -1
        for a, b in sess:
            if not (0 <= a < b <= 86400):
                raise ConfigError(f"invalid session ({a}, {b})")
            if a < prev_close:
                raise ConfigError("sessions must be ordered and disjoint")
            prev_close = b
        object.__setattr__(self, "sessions", sess)

    @classmethod
    def from_strings(cls, specs):
        """Build from ``["09:30-11:30", "13:00-15:00"]`` style strings."""
        out = []
        for spec in specs:
            try:
                a, b = spec.split("-")
                out.append((hms_to_seconds(a + ":00" if a.count(":") == 1 else a),
                            hms_to_seconds(b + ":00" if b.count(":") == 1 else b)))
            except ValueError as exc:
                raise ConfigError(f"bad session spec {spec!r}") from exc
        return cls(tuple(out))

    @property
    def total_seconds(self) -> int:
        return sum(b - a for a, b in self.sessions)

    def session_index(self, times) -> np.ndarray:
        """Index of the session containing each time, -1 if outside all sessions."""
        t = np.asarray(times, dtype=np.int64)
        out = np.full(t.shape, -1, dtype=np.int64)
        for k, (a, b) in enumerate(self.sessions):
            out[(t >= a) & (t < b)] = k
        return out

    def contains(self, sec: int) -> bool:
        return any(a <= sec < b for a, b in self.sessions)

    def trading_offset(self, times) -> np.ndarray:
        """Seconds since the first open, counting only in-session time (-1 outside)."""
        t = np.asarray(times, dtype=np.int64)
        out = np.full(t.shape, -1, dtype=np.int64)
        base = 0
        for a, b in self.sessions:
            inside = (t >= a) & (t < b)
            out[inside] = t[inside] - a + base
            base += b - a
        return out

    def offset_to_second(self, offsets) -> np.ndarray:
        """Inverse of :meth:`trading_offset`."""
        off = np.asarray(offsets, dtype=np.int64)
        out = np.empty(off.shape, dtype=np.int64)
        base = 0
        for a, b in self.sessions:
            inside = (off >= base) & (off < base + b - a)
            out[inside] = off[inside] - base + a
            base += b - a
        return out


class TickRecord(NamedTuple):
    trading_day: date
    time_of_day: int
    equity_id: str


def _day_number(d: date) -> int:
    return (d - _EPOCH).days


def _day_from_number(n: int) -> date:
    return _EPOCH + timedelta(days=int(n))


@dataclass
class TickTable:
    """Columnar trade records: day number (days since 1970-01-01), second of day, equity."""

    day: np.ndarray
    time: np.ndarray
    equity: np.ndarray

    def __post_init__(self):
        self.day = np.asarray(self.day, dtype=np.int64)
        self.time = np.asarray(self.time, dtype=np.int64)
        self.equity = np.asarray(self.equity, dtype=object)
        if not (len(self.day) == len(self.time) == len(self.equity)):
            raise DataError("tick columns have different lengths")

    @classmethod
    def from_records(cls, records):
        records = list(records)
        return cls(
            day=[_day_number(r.trading_day) for r in records],
            time=[r.time_of_day for r in records],
            equity=[r.equity_id for r in records],
        )

    @classmethod
    def empty(cls):
        return cls(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, object))

    def __len__(self):
        return len(self.day)

    def __iter__(self):
        for d, t, e in zip(self.day, self.time, self.equity):
            yield TickRecord(_day_from_number(d), int(t), e)

    def __getitem__(self, key):
        if isinstance(key, (int, np.integer)):
            return TickRecord(_day_from_number(self.day[key]), int(self.time[key]), self.equity[key])
        return TickTable(self.day[key], self.time[key], self.equity[key])

    def equities(self):
        return sorted(set(self.equity.tolist()))

    def for_equity(self, equity_id):
        return self[self.equity == equity_id]

    def trading_days(self) -> np.ndarray:
        return np.unique(self.day)

    def is_sorted(self) -> bool:
        if len(self) < 2:
            return True
        dd = np.diff(self.day)
        dt = np.diff(self.time)
        return bool(np.all((dd > 0) | ((dd == 0) & (dt >= 0))))

    def sorted(self):
        """Stable sort by (equity, day, time)."""
        order = np.lexsort((self.time, self.day, self.equity.astype(str)))
        return self[order]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["date", "time", "equity"])
        for d, t, e in zip(self.day, self.time, self.equity):
            w.writerow([_day_from_number(d).isoformat(), seconds_to_hms(t), e])
        return buf.getvalue()


@dataclass(frozen=True)
class TickSchema:
    """Column names in the source file for date, time and equity id."""

    date: str = "date"
    time: str = "time"
    equity: str = "equity"
    delimiter: str = ","


@dataclass
class ParseReport:
    rows: int = 0
    records: int = 0
    malformed: int = 0
    rejected: int = 0
    errors: list = field(default_factory=list)

    def as_dict(self):
        return {
            "rows": self.rows,
            "records": self.records,
            "malformed": self.malformed,
            "rejected": self.rejected,
            "errors": [f"line {n}: {msg}" for n, msg in self.errors],
        }


def _open_text(source):
    if isinstance(source, (str, Path)):
        try:
            return open(source, encoding="utf-8", newline="")
        except OSError as exc:
            raise DataError(f"cannot read {source}: {exc}") from exc
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8"))
    if hasattr(source, "read"):
        probe = source.read(0)
        if isinstance(probe, bytes):
            return io.TextIOWrapper(source, encoding="utf-8", newline="")
        return source
    raise DataError(f"unreadable source of type {type(source).__name__}")


def parse_ticks(source, schema: TickSchema = TickSchema(), cfg: SessionConfig = SessionConfig(),
                strict: bool = False):
    """Parse delimited tick text into a :class:`TickTable` plus a :class:`ParseReport`.

    Records keep input order. Rows that fail to parse are counted as
    malformed (with line numbers in the report); rows outside the configured
    sessions are counted as rejected. With ``strict=True`` the first malformed
    row raises :class:`DataError`.
    """
    fh = _open_text(source)
    report = ParseReport()
    days, times, eqs = [], [], []
    try:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty tick source (no header row)") from None
        except (csv.Error, UnicodeDecodeError) as exc:
            raise DataError(f"unreadable tick source: {exc}") from exc
        header = [h.strip() for h in header]
        try:
            i_date = header.index(schema.date)
            i_time = header.index(schema.time)
            i_eq = header.index(schema.equity)
        except ValueError:
            missing = [c for c in (schema.date, schema.time, schema.equity) if c not in header]
            raise DataError(f"schema column(s) missing from header: {missing}") from None
        width = max(i_date, i_time, i_eq) + 1
        while True:
            try:
                row = next(reader)
            except StopIteration:
                break
            except (csv.Error, UnicodeDecodeError) as exc:
                raise DataError(f"unreadable tick source near line {reader.line_num}: {exc}") from exc
            if not row or all(not c.strip() for c in row):
                continue
            report.rows += 1
            lineno = reader.line_num
            try:
                if len(row) < width:
                    raise ValueError(f"expected at least {width} fields, got {len(row)}")
                d = date.fromisoformat(row[i_date].strip())
                t = hms_to_seconds(row[i_time])
                e = row[i_eq].strip()
                if not e:
                    raise ValueError("empty equity id")
            except ValueError as exc:
                if strict:
                    raise DataError(f"line {lineno}: {exc}") from exc
                report.malformed += 1
                if len(report.errors) < _MAX_ERROR_LINES:
                    report.errors.append((lineno, str(exc)))
                continue
            if not cfg.contains(t):
                report.rejected += 1
                continue
            days.append(_day_number(d))
            times.append(t)
            eqs.append(e)
    finally:
        if isinstance(source, (str, Path)):
            fh.close()
    report.records = len(days)
    if report.malformed:
        log.warning("%d malformed tick rows", report.malformed)
    return TickTable(days, times, eqs), report


def parse_tick_files(paths, schema: TickSchema = TickSchema(), cfg: SessionConfig = SessionConfig(),
                     threads: int = 1):
    """Parse several files and merge them ordered by equity, day, then time."""
    paths = list(paths)
    if threads > 1 and len(paths) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda p: parse_ticks(p, schema, cfg), paths))
    else:
        parts = [parse_ticks(p, schema, cfg) for p in paths]
    report = ParseReport()
    for _, r in parts:
        report.rows += r.rows
        report.records += r.records
        report.malformed += r.malformed
        report.rejected += r.rejected
        report.errors.extend(r.errors)
    table = TickTable(
        np.concatenate([t.day for t, _ in parts]) if parts else [],
        np.concatenate([t.time for t, _ in parts]) if parts else [],
        np.concatenate([t.equity for t, _ in parts]) if parts else [],
    )
    return table.sorted(), report


@dataclass
class DurationSeries:
    """Intertrade durations in seconds.

    ``day`` and ``time`` give the timestamp of the trade that terminates each
    duration, which is what intraday and per-minute statistics bin on.
    """

    values: np.ndarray
    equity_id: str | None = None
    n_days: int = 0
    n_trades: int = 0
    day: np.ndarray | None = None
    time: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.size and np.any(self.values < 0):
            raise DataError("durations must be nonnegative")

    def __len__(self):
        return len(self.values)

    @property
    def empty(self) -> bool:
        return len(self.values) == 0

    def meta(self):
        return {"equity_id": self.equity_id or "", "n_days": self.n_days,
                "n_trades": self.n_trades, "n": len(self.values)}


def _single_equity(ticks: TickTable):
    eqs = ticks.equities()
    if len(eqs) > 1:
        raise DataError(f"ticks hold several equities {eqs[:5]}; select one first")
    return eqs[0] if eqs else None


def extract_durations(ticks: TickTable, cfg: SessionConfig = SessionConfig()) -> DurationSeries:
    """Differences of consecutive trade times within each (day, session).

    Output length is ``trades - (number of day-sessions holding a trade)``.
    Ticks outside the sessions are dropped (and logged).
    """
    equity = _single_equity(ticks)
    if len(ticks) == 0:
        log.warning("no ticks: returning an empty duration series")
        return DurationSeries(np.empty(0, np.int64), equity, 0, 0,
                              np.empty(0, np.int64), np.empty(0, np.int64))
    if not ticks.is_sorted():
        raise DataError("ticks are not sorted by (day, time)")
    sess = cfg.session_index(ticks.time)
    inside = sess >= 0
    if not inside.all():
        log.warning("dropping %d ticks outside the configured sessions", int((~inside).sum()))
    day = ticks.day[inside]
    time = ticks.time[inside]
    sess = sess[inside]
    key = day * len(cfg.sessions) + sess
    same = key[1:] == key[:-1]
    values = (time[1:] - time[:-1])[same]
    return DurationSeries(
        values=values.astype(np.int64),
        equity_id=equity,
        n_days=int(len(np.unique(day))),
        n_trades=int(len(day)),
        day=day[1:][same],
        time=time[1:][same],
    )


def zero_fraction(series) -> float:
    """Share of durations equal to zero (same-second trades)."""
    values = series.values if isinstance(series, DurationSeries) else np.asarray(series)
    if values.size == 0:
        raise DataError("zero_fraction of an empty series")
    return float(np.count_nonzero(values == 0) / values.size)


FILL_POLICIES = ("previous", "skip", "zero")


def aggregate_per_minute(ticks, cfg: SessionConfig = SessionConfig(), fill: str = "previous",
                         interval_seconds: int = 60) -> np.ndarray:
    """Mean duration per minute of trading time, for every trading day.

    Each duration belongs to the minute of its terminating trade. Minutes
    without any terminating trade are filled per ``fill``: ``previous``
    carries the last value forward (leading gaps take the first observed
    value), ``zero`` writes 0, ``skip`` drops them. With ``previous`` or
    ``zero`` the length is ``(session seconds / 60) * trading days``.
    """
    if fill not in FILL_POLICIES:
        raise ConfigError(f"fill must be one of {FILL_POLICIES}")
    for a, b in cfg.sessions:
        if (b - a) % interval_seconds:
            raise ConfigError(f"interval {interval_seconds}s does not tile session ({a}, {b})")
    series = ticks if isinstance(ticks, DurationSeries) else extract_durations(ticks, cfg)
    if series.n_trades == 0:
        raise DataError("aggregate_per_minute of an empty tick set")
    if series.day is None:
        raise DataError("duration series lacks trade timestamps")
    per_day = cfg.total_seconds // interval_seconds
    if isinstance(ticks, TickTable):
        days = np.unique(ticks.day[cfg.session_index(ticks.time) >= 0])
    else:
        days = np.unique(series.day)
    n_days = len(days)
    slot = np.searchsorted(days, series.day) * per_day + cfg.trading_offset(series.time) // interval_seconds
    total = np.bincount(slot, weights=series.values.astype(np.float64), minlength=n_days * per_day)
    count = np.bincount(slot, minlength=n_days * per_day)
    has = count > 0
    out = np.zeros(n_days * per_day, dtype=np.float64)
    out[has] = total[has] / count[has]
    if fill == "skip":
        return out[has]
    if fill == "zero":
        return out
    if not has.any():
        raise DataError("no minute holds a terminating trade")
    idx = np.where(has, np.arange(out.size), -1)
    np.maximum.accumulate(idx, out=idx)
    idx[idx < 0] = np.argmax(has)
    return out[idx]
