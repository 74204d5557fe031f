"""Intraday pattern of the mean intertrade duration."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .fileio import table_csv
from .tickdata import DurationSeries, SessionConfig, TickTable, extract_durations


@dataclass
class IntradayPattern:
    """Mean duration per trading-time interval, averaged across days.

    ``support[j]`` counts days that contributed to interval ``j``; intervals
    with no support carry NaN.
    """

    second_of_day: np.ndarray
    mean_duration: np.ndarray
    support: np.ndarray
    n_days: int
    interval_seconds: int = 1
    zero_policy: str = "include"

    def __len__(self):
        return len(self.mean_duration)

    def to_csv(self) -> str:
        return table_csv(["second_of_day", "mean_duration", "support"],
                         [self.second_of_day, self.mean_duration, self.support],
                         {"n_days": str(self.n_days), "interval_seconds": str(self.interval_seconds),
                          "zero_policy": self.zero_policy})


def intraday_pattern(ticks, cfg: SessionConfig = SessionConfig(), interval_seconds: int = 1,
                     zero_policy: str = "include") -> IntradayPattern:
    """Average duration per interval of each day, then average over days.

    Durations are attributed to the interval of their terminating trade. A
    day enters the average for interval ``j`` only if it has at least one
    duration there. ``N_d`` counts days with at least one in-session trade.
    """
    if zero_policy not in ("include", "exclude"):
        raise ConfigError("zero_policy must be 'include' or 'exclude'")
    if interval_seconds < 1:
        raise ConfigError("interval_seconds must be positive")
    for a, b in cfg.sessions:
        if (b - a) % interval_seconds:
            raise ConfigError(f"interval {interval_seconds}s does not tile session ({a}, {b})")
    if isinstance(ticks, DurationSeries):
        series = ticks
        if series.day is None:
            raise DataError("duration series lacks trade timestamps")
        days = np.unique(series.day)
    else:
        if len(ticks) == 0:
            raise DataError("no ticks")
        series = extract_durations(ticks, cfg)
        days = np.unique(ticks.day[cfg.session_index(ticks.time) >= 0])
    if len(days) == 0:
        raise DataError("no trading days")

    values = series.values.astype(np.float64)
    d_idx = np.searchsorted(days, series.day)
    j_idx = cfg.trading_offset(series.time) // interval_seconds
    if zero_policy == "exclude":
        keep = values > 0
        values, d_idx, j_idx = values[keep], d_idx[keep], j_idx[keep]

    n_int = cfg.total_seconds // interval_seconds
    slot = d_idx * n_int + j_idx
    occupied, inv = np.unique(slot, return_inverse=True)
    per_day = np.bincount(inv, weights=values) / np.bincount(inv)
    # occupied slots are day-major, so each interval sums its days in day order
    j_occ = occupied % n_int
    sums = np.bincount(j_occ, weights=per_day, minlength=n_int)
    support = np.bincount(j_occ, minlength=n_int)
    mean = np.full(n_int, np.nan)
    np.divide(sums, support, out=mean, where=support > 0)
    starts = cfg.offset_to_second(np.arange(n_int) * interval_seconds)
    return IntradayPattern(starts, mean, support.astype(np.int64), int(len(days)),
                           interval_seconds, zero_policy)


def pattern_with_zero_policy(ticks, cfg: SessionConfig = SessionConfig(), policy: str = "include",
                             interval_seconds: int = 1) -> IntradayPattern:
    return intraday_pattern(ticks, cfg, interval_seconds, zero_policy=policy)


def normalized(pattern: IntradayPattern) -> np.ndarray:
    """Pattern divided by its mean over supported intervals (for shape comparisons)."""
    m = pattern.mean_duration
    return m / np.nanmean(m)
