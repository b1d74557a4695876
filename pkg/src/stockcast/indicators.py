"""Technical indicators computed from a chronological OHLC series.

All ten features use a common lookback window ``n`` (10 by default). Values
that are not yet defined because the window has not filled are stored as NaN
and the first row where every feature is defined is exposed as
``IndicatorMatrix.valid_from``.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

FEATURES = (
    "sma",
    "wma",
    "momentum",
    "stoch_k",
    "stoch_d",
    "rsi",
    "macd_signal",
    "williams_r",
    "ad_osc",
    "cci",
)

MACD_FAST = 12
MACD_SLOW = 26
CCI_CONSTANT = 0.015


class SeriesError(ValueError):
    """Raised for malformed or too-short price series."""


@dataclass(frozen=True)
class OhlcBar:
    date: dt.date
    open: float
    high: float
    low: float
    close: float

    def __post_init__(self):
        prices = (self.open, self.high, self.low, self.close)
        if not all(np.isfinite(p) and p > 0 for p in prices):
            raise SeriesError(f"{self.date}: prices must be finite and positive")
        if not (self.low <= self.open <= self.high and self.low <= self.close <= self.high):
            raise SeriesError(
                f"{self.date}: OHLC violates low <= open/close <= high "
                f"(o={self.open}, h={self.high}, l={self.low}, c={self.close})"
            )


class OhlcSeries:
    """Immutable, date-ordered sequence of bars with array views."""

    def __init__(self, bars: Sequence[OhlcBar]):
        bars = tuple(bars)
        for prev, cur in zip(bars, bars[1:]):
            if cur.date == prev.date:
                raise SeriesError(f"duplicate date {cur.date}")
            if cur.date < prev.date:
                raise SeriesError(f"bars not in date order at {cur.date}")
        self.bars = bars
        self.dates = [b.date for b in bars]
        self.open = np.array([b.open for b in bars], dtype=float)
        self.high = np.array([b.high for b in bars], dtype=float)
        self.low = np.array([b.low for b in bars], dtype=float)
        self.close = np.array([b.close for b in bars], dtype=float)
        for arr in (self.open, self.high, self.low, self.close):
            arr.setflags(write=False)

    @classmethod
    def from_arrays(cls, dates, open_, high, low, close) -> "OhlcSeries":
        return cls(
            [
                OhlcBar(d, float(o), float(h), float(l), float(c))
                for d, o, h, l, c in zip(dates, open_, high, low, close)
            ]
        )

    def __len__(self):
        return len(self.bars)

    def __eq__(self, other):
        return isinstance(other, OhlcSeries) and self.bars == other.bars

    def __repr__(self):
        if not self.bars:
            return "OhlcSeries([])"
        return f"OhlcSeries({len(self)} bars, {self.dates[0]}..{self.dates[-1]})"


@dataclass(frozen=True)
class IndicatorMatrix:
    """Per-day indicator values; ``values[t, j]`` is feature ``FEATURES[j]``."""

    dates: list
    values: np.ndarray
    valid_from: int
    window: int

    def column(self, name: str) -> np.ndarray:
        return self.values[:, FEATURES.index(name)]

    def __len__(self):
        return self.values.shape[0]


def ema(closes, k: int) -> np.ndarray:
    """Exponential moving average with smoothing ``2 / (k + 1)``, seeded at ``closes[0]``."""
    closes = np.asarray(closes, dtype=float)
    if closes.size == 0:
        raise SeriesError("empty series")
    if k < 1:
        raise SeriesError("invalid period")
    alpha = 2.0 / (k + 1)
    out = np.empty_like(closes)
    out[0] = closes[0]
    for t in range(1, closes.size):
        out[t] = out[t - 1] * (1.0 - alpha) + closes[t] * alpha
    return out


def rsi(closes, n: int = 10) -> np.ndarray:
    """Relative strength index over the last ``n`` close-to-close changes.

    Degenerate windows: no downward move gives 100, no upward move gives 0,
    and a completely flat window gives 50.
    """
    closes = np.asarray(closes, dtype=float)
    if closes.size < n + 1:
        raise SeriesError(f"rsi needs at least {n + 1} closes, got {closes.size}")
    diff = np.diff(closes)
    up = sliding_window_view(np.maximum(diff, 0.0), n).sum(axis=1)
    dw = sliding_window_view(np.maximum(-diff, 0.0), n).sum(axis=1)
    out = np.full(closes.size, np.nan)
    vals = np.empty(up.size)
    both = (up == 0) & (dw == 0)
    no_down = (dw == 0) & ~both
    regular = dw > 0
    vals[both] = 50.0
    vals[no_down] = 100.0
    vals[regular] = 100.0 - 100.0 / (1.0 + up[regular] / dw[regular])
    out[n:] = vals
    return out


def _rolling(x: np.ndarray, n: int) -> np.ndarray:
    return sliding_window_view(x, n)


def _ratio_or(num: np.ndarray, den: np.ndarray, fallback: float) -> np.ndarray:
    out = np.full(num.shape, fallback)
    nz = den != 0
    out[nz] = num[nz] / den[nz]
    return out


def signal_warmup(n: int) -> int:
    """Index of the first bar whose MACD signal line is considered defined."""
    return (MACD_SLOW - 1) + (n - 1)


def min_length(n: int) -> int:
    return 2 * n + MACD_SLOW


def compute_indicator_matrix(series: OhlcSeries, n: int = 10) -> IndicatorMatrix:
    if n < 2:
        raise SeriesError("invalid period")
    need = min_length(n)
    if len(series) < need:
        raise SeriesError(
            f"series too short: need at least {need} bars for window {n}, got {len(series)}"
        )
    c, h, l = series.close, series.high, series.low
    size = c.size
    tail = slice(n - 1, None)
    out = np.full((size, len(FEATURES)), np.nan)

    out[tail, 0] = _rolling(c, n).mean(axis=1)
    weights = np.arange(1, n + 1, dtype=float)
    out[tail, 1] = _rolling(c, n) @ weights / weights.sum()
    out[tail, 2] = c[n - 1 :] - c[: size - n + 1]

    hh = _rolling(h, n).max(axis=1)
    ll = _rolling(l, n).min(axis=1)
    span = hh - ll
    k = _ratio_or(c[n - 1 :] - ll, span, 0.5) * 100.0
    out[tail, 3] = k
    out[2 * n - 2 :, 4] = _rolling(k, n).mean(axis=1)

    out[:, 5] = rsi(c, n)

    macd = ema(c, MACD_FAST) - ema(c, MACD_SLOW)
    signal = ema(macd, n)
    start = signal_warmup(n)
    out[start:, 6] = signal[start:]

    out[tail, 7] = _ratio_or(hh - c[n - 1 :], span, 0.5) * 100.0
    out[:, 8] = _ratio_or(h - c, h - l, 0.5)

    m = (h + l + c) / 3.0
    mw = _rolling(m, n)
    sm = mw.mean(axis=1)
    dev = np.abs(mw - sm[:, None]).mean(axis=1)
    out[tail, 9] = cci_from_parts(m[n - 1 :], sm, dev)

    valid_from = max(2 * n - 2, n, start)
    values = out
    values.setflags(write=False)
    return IndicatorMatrix(list(series.dates), values, valid_from, n)


def cci_from_parts(m, sm, dev):
    """CCI with a flat-window guard.

    A mean deviation within rounding noise of zero (relative to the level of
    the typical price) is treated as exactly zero and yields CCI = 0.
    """
    m = np.asarray(m, dtype=float)
    sm = np.asarray(sm, dtype=float)
    dev = np.asarray(dev, dtype=float)
    flat = dev <= 64 * np.finfo(float).eps * np.abs(sm)
    out = np.zeros(np.broadcast(m, sm, dev).shape)
    ok = ~flat
    out[ok] = (m - sm)[ok] / (CCI_CONSTANT * dev[ok])
    return out
