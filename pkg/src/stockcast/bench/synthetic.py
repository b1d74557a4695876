"""Deterministic synthetic OHLC index: two sinusoids, a linear trend, optional random-walk noise."""

import datetime as dt

import numpy as np

from ..indicators import OhlcSeries


def business_days(start: dt.date, count: int) -> list:
    days = []
    d = start
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days


def synthetic_close(n_bars=2500, noise=0.0, seed=0, level=1000.0):
    t = np.arange(n_bars, dtype=float)
    close = (
        level
        + 150.0 * np.sin(2 * np.pi * t / 200.0)
        + 60.0 * np.sin(2 * np.pi * t / 45.0 + 1.0)
        + 0.02 * t
    )
    if noise > 0:
        rng = np.random.default_rng([seed, 1])
        close = close + np.cumsum(rng.normal(0.0, noise, n_bars))
    if close.min() <= 0:
        raise ValueError("synthetic index went non-positive; lower the noise")
    return close


def synthetic_ohlc(n_bars=2500, noise=0.0, seed=0, start=dt.date(2009, 11, 1)) -> OhlcSeries:
    """Bars whose open is the previous close and whose wicks are small seeded offsets."""
    close = synthetic_close(n_bars, noise, seed)
    rng = np.random.default_rng([seed, 2])
    open_ = np.concatenate([[close[0]], close[:-1]])
    wick_hi = rng.uniform(0.5, 4.0, n_bars)
    wick_lo = rng.uniform(0.5, 4.0, n_bars)
    high = np.maximum(open_, close) + wick_hi
    low = np.minimum(open_, close) - wick_lo
    return OhlcSeries.from_arrays(business_days(start, n_bars), open_, high, low, close)
