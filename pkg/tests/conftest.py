import datetime as dt
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stockcast.indicators import OhlcSeries  # noqa: E402


def make_series(high, low, close, open_=None, start=dt.date(2015, 1, 1)):
    close = np.asarray(close, dtype=float)
    if open_ is None:
        open_ = close
    dates = [start + dt.timedelta(days=i) for i in range(close.size)]
    return OhlcSeries.from_arrays(dates, open_, high, low, close)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# (criterion, passed, detail) tuples appended by test_acceptance.py
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
