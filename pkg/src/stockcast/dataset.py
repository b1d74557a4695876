"""Supervised datasets built from an indicator matrix.

Features are min-max scaled with parameters fitted on the training slice only.
Targets stay in raw index units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .indicators import IndicatorMatrix

CLAMP_LOW = -0.5
CLAMP_HIGH = 1.5


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class NormalizationParams:
    min: np.ndarray
    max: np.ndarray
    fitted_on: tuple[int, int]

    def invert(self, normalized):
        """Map scaled values back to raw units (non-constant columns only)."""
        span = self.max - self.min
        return np.asarray(normalized, dtype=float) * span + self.min


@dataclass(frozen=True)
class SupervisedSet:
    features: np.ndarray  # (samples, n_features)
    targets: np.ndarray
    horizon: int
    dates: list  # feature (anchor) date per sample

    def __len__(self):
        return self.targets.shape[0]

    def take(self, sl: slice) -> "SupervisedSet":
        return replace(self, features=self.features[sl], targets=self.targets[sl], dates=self.dates[sl])


@dataclass(frozen=True)
class SequenceSet:
    windows: np.ndarray  # (samples, ndays, n_features)
    targets: np.ndarray
    ndays: int
    horizon: int
    dates: list  # anchor (last window row) date per sample

    def __len__(self):
        return self.targets.shape[0]

    def take(self, sl: slice) -> "SequenceSet":
        return replace(self, windows=self.windows[sl], targets=self.targets[sl], dates=self.dates[sl])


def _as_range(train_range) -> tuple[int, int]:
    if isinstance(train_range, range):
        if train_range.step != 1:
            raise DatasetError("train_range must be contiguous")
        return train_range.start, train_range.stop
    start, stop = train_range
    return int(start), int(stop)


def fit_normalizer(features, train_range) -> NormalizationParams:
    """Per-column min/max over rows ``[start, stop)`` of ``features``."""
    x = np.asarray(features, dtype=float)
    start, stop = _as_range(train_range)
    if stop <= start:
        raise DatasetError("empty training range")
    if start < 0 or stop > x.shape[0]:
        raise DatasetError(f"training range {start}:{stop} outside 0:{x.shape[0]}")
    rows = x[start:stop]
    if np.isnan(rows).any():
        raise DatasetError("training rows contain undefined indicator values")
    return NormalizationParams(rows.min(axis=0), rows.max(axis=0), (start, stop))


def apply_normalizer(features, params: NormalizationParams) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    span = params.max - params.min
    const = span == 0
    safe = np.where(const, 1.0, span)
    out = (x - params.min) / safe
    out = np.clip(out, CLAMP_LOW, CLAMP_HIGH)
    out[..., const] = 0.0
    return out


def _usable(matrix: IndicatorMatrix, index) -> tuple[np.ndarray, np.ndarray, int]:
    index = np.asarray(index, dtype=float)
    if index.shape[0] != len(matrix):
        raise DatasetError(f"target series has {index.shape[0]} values, matrix has {len(matrix)} rows")
    return matrix.values, index, len(matrix) - matrix.valid_from


def make_supervised(matrix: IndicatorMatrix, index, horizon: int) -> SupervisedSet:
    """Pair each usable day's features with ``index`` ``horizon`` days later."""
    if horizon < 1:
        raise DatasetError("horizon must be a positive integer")
    values, index, usable = _usable(matrix, index)
    if horizon >= usable:
        raise DatasetError(f"horizon {horizon} needs more than {usable} usable days")
    v0 = matrix.valid_from
    anchors = np.arange(v0, len(matrix) - horizon)
    return SupervisedSet(
        features=values[anchors],
        targets=index[anchors + horizon],
        horizon=horizon,
        dates=[matrix.dates[i] for i in anchors],
    )


def make_sequences(matrix: IndicatorMatrix, index, horizon: int, ndays: int) -> SequenceSet:
    """Sliding windows of ``ndays`` rows; the target is ``horizon`` days after the window end."""
    if horizon < 1 or ndays < 1:
        raise DatasetError("horizon and ndays must be positive integers")
    values, index, usable = _usable(matrix, index)
    count = usable - horizon - ndays + 1
    if count < 1:
        raise DatasetError(
            f"insufficient length: {usable} usable days for horizon {horizon} and ndays {ndays}"
        )
    v0 = matrix.valid_from
    anchors = np.arange(v0 + ndays - 1, v0 + ndays - 1 + count)
    offsets = np.arange(-ndays + 1, 1)
    windows = values[anchors[:, None] + offsets[None, :]]
    return SequenceSet(
        windows=windows,
        targets=index[anchors + horizon],
        ndays=ndays,
        horizon=horizon,
        dates=[matrix.dates[i] for i in anchors],
    )


def split_point(n: int, train_ratio: float) -> int:
    if not 0.0 < train_ratio < 1.0:
        raise DatasetError(f"train_ratio must lie in (0, 1), got {train_ratio}")
    # round first so 0.7 * 10 does not ceil to 8
    return min(n, math.ceil(round(train_ratio * n, 9)))


def chronological_split(dataset, train_ratio: float):
    """Earliest ``ceil(ratio * N)`` samples to train, the rest to test."""
    k = split_point(len(dataset), train_ratio)
    return dataset.take(slice(0, k)), dataset.take(slice(k, None))


def normalized_matrix(matrix: IndicatorMatrix, last_train_anchor: int):
    """Scale the whole matrix with parameters fitted on rows up to ``last_train_anchor``.

    Every training sample, flat or windowed, only reads rows in
    ``[valid_from, last_train_anchor]``, so fitting there cannot see test data.
    """
    params = fit_normalizer(matrix.values, (matrix.valid_from, last_train_anchor + 1))
    scaled = np.full_like(matrix.values, np.nan)
    v0 = matrix.valid_from
    scaled[v0:] = apply_normalizer(matrix.values[v0:], params)
    return replace(matrix, values=scaled), params


def prepare_supervised(matrix: IndicatorMatrix, index, horizon: int, train_ratio: float):
    """Split chronologically, normalize on the train slice, return ``(train, test, params)``."""
    boundary = train_boundary(matrix, horizon, train_ratio)
    k = boundary - matrix.valid_from
    scaled, params = normalized_matrix(matrix, boundary - 1)
    full = make_supervised(scaled, index, horizon)
    return full.take(slice(0, k)), full.take(slice(k, None)), params


def train_boundary(matrix: IndicatorMatrix, horizon: int, train_ratio: float) -> int:
    """First test anchor row for a horizon; shared by flat and windowed datasets."""
    usable = len(matrix) - matrix.valid_from
    count = usable - horizon
    if count < 2:
        raise DatasetError(f"horizon {horizon} needs more than {usable} usable days")
    k = split_point(count, train_ratio)
    if k >= count:
        raise DatasetError("train_ratio leaves no test samples")
    return matrix.valid_from + k


def prepare_sequences(matrix: IndicatorMatrix, index, horizon: int, ndays: int, train_ratio: float):
    """Windowed train/test sets whose test anchors coincide with ``prepare_supervised``'s."""
    boundary = train_boundary(matrix, horizon, train_ratio)
    n_train = boundary - (matrix.valid_from + ndays - 1)
    if n_train < 1:
        raise DatasetError(f"ndays {ndays} leaves no training windows before the split")
    scaled, params = normalized_matrix(matrix, boundary - 1)
    full = make_sequences(scaled, index, horizon, ndays)
    return full.take(slice(0, n_train)), full.take(slice(n_train, None)), params
