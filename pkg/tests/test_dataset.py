import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stockcast.dataset import (
    DatasetError,
    apply_normalizer,
    chronological_split,
    fit_normalizer,
    make_sequences,
    make_supervised,
    prepare_sequences,
    prepare_supervised,
)
from stockcast.indicators import IndicatorMatrix


def fake_matrix(usable, valid_from=5, n_features=10, seed=0):
    rng = np.random.default_rng(seed)
    total = usable + valid_from
    values = rng.normal(size=(total, n_features))
    values[:valid_from] = np.nan
    dates = [dt.date(2000, 1, 1) + dt.timedelta(days=i) for i in range(total)]
    return IndicatorMatrix(dates, values, valid_from, 10), np.arange(total, dtype=float) + 100.0


class TestNormalizer:
    def test_constant_column(self):
        p = fit_normalizer(np.full((4, 1), 7.0), (0, 4))
        assert p.min[0] == 7.0 and p.max[0] == 7.0
        assert np.all(apply_normalizer(np.full((3, 1), 7.0), p) == 0.0)

    def test_two_values(self):
        p = fit_normalizer(np.array([[0.0], [10.0]]), range(0, 2))
        assert (p.min[0], p.max[0]) == (0.0, 10.0)

    def test_test_extreme_ignored(self):
        x = np.array([[1.0], [4.0], [2.0], [99.0]])
        p = fit_normalizer(x, (0, 3))
        assert (p.min[0], p.max[0]) == (1.0, 4.0)

    def test_endpoints_and_clamp(self):
        p = fit_normalizer(np.array([[2.0], [6.0]]), (0, 2))
        out = apply_normalizer(np.array([[2.0], [6.0], [2.0 - 4.0], [100.0]]), p)
        assert out.ravel().tolist() == [0.0, 1.0, -0.5, 1.5]

    def test_empty_range(self):
        with pytest.raises(DatasetError):
            fit_normalizer(np.ones((3, 2)), (1, 1))

    def test_leakage_perturbing_test_rows(self, rng):
        x = rng.normal(size=(50, 10))
        p1 = fit_normalizer(x, (0, 40))
        x2 = x.copy()
        x2[40:] = rng.normal(scale=100, size=(10, 10))
        p2 = fit_normalizer(x2, (0, 40))
        assert p1.min.tobytes() == p2.min.tobytes() and p1.max.tobytes() == p2.max.tobytes()

    def test_round_trip(self, rng):
        x = rng.normal(size=(30, 4))
        p = fit_normalizer(x, (0, 30))
        np.testing.assert_allclose(p.invert(apply_normalizer(x, p)), x, rtol=1e-12, atol=1e-12)


class TestSupervised:
    def test_counts(self):
        m, idx = fake_matrix(100)
        assert len(make_supervised(m, idx, 30)) == 70

    def test_pairs_and_last_day_excluded(self):
        m, idx = fake_matrix(20)
        s = make_supervised(m, idx, 1)
        assert len(s) == 19
        np.testing.assert_array_equal(s.features[0], m.values[m.valid_from])
        assert s.targets[0] == idx[m.valid_from + 1]
        assert s.targets[-1] == idx[-1]

    def test_horizon_equal_to_usable(self):
        m, idx = fake_matrix(20)
        with pytest.raises(DatasetError):
            make_supervised(m, idx, 20)

    def test_targets_raw(self):
        m, idx = fake_matrix(20)
        s = make_supervised(m, idx, 3)
        np.testing.assert_array_equal(s.targets, idx[m.valid_from + 3 :])


class TestSequences:
    def test_count(self):
        m, idx = fake_matrix(100)
        assert len(make_sequences(m, idx, 10, 20)) == 71

    def test_ndays_one_reduces_to_supervised(self):
        m, idx = fake_matrix(40)
        seq = make_sequences(m, idx, 3, 1)
        flat = make_supervised(m, idx, 3)
        np.testing.assert_array_equal(seq.windows[:, 0, :], flat.features)
        np.testing.assert_array_equal(seq.targets, flat.targets)

    def test_window_contents_match_naive_loop(self):
        m, idx = fake_matrix(60)
        seq = make_sequences(m, idx, 4, 7)
        v0 = m.valid_from
        for i in range(len(seq)):
            t = v0 + 7 - 1 + i
            expected = np.stack([m.values[j] for j in range(t - 6, t + 1)])
            np.testing.assert_array_equal(seq.windows[i], expected)
            assert seq.targets[i] == idx[t + 4]
            assert seq.dates[i] == m.dates[t]

    def test_too_short(self):
        m, idx = fake_matrix(10)
        with pytest.raises(DatasetError):
            make_sequences(m, idx, 5, 6)


class TestSplit:
    def test_eighty_twenty(self):
        m, idx = fake_matrix(11)
        s = make_supervised(m, idx, 1)
        train, test = chronological_split(s, 0.8)
        assert (len(train), len(test)) == (8, 2)
        assert max(train.dates) < min(test.dates)

    def test_ceiling(self):
        m, idx = fake_matrix(8)
        s = make_supervised(m, idx, 1)
        train, test = chronological_split(s, 0.5)
        assert (len(train), len(test)) == (4, 3)

    @pytest.mark.parametrize("ratio", [0.0, 1.0, -0.2, 1.5])
    def test_bad_ratio(self, ratio):
        m, idx = fake_matrix(8)
        with pytest.raises(DatasetError):
            chronological_split(make_supervised(m, idx, 1), ratio)


class TestPrepare:
    def test_flat_and_windowed_share_test_anchors(self):
        m, idx = fake_matrix(200)
        _, test_flat, p1 = prepare_supervised(m, idx, 5, 0.8)
        for nd in (1, 3, 10):
            _, test_seq, p2 = prepare_sequences(m, idx, 5, nd, 0.8)
            assert test_seq.dates == test_flat.dates
            np.testing.assert_array_equal(test_seq.targets, test_flat.targets)
            np.testing.assert_array_equal(p1.min, p2.min)

    def test_normalizer_sees_only_train_rows(self):
        m, idx = fake_matrix(100)
        train, test, params = prepare_supervised(m, idx, 2, 0.8)
        assert params.fitted_on == (m.valid_from, m.valid_from + len(train))
        assert train.features.min() == 0.0 and train.features.max() == 1.0
        assert test.features.min() >= -0.5 and test.features.max() <= 1.5


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 120), st.integers(1, 40), st.integers(1, 30))
def test_sample_count_formulas(usable, horizon, ndays):
    m, idx = fake_matrix(usable)
    if horizon < usable:
        assert len(make_supervised(m, idx, horizon)) == usable - horizon
    else:
        with pytest.raises(DatasetError):
            make_supervised(m, idx, horizon)
    expected = usable - horizon - ndays + 1
    if expected >= 1:
        assert len(make_sequences(m, idx, horizon, ndays)) == expected
    else:
        with pytest.raises(DatasetError):
            make_sequences(m, idx, horizon, ndays)
