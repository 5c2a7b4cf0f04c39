"""CSV ingestion, chronological splitting, scaling, and window sampling."""

import numpy as np
import pytest

from freqcycle.data import (
    Scaler,
    SplitSpec,
    default_interval,
    default_ratios,
    instance_denorm,
    instance_norm,
    load_csv,
    sample_windows,
    split,
)

from conftest import write_toy_csv


class TestLoadCsv:
    def test_happy_path(self, tmp_path):
        path = tmp_path / "toy.csv"
        vals = write_toy_csv(path, total=50, channels=3)
        ds = load_csv(path)
        assert ds.name == "toy"
        assert ds.length == 50 and ds.channels == 3
        np.testing.assert_allclose(ds.values, vals, atol=1e-6)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="nope.csv"):
            load_csv(tmp_path / "nope.csv")

    def test_non_numeric_cell_reported(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("date,a,b\nt0,1.0,2.0\nt1,oops,3.0\n")
        with pytest.raises(ValueError, match="row 3, column 2"):
            load_csv(p)

    def test_ragged_row_rejected(self, tmp_path):
        p = tmp_path / "ragged.csv"
        p.write_text("date,a,b\nt0,1.0,2.0\nt1,1.0\n")
        with pytest.raises(ValueError, match="row 3"):
            load_csv(p)

    def test_non_finite_rejected(self, tmp_path):
        p = tmp_path / "inf.csv"
        p.write_text("date,a\nt0,1.0\nt1,inf\n")
        with pytest.raises(ValueError, match="non-finite"):
            load_csv(p)

    def test_empty_body(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("date,a\n")
        with pytest.raises(ValueError, match="no data rows"):
            load_csv(p)

    def test_timestamp_column_ignored(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("date,a\nnot-a-number,1.5\n")
        assert load_csv(p).values[0, 0] == 1.5


class TestDefaults:
    def test_ratios(self):
        for name in ("ETTh1", "etth2", "ettm1", "ettm2", "traffic"):
            assert default_ratios(name) == (0.6, 0.2, 0.2)
        for name in ("weather", "ecl", "toy"):
            assert default_ratios(name) == (0.7, 0.1, 0.2)

    def test_intervals(self):
        assert default_interval("etth1") == 60
        assert default_interval("ettm2") == 15
        assert default_interval("weather") == 10


class TestSplit:
    def test_ratios_must_sum(self):
        with pytest.raises(ValueError, match="sum"):
            SplitSpec(0.6, 0.2, 0.1)

    def test_extension_back_by_lookback(self):
        r = split(1000, SplitSpec(0.6, 0.2, 0.2), lookback=96)
        assert r["train"] == (0, 600)
        assert r["val"] == (600 - 96, 800)
        assert r["test"] == (800 - 96, 1000)

    def test_clamped_at_zero(self):
        r = split(100, SplitSpec(0.6, 0.2, 0.2), lookback=96)
        assert r["val"][0] == 0

    def test_optional_horizon_check(self):
        with pytest.raises(ValueError, match="too short"):
            split(100, SplitSpec(0.6, 0.2, 0.2), lookback=48, horizon=48)
        split(1000, SplitSpec(0.6, 0.2, 0.2), lookback=48, horizon=48)


class TestScaler:
    def test_train_only_statistics(self, rng):
        train = rng.normal(loc=5.0, scale=2.0, size=(200, 3))
        sc = Scaler().fit(train)
        out = sc.transform(train)
        np.testing.assert_allclose(out.mean(axis=0), 0, atol=1e-9)
        np.testing.assert_allclose(out.std(axis=0), 1, atol=1e-9)
        other = rng.normal(size=(50, 3))
        np.testing.assert_allclose(sc.transform(other), (other - sc.mean) / sc.std)

    def test_inverse_round_trip(self, rng):
        x = rng.normal(size=(100, 2)) * 3 + 1
        sc = Scaler().fit(x)
        np.testing.assert_allclose(sc.inverse(sc.transform(x)), x, atol=1e-9)

    def test_constant_channel_rejected(self):
        x = np.ones((50, 2))
        x[:, 0] = np.arange(50)
        with pytest.raises(ValueError, match="constant channel"):
            Scaler().fit(x)


class TestWindows:
    def test_count_and_contents(self, rng):
        values = rng.normal(size=(30, 2))
        w = sample_windows(values, (0, 30), lookback=8, horizon=4)
        assert len(w) == 30 - 8 - 4 + 1
        np.testing.assert_array_equal(w.lookback[0], values[:8])
        np.testing.assert_array_equal(w.target[0], values[8:12])
        np.testing.assert_array_equal(w.lookback[5], values[5:13])

    def test_absolute_starts_and_phases(self, rng):
        values = rng.normal(size=(40, 1))
        w = sample_windows(values, (10, 40), 8, 4, origin_index=100)
        assert w.start[0] == 110
        np.testing.assert_array_equal(w.phases(24), w.start % 24)

    def test_stride(self, rng):
        values = rng.normal(size=(30, 1))
        w = sample_windows(values, (0, 30), 8, 4, stride=3)
        np.testing.assert_array_equal(w.start, [0, 3, 6, 9, 12, 15, 18])

    def test_too_short(self, rng):
        with pytest.raises(ValueError, match="too short"):
            sample_windows(rng.normal(size=(10, 1)), (0, 10), 8, 4)


class TestInstanceNorm:
    def test_normalizes_per_window_and_channel(self, rng):
        x = rng.normal(loc=3, scale=2, size=(5, 16, 2))
        xn, stats = instance_norm(x)
        np.testing.assert_allclose(xn.mean(axis=1), 0, atol=1e-9)
        np.testing.assert_allclose(xn.std(axis=1), 1, atol=1e-6)

    def test_denorm_round_trip(self, rng):
        x = rng.normal(size=(3, 12, 2))
        xn, stats = instance_norm(x)
        np.testing.assert_allclose(instance_denorm(xn, stats), x, atol=1e-9)

    def test_constant_window_does_not_blow_up(self):
        x = np.full((1, 8, 1), 7.0)
        xn, stats = instance_norm(x)
        assert np.all(np.isfinite(xn))
        np.testing.assert_allclose(xn, 0, atol=1e-12)

    def test_single_window_shape(self, rng):
        x = rng.normal(size=(10, 3))
        xn, stats = instance_norm(x)
        assert xn.shape == x.shape
        np.testing.assert_allclose(xn.mean(axis=0), 0, atol=1e-9)
