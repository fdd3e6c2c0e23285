"""Unit tests for the per-axis error metrics."""

import numpy as np
import pytest

from tendonkin.metrics import max_abs_error, rmse


class TestRmse:
    def test_identical_series_zero(self):
        a = np.random.default_rng(0).normal(size=(10, 3))
        assert rmse(a, a) == pytest.approx(np.zeros(3), abs=0.0)

    def test_constant_offset_single_axis(self):
        ref = np.zeros((7, 3))
        pred = ref.copy()
        pred[:, 1] += 0.004
        assert rmse(pred, ref) == pytest.approx([0.0, 0.004, 0.0], abs=1e-15)

    def test_hand_value(self):
        ref = np.zeros((2, 3))
        pred = np.array([[3.0, 0, 0], [4.0, 0, 0]])
        assert rmse(pred, ref)[0] == pytest.approx(np.sqrt(12.5), rel=1e-12)
        assert rmse(pred, ref)[0] == pytest.approx(3.5355, abs=1e-4)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            rmse(np.zeros((3, 3)), np.zeros((4, 3)))


class TestMaxAbsError:
    def test_identical_series_zero(self):
        a = np.random.default_rng(1).normal(size=(5, 3))
        assert max_abs_error(a, a) == pytest.approx(np.zeros(3), abs=0.0)

    def test_single_outlier(self):
        ref = np.zeros((20, 3))
        pred = ref.copy()
        pred[13, 2] = 0.02
        assert max_abs_error(pred, ref) == pytest.approx([0, 0, 0.02], abs=1e-15)

    def test_dominates_rmse(self):
        rng = np.random.default_rng(2)
        pred = rng.normal(size=(50, 3))
        ref = rng.normal(size=(50, 3))
        assert np.all(max_abs_error(pred, ref) >= rmse(pred, ref) - 1e-15)

    def test_empty_series_rejected(self):
        with pytest.raises(ValueError):
            max_abs_error(np.zeros((0, 3)), np.zeros((0, 3)))
