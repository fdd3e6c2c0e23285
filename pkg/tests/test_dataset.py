"""Unit tests for dataset generation, subsampling, camera models and CSV I/O."""

import numpy as np
import pytest

from tendonkin.dataset import (
    CalibrationTransform,
    CameraIntrinsics,
    CsvFormatError,
    Dataset,
    apply_calibration,
    generate_dataset,
    ingest_camera_csv,
    project_depth_to_3d,
    read_csv,
    subsample,
    write_csv,
)
from tendonkin.kinematics import default_microiges_chain
from tendonkin.trajectories import fit_chirp_amplitudes


@pytest.fixture(scope="module")
def chain():
    return default_microiges_chain()


@pytest.fixture(scope="module")
def small_ds(chain):
    chirps = [fit_chirp_amplitudes(chain, m, seed=s)
              for s, m in enumerate([(1, 1, 0, 0), (0, 0, 1, 1)])]
    return generate_dataset(chain, chirps, dt=0.05, noise_sigma=0.01, seed=0)


class TestGenerateDataset:
    def test_noiseless_measurements_equal_truth(self, chain):
        chirp = fit_chirp_amplitudes(chain, (1, 1, 1, 1), seed=2)
        ds = generate_dataset(chain, [chirp], dt=0.1, noise_sigma=0.0, seed=0)
        assert np.array_equal(ds.p_meas, ds.p_true)

    def test_noise_std_matches_injection(self, chain):
        chirp = fit_chirp_amplitudes(chain, (1, 1, 1, 1), seed=2, T=60.0)
        ds = generate_dataset(chain, [chirp] * 2, dt=0.01, noise_sigma=0.01, seed=1)
        assert len(ds) >= 5000
        resid = ds.p_meas - ds.p_true
        for ax in range(3):
            assert np.std(resid[:, ax]) == pytest.approx(0.01, rel=0.05)

    def test_same_seed_bit_identical(self, chain, small_ds):
        chirps = [fit_chirp_amplitudes(chain, m, seed=s)
                  for s, m in enumerate([(1, 1, 0, 0), (0, 0, 1, 1)])]
        again = generate_dataset(chain, chirps, dt=0.05, noise_sigma=0.01, seed=0)
        assert np.array_equal(again.t, small_ds.t)
        assert np.array_equal(again.theta, small_ds.theta)
        assert np.array_equal(again.p_meas, small_ds.p_meas)

    def test_history_columns_shift_by_one(self, small_ds):
        assert np.array_equal(small_ds.theta_old[1:10], small_ds.theta[0:9])
        assert np.array_equal(small_ds.theta_dot_old[1:10], small_ds.theta_dot[0:9])
        assert np.all(small_ds.theta_old[0] == 0.0)

    def test_timestamps_strictly_increasing_across_segments(self, small_ds):
        assert np.all(np.diff(small_ds.t) > 0)

    def test_states_flat_layout(self, small_ds):
        X = small_ds.states_flat()
        n_m = small_ds.n_motors
        assert X.shape == (5 * n_m, len(small_ds))
        k = 7
        st = small_ds.state(k)
        assert np.array_equal(X[:, k], st.flat())


class TestSubsample:
    def test_full_subsample_is_identity(self, small_ds):
        ds = subsample(small_ds, len(small_ds), seed=0)
        assert np.array_equal(ds.t, small_ds.t)
        assert np.array_equal(ds.p_meas, small_ds.p_meas)

    def test_picks_distinct_indices(self, small_ds):
        n = min(1000, len(small_ds) - 1)
        ds = subsample(small_ds, n, seed=3)
        assert len(ds) == n
        assert np.all(np.diff(ds.t) > 0)  # distinct and ordered

    def test_different_seeds_differ(self, small_ds):
        a = subsample(small_ds, len(small_ds) // 2, seed=0)
        b = subsample(small_ds, len(small_ds) // 2, seed=1)
        assert not np.array_equal(a.t, b.t)

    def test_out_of_range_rejected(self, small_ds):
        with pytest.raises(ValueError):
            subsample(small_ds, 0)
        with pytest.raises(ValueError):
            subsample(small_ds, len(small_ds) + 1)


class TestCameraModel:
    @pytest.fixture
    def intr(self):
        return CameraIntrinsics(f_x=500.0, f_y=400.0, c_x=320.0, c_y=240.0)

    def test_principal_point_maps_to_axis(self, intr):
        assert project_depth_to_3d(intr, 320.0, 240.0, 0.5) == (0.0, 0.0, 0.5)

    def test_focal_length_scaling(self, intr):
        u1, v1, w1 = project_depth_to_3d(intr, 420.0, 300.0, 0.4)
        doubled = CameraIntrinsics(f_x=1000.0, f_y=400.0, c_x=320.0, c_y=240.0)
        u2, v2, w2 = project_depth_to_3d(doubled, 420.0, 300.0, 0.4)
        assert u2 == pytest.approx(0.5 * u1)
        assert v2 == v1
        assert w2 == w1

    def test_hand_value(self, intr):
        u, _, _ = project_depth_to_3d(intr, 420.0, 240.0, 0.4)
        assert u == pytest.approx(100.0 * 0.4 / 500.0)
        assert u == pytest.approx(0.08)

    def test_nonpositive_depth_rejected(self, intr):
        with pytest.raises(ValueError):
            project_depth_to_3d(intr, 320.0, 240.0, 0.0)


class TestCalibration:
    def test_identity(self):
        T = CalibrationTransform(np.eye(3), np.zeros(3))
        p = np.array([0.1, -0.2, 0.3])
        assert np.array_equal(apply_calibration(T, p), p)

    def test_pure_translation(self):
        tr = np.array([1.0, 2.0, 3.0])
        T = CalibrationTransform(np.eye(3), tr)
        p = np.array([0.1, -0.2, 0.3])
        assert apply_calibration(T, p) == pytest.approx(p + tr)

    def test_inverse_composition_round_trip(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(3, 3))
        Q, _ = np.linalg.qr(A)
        if np.linalg.det(Q) < 0:
            Q[:, 0] = -Q[:, 0]
        tr = rng.normal(size=3)
        T = CalibrationTransform(Q, tr)
        Tinv = CalibrationTransform(Q.T, -Q.T @ tr)
        p = rng.normal(size=3)
        back = apply_calibration(Tinv, apply_calibration(T, p))
        assert back == pytest.approx(p, abs=1e-12)

    def test_non_orthonormal_rejected(self):
        with pytest.raises(ValueError):
            CalibrationTransform(2.0 * np.eye(3), np.zeros(3))

    def test_improper_rotation_rejected(self):
        R = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(ValueError):
            CalibrationTransform(R, np.zeros(3))


class TestCsvRoundTrip:
    def test_write_read_lossless(self, small_ds, tmp_path):
        path = str(tmp_path / "ds.csv")
        write_csv(small_ds, path)
        again = read_csv(path)
        for name in ("t", "theta", "theta_dot", "theta_ddot", "theta_old",
                     "theta_dot_old", "p_meas", "p_true"):
            assert np.array_equal(getattr(again, name), getattr(small_ds, name)), name
        assert again.meta == small_ds.meta

    def test_missing_column_named_in_error(self, small_ds, tmp_path):
        path = str(tmp_path / "ds.csv")
        write_csv(small_ds, path)
        lines = open(path).read().splitlines()
        header = lines[0].split(",")
        drop = header.index("thetadot_2")
        out = "\n".join(
            ",".join(v for i, v in enumerate(line.split(",")) if i != drop)
            for line in lines
        )
        bad = str(tmp_path / "bad.csv")
        open(bad, "w").write(out + "\n")
        with pytest.raises(CsvFormatError, match="thetadot_2"):
            read_csv(bad)

    def test_header_only_file_gives_empty_dataset(self, small_ds, tmp_path):
        path = str(tmp_path / "ds.csv")
        write_csv(small_ds, path)
        header = open(path).read().splitlines()[0]
        empty = str(tmp_path / "empty.csv")
        open(empty, "w").write(header + "\n")
        ds = read_csv(empty)
        assert len(ds) == 0
        assert ds.n_motors == small_ds.n_motors

    def test_empty_file_rejected(self, tmp_path):
        path = str(tmp_path / "none.csv")
        open(path, "w").close()
        with pytest.raises(CsvFormatError, match="empty"):
            read_csv(path)

    def test_ragged_row_reports_line_number(self, small_ds, tmp_path):
        path = str(tmp_path / "ds.csv")
        write_csv(small_ds, path)
        lines = open(path).read().splitlines()
        lines[3] = lines[3] + ",0.0"
        open(path, "w").write("\n".join(lines) + "\n")
        with pytest.raises(CsvFormatError, match="line 4"):
            read_csv(path)


class TestIngestCameraCsv:
    def test_back_projection_and_derivatives(self, tmp_path):
        intr = CameraIntrinsics(f_x=500.0, f_y=500.0, c_x=320.0, c_y=240.0)
        T = CalibrationTransform(np.eye(3), np.array([0.0, 0.0, -0.4]))
        rows = ["t,x_px,y_px,depth_m,theta_1,theta_2"]
        ts = np.arange(0.0, 0.5, 0.1)
        for t in ts:
            rows.append(f"{t},{320.0 + 50.0 * t},240.0,0.4,{0.2 * t},{-0.1 * t}")
        path = str(tmp_path / "cam.csv")
        open(path, "w").write("\n".join(rows) + "\n")
        ds = ingest_camera_csv(path, intr, T)
        assert ds.n_motors == 2
        assert ds.p_true is None
        # back-projected x: (x_px - c_x) * depth / f_x; z cancels with the shift
        assert ds.p_meas[:, 0] == pytest.approx(50.0 * ts * 0.4 / 500.0, abs=1e-12)
        assert ds.p_meas[:, 2] == pytest.approx(np.zeros_like(ts), abs=1e-12)
        # linear motor ramps give constant velocities, zero accelerations
        assert ds.theta_dot[:, 0] == pytest.approx(np.full_like(ts, 0.2), abs=1e-9)
        assert np.max(np.abs(ds.theta_ddot)) < 1e-9

    def test_bad_header_rejected(self, tmp_path):
        path = str(tmp_path / "cam.csv")
        open(path, "w").write("time,x_px,y_px,depth_m,theta_1\n0,0,0,1,0\n")
        intr = CameraIntrinsics(500, 500, 320, 240)
        T = CalibrationTransform(np.eye(3), np.zeros(3))
        with pytest.raises(CsvFormatError):
            ingest_camera_csv(path, intr, T)


class TestDatasetValidation:
    def test_non_increasing_timestamps_rejected(self):
        z = np.zeros((2, 4))
        with pytest.raises(ValueError):
            Dataset(
                t=np.array([0.0, 0.0]), theta=z, theta_dot=z, theta_ddot=z,
                theta_old=z, theta_dot_old=z, p_meas=np.zeros((2, 3)),
            )
