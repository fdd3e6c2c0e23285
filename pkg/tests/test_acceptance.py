"""Acceptance suite: one test per target property of the full system.

The heavyweight fixtures run the complete desk-scale pipeline through the
installed command-line interface (two correct-model runs for the
determinism check, one wrong-model run) and are shared session-wide; the
remaining properties are checked against independent dense-matrix or
brute-force oracles.
"""

import json
import os
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from tendonkin import gp
from tendonkin.dataset import generate_dataset
from tendonkin.experiment import (
    ExperimentConfig,
    MODEL_NAMES,
    lemniscate_to_motors,
    run_experiment,
)
from tendonkin.hybrid import WeightConfig, weight
from tendonkin.kinematics import (
    DEFAULT_BACKLASH,
    MotorState,
    PlantState,
    analytical_model,
    chain_to_json,
    default_microiges_chain,
    plant_step,
)
from tendonkin.trajectories import LemniscatePath, lemniscate

AXES = ("x", "y", "z")
GP_VARIANTS = ("GP_eps", "GP_p", "GP_np")
HYBRID_OF = {"GP_eps": "Hyb_eps", "GP_p": "Hyb_p", "GP_np": "Hyb_np"}


def _cli_run(config: dict, out_dir: str) -> subprocess.CompletedProcess:
    cfg_path = os.path.join(out_dir, "config.json")
    os.makedirs(out_dir, exist_ok=True)
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump(config, fh)
    return subprocess.run(
        [sys.executable, "-m", "tendonkin.cli", "run", "--assert",
         "--config", cfg_path, "--out", out_dir],
        capture_output=True, text=True,
    )


@pytest.fixture(scope="session")
def correct_runs(tmp_path_factory):
    """Two identical desk-scale correct-model CLI runs (determinism)."""
    dirs = [str(tmp_path_factory.mktemp(f"desk_correct_{i}")) for i in (1, 2)]
    procs = [_cli_run({"analytical": "correct"}, d) for d in dirs]
    for p in procs:
        assert p.returncode == 0, p.stderr
    with open(os.path.join(dirs[0], "report.json"), encoding="utf-8") as fh:
        report = json.load(fh)
    return dirs, report


@pytest.fixture(scope="session")
def wrong_run(tmp_path_factory):
    """Desk-scale run with the deliberately wrong analytical model."""
    d = str(tmp_path_factory.mktemp("desk_wrong"))
    p = _cli_run({"analytical": "wrong"}, d)
    assert p.returncode == 0, p.stderr
    with open(os.path.join(d, "report.json"), encoding="utf-8") as fh:
        report = json.load(fh)
    return d, report


def _random_gp_instance(rng):
    d = int(rng.integers(1, 5))
    n = int(rng.integers(5, 51))
    X = rng.uniform(-2.0, 2.0, size=(d, n))
    spec = gp.KernelSpec(
        signal_variance=float(rng.uniform(0.5, 2.0)),
        lengthscales=rng.uniform(0.5, 2.0, size=d),
        noise_variance=float(rng.uniform(0.1, 0.5)),
    )
    y = rng.normal(0.0, 1.0, size=n)
    return X, y, spec


class TestGpRegression:
    def test_predictions_match_dense_inverse_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            X, y, spec = _random_gp_instance(rng)
            model = gp.fit(X, y, spec)
            # independent dense-matrix evaluation of the posterior
            eff = spec.noise_variance + gp.JITTER_REL * spec.signal_variance
            K = gp.kernel_matrix(spec, X, X) + eff * np.eye(X.shape[1])
            Kinv = np.linalg.inv(K)
            Xs = rng.uniform(-2.5, 2.5, size=(X.shape[0], 7))
            mu, var = gp.predict_batch(model, Xs)
            for j in range(Xs.shape[1]):
                ks = gp.kernel_matrix(spec, X, Xs[:, [j]])[:, 0]
                mu_o = ks @ Kinv @ y
                var_o = spec.signal_variance - ks @ Kinv @ ks
                assert abs(mu[j] - mu_o) < 1e-8
                assert abs(var[j] - var_o) < 1e-8

    def test_noise_free_interpolation_at_training_points(self):
        # Noise-free interpolation presumes an invertible Gram matrix;
        # random smooth instances are routinely singular to double
        # precision (smallest eigenvalue below roundoff), where no
        # implementation can interpolate.  Keep well-posed draws only.
        rng = np.random.default_rng(7)
        accepted = 0
        while accepted < 20:
            X, y, spec = _random_gp_instance(rng)
            spec = replace(spec, noise_variance=0.0)
            K = gp.kernel_matrix(spec, X, X)
            if np.linalg.eigvalsh(K).min() < 1e-3 * spec.signal_variance:
                continue
            accepted += 1
            model = gp.fit(X, y, spec)
            mu, _ = gp.predict_batch(model, X)
            assert np.max(np.abs(mu - y)) < 1e-6


class TestMarginalLikelihood:
    def test_value_matches_dense_logdet_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            X, y, spec = _random_gp_instance(rng)
            model = gp.fit(X, y, spec)
            eff = spec.noise_variance + gp.JITTER_REL * spec.signal_variance
            Ky = gp.kernel_matrix(spec, X, X) + eff * np.eye(X.shape[1])
            _, logdet = np.linalg.slogdet(Ky)
            lml_o = -0.5 * (
                y @ np.linalg.solve(Ky, y)
                + logdet
                + len(y) * np.log(2.0 * np.pi)
            )
            assert abs(gp.log_marginal_likelihood(model) - lml_o) < 1e-8

    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(13)
        for _ in range(5):
            X, y, spec = _random_gp_instance(rng)
            model = gp.fit(X, y, spec)
            grad = gp.lml_gradient(model)
            theta = np.log(np.concatenate(
                [[spec.signal_variance], spec.lengthscales,
                 [spec.noise_variance]]
            ))
            h = 1e-6
            for i in range(theta.shape[0]):
                tp, tm = theta.copy(), theta.copy()
                tp[i] += h
                tm[i] -= h
                def lml_at(t):
                    s = gp.KernelSpec(
                        signal_variance=float(np.exp(t[0])),
                        lengthscales=np.exp(t[1:-1]),
                        noise_variance=float(np.exp(t[-1])),
                    )
                    return gp.log_marginal_likelihood(gp.fit(X, y, s))
                fd = (lml_at(tp) - lml_at(tm)) / (2.0 * h)
                denom = max(abs(fd), 1e-8)
                assert abs(grad[i] - fd) / denom < 1e-4


class TestBacklashPlant:
    def test_triangle_wave_loop_width_equals_backlash(self):
        chain = default_microiges_chain()
        amp, n = 0.5, 1000
        up = np.linspace(-amp, amp, 2 * n + 1)
        tri = np.concatenate([up, up[-2::-1]])
        plant = PlantState.centered(np.zeros(4))
        cmds, lags = [], []
        for v in np.concatenate([tri, tri]):  # second cycle is steady state
            plant, _ = plant_step(chain, plant, np.array([0.0, v, 0.0, 0.0]), 1e-3)
            cmds.append(v)
            lags.append(plant.joint_lag[1])
        cmds, lags = np.array(cmds), np.array(lags)
        half = len(tri)
        sel = np.arange(len(cmds)) >= half
        iz_up = np.where(sel & (np.gradient(cmds) > 0) & (np.abs(cmds) < 1e-12))[0]
        iz_dn = np.where(sel & (np.gradient(cmds) < 0) & (np.abs(cmds) < 1e-12))[0]
        width = lags[iz_dn[0]] - lags[iz_up[0]]
        assert width == pytest.approx(DEFAULT_BACKLASH, abs=1e-9)

    def test_rate_independence_under_resampling(self):
        chain = default_microiges_chain()
        rng = np.random.default_rng(21)
        knots = rng.uniform(-0.5, 0.5, size=(12, 4))
        t_knots = np.linspace(0.0, 1.0, 12)
        finals = []
        for n in (101, 201):
            t = np.linspace(0.0, 1.0, n)
            traj = np.stack(
                [np.interp(t, t_knots, knots[:, j]) for j in range(4)], axis=1
            )
            plant = PlantState.centered(traj[0])
            for row in traj:
                plant, pos = plant_step(chain, plant, row, 1.0 / n)
            finals.append(pos)
        assert np.max(np.abs(finals[0] - finals[1])) < 1e-12


class TestConsistencyLimit:
    def test_degenerate_plant_all_models_agree(self, tmp_path):
        chain = default_microiges_chain()
        ideal = replace(
            chain, backlash_widths=np.zeros(4), hysteresis_gain=np.zeros(4)
        )
        chain_path = tmp_path / "ideal_chain.json"
        chain_path.write_text(chain_to_json(ideal), encoding="utf-8")
        cfg = ExperimentConfig(
            chain_path=str(chain_path), noise_sigma=0.0, dt=0.05,
            n_train=150, restarts=1, maxiter=40, n_hyperopt=150,
            omega_min=0.5, omega_max=1.5, test_motion_T=2.0,
        )
        report = run_experiment(cfg, str(tmp_path / "out"))
        block = report["training_set"]
        for model in ["analytical"] + MODEL_NAMES:
            for ax in AXES:
                assert block[model][ax]["rmse_vs_truth"] <= 1e-6, (
                    f"{model}/{ax}"
                )


class TestVariantOrdering:
    def test_no_prior_variant_is_worst_everywhere(self, correct_runs):
        _, report = correct_runs
        for block_name in ("training_set", "test_motion"):
            block = report[block_name]
            for ax in AXES:
                np_rmse = block["GP_np"][ax]["rmse_vs_truth"]
                others = max(
                    block["GP_eps"][ax]["rmse_vs_truth"],
                    block["GP_p"][ax]["rmse_vs_truth"],
                )
                assert np_rmse >= others, f"{block_name}/{ax}"

    def test_error_learning_at_least_ties_prior_mean(self, correct_runs):
        _, report = correct_runs
        for block_name in ("training_set", "test_motion"):
            block = report[block_name]
            wins = sum(
                block["GP_eps"][ax]["rmse_vs_truth"]
                <= block["GP_p"][ax]["rmse_vs_truth"]
                for ax in AXES
            )
            assert wins >= 2, f"{block_name}: {wins}/3 axes"


class TestHybridImprovement:
    def test_hybrid_not_worse_with_correct_model(self, correct_runs):
        _, report = correct_runs
        block = report["test_motion"]
        for v in GP_VARIANTS:
            h = HYBRID_OF[v]
            for ax in AXES:
                assert (
                    block[h][ax]["rmse_vs_truth"]
                    <= 1.05 * block[v][ax]["rmse_vs_truth"]
                ), f"{h}/{ax}"


class TestHybridSafety:
    def test_max_error_not_increased_with_wrong_model(self, wrong_run):
        _, report = wrong_run
        block = report["training_set"]
        for v in GP_VARIANTS:
            h = HYBRID_OF[v]
            for ax in AXES:
                assert (
                    block[h][ax]["max_abs_error"]
                    <= block[v][ax]["max_abs_error"] + 1e-9
                ), f"{h}/{ax}"


class TestWeightLaw:
    def test_randomized_tuples(self):
        rng = np.random.default_rng(99)
        for _ in range(10_000):
            P_d = rng.normal(0.0, 0.02, size=3)
            P_a = P_d + rng.normal(0.0, 0.005, size=3)
            s2 = rng.uniform(0.0, 1e-4, size=3)
            if rng.random() < 0.1:
                s2[rng.integers(0, 3)] = 0.0
            if rng.random() < 0.1:
                P_a = P_d.copy()
            thr = rng.uniform(1e-4, 1e-2, size=3)
            cfg = WeightConfig(thr)
            W = weight(P_d, P_a, s2, cfg)
            assert np.all(W >= 0.0) and np.all(W <= 1.0)
            e = np.abs(P_d - P_a)
            for i in range(3):
                if s2[i] == 0.0:
                    assert W[i] == (1.0 if e[i] == 0.0 else 0.0)
                else:
                    expected = np.exp(-e[i] ** 3 / (thr[i] * s2[i]))
                    assert abs(W[i] - expected) <= 1e-12
            # monotonicity: larger error -> no larger weight
            W2 = weight(P_d, P_a + 1.5 * (P_a - P_d), s2, cfg)
            assert np.all(W2 <= W + 1e-15)
            # monotonicity: larger variance -> no smaller weight
            W3 = weight(P_d, P_a, 2.0 * s2, cfg)
            assert np.all(W3 >= W - 1e-15)

    def test_anchor_point(self):
        cfg = WeightConfig(np.array([1e-3, 1e-3, 1e-3]))
        rng = np.random.default_rng(3)
        for _ in range(100):
            e = rng.uniform(1e-4, 1e-2, size=3)
            s2 = e**3 / cfg.thresholds  # exponent is exactly -1
            W = weight(np.zeros(3), e, s2, cfg)
            assert np.max(np.abs(W - np.exp(-1.0))) <= 1e-12


class TestNoiseRecovery:
    def test_fitted_noise_within_factor_two(self, correct_runs):
        _, report = correct_runs
        injected = report["config"]["noise_sigma"]
        assert injected == 0.01
        for name in ("GP_eps", "GP_p", "GP_np"):
            for s in report["fitted_noise_std"][name]:
                assert injected / 2.0 <= s <= injected * 2.0, f"{name}: {s}"


class TestLemniscateTracking:
    def test_closed_loop_reproduces_path(self):
        chain = default_microiges_chain()
        path = LemniscatePath()
        t, theta = lemniscate_to_motors(chain, path, dt=0.05)
        x, y, _ = lemniscate(path, t)
        z = np.zeros(chain.n_motors)
        tip = np.array([
            analytical_model(chain, MotorState(theta[k], z, z, z, z))
            for k in range(t.shape[0])
        ])
        assert np.max(np.abs(tip[:, 0] - x)) < 1e-6
        assert np.max(np.abs(tip[:, 1] - y)) < 1e-6
        assert abs(tip[-1, 0] - tip[0, 0]) < 1e-9
        assert abs(tip[-1, 1] - tip[0, 1]) < 1e-9


class TestDeterminism:
    def test_repeated_cli_runs_byte_identical(self, correct_runs):
        dirs, _ = correct_runs
        with open(os.path.join(dirs[0], "report.json"), "rb") as fh:
            b1 = fh.read()
        with open(os.path.join(dirs[1], "report.json"), "rb") as fh:
            b2 = fh.read()
        assert b1 == b2


class TestPlotScripts:
    @pytest.mark.parametrize("module", ["comparison", "errors"])
    def test_renders_acceptance_plotdata(self, correct_runs, tmp_path, module):
        dirs, _ = correct_runs
        csv = os.path.join(dirs[0], "plotdata_test.csv")
        out = tmp_path / module
        p = subprocess.run(
            [sys.executable, "-m", f"tendonkin_plots.{module}",
             csv, str(out) + os.sep],
            capture_output=True, text=True,
        )
        assert p.returncode == 0, p.stderr
        for ax in AXES:
            f = out / f"{module}_{ax}.png"
            assert f.exists() and f.stat().st_size > 0

    def test_schema_violation_exits_nonzero(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,ref_x\n0.0,1.0\n", encoding="utf-8")
        p = subprocess.run(
            [sys.executable, "-m", "tendonkin_plots.comparison",
             str(bad), str(tmp_path / "figs") + os.sep],
            capture_output=True, text=True,
        )
        assert p.returncode != 0
        assert "ref_y" in p.stderr
