"""Run the complete pipeline at a reduced scale: excitation data through
the backlash plant, the three GP variants plus hybrids, and the report.

The same thing is available from the command line:

    tendonkin run --out out/demo
    tendonkin-plot-comparison out/demo/plotdata_test.csv out/demo/figs/

Run:  python3 demos/full_pipeline_demo.py   (about a minute)
"""

import os

from tendonkin.experiment import ExperimentConfig, run_experiment

cfg = ExperimentConfig(
    dt=0.05,           # coarser sampling than the full benchmark
    n_train=200,
    restarts=1,
    maxiter=40,
    n_hyperopt=150,
    omega_min=0.5,     # shorter chirps (duration scales as 1/omega_min)
    omega_max=1.5,
    test_motion_T=2.0,
)

out = os.path.join("out", "demo")
report = run_experiment(cfg, out)

print(f"collected {report['n_collected']} samples, trained on {report['n_train']}")
print("fitted per-axis noise std (m):")
for name, stds in report["fitted_noise_std"].items():
    print(f"  {name:<8}" + "".join(f"{s:10.4f}" for s in stds))

print("\nRMSE vs ground truth on the held-out test motion (m):")
block = report["test_motion"]
models = ["analytical", "GP_eps", "GP_p", "GP_np", "Hyb_eps", "Hyb_p", "Hyb_np"]
print(f"{'model':<12}" + "".join(f"{ax:>12}" for ax in "xyz"))
for m in models:
    vals = [block[m][ax]["rmse_vs_truth"] for ax in "xyz"]
    print(f"{m:<12}" + "".join(f"{v:12.2e}" for v in vals))

print(f"\nfull artifacts in {out}/ (report.json, report.md, plotdata_*.csv)")
