"""Train the three data-driven variants on a small excitation dataset and
compare them against the analytical model and their hybrid fusions.

The three variants differ only in what the underlying GP learns:
  - error learning: the residual between measurements and the analytical
    model (the correction is added back at prediction time);
  - analytical prior: raw positions with the analytical model as the
    GP's prior mean;
  - no prior: raw positions with a constant (sample-mean) prior.

Run:  python3 demos/gp_variants_walkthrough.py   (about a minute)
"""

import numpy as np

from tendonkin.dataset import generate_dataset, subsample
from tendonkin.hybrid import (
    HybridModel,
    SIM_THRESHOLDS,
    VariantKind,
    hybrid_predict_batch,
    predict_data_driven_batch,
    train_variant,
)
from tendonkin.kinematics import default_microiges_chain
from tendonkin.metrics import rmse
from tendonkin.trajectories import fit_chirp_amplitudes, motion_combinations

chain = default_microiges_chain()

# A few chirp excitations with different active-motor masks, simulated
# through the backlash plant with camera-like measurement noise.
masks = motion_combinations(chain.n_motors)[:4]
chirps = [fit_chirp_amplitudes(chain, m, seed=i, omega_min=0.3)
          for i, m in enumerate(masks)]
full = generate_dataset(chain, chirps, dt=0.02, noise_sigma=0.01, seed=0)
train = subsample(full, 300, seed=1)
print(f"collected {len(full)} samples, training on {len(train)}")

X = train.states_flat()
truth = train.p_true

print(f"\n{'model':<16}" + "".join(f"{ax:>12}" for ax in "xyz") + "   (RMSE, m)")
for kind in VariantKind:
    model = train_variant(kind, train, chain, restarts=2, seed=100)
    P, V = predict_data_driven_batch(model, X)
    row = rmse(P, truth)
    print(f"{kind.value:<16}" + "".join(f"{v:12.2e}" for v in row))

    hybrid = HybridModel(model, chain, SIM_THRESHOLDS)
    row_h = rmse(hybrid_predict_batch(hybrid, X), truth)
    print(f"  + hybrid     " + "".join(f"{v:12.2e}" for v in row_h))

from tendonkin.hybrid import _analytical_batch

row_a = rmse(_analytical_batch(chain, X), truth)
print(f"{'analytical':<16}" + "".join(f"{v:12.2e}" for v in row_a))
