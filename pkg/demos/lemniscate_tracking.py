"""Solve motor commands that trace a figure-eight (lemniscate) with the
tip while the roll joint sweeps, then verify the closed loop.

Run:  python3 demos/lemniscate_tracking.py   (a few seconds)
"""

import numpy as np

from tendonkin.experiment import lemniscate_to_motors
from tendonkin.kinematics import MotorState, analytical_model, default_microiges_chain
from tendonkin.trajectories import LemniscatePath, lemniscate

chain = default_microiges_chain()
path = LemniscatePath()  # 6 mm lobes in the plane of the resting tip
print(f"path: scale {path.scale*1e3:.1f} mm, duration {path.T:.1f} s, "
      f"final roll {np.degrees(path.alpha_f):.0f} deg")

t, theta = lemniscate_to_motors(chain, path, dt=0.05)
x, y, _ = lemniscate(path, t)

# Forward-evaluate the solved commands and compare against the target.
zeros = np.zeros(chain.n_motors)
tip = np.array([analytical_model(chain, MotorState(th, zeros, zeros, zeros, zeros))
                for th in theta])
err = np.hypot(tip[:, 0] - x, tip[:, 1] - y)

print(f"samples: {len(t)}")
print(f"worst xy tracking error: {err.max():.2e} m")
print(f"path closure |tip(T) - tip(0)|: "
      f"{np.hypot(tip[-1, 0] - tip[0, 0], tip[-1, 1] - tip[0, 1]):.2e} m")
print(f"peak bend commands (rad): {np.abs(theta[:, 1:]).max(axis=0)}")
