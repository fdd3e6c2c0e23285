"""Walk through the backlash plant: drive one motor with a triangle wave
and watch the joint trace out a parallelogram hysteresis loop.

Run:  python3 demos/backlash_hysteresis.py
"""

import numpy as np

from tendonkin.kinematics import (
    DEFAULT_BACKLASH,
    PlantState,
    default_microiges_chain,
    plant_step,
)

chain = default_microiges_chain()
print(f"chain: {chain.n_motors} motors, {chain.n_joints} joints, "
      f"reach {chain.reach:.3f} m")
print(f"backlash width per motor: {DEFAULT_BACKLASH} rad")

# Two cycles of a symmetric triangle wave on the first elbow motor; the
# first cycle consumes the initial deadband, the second is steady state.
amp = 0.5
quarter = np.linspace(-amp, amp, 2001)
triangle = np.concatenate([quarter, quarter[-2::-1]])
command = np.concatenate([triangle, triangle])

plant = PlantState.centered(np.zeros(4))
lag = np.empty_like(command)
for k, v in enumerate(command):
    plant, _ = plant_step(chain, plant, np.array([0.0, v, 0.0, 0.0]), 1e-3)
    lag[k] = plant.joint_lag[1]

# Measure the loop width where the command crosses zero in each direction.
half = len(triangle)
steady = np.arange(len(command)) >= half
rising = steady & (np.gradient(command) > 0) & (np.abs(command) < 1e-12)
falling = steady & (np.gradient(command) < 0) & (np.abs(command) < 1e-12)
width = lag[np.where(falling)[0][0]] - lag[np.where(rising)[0][0]]

print(f"measured loop width at zero crossing: {width:.6f} rad")
print(f"difference from backlash width:       {abs(width - DEFAULT_BACKLASH):.2e} rad")

# The operator is rate independent: replaying the same command at a
# different sampling density lands the joint in the same place.
fine = np.interp(np.linspace(0, 1, 4 * len(command)),
                 np.linspace(0, 1, len(command)), command)
plant2 = PlantState.centered(np.zeros(4))
for v in fine:
    plant2, _ = plant_step(chain, plant2, np.array([0.0, v, 0.0, 0.0]), 1e-3)
print(f"final joint lag, coarse vs fine sampling: "
      f"{lag[-1]:.9f} vs {plant2.joint_lag[1]:.9f}")
