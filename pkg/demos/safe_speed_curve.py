"""
How fast may a car approach a stop line?
========================================

Search the simulator for the highest initial speed that still stops in time,
and compare it with constant-deceleration kinematics.
"""

import numpy as np

from trafficrv import ControllerParams, FaultConfig, estimate_safe_speed

distances = np.array([0.1, 0.5, 1, 2, 5, 10, 20])

# %%
# One row per aggression level; harder braking allows higher speeds.
print("d (m)      " + "".join(f"{d:>7g}" for d in distances))
for level in (1, 2, 3):
    params = ControllerParams(aggression=level)
    curve = np.array([estimate_safe_speed(params, d) for d in distances])
    kinematic = np.sqrt(2 * params.brake * distances)
    print(f"level {level}    " + "".join(f"{v:7.2f}" for v in curve))
    print("  sqrt(2bd) " + "".join(f"{v:7.2f}" for v in kinematic))

# %%
# With the initial burst fault a car 1 cm out crosses even from standstill.
print("\n1 cm, i1 on:", estimate_safe_speed(ControllerParams(), 0.01, FaultConfig.from_names(["i1"])))
