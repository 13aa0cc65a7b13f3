"""
Measuring one quadrature without disturbing it
==============================================

Pumping both sidebands equally couples the light to a single microwave
quadrature X_b.  The measurement back-action lands on Y_b instead.
"""

import math

import numpy as np

from cavity_eo.gaussian import evolve_covariance, vacuum_state
from cavity_eo.oracle import TrajectoryEnsembleSpec, simulate_snapshots
from cavity_eo.params import ModeSpec
from cavity_eo.systems import Regime, ScenarioConfig, build_system

two_pi = 2 * math.pi
gamma_a, g, alpha = two_pi * 40e6, two_pi * 5e3, 2e3
cfg = ScenarioConfig(Regime.BACK_ACTION_EVADING, g, ModeSpec(1.2e15, gamma_a, 0.0),
                     ModeSpec(two_pi * 9e9, two_pi * 9e6, 0.0),
                     alpha_plus=alpha, alpha_minus=alpha, theta_plus=0.3, theta_minus=-0.1)
system = build_system(cfg)
print("X_b row of the drift matrix:", system.drift[system.basis.index("X_b")])

# %%
# 1000 optical lifetimes with the microwave bath switched off.
dt, n = 1 / gamma_a, 1000
traj = evolve_covariance(system, vacuum_state(system.basis), dt, n)
for k in (0, 10, 100, 1000):
    print(f"{k:5d} lifetimes  Var X_b = {traj.variance('X_b')[k]:.12f}  Var Y_b = {traj.variance('Y_b')[k]:9.3f}")
slope = np.polyfit(traj.times[500:], traj.variance("Y_b")[500:], 1)[0]
print(f"Y_b heating rate {slope:.4e} /s, expected 16 g^2 alpha^2/gamma_a = {16 * g**2 * alpha**2 / gamma_a:.4e} /s")

# %%
# The same picture from 2000 stochastic trajectories.
snaps = simulate_snapshots(system, TrajectoryEnsembleSpec(2000, dt, n * dt, seed=1), [n * dt])
for lab in ("X_b", "Y_b"):
    v, se = snaps[0].variance(lab)
    print(f"Monte Carlo Var {lab} = {v:.3f} +- {se:.3f}  (exact {traj.variance(lab)[-1]:.3f})")
