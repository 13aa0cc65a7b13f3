"""
Cooling a microwave resonator with red-sideband light
=====================================================

A pump one microwave frequency below the optical resonance up-converts
microwave quanta into optical photons, which leak out cold.  We compare
the analytic steady occupation with the full two-mode covariance solve.
"""

import math

import numpy as np

from cavity_eo.closed_form import cooling_figures, cooling_limit
from cavity_eo.gaussian import evolve_covariance, occupation, steady_state, thermal_state
from cavity_eo.params import (
    ModeSpec, PumpConfig, angular_from_wavelength, detuning_for_mu, pump_photon_number,
    thermal_occupation,
)
from cavity_eo.systems import Regime, ScenarioConfig, build_system

two_pi = 2 * math.pi
gamma_a, gamma_b = two_pi * 40e6, two_pi * 90e6
omega_a, omega_b = angular_from_wavelength(1550e-9), two_pi * 9e9

# %%
# 2 mW of pump, detuned so that mu = 0.5.
pump = PumpConfig(2e-3, omega_a, detuning_for_mu(0.5, gamma_a))
alpha_sq = pump_photon_number(pump, gamma_a)
N_b = thermal_occupation(omega_b, 300.0)
print(f"intracavity photons |alpha|^2 = {alpha_sq:.3e}")
print(f"room-temperature microwave occupation N_b = {N_b:.1f}")

for g_hz in (20.0, 5e3):
    f = cooling_figures(two_pi * g_hz, alpha_sq, gamma_a, gamma_b, 0.0, N_b)
    print(f"g = 2 pi x {g_hz:6.0f} Hz: G0 = {f.G0:.3e}, G = {f.G:.3e}, n_ss = {f.n_ss:.1f}")
print(f"no pump power can push G past gamma_a/gamma_b = {cooling_limit(gamma_a, gamma_b):.3f}")

# %%
# Lower-loss microwave resonator: the same pump now cools by orders of magnitude.
gamma_b = two_pi * 10e3
cfg = ScenarioConfig(Regime.COOLING, two_pi * 5e3, ModeSpec(omega_a, gamma_a, 300.0),
                     ModeSpec(omega_b, gamma_b, 300.0), alpha_minus=math.sqrt(alpha_sq))
system = build_system(cfg)
n_ly = occupation(steady_state(system).state, "b")
f = cooling_figures(cfg.g, alpha_sq, gamma_a, gamma_b, cfg.optical.occupation, N_b)
print(f"closed form n_ss = {f.n_ss:.6f}, covariance solve = {n_ly:.6f}")

# %%
# Switch the pump on at t = 0.  Here g|alpha| is well above gamma_a/4, so
# excitations swap between the two modes a few times while draining away.
traj = evolve_covariance(system, thermal_state(system.basis, [0.0, N_b]), 2e-9, 60)
nb = np.array([occupation(s, "b") for s in traj])
for k in range(0, 61, 6):
    print(f"t = {traj.times[k] * 1e9:6.1f} ns  n_b = {nb[k]:8.3f}")
print("steps where n_b rises:", int(np.sum(np.diff(nb) > 0)), "of", len(nb) - 1)
print(f"relative gap to steady state at the end: {abs(nb[-1] / n_ly - 1):.1e}")
