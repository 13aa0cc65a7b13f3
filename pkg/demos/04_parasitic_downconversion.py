"""
When the next optical mode gets in the way
==========================================

The optical resonator has a whole ladder of modes.  Pumping the central
one lets the mode above do the cooling, but the mode below pairs up with
the microwave and heats it.  The imbalance sets a floor on cooling.
"""

import math

import numpy as np

from cavity_eo.closed_form import optimal_parasitic_detuning, parasitic_figures, parasitic_gain_shape
from cavity_eo.gaussian import occupation, steady_state
from cavity_eo.params import ModeSpec, PumpConfig, angular_from_wavelength, detuning_for_mu
from cavity_eo.systems import Regime, ScenarioConfig, build_system

two_pi = 2 * math.pi
gamma_a, gamma_b = two_pi * 40e6, two_pi * 40.0
g, N_b = two_pi * 5e3, 10.0

# %%
# Push the cooperativity up at fixed mu = 0.5 and the occupation stalls at mu.
delta = detuning_for_mu(0.5, gamma_a)
print(" Gamma0     closed form   6x6 solve")
for Gamma0 in np.logspace(-1, 3, 5):
    alpha0 = math.sqrt(Gamma0 * gamma_a * gamma_b) / (2 * g)
    cfg = ScenarioConfig(Regime.PARASITIC_THREE_MODE, g, ModeSpec(1.2e15, gamma_a, 0.0),
                         ModeSpec.with_occupation(two_pi * 9e9, gamma_b, N_b),
                         alpha0=alpha0, delta=delta)
    pf = parasitic_figures(g, alpha0**2, gamma_a, gamma_b, delta, N_b)
    n_ly = occupation(steady_state(build_system(cfg)).state, "b")
    print(f"{Gamma0:8.1f}   {pf.n_ss:10.4f}   {n_ly:9.4f}")

# %%
# At fixed pump power the intracavity field falls off with detuning, so the
# effective cooperativity peaks in between.
mu = np.array([0.05, 0.2, 0.5, 1.0, 3.0])
for m, s in zip(mu, parasitic_gain_shape(mu)):
    print(f"mu = {m:4.2f}  relative Gamma = {s:.4f}")

# %%
# With a hot bath the optimum is right at mu = 1/2.
opt = optimal_parasitic_detuning(PumpConfig(2e-3, angular_from_wavelength(1550e-9)), two_pi * 20,
                                 gamma_a, two_pi * 90e6, 1e6)
print(f"optimal detuning {opt.delta_opt / two_pi / 1e6:.3f} MHz, mu = {opt.mu_opt:.5f}")
