"""
Blue-sideband pumping: amplification, threshold and entanglement
================================================================

Pumping above the optical resonance creates photon pairs, one optical and
one microwave.  Below threshold the steady state is entangled.
"""

import math

import numpy as np
from scipy import optimize

from cavity_eo.closed_form import pa_threshold
from cavity_eo.gaussian import log_negativity, occupation, steady_state, two_mode_squeezed_vacuum
from cavity_eo.params import ModeSpec
from cavity_eo.systems import Regime, ScenarioConfig, build_system

two_pi = 2 * math.pi
g, gamma_a, gamma_b = two_pi * 5e3, two_pi * 40e6, two_pi * 9e6


def system(C):
    alpha = math.sqrt(C * gamma_a * gamma_b / (4 * g * g))
    cfg = ScenarioConfig(Regime.PARAMETRIC_AMP, g, ModeSpec(1.2e15, gamma_a, 0.0),
                         ModeSpec(two_pi * 9e9, gamma_b, 0.0), alpha_plus=alpha)
    return build_system(cfg), alpha


# %%
# The drift loses stability exactly where the cooperativity reaches one.
root = optimize.brentq(lambda C: system(C)[0].max_real_eigenvalue(), 0.5, 1.5, xtol=1e-14)
alpha = system(root)[1]
print(f"largest eigenvalue crosses zero at C+ = {pa_threshold(g, alpha**2, gamma_a, gamma_b):.12f}")

# %%
# Below threshold, both modes fill with pairs and become entangled.
print(" C+    n_a      n_b      E_N")
for C in np.linspace(0.1, 0.9, 5):
    st = steady_state(system(C)[0]).state
    print(f"{C:.1f}  {occupation(st, 'a'):.4f}  {occupation(st, 'b'):.4f}  "
          f"{log_negativity(st, ('a', 'b')):.4f}")

# %%
# Sanity check on a pure two-mode squeezed state, where E_N = 2r.
print("E_N of a squeezed vacuum with r = 0.4:", round(log_negativity(two_mode_squeezed_vacuum(0.4), ("a", "b")), 12))

# %%
# Above threshold there is no steady state.
rep = steady_state(system(1.2)[0])
print("C+ = 1.2 stable?", rep.stable, f"(max Re eigenvalue {rep.max_drift_eigenvalue_real_part:.3e} /s)")
