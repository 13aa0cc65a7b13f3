"""
Electro-optic coupling rate from device geometry
================================================

How strongly does one microwave photon shift the optical resonance?
We start from a whispering-gallery resonator geometry and work out g.
"""

import math

from cavity_eo.params import (
    CONSTANTS, EomDeviceParams, angular_from_wavelength, coupling_rate, hertz,
    phase_per_volt, voltage_zero_point,
)

# %%
# A lithium-niobate-like device: n^3 r = 300 pm/V, a 10 um gap across the
# microwave electrodes and a 1 pF resonator capacitance.  The light spends
# half of each round trip inside the electro-optic medium.
l = 1.5e-3
dev = EomDeviceParams(n=2.0, r=300e-12 / 8, l=l, d=10e-6, tau=2 * l / CONSTANTS.c, C=1e-12,
                      omega_a=angular_from_wavelength(1550e-9), omega_b=2 * math.pi * 9e9)

V0 = voltage_zero_point(dev.omega_b, dev.C)
print(f"zero-point voltage across the capacitor: {V0 * 1e6:.3f} uV")
print(f"optical phase per volt:                  {phase_per_volt(dev):.3e} rad/V")

g = coupling_rate(dev)
print(f"coupling rate g = 2 pi x {hertz(g):.0f} Hz")

# %%
# g is the round-trip phase shift from one zero-point voltage, per round trip.
print("check:", math.isclose(g, phase_per_volt(dev) * V0 / dev.tau, rel_tol=1e-12))

# %%
# Capacitance enters through the zero-point voltage, so halving C only buys sqrt(2).
for C in (0.25e-12, 0.5e-12, 1e-12, 2e-12):
    d2 = EomDeviceParams(**{**dev.__dict__, "C": C})
    print(f"C = {C * 1e12:5.2f} pF -> g = 2 pi x {hertz(coupling_rate(d2)):7.0f} Hz")
