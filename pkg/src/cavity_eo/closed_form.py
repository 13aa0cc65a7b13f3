"""Analytic cooling, parasitic-floor and threshold formulas."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .params import PumpConfig, pump_photon_number, InvalidParameterError
from .systems import ZeroDetuningError

__all__ = [
    "CoolingFigures",
    "ParasiticFigures",
    "OptimalDetuning",
    "ConvergenceError",
    "cooperativity",
    "cooling_figures",
    "cooling_limit",
    "parasitic_figures",
    "parasitic_gain_shape",
    "optimal_parasitic_detuning",
    "pa_threshold",
]

# Ratios above this mark the three-mode approximation as outside its regime.
VALIDITY_RATIO = 0.1


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class CoolingFigures:
    G0: float
    G: float
    n_ss: float


@dataclass(frozen=True)
class ParasiticFigures:
    Gamma0: float
    Gamma: float
    mu: float
    n_ss: float
    valid: bool = True
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class OptimalDetuning:
    delta_opt: float
    mu_opt: float
    n_min: float


def _positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise InvalidParameterError(f"{k} must be positive, got {v!r}")


def cooperativity(g, alpha_sq, gamma_a, gamma_b):
    """4 g^2 |alpha|^2 / (gamma_a gamma_b)."""
    return 4.0 * g**2 * alpha_sq / (gamma_a * gamma_b)


def cooling_figures(g, alpha_minus_sq, gamma_a, gamma_b, N_a, N_b) -> CoolingFigures:
    """Red-sideband cooling: effective gain G and steady microwave occupation.

    G = G0 / (1 + (gamma_b/gamma_a)(1 + G0)),  n = (N_b + G N_a)/(1 + G).
    """
    _positive(gamma_a=gamma_a, gamma_b=gamma_b)
    if N_a < 0 or N_b < 0:
        raise InvalidParameterError("occupations must be >= 0")
    G0 = cooperativity(g, alpha_minus_sq, gamma_a, gamma_b)
    G = G0 / (1.0 + (gamma_b / gamma_a) * (1.0 + G0))
    return CoolingFigures(G0, G, (N_b + G * N_a) / (1.0 + G))


def cooling_limit(gamma_a, gamma_b) -> float:
    """Saturated value of G for unbounded pump power."""
    _positive(gamma_a=gamma_a, gamma_b=gamma_b)
    return gamma_a / gamma_b


def parasitic_figures(g, alpha0_sq, gamma_a, gamma_b, delta, N_b) -> ParasiticFigures:
    """Cooling through the upper side mode against parasitic down-conversion.

    n = (N_b + Gamma mu)/(1 + Gamma), Gamma = Gamma0/(1 + mu),
    mu = gamma_a^2 / (16 delta^2).  Valid for gamma_b << gamma_a and
    2 g |alpha0| << gamma_a; outside that the result is flagged, not refused.
    """
    if delta == 0:
        raise ZeroDetuningError("mu is undefined at zero detuning")
    _positive(gamma_a=gamma_a, gamma_b=gamma_b)
    Gamma0 = cooperativity(g, alpha0_sq, gamma_a, gamma_b)
    mu = gamma_a**2 / (16.0 * delta**2)
    Gamma = Gamma0 / (1.0 + mu)
    n = (N_b + Gamma * mu) / (1.0 + Gamma)
    warnings = []
    if gamma_b / gamma_a > VALIDITY_RATIO:
        warnings.append(f"gamma_b/gamma_a = {gamma_b / gamma_a:.3g} is not small")
    coupling_ratio = 2.0 * g * math.sqrt(alpha0_sq) / gamma_a
    if coupling_ratio > VALIDITY_RATIO:
        warnings.append(f"2 g |alpha0| / gamma_a = {coupling_ratio:.3g} is not small")
    return ParasiticFigures(Gamma0, Gamma, mu, n, not warnings, tuple(warnings))


def parasitic_gain_shape(mu):
    """Detuning dependence of Gamma at fixed pump power, mu / ((1 + 4 mu)(1 + mu)).

    Peaks at mu = 1/2.
    """
    mu = np.asarray(mu, dtype=float)
    return mu / ((1.0 + 4.0 * mu) * (1.0 + mu))


def optimal_parasitic_detuning(pump: PumpConfig, g, gamma_a, gamma_b, N_b,
                               n_grid: int = 81, rtol: float = 1e-6) -> OptimalDetuning:
    """Detuning that minimizes the steady microwave occupation at fixed pump power.

    The centre-mode photon number follows the pump Lorentzian, so it is
    recomputed for every trial detuning.  A coarse log-spaced scan over
    [gamma_a/100, 100 gamma_a] brackets the minimum, then golden-section
    search refines log(delta).
    """
    _positive(gamma_a=gamma_a, gamma_b=gamma_b)

    def n_of(log_delta):
        delta = math.exp(log_delta)
        alpha0_sq = pump_photon_number(PumpConfig(pump.power, pump.omega, delta), gamma_a)
        return parasitic_figures(g, alpha0_sq, gamma_a, gamma_b, delta, N_b).n_ss

    lo, hi = math.log(gamma_a / 100.0), math.log(100.0 * gamma_a)
    grid = np.linspace(lo, hi, n_grid)
    vals = np.array([n_of(x) for x in grid])
    k = int(np.argmin(vals))
    if k == 0 or k == n_grid - 1:
        raise ConvergenceError(
            f"occupation minimum is at the edge of the detuning search range "
            f"(delta = {math.exp(grid[k]):.4g} rad/s); cannot bracket")
    try:
        res = optimize.minimize_scalar(n_of, bracket=(grid[k - 1], grid[k], grid[k + 1]),
                                       method="golden", tol=rtol)
    except ValueError as exc:
        raise ConvergenceError(f"bracketing failed: {exc}") from exc
    delta = math.exp(res.x)
    return OptimalDetuning(delta, gamma_a**2 / (16.0 * delta**2), float(res.fun))


def pa_threshold(g, alpha_plus_sq, gamma_a, gamma_b) -> float:
    """Parametric cooperativity C+; values >= 1 are at or above oscillation threshold."""
    _positive(gamma_a=gamma_a, gamma_b=gamma_b)
    return cooperativity(g, alpha_plus_sq, gamma_a, gamma_b)
