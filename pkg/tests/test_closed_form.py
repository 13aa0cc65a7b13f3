import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from cavity_eo.closed_form import (
    ConvergenceError, cooling_figures, cooling_limit, cooperativity, optimal_parasitic_detuning,
    parasitic_figures, parasitic_gain_shape, pa_threshold,
)
from cavity_eo.gaussian import occupation, steady_state
from cavity_eo.params import (
    InvalidParameterError, ModeSpec, PumpConfig, angular_from_wavelength, detuning_for_mu,
    pump_photon_number,
)
from cavity_eo.systems import (
    Regime, ScenarioConfig, ZeroDetuningError, build_parametric_system, build_parasitic_system,
)

TWO_PI = 2 * math.pi
GA = TWO_PI * 40e6
GB = TWO_PI * 90e6
OMEGA_A = angular_from_wavelength(1550e-9)


def feasibility_alpha_sq():
    pump = PumpConfig(2e-3, OMEGA_A, detuning_for_mu(0.5, GA))
    return pump_photon_number(pump, GA)


def test_feasibility_baseline_gain():
    f = cooling_figures(TWO_PI * 20, feasibility_alpha_sq(), GA, GB, 0.0, 694.0)
    assert f.G == pytest.approx(2e-5, rel=0.2)
    assert f.G0 == pytest.approx(7.36e-5, rel=0.01)


def test_feasibility_improved_gain_and_limit():
    f = cooling_figures(TWO_PI * 5e3, feasibility_alpha_sq(), GA, GB, 0.0, 694.0)
    assert f.G == pytest.approx(0.3, rel=0.2)
    assert cooling_limit(GA, GB) == pytest.approx(0.44, abs=0.01)
    huge = cooling_figures(1.0, 1e6 * GA * GB / 4, GA, GB, 0.0, 1.0)
    assert huge.G0 == pytest.approx(1e6)
    assert huge.G == pytest.approx(cooling_limit(GA, GB), rel=0.01)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(0, 1e6), st.floats(1.0001, 10.0))
def test_cooling_gain_monotone_and_bounded(ga, gb, G0, k):
    def G(c):
        return cooling_figures(1.0, c * ga * gb / 4, ga, gb, 0.0, 0.0).G
    assert G(G0) <= G(k * G0) <= cooling_limit(ga, gb)


@given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0, 1e6))
def test_cooling_never_below_cold_reservoir(Na, extra, G0):
    Nb = Na + extra
    n = cooling_figures(1.0, G0 / 4, 1.0, 1.0, Na, Nb).n_ss
    assert n >= Na * (1 - 1e-12)
    assert n <= Nb * (1 + 1e-12)


def test_cooling_rejects_bad_inputs():
    with pytest.raises(InvalidParameterError):
        cooling_figures(1.0, 1.0, 0.0, 1.0, 0.0, 0.0)
    with pytest.raises(InvalidParameterError):
        cooling_figures(1.0, 1.0, 1.0, 1.0, -1.0, 0.0)


def lyapunov_parasitic_n(g, alpha0, ga, gb, delta, Nb):
    cfg = ScenarioConfig(Regime.PARASITIC_THREE_MODE, g, ModeSpec.with_occupation(1e3, ga, 0.0),
                         ModeSpec.with_occupation(1.0, gb, Nb), alpha0=alpha0, delta=delta)
    return occupation(steady_state(build_parasitic_system(cfg)).state, "b")


def test_parasitic_limits():
    f = parasitic_figures(0.0, 1.0, 1.0, 1e-3, 0.3, 7.0)
    assert f.n_ss == 7.0 and f.Gamma == 0.0
    big = parasitic_figures(1.0, 1e12, 1.0, 1e-3, detuning_for_mu(0.5, 1.0), 7.0)
    assert big.mu == pytest.approx(0.5)
    assert big.n_ss == pytest.approx(0.5, rel=1e-6)
    with pytest.raises(ZeroDetuningError):
        parasitic_figures(1.0, 1.0, 1.0, 1.0, 0.0, 0.0)


def test_parasitic_validity_flags():
    ok = parasitic_figures(1.0, 1e-6, 1.0, 1e-3, 1.0, 1.0)
    assert ok.valid and ok.warnings == ()
    bad = parasitic_figures(1.0, 1.0, 1.0, 0.5, 1.0, 1.0)
    assert not bad.valid and len(bad.warnings) == 2


def test_parasitic_error_shrinks_by_decades():
    ga, Nb, mu = 1.0, 10.0, 0.5
    delta = detuning_for_mu(mu, ga)
    errors = []
    for eps in (1e-1, 1e-2, 1e-3):
        g, alpha0, gb = 1.0, eps * ga / 2, eps * ga
        closed = parasitic_figures(g, alpha0**2, ga, gb, delta, Nb).n_ss
        exact = lyapunov_parasitic_n(g, alpha0, ga, gb, delta, Nb)
        errors.append(abs(closed - exact) / exact)
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-2


def test_gain_shape_peaks_at_half():
    # derivative numerator of mu/((1+4mu)(1+mu)) is 1 - 4 mu^2
    res = optimize.minimize_scalar(lambda m: -parasitic_gain_shape(m), bounds=(0.01, 10),
                                   method="bounded", options={"xatol": 1e-10})
    assert res.x == pytest.approx(0.5, abs=1e-6)
    mu = np.linspace(0.05, 3, 50)
    h = 1e-6
    deriv = (parasitic_gain_shape(mu + h) - parasitic_gain_shape(mu - h)) / (2 * h)
    sign = np.sign(1 - 4 * mu**2)
    assert np.all(np.sign(deriv) == sign)


@pytest.mark.parametrize("g_hz", [20.0, 5e3])
def test_optimal_detuning_large_bath(g_hz):
    # bath-dominated: Gamma mu << N_b, so maximizing Gamma is all that matters
    pump = PumpConfig(2e-3, OMEGA_A)
    opt = optimal_parasitic_detuning(pump, TWO_PI * g_hz, GA, GB, 1e6)
    assert opt.mu_opt == pytest.approx(0.5, abs=1e-3)
    assert opt.delta_opt == pytest.approx(detuning_for_mu(opt.mu_opt, GA))


def test_optimal_detuning_moves_when_gain_rivals_bath():
    pump = PumpConfig(2e-3, OMEGA_A)
    opt = optimal_parasitic_detuning(pump, TWO_PI * 5e3, GA, TWO_PI * 40, 1e6)
    assert opt.mu_opt < 0.4


@pytest.mark.parametrize("Nb", [0.01, 10.0])
def test_optimal_detuning_matches_brute_force(Nb):
    pump = PumpConfig(2e-3, OMEGA_A)
    g, gb = TWO_PI * 5e3, TWO_PI * 40

    def n_of(delta):
        a2 = pump_photon_number(PumpConfig(pump.power, pump.omega, delta), GA)
        return parasitic_figures(g, a2, GA, gb, delta, Nb).n_ss

    grid = np.exp(np.linspace(math.log(GA / 100), math.log(100 * GA), 200_001))
    brute = grid[np.argmin([n_of(d) for d in grid])]
    opt = optimal_parasitic_detuning(pump, g, GA, gb, Nb)
    assert opt.delta_opt == pytest.approx(brute, rel=1e-4)
    assert opt.n_min <= n_of(brute) * (1 + 1e-12)


def test_optimal_detuning_without_bath_has_no_interior_minimum():
    # with N_b = 0, n = Gamma mu/(1+Gamma) keeps falling as delta grows
    with pytest.raises(ConvergenceError):
        optimal_parasitic_detuning(PumpConfig(2e-3, OMEGA_A), TWO_PI * 5e3, GA, TWO_PI * 40, 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_pa_threshold_coincides_with_eigenvalue_crossing(seed):
    rng = np.random.default_rng(seed)
    ga, gb, g = 10 ** rng.uniform(-2, 2, size=3)

    def max_re(alpha):
        cfg = ScenarioConfig(Regime.PARAMETRIC_AMP, g, ModeSpec(1e3, ga), ModeSpec(1.0, gb),
                             alpha_plus=alpha)
        return build_parametric_system(cfg).max_real_eigenvalue()

    a_star = math.sqrt(ga * gb) / (2 * g)
    root = optimize.brentq(max_re, 0.5 * a_star, 2 * a_star, xtol=1e-14 * a_star, rtol=1e-14)
    assert pa_threshold(g, root**2, ga, gb) == pytest.approx(1.0, rel=1e-6)
    assert cooperativity(g, root**2, ga, gb) == pa_threshold(g, root**2, ga, gb)
