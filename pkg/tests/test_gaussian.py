import io
import json
import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from cavity_eo.gaussian import (
    GaussianState, StepSizeError, UnphysicalStateError, evolve_covariance, log_negativity,
    occupation, propagator, quadrature_variance, solve_lyapunov, steady_state, thermal_state,
    two_mode_squeezed_vacuum, vacuum_state,
)
from cavity_eo.params import ModeSpec
from cavity_eo.systems import (
    LinearQuantumSystem, Regime, ScenarioConfig, StateBasis, build_bae_system, build_cooling_system,
    build_parametric_system, build_system,
)


def scenario(regime, g=1.0, ga=1.0, gb=0.1, Na=0.0, Nb=5.0, **kw):
    return ScenarioConfig(regime, g, ModeSpec.with_occupation(1e3, ga, Na),
                          ModeSpec.with_occupation(1.0, gb, Nb), **kw)


def single_mode(gamma, N):
    basis = StateBasis.for_modes("a")
    return LinearQuantumSystem(basis, -0.5 * gamma * np.eye(2), gamma * (N + 0.5) * np.eye(2))


@given(st.floats(1e-3, 1e3), st.floats(0.0, 1e4))
def test_single_damped_mode_thermalizes(gamma, N):
    rep = steady_state(single_mode(gamma, N))
    assert rep.stable
    np.testing.assert_allclose(rep.state.covariance, (N + 0.5) * np.eye(2), rtol=1e-12)
    assert occupation(rep.state, "a") == pytest.approx(N, rel=1e-10, abs=1e-12)


def test_vacuum_and_thermal_observables():
    basis = StateBasis.for_modes("a", "b")
    vac = vacuum_state(basis)
    assert occupation(vac, "a") == 0.0
    assert quadrature_variance(vac, "Y_b") == 1.0
    th = thermal_state(basis, [2.0, 7.0])
    assert occupation(th, "b") == pytest.approx(7.0)
    assert quadrature_variance(th, "X_a") == pytest.approx(5.0)
    coh = GaussianState(basis, np.array([math.sqrt(2) * 3.0, 0, 0, 0]), 0.5 * np.eye(4))
    assert occupation(coh, "a") == pytest.approx(9.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_lyapunov_matches_independent_solver(seed):
    rng = np.random.default_rng(seed)
    n = 2 * rng.integers(1, 4)
    A = rng.normal(size=(n, n))
    A -= (np.linalg.eigvals(A).real.max() + rng.uniform(0.1, 2.0)) * np.eye(n)
    B = rng.normal(size=(n, n))
    D = B @ B.T
    V = solve_lyapunov(A, D)
    ref = sla.solve_continuous_lyapunov(A, -D)
    np.testing.assert_allclose(V, ref, rtol=1e-8, atol=1e-10 * np.abs(ref).max())
    assert np.linalg.norm(A @ V + V @ A.T + D) <= 1e-10 * np.linalg.norm(D)


def test_lyapunov_vacuum_for_zero_temperature_uncoupled():
    rep = steady_state(build_cooling_system(scenario(Regime.COOLING, g=0.0, Nb=0.0)))
    np.testing.assert_allclose(rep.state.covariance, 0.5 * np.eye(4), atol=1e-15)


def test_parametric_unstable_just_above_threshold():
    ga, gb, g = 1.0, 0.3, 0.2

    def report(C):
        alpha = math.sqrt(C * ga * gb / (4 * g * g))
        return steady_state(build_parametric_system(scenario(Regime.PARAMETRIC_AMP, g=g, ga=ga,
                                                             gb=gb, alpha_plus=alpha)))

    above = report(1.0001)
    assert not above.stable and above.state is None and above.max_drift_eigenvalue_real_part > 0
    below = report(0.9)
    assert below.stable and below.residual < 1e-10
    assert json.loads(above.to_json())["stable"] is False


def test_evolution_matches_closed_form_relaxation():
    sys = build_cooling_system(scenario(Regime.COOLING, g=0.3, alpha_minus=1.0, Na=0.2))
    V0 = thermal_state(sys.basis, [0.0, 5.0])
    dt, n = 0.05, 200
    traj = evolve_covariance(sys, V0, dt, n)
    Vss = sla.solve_continuous_lyapunov(sys.drift, -sys.diffusion)
    for k in (0, 1, 37, 200):
        E = sla.expm(sys.drift * k * dt)
        expected = E @ (V0.covariance - Vss) @ E.T + Vss
        np.testing.assert_allclose(traj.covariances[k], expected, rtol=1e-9, atol=1e-12)


def test_trivial_system_keeps_state():
    basis = StateBasis.for_modes("a")
    sys = LinearQuantumSystem(basis, np.zeros((2, 2)), np.zeros((2, 2)))
    init = thermal_state(basis, 3.0)
    traj = evolve_covariance(sys, init, 0.1, 50)
    np.testing.assert_array_equal(traj.covariances[-1], init.covariance)


def test_propagator_steady_state_is_fixed_point():
    sys = build_cooling_system(scenario(Regime.COOLING, g=0.5, alpha_minus=2.0))
    Phi, Q = propagator(sys.drift, sys.diffusion, 0.3)
    V = steady_state(sys).state.covariance
    np.testing.assert_allclose(Phi @ V @ Phi.T + Q, V, rtol=1e-12)


def test_cooling_trajectory_physical_and_monotone():
    # weak coupling (g|alpha| < gamma_a/4) keeps the approach overdamped
    sys = build_cooling_system(scenario(Regime.COOLING, g=0.1, alpha_minus=1.0, Nb=50.0))
    traj = evolve_covariance(sys, thermal_state(sys.basis, [0.0, 50.0]), 0.5, 400)
    nb = [occupation(s, "b") for s in traj]
    assert np.all(np.diff(nb) <= 1e-12)
    assert all(s.is_physical() for s in traj)
    assert nb[-1] == pytest.approx(occupation(steady_state(sys).state, "b"), rel=1e-6)


def test_bae_measured_quadrature_is_frozen_and_conjugate_heats():
    g, amp, ga = 0.05, 3.0, 1.0
    sys = build_bae_system(scenario(Regime.BACK_ACTION_EVADING, g=g, ga=ga, Nb=0.0,
                                    alpha_plus=amp, alpha_minus=amp, theta_plus=0.4))
    dt, n = 1.0 / ga, 1000
    traj = evolve_covariance(sys, vacuum_state(sys.basis), dt, n)
    np.testing.assert_allclose(traj.variance("X_b"), 1.0, atol=1e-9)
    # X_a is a stationary OU process with unit variance and correlation time 2/gamma_a;
    # Y_b integrates 2 g |alpha| X_a
    t = traj.times
    k = ga / 2
    expected = 1.0 + (2 * g * amp) ** 2 * 2 * (t / k - (1 - np.exp(-k * t)) / k**2)
    np.testing.assert_allclose(traj.variance("Y_b"), expected, rtol=1e-8)
    slope = np.polyfit(t[500:], traj.variance("Y_b")[500:], 1)[0]
    assert slope == pytest.approx(16 * g**2 * amp**2 / ga, rel=1e-6)


def test_log_negativity_of_two_mode_squeezed_vacuum():
    for r in (0.0, 0.1, 0.5, 1.3):
        assert log_negativity(two_mode_squeezed_vacuum(r), ("a", "b")) == pytest.approx(2 * r, abs=1e-9)
    assert log_negativity(vacuum_state(StateBasis.for_modes("a", "b")), ("a", "b")) == 0.0


@given(st.floats(0.0, 1.5), st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_log_negativity_local_rotation_invariance(r, p1, p2):
    st_ = two_mode_squeezed_vacuum(r)

    def rot(p):
        return np.array([[math.cos(p), -math.sin(p)], [math.sin(p), math.cos(p)]])

    R = sla.block_diag(rot(p1), rot(p2))
    turned = GaussianState(st_.basis, np.zeros(4), R @ st_.covariance @ R.T)
    assert log_negativity(turned, ("a", "b")) == pytest.approx(log_negativity(st_, ("a", "b")), abs=1e-9)


def test_unphysical_state_rejected():
    bad = GaussianState(StateBasis.for_modes("a", "b"), np.zeros(4), 0.1 * np.eye(4))
    assert not bad.is_physical()
    with pytest.raises(UnphysicalStateError):
        log_negativity(bad, ("a", "b"))
    with pytest.raises(UnphysicalStateError):
        evolve_covariance(single_mode(1.0, 0.0), GaussianState(StateBasis.for_modes("a"), np.zeros(2),
                                                               0.1 * np.eye(2)), 0.1, 3)


def test_evolution_argument_checks():
    sys = single_mode(1.0, 0.0)
    init = vacuum_state(sys.basis)
    with pytest.raises(ValueError):
        evolve_covariance(sys, init, 0.0, 3)
    with pytest.raises(ValueError):
        evolve_covariance(sys, vacuum_state(StateBasis.for_modes("b")), 0.1, 3)
    assert issubclass(StepSizeError, RuntimeError)


def test_exports(tmp_path):
    sys = single_mode(1.0, 2.0)
    traj = evolve_covariance(sys, vacuum_state(sys.basis), 0.5, 4)
    assert len(traj) == 5 and traj[2].basis == sys.basis
    buf = io.StringIO()
    traj.to_csv(buf, [("X_a", "X_a"), ("X_a", "Y_a")])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "time_s,V_X_a_X_a,V_X_a_Y_a" and len(lines) == 6
    path = tmp_path / "t.csv"
    traj.to_csv(path, [("Y_a", "Y_a")])
    assert path.read_text().splitlines()[0] == "time_s,V_Y_a_Y_a"
    st_ = traj[-1]
    again = GaussianState.from_dict(json.loads(json.dumps(st_.to_dict())))
    np.testing.assert_array_equal(again.covariance, st_.covariance)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-2, 1e2), st.floats(1e-2, 1e2), st.floats(0, 10), st.floats(0, 100),
       st.floats(1e-3, 10), st.floats(1.01, 5))
def test_steady_cooling_monotone_in_pump(ga, gb, Na, extra, alpha, k):
    Nb = Na + extra + 1e-3

    def n_b(a):
        cfg = scenario(Regime.COOLING, g=1.0, ga=ga, gb=gb, Na=Na, Nb=Nb, alpha_minus=a)
        return occupation(steady_state(build_cooling_system(cfg)).state, "b")

    n1, n2 = n_b(alpha), n_b(k * alpha)
    assert n2 < n1 < Nb


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([Regime.COOLING, Regime.PARAMETRIC_AMP, Regime.PARASITIC_THREE_MODE]),
       st.floats(1e-3, 1e3), st.floats(1e-6, 1.0), st.floats(0, 0.99), st.floats(0, 1e3))
def test_lyapunov_residual_bound(regime, ga, rb, C, Nb):
    gb = rb * ga
    alpha = math.sqrt(C * ga * gb) / 2
    cfg = scenario(regime, g=1.0, ga=ga, gb=gb, Nb=Nb, alpha_minus=alpha, alpha_plus=alpha,
                   alpha0=0.1 * alpha, delta=ga)
    sys_ = build_system(cfg)
    rep = steady_state(sys_)
    assert rep.stable
    A, D, V = sys_.drift, sys_.diffusion, rep.state.covariance
    bound = 1e-9 * (np.linalg.norm(A) * np.linalg.norm(V) + np.linalg.norm(D))
    assert rep.residual <= bound


def test_parametric_trajectory_stays_physical():
    sys_ = build_parametric_system(scenario(Regime.PARAMETRIC_AMP, g=1.0, ga=1.0, gb=0.5, Nb=0.0,
                                            alpha_plus=0.35))
    traj = evolve_covariance(sys_, vacuum_state(sys_.basis), 0.2, 300)
    assert all(s.is_physical(1e-8) for s in traj)
