"""Linearized quantum dynamics of cavity electro-optic systems.

Modules
-------
params       device/environment parameters -> coupling rate, thermal and pump occupations
systems      drift/diffusion matrices for cooling, parametric, three-mode and BAE regimes
gaussian     Lyapunov steady states, covariance evolution, occupations, entanglement
closed_form  analytic cooling / parasitic-floor / threshold formulas
oracle       Monte Carlo trajectory ensembles as an independent check
cli          command-line runner with presets, sweeps and comparison reports
"""

from .params import (
    CONSTANTS, EomDeviceParams, ModeSpec, PumpConfig, InvalidParameterError,
    angular_frequency, hertz, angular_from_wavelength, coupling_rate, voltage_zero_point,
    phase_per_volt, thermal_occupation, pump_photon_number, detuning_for_mu,
)
from .systems import (
    Regime, StateBasis, NoiseInput, LinearQuantumSystem, ScenarioConfig,
    build_cooling_system, build_parametric_system, build_parasitic_system, build_bae_system,
    build_system,
)
from .gaussian import (
    GaussianState, SolverReport, steady_state, evolve_covariance, occupation,
    quadrature_variance, log_negativity,
)
from .closed_form import (
    cooling_figures, cooling_limit, parasitic_figures, optimal_parasitic_detuning, pa_threshold,
)
from .oracle import TrajectoryEnsembleSpec, MomentEstimate, simulate_ensemble, simulate_snapshots

__version__ = "0.1.0"
