"""Linearized Langevin dynamics of the electro-optic regimes as real drift/diffusion pairs.

Conventions used throughout the package:

* Each mode ``a`` is represented by the canonical quadratures
  ``x = (a + a^dagger)/sqrt(2)`` and ``p = -i(a - a^dagger)/sqrt(2)``, so the
  symmetrized covariance of vacuum is ``I/2``.  Labels name the quadratures
  ``X``/``Y`` with ``X = sqrt(2) x``; reporting functions in
  :mod:`cavity_eo.gaussian` undo the factor.
* Damping follows ``da/dt = -(gamma/2) a + sqrt(gamma) A``; a bath of mean
  occupation ``N`` contributes ``gamma (N + 1/2)`` to each diagonal diffusion
  entry of its mode.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .params import InvalidParameterError, ModeSpec

__all__ = [
    "Regime",
    "StateBasis",
    "NoiseInput",
    "LinearQuantumSystem",
    "ScenarioConfig",
    "WrongRegimeError",
    "ZeroDetuningError",
    "UnequalSidebandError",
    "quadrature_drift",
    "build_cooling_system",
    "build_parametric_system",
    "build_parasitic_system",
    "build_bae_system",
    "build_system",
]


class WrongRegimeError(ValueError):
    pass


class ZeroDetuningError(ValueError):
    pass


class UnequalSidebandError(ValueError):
    pass


class Regime(str, enum.Enum):
    COOLING = "cooling"
    PARAMETRIC_AMP = "parametric_amp"
    PARASITIC_THREE_MODE = "parasitic_three_mode"
    BACK_ACTION_EVADING = "back_action_evading"


@dataclass(frozen=True)
class StateBasis:
    """Ordered quadrature labels, grouped into modes of two labels each."""

    labels: tuple[str, ...]
    modes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "modes", tuple(self.modes))
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate basis labels: {self.labels}")
        if len(self.labels) != 2 * len(self.modes):
            raise ValueError("basis needs exactly two quadrature labels per mode")
        if len(set(self.modes)) != len(self.modes):
            raise ValueError(f"duplicate mode names: {self.modes}")

    @classmethod
    def for_modes(cls, *modes: str) -> "StateBasis":
        labels = []
        for m in modes:
            labels += [f"X_{m}", f"Y_{m}"]
        return cls(tuple(labels), tuple(modes))

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown basis label {label!r}; have {list(self.labels)}") from None

    def mode_indices(self, mode: str) -> tuple[int, int]:
        try:
            k = self.modes.index(mode)
        except ValueError:
            raise KeyError(f"unknown mode {mode!r}; have {list(self.modes)}") from None
        return 2 * k, 2 * k + 1

    def symplectic_form(self) -> np.ndarray:
        """Omega with [x_k, p_k] = i per mode pair."""
        omega = np.zeros((self.dim, self.dim))
        for k in range(len(self.modes)):
            omega[2 * k, 2 * k + 1] = 1.0
            omega[2 * k + 1, 2 * k] = -1.0
        return omega


@dataclass(frozen=True)
class NoiseInput:
    """One white-noise input: ``sqrt(rate)`` times a bath operator of mean occupation ``occupation``."""

    label: str
    mode: str
    occupation: float
    rate: float


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LinearQuantumSystem:
    """du/dt = A u + noise with <noise noise^T> = D delta(t - t')."""

    basis: StateBasis
    drift: np.ndarray
    diffusion: np.ndarray
    noise_inputs: tuple[NoiseInput, ...] = ()
    regime: str = ""

    def __post_init__(self):
        object.__setattr__(self, "drift", _frozen(self.drift))
        object.__setattr__(self, "diffusion", _frozen(self.diffusion))
        object.__setattr__(self, "noise_inputs", tuple(self.noise_inputs))
        n = self.basis.dim
        if self.drift.shape != (n, n) or self.diffusion.shape != (n, n):
            raise ValueError(
                f"drift {self.drift.shape} / diffusion {self.diffusion.shape} "
                f"do not match basis dimension {n}")
        D = self.diffusion
        if not np.allclose(D, D.T, rtol=0, atol=1e-12 * max(1.0, np.abs(D).max())):
            raise ValueError("diffusion matrix is not symmetric")
        if n and np.linalg.eigvalsh(D).min() < -1e-12 * np.linalg.norm(D):
            raise ValueError("diffusion matrix is not positive semidefinite")

    @property
    def dim(self) -> int:
        return self.basis.dim

    def entry(self, matrix: str, row: str, col: str) -> float:
        m = {"drift": self.drift, "diffusion": self.diffusion}[matrix]
        return float(m[self.basis.index(row), self.basis.index(col)])

    def max_real_eigenvalue(self) -> float:
        return float(np.linalg.eigvals(self.drift).real.max())

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "labels": list(self.basis.labels),
            "modes": list(self.basis.modes),
            "drift": self.drift.tolist(),
            "diffusion": self.diffusion.tolist(),
            "noise_inputs": [
                {"label": s.label, "mode": s.mode, "occupation": s.occupation, "rate": s.rate}
                for s in self.noise_inputs
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> "LinearQuantumSystem":
        return cls(
            basis=StateBasis(tuple(doc["labels"]), tuple(doc["modes"])),
            drift=np.array(doc["drift"], dtype=float),
            diffusion=np.array(doc["diffusion"], dtype=float),
            noise_inputs=tuple(NoiseInput(**s) for s in doc.get("noise_inputs", [])),
            regime=doc.get("regime", ""),
        )

    @classmethod
    def from_json(cls, text: str) -> "LinearQuantumSystem":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of one of the four pumping regimes.

    Pump fields are given as amplitude magnitudes ``|alpha|`` with separate
    phases; rates are in rad/s.  ``sideband_occupations`` are the bath
    occupations of the lower and upper optical side modes in the three-mode
    regime.
    """

    regime: Regime
    g: float
    optical: ModeSpec
    microwave: ModeSpec
    alpha_minus: float = 0.0
    alpha_plus: float = 0.0
    alpha0: float = 0.0
    theta_plus: float = 0.0
    theta_minus: float = 0.0
    delta: float = 0.0
    include_microwave_bath: bool = False
    sideband_occupations: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if not (self.g >= 0):
            raise InvalidParameterError(f"g must be >= 0, got {self.g!r}")
        for name in ("alpha_minus", "alpha_plus", "alpha0"):
            v = getattr(self, name)
            if not (v >= 0) or not math.isfinite(v):
                raise InvalidParameterError(f"{name} must be a non-negative amplitude, got {v!r}")
        if min(self.sideband_occupations) < 0:
            raise InvalidParameterError("sideband occupations must be >= 0")

    @property
    def theta(self) -> float:
        return 0.5 * (self.theta_plus + self.theta_minus)

    @property
    def nu(self) -> float:
        return 0.5 * (self.theta_plus - self.theta_minus)

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


def quadrature_drift(M: np.ndarray, N: np.ndarray | None = None) -> np.ndarray:
    """Real drift for d a/dt = M a + N a^dagger, with a = (x + i p)/sqrt(2) per mode.

    Returns the 2n x 2n matrix acting on (x_1, p_1, ..., x_n, p_n).
    """
    M = np.asarray(M, dtype=complex)
    N = np.zeros_like(M) if N is None else np.asarray(N, dtype=complex)
    n = M.shape[0]
    A = np.zeros((2 * n, 2 * n))
    A[0::2, 0::2] = M.real + N.real
    A[0::2, 1::2] = -M.imag + N.imag
    A[1::2, 0::2] = M.imag + N.imag
    A[1::2, 1::2] = M.real - N.real
    return A


def _bath_diffusion(basis: StateBasis, inputs: Iterable[NoiseInput]) -> np.ndarray:
    D = np.zeros((basis.dim, basis.dim))
    for s in inputs:
        i, j = basis.mode_indices(s.mode)
        D[i, i] += s.rate * (s.occupation + 0.5)
        D[j, j] += s.rate * (s.occupation + 0.5)
    return D


def _check_regime(cfg: ScenarioConfig, regime: Regime) -> None:
    if cfg.regime is not regime:
        raise WrongRegimeError(f"expected regime {regime.value!r}, got {cfg.regime.value!r}")


def _two_mode_inputs(cfg: ScenarioConfig) -> tuple[NoiseInput, ...]:
    return (
        NoiseInput("A", "a", cfg.optical.occupation, cfg.optical.gamma),
        NoiseInput("B", "b", cfg.microwave.occupation, cfg.microwave.gamma),
    )


def build_cooling_system(cfg: ScenarioConfig) -> LinearQuantumSystem:
    """Red-sideband (beam-splitter) coupling of the optical mode a and microwave mode b.

    da/dt = i g alpha_- b - (gamma_a/2) a + sqrt(gamma_a) A
    db/dt = i g alpha_-^* a - (gamma_b/2) b + sqrt(gamma_b) B
    """
    _check_regime(cfg, Regime.COOLING)
    c = cfg.g * cfg.alpha_minus * np.exp(1j * cfg.theta_minus)
    M = np.array([[-cfg.optical.gamma / 2, 1j * c],
                  [1j * np.conj(c), -cfg.microwave.gamma / 2]])
    basis = StateBasis.for_modes("a", "b")
    inputs = _two_mode_inputs(cfg)
    return LinearQuantumSystem(basis, quadrature_drift(M), _bath_diffusion(basis, inputs),
                               inputs, Regime.COOLING.value)


def build_parametric_system(cfg: ScenarioConfig) -> LinearQuantumSystem:
    """Blue-sideband (non-degenerate parametric) coupling.

    da/dt = i g alpha_+ b^dagger - (gamma_a/2) a + sqrt(gamma_a) A
    db/dt = i g alpha_+ a^dagger - (gamma_b/2) b + sqrt(gamma_b) B
    """
    _check_regime(cfg, Regime.PARAMETRIC_AMP)
    c = cfg.g * cfg.alpha_plus * np.exp(1j * cfg.theta_plus)
    M = np.diag([-cfg.optical.gamma / 2, -cfg.microwave.gamma / 2]).astype(complex)
    N = np.array([[0, 1j * c], [1j * c, 0]])
    basis = StateBasis.for_modes("a", "b")
    inputs = _two_mode_inputs(cfg)
    return LinearQuantumSystem(basis, quadrature_drift(M, N), _bath_diffusion(basis, inputs),
                               inputs, Regime.PARAMETRIC_AMP.value)


def build_parasitic_system(cfg: ScenarioConfig) -> LinearQuantumSystem:
    """Centre-mode pumping with both optical side modes (am = lower, ap = upper) kept.

    In the frame where the lower side mode rotates at 2 delta:

    d am/dt = 2 i delta am + i g alpha0 b^dagger - (gamma_a/2) am + sqrt(gamma_a) A_-
    d ap/dt = i g alpha0 b - (gamma_a/2) ap + sqrt(gamma_a) A_+
    d b/dt  = i g alpha0 ap + i g alpha0 am^dagger - (gamma_b/2) b + sqrt(gamma_b) B

    alpha0 is taken real and non-negative (its phase is a gauge choice).
    """
    _check_regime(cfg, Regime.PARASITIC_THREE_MODE)
    if cfg.delta == 0:
        raise ZeroDetuningError("parasitic regime needs a nonzero detuning delta")
    ga, gb = cfg.optical.gamma, cfg.microwave.gamma
    c = cfg.g * cfg.alpha0
    # mode order: am, ap, b
    M = np.array([
        [2j * cfg.delta - ga / 2, 0, 0],
        [0, -ga / 2, 1j * c],
        [0, 1j * c, -gb / 2],
    ])
    N = np.array([
        [0, 0, 1j * c],
        [0, 0, 0],
        [1j * c, 0, 0],
    ])
    basis = StateBasis.for_modes("am", "ap", "b")
    n_lo, n_hi = cfg.sideband_occupations
    inputs = (
        NoiseInput("A_minus", "am", n_lo, ga),
        NoiseInput("A_plus", "ap", n_hi, ga),
        NoiseInput("B", "b", cfg.microwave.occupation, gb),
    )
    return LinearQuantumSystem(basis, quadrature_drift(M, N), _bath_diffusion(basis, inputs),
                               inputs, Regime.PARASITIC_THREE_MODE.value)


def build_bae_system(cfg: ScenarioConfig) -> LinearQuantumSystem:
    """Double-sideband pumping in the rotated quadrature basis (X_a, Y_a, X_b, Y_b).

    dX_a/dt = -(gamma_a/2) X_a + sqrt(gamma_a) xi       dX_b/dt = 0
    dY_a/dt = 2 g|alpha| X_b - (gamma_a/2) Y_a + sqrt(gamma_a) eta
    dY_b/dt = 2 g|alpha| X_a

    The pump phases only fix which quadratures are called X and Y
    (theta and nu); they do not enter the matrices.  With
    ``include_microwave_bath`` a phase-insensitive thermal damping
    -(gamma_b/2) is added to both microwave quadratures.
    """
    _check_regime(cfg, Regime.BACK_ACTION_EVADING)
    scale = max(cfg.alpha_plus, cfg.alpha_minus, 1e-300)
    if abs(cfg.alpha_plus - cfg.alpha_minus) > 1e-12 * scale:
        raise UnequalSidebandError(
            f"back-action evasion needs |alpha_+| == |alpha_-| "
            f"(got {cfg.alpha_plus} and {cfg.alpha_minus})")
    ga = cfg.optical.gamma
    k = 2.0 * cfg.g * cfg.alpha_plus
    A = np.array([
        [-ga / 2, 0.0, 0.0, 0.0],
        [0.0, -ga / 2, k, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [k, 0.0, 0.0, 0.0],
    ])
    basis = StateBasis.for_modes("a", "b")
    inputs = [NoiseInput("xi_eta", "a", cfg.optical.occupation, ga)]
    if cfg.include_microwave_bath:
        gb = cfg.microwave.gamma
        A[2, 2] = A[3, 3] = -gb / 2
        inputs.append(NoiseInput("B", "b", cfg.microwave.occupation, gb))
    return LinearQuantumSystem(basis, A, _bath_diffusion(basis, inputs), tuple(inputs),
                               Regime.BACK_ACTION_EVADING.value)


_BUILDERS = {
    Regime.COOLING: build_cooling_system,
    Regime.PARAMETRIC_AMP: build_parametric_system,
    Regime.PARASITIC_THREE_MODE: build_parasitic_system,
    Regime.BACK_ACTION_EVADING: build_bae_system,
}


def build_system(cfg: ScenarioConfig) -> LinearQuantumSystem:
    return _BUILDERS[cfg.regime](cfg)
