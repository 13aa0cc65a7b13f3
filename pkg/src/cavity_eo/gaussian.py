"""Steady-state and transient second moments of linear quantum systems.

Covariances are symmetrized, ``V_ij = <{du_i, du_j}>/2``, in canonical
quadratures (vacuum ``I/2``).  The ``X``/``Y`` quadratures named by basis
labels have vacuum variance 1, so :func:`quadrature_variance` reports
``2 * V_ii``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg as sla

from .systems import LinearQuantumSystem, StateBasis

__all__ = [
    "GaussianState",
    "SolverReport",
    "GaussianTrajectory",
    "UnphysicalStateError",
    "StepSizeError",
    "solve_lyapunov",
    "steady_state",
    "propagator",
    "evolve_covariance",
    "occupation",
    "quadrature_variance",
    "log_negativity",
    "vacuum_state",
    "thermal_state",
    "two_mode_squeezed_vacuum",
]


class UnphysicalStateError(ValueError):
    """Covariance violates the uncertainty principle."""


class StepSizeError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class GaussianState:
    basis: StateBasis
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.covariance, dtype=float)
        n = self.basis.dim
        if mean.shape != (n,) or cov.shape != (n, n):
            raise ValueError(f"state shapes {mean.shape}/{cov.shape} do not match basis of size {n}")
        scale = float(np.abs(cov).max()) if cov.size else 0.0
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * scale):
            raise ValueError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    def min_uncertainty_eigenvalue(self) -> float:
        """Smallest eigenvalue of V + (i/2) Omega; negative means unphysical."""
        M = self.covariance + 0.5j * self.basis.symplectic_form()
        return float(np.linalg.eigvalsh(M).min())

    def is_physical(self, tol: float = 1e-9) -> bool:
        scale = max(1.0, float(np.abs(self.covariance).max()))
        return self.min_uncertainty_eigenvalue() >= -tol * scale

    def check_physical(self, tol: float = 1e-9) -> "GaussianState":
        if not self.is_physical(tol):
            raise UnphysicalStateError(
                f"V + i/2 Omega has eigenvalue {self.min_uncertainty_eigenvalue():.3e} < 0")
        return self

    def submatrix(self, labels: Sequence[str]) -> np.ndarray:
        idx = [self.basis.index(l) for l in labels]
        return self.covariance[np.ix_(idx, idx)]

    def to_dict(self) -> dict:
        return {
            "labels": list(self.basis.labels),
            "modes": list(self.basis.modes),
            "mean": self.mean.tolist(),
            "covariance": self.covariance.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GaussianState":
        return cls(StateBasis(tuple(doc["labels"]), tuple(doc["modes"])),
                   np.array(doc["mean"]), np.array(doc["covariance"]))


@dataclass(frozen=True, eq=False)
class SolverReport:
    state: GaussianState | None
    stable: bool
    max_drift_eigenvalue_real_part: float
    residual: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "stable": self.stable,
            "max_drift_eigenvalue_real_part": self.max_drift_eigenvalue_real_part,
            "residual": self.residual,
            "state": None if self.state is None else self.state.to_dict(),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def vacuum_state(basis: StateBasis) -> GaussianState:
    return GaussianState(basis, np.zeros(basis.dim), 0.5 * np.eye(basis.dim))


def thermal_state(basis: StateBasis, occupations) -> GaussianState:
    occ = np.broadcast_to(np.asarray(occupations, dtype=float), (len(basis.modes),))
    return GaussianState(basis, np.zeros(basis.dim), np.diag(np.repeat(occ + 0.5, 2)))


def two_mode_squeezed_vacuum(r: float, modes=("a", "b")) -> GaussianState:
    ch, sh = np.cosh(2 * r), np.sinh(2 * r)
    Z = np.diag([1.0, -1.0])
    V = 0.5 * np.block([[ch * np.eye(2), sh * Z], [sh * Z, ch * np.eye(2)]])
    return GaussianState(StateBasis.for_modes(*modes), np.zeros(4), V)


def solve_lyapunov(A: np.ndarray, D: np.ndarray, refine: int = 1) -> np.ndarray:
    """Solve A V + V A^T + D = 0 by a dense Kronecker-product linear solve.

    One round of iterative refinement tightens the residual when the
    decay rates span many decades.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    I = np.eye(n)
    # row-major vec: vec(A V) = (A kron I) v, vec(V A^T) = (I kron A) v
    K = np.kron(A, I) + np.kron(I, A)
    lu = sla.lu_factor(K)
    rhs = -np.asarray(D, dtype=float).reshape(-1)
    v = sla.lu_solve(lu, rhs)
    for _ in range(refine):
        v = v + sla.lu_solve(lu, rhs - K @ v)
    V = v.reshape(n, n)
    return 0.5 * (V + V.T)


def _lyapunov_residual(A, V, D) -> float:
    return float(np.linalg.norm(A @ V + V @ A.T + D))


def steady_state(sys: LinearQuantumSystem, margin: float | None = None) -> SolverReport:
    """Stationary Gaussian state of a linear system.

    The drift counts as stable when every eigenvalue has real part below
    ``-margin`` (default ``1e-12 * ||A||``).  Unstable systems return a
    report with ``stable=False`` and no state.
    """
    A, D = sys.drift, sys.diffusion
    if A.shape != D.shape:
        raise ValueError("drift and diffusion dimensions differ")
    max_re = float(np.linalg.eigvals(A).real.max()) if A.size else -np.inf
    if margin is None:
        margin = 1e-12 * np.linalg.norm(A)
    if not max_re < -margin:
        return SolverReport(None, False, max_re)
    V = solve_lyapunov(A, D)
    state = GaussianState(sys.basis, np.zeros(sys.dim), V)
    return SolverReport(state, True, max_re, _lyapunov_residual(A, V, D))


def propagator(A: np.ndarray, D: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact one-step maps: V(t+dt) = Phi V Phi^T + Q.

    Q = int_0^dt e^{As} D e^{A^T s} ds, computed with Van Loan's block
    exponential on a substep with ||A|| h <= 1, then doubled back up to dt.
    The block holds e^{-Ah}, so a long single step would lose precision.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    norm = float(np.linalg.norm(A, 1)) * dt if n else 0.0
    k = max(0, math.ceil(math.log2(norm))) if norm > 1.0 else 0
    h = dt / 2**k
    blk = np.zeros((2 * n, 2 * n))
    blk[:n, :n] = -A
    blk[:n, n:] = D
    blk[n:, n:] = A.T
    E = sla.expm(blk * h)
    Phi = E[n:, n:].T
    Q = Phi @ E[:n, n:]
    for _ in range(k):
        Q = Phi @ Q @ Phi.T + Q
        Phi = Phi @ Phi
    return Phi, 0.5 * (Q + Q.T)


@dataclass(frozen=True, eq=False)
class GaussianTrajectory:
    """Time series of Gaussian states on a uniform grid."""

    basis: StateBasis
    times: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, k: int) -> GaussianState:
        return GaussianState(self.basis, self.means[k], self.covariances[k])

    def __iter__(self) -> Iterator[GaussianState]:
        return (self[k] for k in range(len(self)))

    def variance(self, label: str) -> np.ndarray:
        """Vacuum-normalized variance of quadrature ``label`` at each time."""
        i = self.basis.index(label)
        return 2.0 * self.covariances[:, i, i]

    def to_csv(self, path_or_file, pairs: Sequence[tuple[str, str]]) -> None:
        """Write ``time_s`` plus one symmetrized covariance column per label pair."""
        idx = [(self.basis.index(a), self.basis.index(b)) for a, b in pairs]
        header = ["time_s"] + [f"V_{a}_{b}" for a, b in pairs]
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(header)
            for t, V in zip(self.times, self.covariances):
                w.writerow([repr(float(t))] + [repr(float(V[i, j])) for i, j in idx])
        finally:
            if own:
                fh.close()


def evolve_covariance(sys: LinearQuantumSystem, initial: GaussianState, dt: float,
                      n_steps: int) -> GaussianTrajectory:
    """Propagate mean and covariance with the exact matrix-exponential step.

    Raises :class:`StepSizeError` if a stable system's covariance blows up,
    which can only come from an ill-conditioned step.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if initial.basis != sys.basis:
        raise ValueError("initial state basis does not match the system")
    initial.check_physical()
    Phi, Q = propagator(sys.drift, sys.diffusion, dt)
    n = sys.dim
    means = np.empty((n_steps + 1, n))
    covs = np.empty((n_steps + 1, n, n))
    means[0] = initial.mean
    covs[0] = initial.covariance
    stable = n > 0 and np.linalg.eigvals(sys.drift).real.max() < 0
    bound = None
    if stable:
        bound = 1e6 * (np.linalg.norm(initial.covariance)
                       + np.linalg.norm(solve_lyapunov(sys.drift, sys.diffusion)))
    for k in range(n_steps):
        V = Phi @ covs[k] @ Phi.T + Q
        covs[k + 1] = 0.5 * (V + V.T)
        means[k + 1] = Phi @ means[k]
        if bound is not None and not np.linalg.norm(covs[k + 1]) < bound:
            raise StepSizeError(
                f"covariance norm blew up at step {k + 1}; try a smaller dt than {dt}")
    times = dt * np.arange(n_steps + 1)
    return GaussianTrajectory(sys.basis, times, means, covs)


def occupation(state: GaussianState, mode: str) -> float:
    """Mean excitation number <a^dagger a> of ``mode``.

    Tiny negative values from roundoff (above -1e-9) are clipped to 0.
    """
    i, j = state.basis.mode_indices(mode)
    V, m = state.covariance, state.mean
    n = 0.5 * (V[i, i] + V[j, j]) - 0.5 + 0.5 * (m[i] ** 2 + m[j] ** 2)
    if -1e-9 < n < 0:
        n = 0.0
    return float(n)


def quadrature_variance(state: GaussianState, label: str) -> float:
    """Variance of the ``X``/``Y`` quadrature ``label`` (vacuum -> 1)."""
    i = state.basis.index(label)
    return float(2.0 * state.covariance[i, i])


def log_negativity(state: GaussianState, partition: tuple[str, str]) -> float:
    """Logarithmic negativity between two modes, max(0, -ln(2 nu_min)).

    nu_min is the smallest symplectic eigenvalue of the partially
    transposed two-mode covariance matrix.
    """
    m1, m2 = partition
    if m1 == m2:
        raise ValueError("partition needs two distinct modes")
    state.check_physical()
    idx = [*state.basis.mode_indices(m1), *state.basis.mode_indices(m2)]
    V = state.covariance[np.ix_(idx, idx)].copy()
    # partial transpose: p_2 -> -p_2
    P = np.diag([1.0, 1.0, 1.0, -1.0])
    Vpt = P @ V @ P
    Omega = np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=float)
    nu = np.abs(np.linalg.eigvals(1j * Omega @ Vpt))
    return float(max(0.0, -np.log(2.0 * nu.min())))
