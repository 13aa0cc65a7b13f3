"""Monte Carlo estimates of second moments from trajectories of the c-number SDE.

For a linear system the symmetrized quantum moments obey the same equations
as the classical SDE ``du = A u dt + B dW`` with ``B B^T = D``, so sample
statistics of simulated trajectories validate the Lyapunov and closed-form
results without sharing their code.

Reproducibility: trajectory ``i`` draws all of its randomness from a Philox
counter-based generator keyed by ``seed ^ i``.  The Wiener path is built by
dyadic Brownian-bridge refinement, so halving ``dt`` refines the *same* path
instead of drawing a new one.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .systems import LinearQuantumSystem, StateBasis

__all__ = [
    "TrajectoryEnsembleSpec",
    "MomentEstimate",
    "FactorizationError",
    "OracleDivergenceError",
    "factor_diffusion",
    "transition_kernel",
    "brownian_increments",
    "simulate_ensemble",
    "simulate_snapshots",
    "jackknife_covariance",
]

_CHUNK = 128
_CHUNK_DOUBLES = 2**22  # cap on buffered Wiener increments per chunk (32 MB)
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class FactorizationError(ValueError):
    pass


class OracleDivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrajectoryEnsembleSpec:
    n_trajectories: int
    dt: float
    t_final: float
    seed: int = 0
    burn_in: float = 0.0

    def __post_init__(self):
        if self.n_trajectories < 2:
            raise ValueError("need at least two trajectories")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_final > self.burn_in >= 0:
            raise ValueError("need t_final > burn_in >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))

    @property
    def burn_in_steps(self) -> int:
        return int(round(self.burn_in / self.dt))


@dataclass(frozen=True, eq=False)
class MomentEstimate:
    """Ensemble covariance with jackknife standard errors (entrywise)."""

    mean: np.ndarray
    covariance: np.ndarray
    standard_errors: np.ndarray
    n_effective: int
    mean_standard_errors: np.ndarray | None = None
    basis: StateBasis | None = None
    time: float | None = None
    occupation_standard_errors: np.ndarray | None = None

    def entry(self, row: str, col: str) -> tuple[float, float]:
        i, j = self.basis.index(row), self.basis.index(col)
        return float(self.covariance[i, j]), float(self.standard_errors[i, j])

    def variance(self, label: str) -> tuple[float, float]:
        """Vacuum-normalized quadrature variance (vacuum 1) and its standard error."""
        v, se = self.entry(label, label)
        return 2.0 * v, 2.0 * se

    def occupation(self, mode: str) -> tuple[float, float]:
        """<a^dagger a> and its standard error."""
        i, j = self.basis.mode_indices(mode)
        V, S = self.covariance, self.standard_errors
        n = 0.5 * (V[i, i] + V[j, j]) - 0.5 + 0.5 * (self.mean[i] ** 2 + self.mean[j] ** 2)
        if self.occupation_standard_errors is not None:
            return float(n), float(self.occupation_standard_errors[self.basis.modes.index(mode)])
        # no jackknife of the sum: assume the two variances fully correlated
        return float(n), float(0.5 * (S[i, i] + S[j, j]))


def factor_diffusion(D: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Square factor B with B B^T = D for a symmetric PSD matrix.

    Uses the eigendecomposition, so rank-deficient D gives zero columns.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise FactorizationError(f"D must be square, got shape {D.shape}")
    scale = float(np.abs(D).max()) if D.size else 0.0
    if not np.allclose(D, D.T, rtol=0, atol=1e-12 * max(scale, 1e-300)):
        raise FactorizationError("D is not symmetric")
    if scale == 0.0:
        return np.zeros_like(D)
    w, U = np.linalg.eigh(0.5 * (D + D.T))
    if w.min() < -rtol * w.max():
        raise FactorizationError(f"D is indefinite: eigenvalue {w.min():.6e}")
    return U * np.sqrt(np.clip(w, 0.0, None))


def transition_kernel(A: np.ndarray, D: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """e^{A dt} and the integrated noise covariance over one step.

    The integral of e^{As} D e^{A^T s} over [0, dt] is done by composite
    16-point Gauss-Legendre quadrature with subintervals short enough
    (||A|| h <= 1/2) for the quadrature error to sit at roundoff.
    """
    A = np.asarray(A, dtype=float)
    D = np.asarray(D, dtype=float)
    Phi = sla.expm(A * dt)
    n_sub = max(1, math.ceil(2.0 * np.linalg.norm(A, 2) * dt))
    h = dt / n_sub
    Q = np.zeros_like(D)
    for k in range(n_sub):
        for x, w in zip(_GL_NODES, _GL_WEIGHTS):
            s = k * h + 0.5 * h * (x + 1.0)
            E = sla.expm(A * s)
            Q += 0.5 * h * w * (E @ D @ E.T)
    return Phi, 0.5 * (Q + Q.T)


def _trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(seed ^ index) & (2**64 - 1)))


def brownian_increments(rng: np.random.Generator, n_steps: int, dim: int, dt: float) -> np.ndarray:
    """Wiener increments (n_steps, dim) with variance dt, from a dyadic bridge.

    The path is built on 2^L >= n_steps intervals spanning 2^L dt.  Doubling
    n_steps while halving dt keeps the horizon, and the first 2^L normals
    drawn, so the coarse path is reproduced exactly.
    """
    L = max(0, math.ceil(math.log2(n_steps)))
    horizon = dt * 2**L
    z = rng.standard_normal((2**L, dim))
    W = np.zeros((2**L + 1, dim))
    W[-1] = math.sqrt(horizon) * z[0]
    row = 1
    for level in range(L):
        half = 2 ** (L - level - 1)
        width = 2 * half * dt
        mids = np.arange(half, 2**L, 2 * half)
        k = len(mids)
        W[mids] = 0.5 * (W[mids - half] + W[mids + half]) + 0.5 * math.sqrt(width) * z[row:row + k]
        row += k
    return np.diff(W, axis=0)[:n_steps]


def jackknife_covariance(s: np.ndarray, m: np.ndarray):
    """Bias-corrected covariance and delete-one jackknife errors.

    ``s[i]`` and ``m[i]`` are trajectory i's second-moment matrix and mean.
    The estimator is mean(s) - mean(m) mean(m)^T.
    """
    n = s.shape[0]
    S = s.sum(axis=0)
    M = m.sum(axis=0)
    full = S / n - np.outer(M / n, M / n)
    Mi = (M - m) / (n - 1)
    loo = (S - s) / (n - 1) - Mi[:, :, None] * Mi[:, None, :]
    loo_mean = loo.mean(axis=0)
    cov = n * full - (n - 1) * loo_mean
    se = np.sqrt((n - 1) / n * ((loo - loo_mean) ** 2).sum(axis=0))
    mean_se = m.std(axis=0, ddof=1) / math.sqrt(n)
    cov = 0.5 * (cov + cov.T)
    return M / n, cov, se, mean_se, loo


def _initial_covariance(sys: LinearQuantumSystem, initial_covariance) -> np.ndarray:
    if initial_covariance is None:
        return 0.5 * np.eye(sys.dim)
    return np.asarray(initial_covariance, dtype=float)


class _Stepper:
    def __init__(self, sys: LinearQuantumSystem, dt: float, scheme: str):
        self.dim = sys.dim
        self.dt = dt
        if scheme == "exact":
            Phi, Q = transition_kernel(sys.drift, sys.diffusion, dt)
            self.F = Phi
            self.G = factor_diffusion(Q) / math.sqrt(dt)
        elif scheme == "euler":
            self.F = np.eye(sys.dim) + sys.drift * dt
            self.G = factor_diffusion(sys.diffusion)
        else:
            raise ValueError(f"unknown scheme {scheme!r}; use 'exact' or 'euler'")

    def run_chunk(self, seed, indices, n_steps, init_factor, visit):
        """Integrate trajectories ``indices`` together; ``visit(k, u)`` sees step k's states."""
        dW = np.empty((len(indices), n_steps, self.dim))
        u = np.empty((len(indices), self.dim))
        for c, idx in enumerate(indices):
            rng = _trajectory_rng(seed, idx)
            u[c] = init_factor @ rng.standard_normal(self.dim)
            dW[c] = brownian_increments(rng, n_steps, self.dim, self.dt)
        visit(0, u)
        Ft, Gt = self.F.T, self.G.T
        # overflow is reported as OracleDivergenceError, not as a warning
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(n_steps):
                u = u @ Ft + dW[:, k, :] @ Gt
                if k % 64 == 63 and not np.all(np.abs(u) < 1e100):
                    raise OracleDivergenceError(f"trajectories diverged by step {k + 1}")
                visit(k + 1, u)
        if not np.all(np.isfinite(u)):
            raise OracleDivergenceError("trajectories diverged")


def _chunks(n, n_steps, dim):
    path_len = 2 ** max(0, math.ceil(math.log2(max(n_steps, 1))))
    size = max(1, min(_CHUNK, _CHUNK_DOUBLES // (path_len * max(dim, 1))))
    return [range(i, min(i + size, n)) for i in range(0, n, size)]


def _run(tasks, n_jobs):
    if n_jobs <= 1:
        for t in tasks:
            t()
        return
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        for f in [pool.submit(t) for t in tasks]:
            f.result()


def simulate_ensemble(sys: LinearQuantumSystem, spec: TrajectoryEnsembleSpec, *,
                      scheme: str = "exact", initial_covariance=None, n_jobs: int = 1,
                      dump_csv=None) -> MomentEstimate:
    """Stationary covariance from time averages after ``burn_in``, pooled over trajectories.

    Each trajectory contributes its time-averaged ``u u^T`` and ``u``; the
    trajectories are independent, so the delete-one jackknife over them gives
    honest standard errors despite the correlation within each trajectory.
    """
    if sys.dim and np.linalg.eigvals(sys.drift).real.max() >= 0:
        raise OracleDivergenceError(
            "drift is not Hurwitz: the ensemble has no stationary distribution")
    n_steps, burn = spec.n_steps, spec.burn_in_steps
    if burn >= n_steps:
        raise ValueError("burn_in leaves no samples")
    stepper = _Stepper(sys, spec.dt, scheme)
    init = factor_diffusion(_initial_covariance(sys, initial_covariance))
    d = sys.dim
    s = np.zeros((spec.n_trajectories, d, d))
    m = np.zeros((spec.n_trajectories, d))
    n_samples = n_steps - burn
    occ_idx = [sys.basis.mode_indices(mo) for mo in sys.basis.modes]

    dump_rows = [] if dump_csv is not None else None

    def task(indices):
        acc_s = np.zeros((len(indices), d, d))
        acc_m = np.zeros((len(indices), d))

        def visit(k, u):
            if k > burn:
                acc_s[...] += u[:, :, None] * u[:, None, :]
                acc_m[...] += u
            if dump_rows is not None:
                for c, idx in enumerate(indices):
                    dump_rows.append((idx, k * spec.dt, *u[c]))

        stepper.run_chunk(spec.seed, indices, n_steps, init, visit)
        s[indices.start:indices.stop] = acc_s / n_samples
        m[indices.start:indices.stop] = acc_m / n_samples

    chunks = _chunks(spec.n_trajectories, n_steps, d)
    _run([lambda ix=ix: task(ix) for ix in chunks], 1 if dump_rows is not None else n_jobs)
    mean, cov, se, mean_se, loo = jackknife_covariance(s, m)
    n = spec.n_trajectories
    # occupation errors from the jackknife of the quadrature-variance sum
    occ_loo = np.stack([0.5 * (loo[:, i, i] + loo[:, j, j]) for i, j in occ_idx], axis=1)
    occ_se = np.sqrt((n - 1) / n * ((occ_loo - occ_loo.mean(0)) ** 2).sum(0))
    if dump_rows is not None:
        _write_dump(dump_csv, sys.basis, sorted(dump_rows, key=lambda r: (r[0], r[1])))
    return MomentEstimate(mean, cov, se, n, mean_se, sys.basis, None, occ_se)


def simulate_snapshots(sys: LinearQuantumSystem, spec: TrajectoryEnsembleSpec, times, *,
                       scheme: str = "exact", initial_covariance=None,
                       n_jobs: int = 1) -> list[MomentEstimate]:
    """Ensemble covariance across trajectories at each requested time.

    Times are rounded to the step grid.  Works for systems without a
    stationary state (e.g. undamped microwave quadratures).
    """
    steps = [int(round(t / spec.dt)) for t in times]
    if min(steps) < 0 or max(steps) > spec.n_steps:
        raise ValueError("snapshot times must lie within [0, t_final]")
    lookup = {k: i for i, k in enumerate(steps)}
    stepper = _Stepper(sys, spec.dt, scheme)
    init = factor_diffusion(_initial_covariance(sys, initial_covariance))
    samples = np.zeros((spec.n_trajectories, len(steps), sys.dim))

    def task(indices):
        def visit(k, u):
            if k in lookup:
                samples[indices.start:indices.stop, lookup[k]] = u

        stepper.run_chunk(spec.seed, indices, max(max(steps), 1), init, visit)

    _run([lambda ix=ix: task(ix) for ix in _chunks(spec.n_trajectories, max(steps), sys.dim)], n_jobs)
    out = []
    for t_i, k in enumerate(steps):
        u = samples[:, t_i]
        mean, cov, se, mean_se, loo = jackknife_covariance(u[:, :, None] * u[:, None, :], u)
        out.append(MomentEstimate(mean, cov, se, spec.n_trajectories, mean_se, sys.basis,
                                  k * spec.dt))
    return out


def _write_dump(path, basis: StateBasis, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trajectory_id", "time_s", *basis.labels])
        for r in rows:
            w.writerow([r[0], repr(float(r[1]))] + [repr(float(x)) for x in r[2:]])
