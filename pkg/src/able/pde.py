"""Desk-scale PDE data generation: random fields and reference solvers.

These generators are plain numpy (no tape) and use numpy's FFT: they only
produce training data, and every solver property the package relies on
(mean conservation, energy dissipation, residuals, determinism) is tested
directly against independent identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractError, DomainError, NumericalFailure
from .frame import Grid

BURGERS_GRF = dict(dims=1, tau=5.0, alpha=2.0, scale=25.0)
DARCY_GRF = dict(dims=2, tau=3.0, alpha=2.0, scale=1.0, threshold_levels=(12.0, 3.0))


@dataclass
class GrfSpec:
    """Periodic Gaussian field with spectral covariance scale^2 (4 pi^2 |k|^2 + tau^2)^-alpha."""

    dims: int = 1
    tau: float = 5.0
    alpha: float = 2.0
    scale: float = 25.0
    threshold_levels: Optional[tuple] = None   # (high, low) split at zero

    def __post_init__(self):
        if self.dims not in (1, 2):
            raise ContractError("GRF dims must be 1 or 2")
        if self.tau <= 0:
            raise DomainError("tau must be positive")
        if self.alpha <= self.dims / 2:
            raise DomainError(
                f"alpha={self.alpha} <= dims/2={self.dims / 2}: covariance is not trace class")

    def spectral_std(self, grid: Grid) -> np.ndarray:
        """Per-mode standard deviations on the grid's integer wavenumbers."""
        ks = [np.fft.fftfreq(n) * n for n in grid.extents]
        mesh = np.meshgrid(*ks, indexing="ij")
        ksq = sum(k**2 for k in mesh)
        sigma = self.scale * (4 * np.pi**2 * ksq + self.tau**2) ** (-self.alpha / 2)
        sigma[(0,) * grid.dims] = 0.0  # zero-mean field
        return sigma

    def point_variance(self, grid: Grid) -> float:
        """Analytic variance of the field at any fixed point (spectral sum)."""
        return float(np.sum(self.spectral_std(grid) ** 2))


def sample_grf(spec: GrfSpec, grid: Grid, seed: int, n_samples: int = 1) -> np.ndarray:
    """(n_samples, *extents) real periodic fields, deterministic per seed."""
    if grid.dims != spec.dims:
        raise ContractError(f"grid dims {grid.dims} != spec dims {spec.dims}")
    rng = np.random.default_rng(seed)
    axes = tuple(range(1, 1 + grid.dims))
    white = rng.standard_normal((n_samples,) + grid.extents)
    sigma = spec.spectral_std(grid)
    spec_noise = sigma * np.fft.fftn(white, axes=axes)
    fields = np.sqrt(grid.points) * np.fft.ifftn(spec_noise, axes=axes).real
    return np.ascontiguousarray(fields)


def make_darcy_coefficient(spec: GrfSpec, grid: Grid, seed: int,
                           n_samples: int = 1) -> np.ndarray:
    """Two-phase piecewise-constant medium: GRF thresholded at zero."""
    if spec.threshold_levels is None:
        raise ContractError("threshold_levels must be set for a two-phase coefficient")
    high, low = spec.threshold_levels
    if high <= 0 or low <= 0:
        raise DomainError("both coefficient levels must be positive")
    psi = sample_grf(spec, grid, seed, n_samples)
    return np.where(psi >= 0, float(high), float(low))


# ---- 1-D viscous Burgers -----------------------------------------------------

def solve_burgers(u0: np.ndarray, nu: float, grid: Grid, t_final: float = 1.0,
                  cfl: float = 0.4, dt_cap: float = 1e-4,
                  energy_every: int = 200) -> tuple:
    """Pseudo-spectral solve of u_t + (u^2/2)_x = nu u_xx on the unit circle.

    Conservative flux form with 2/3 dealiasing, integrating-factor RK4 with
    a fixed step chosen once from the initial data. Returns (u(t_final),
    diagnostics) where diagnostics carries the recorded energies per sample
    and the mean drift.

    The k=0 mode is untouched by every term, so the spatial mean is
    conserved to roundoff by construction.
    """
    if nu <= 0:
        raise DomainError("viscosity must be positive")
    if grid.dims != 1:
        raise ContractError("burgers solver is 1-D")
    squeeze = u0.ndim == 1
    u = np.atleast_2d(np.asarray(u0, dtype=np.float64))
    n = grid.extents[0]
    if u.shape[1] != n:
        raise ContractError(f"initial data length {u.shape[1]} != grid extent {n}")

    # real-to-complex transforms: data is real, so half the spectrum suffices
    k = np.arange(n // 2 + 1, dtype=np.float64)
    flux_coef = -0.5j * 2.0 * np.pi * k * (k <= n / 3)
    lam = -nu * (2 * np.pi * k) ** 2

    umax = float(np.max(np.abs(u)))
    dt = min(dt_cap, cfl * (1.0 / n) / max(umax, 1e-12))
    steps = max(1, math.ceil(t_final / dt))
    dt = t_final / steps

    e_half = np.exp(lam * dt / 2.0)
    e_full = np.exp(lam * dt)

    def nonlinear(v_hat):
        v = np.fft.irfft(v_hat, n=n, axis=1)
        return flux_coef * np.fft.rfft(v * v, axis=1)

    v_hat = np.fft.rfft(u, axis=1)
    mean0 = v_hat[:, 0].real.copy() / n

    energies = [np.mean(u**2, axis=1)]
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(steps):
            na = nonlinear(v_hat)
            nb = nonlinear(e_half * (v_hat + 0.5 * dt * na))
            nc = nonlinear(e_half * v_hat + 0.5 * dt * nb)
            nd = nonlinear(e_full * v_hat + dt * e_half * nc)
            v_hat = e_full * v_hat + dt / 6.0 * (e_full * na + 2 * e_half * (nb + nc) + nd)
            if (step + 1) % energy_every == 0 or step == steps - 1:
                u_now = np.fft.irfft(v_hat, n=n, axis=1)
                if not np.all(np.isfinite(u_now)):
                    raise NumericalFailure(
                        f"burgers solve blew up at step {step + 1}/{steps} (nu={nu}, N={n})")
                energies.append(np.mean(u_now**2, axis=1))

    u_final = np.fft.irfft(v_hat, n=n, axis=1)
    diagnostics = {
        "energies": np.stack(energies, axis=1),
        "mean_drift": np.abs(v_hat[:, 0].real / n - mean0),
        "dt": dt,
        "steps": steps,
    }
    return (u_final[0] if squeeze else u_final), diagnostics


# ---- 2-D Darcy flow -----------------------------------------------------------

def _darcy_operator(a: np.ndarray, h: float):
    """Harmonic-mean finite-volume stencil for -div(a grad u), zero Dirichlet."""
    inv_h2 = 1.0 / (h * h)
    tx = 2.0 * a[1:, :] * a[:-1, :] / (a[1:, :] + a[:-1, :]) * inv_h2
    ty = 2.0 * a[:, 1:] * a[:, :-1] / (a[:, 1:] + a[:, :-1]) * inv_h2
    diag = np.zeros_like(a)
    diag[1:, :] += tx
    diag[:-1, :] += tx
    diag[:, 1:] += ty
    diag[:, :-1] += ty
    diag[0, :] += 2.0 * a[0, :] * inv_h2
    diag[-1, :] += 2.0 * a[-1, :] * inv_h2
    diag[:, 0] += 2.0 * a[:, 0] * inv_h2
    diag[:, -1] += 2.0 * a[:, -1] * inv_h2

    def matvec(u):
        out = diag * u
        out[:-1, :] -= tx * u[1:, :]
        out[1:, :] -= tx * u[:-1, :]
        out[:, :-1] -= ty * u[:, 1:]
        out[:, 1:] -= ty * u[:, :-1]
        return out

    return matvec, diag


def solve_darcy(a: np.ndarray, f, grid: Grid, rtol: float = 1e-10,
                max_iter: int = 50_000) -> np.ndarray:
    """Solve -div(a grad u) = f with zero Dirichlet walls by preconditioned CG.

    Cell-centered finite volumes with harmonic-mean face coefficients give a
    symmetric positive-definite system; Jacobi-preconditioned conjugate
    gradients iterate to a relative residual of `rtol`.
    """
    if grid.dims != 2:
        raise ContractError("darcy solver is 2-D")
    a = np.asarray(a, dtype=np.float64)
    if a.shape != grid.extents:
        raise ContractError(f"coefficient shape {a.shape} != grid extents {grid.extents}")
    if np.any(a <= 0):
        raise DomainError("coefficient must be strictly positive")
    rhs = np.broadcast_to(np.asarray(f, dtype=np.float64), a.shape).copy()
    h = 1.0 / grid.extents[0]
    matvec, diag = _darcy_operator(a, h)

    u = np.zeros_like(rhs)
    r = rhs - matvec(u)
    b_norm = np.linalg.norm(rhs)
    if b_norm == 0:
        return u
    z = r / diag
    p = z.copy()
    rz = float(np.sum(r * z))
    for it in range(max_iter):
        ap = matvec(p)
        alpha = rz / float(np.sum(p * ap))
        u += alpha * p
        r -= alpha * ap
        if np.linalg.norm(r) <= rtol * b_norm:
            return u
        z = r / diag
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NumericalFailure(
        f"darcy CG did not reach rtol={rtol} in {max_iter} iterations "
        f"(residual {np.linalg.norm(r) / b_norm:.2e})")


def darcy_residual(a: np.ndarray, f, u: np.ndarray, grid: Grid) -> float:
    """Relative residual ||A u - f|| / ||f|| of a candidate solution."""
    matvec, _ = _darcy_operator(np.asarray(a, dtype=np.float64), 1.0 / grid.extents[0])
    rhs = np.broadcast_to(np.asarray(f, dtype=np.float64), a.shape)
    return float(np.linalg.norm(matvec(u) - rhs) / np.linalg.norm(rhs))
