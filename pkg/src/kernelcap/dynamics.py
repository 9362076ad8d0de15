"""Scalar solvers for generalized Pauli dynamics.

Every generalized Pauli kernel acts diagonally on the unitaries ``U_alpha^k``,
so each eigenvalue obeys its own scalar equation

    d/dt lam(t) = a * lam(t) + int_0^t k(t - s) lam(s) ds,   lam(0) = 1,

where ``a`` is the weight of the Dirac-delta (local) part of the kernel and
``k`` its smooth part.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .channel import ChannelSpectrum, ChannelValidationError

SmoothPart = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, float]

LAPLACE_TAIL_TOL = 1e-8


class SolverError(RuntimeError):
    pass


class GridError(ValueError):
    pass


def uniform_grid(t_max: float, steps: int) -> np.ndarray:
    """``steps`` equal intervals on ``[0, t_max]`` (``steps + 1`` points)."""
    if steps < 2:
        raise GridError(f"steps must be >= 2, got {steps}")
    if not t_max > 0:
        raise GridError(f"t_max must be positive, got {t_max}")
    return np.linspace(0.0, float(t_max), int(steps) + 1)


def grid_step(grid: np.ndarray) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3:
        raise GridError("grid needs at least 3 points")
    if grid[0] != 0.0:
        raise GridError(f"grid must start at t=0, starts at {grid[0]}")
    steps = np.diff(grid)
    h = (grid[-1] - grid[0]) / (grid.size - 1)
    if h <= 0 or np.abs(steps - h).max() > 1e-12 * max(1.0, grid[-1]):
        raise GridError("grid must be uniform and strictly increasing")
    return float(h)


@dataclass(frozen=True)
class KernelFunction:
    """One kernel eigenvalue: ``delta_weight * delta(t) + smooth(t)``.

    ``smooth`` is a callable of an array of times, an array already tabulated
    on the solver grid, or a constant.
    """

    delta_weight: float = 0.0
    smooth: SmoothPart = 0.0

    def sample(self, grid: np.ndarray) -> np.ndarray:
        grid = np.asarray(grid, dtype=float)
        if callable(self.smooth):
            values = np.asarray(self.smooth(grid), dtype=float)
            values = np.broadcast_to(values, grid.shape).astype(float)
        elif np.ndim(self.smooth) == 0:
            values = np.full(grid.shape, float(self.smooth))
        else:
            values = np.asarray(self.smooth, dtype=float)
            if values.shape != grid.shape:
                raise GridError(f"tabulated kernel has shape {values.shape}, grid has {grid.shape}")
        return values

    def __add__(self, other: KernelFunction) -> KernelFunction:
        a, b = self.smooth, other.smooth
        if callable(a) or callable(b):
            fa = a if callable(a) else (lambda t, a=a: np.broadcast_to(a, np.shape(t)))
            fb = b if callable(b) else (lambda t, b=b: np.broadcast_to(b, np.shape(t)))
            smooth: SmoothPart = lambda t: np.asarray(fa(t)) + np.asarray(fb(t))
        else:
            smooth = np.asarray(a, dtype=float) + np.asarray(b, dtype=float)
            if smooth.ndim == 0:
                smooth = float(smooth)
        return KernelFunction(self.delta_weight + other.delta_weight, smooth)


@dataclass(frozen=True, eq=False)
class EigenTrajectory:
    """Map eigenvalues on a uniform grid; ``values`` has time as its first axis."""

    grid: np.ndarray
    values: np.ndarray

    @property
    def h(self) -> float:
        return grid_step(self.grid)


def solve_nakajima_zwanzig(kernel: KernelFunction, grid: np.ndarray) -> EigenTrajectory:
    """Integrate the scalar memory-kernel equation with ``lam(0) = 1``.

    Both the time derivative and the convolution use the trapezoid rule.
    The scheme is implicit in the new value, but the equation is linear, so
    each step is one scalar division rather than an iteration. Global error
    is O(h^2).
    """
    grid = np.asarray(grid, dtype=float)
    h = grid_step(grid)
    k = kernel.sample(grid)
    bad = ~np.isfinite(k)
    if bad.any():
        raise SolverError(f"kernel is not finite at t={float(grid[np.argmax(bad)])!r}")
    a = float(kernel.delta_weight)
    if not np.isfinite(a):
        raise SolverError(f"delta weight is not finite: {a!r}")

    n_pts = grid.size
    lam = np.empty(n_pts)
    lam[0] = 1.0
    f_prev = a  # derivative at t=0, where the convolution is empty
    denom = 1.0 - 0.5 * h * a - 0.25 * h * h * k[0]
    for m in range(1, n_pts):
        # convolution over already-known points; the lam[m] term is moved left
        conv = 0.5 * k[m] * lam[0]
        if m > 1:
            conv += np.dot(k[m - 1 : 0 : -1], lam[1:m])
        conv *= h
        lam[m] = (lam[m - 1] + 0.5 * h * (f_prev + conv)) / denom
        f_prev = a * lam[m] + conv + 0.5 * h * k[0] * lam[m]
    return EigenTrajectory(grid, lam)


def timelocal_solve(rates: np.ndarray, grid: np.ndarray) -> EigenTrajectory:
    """Eigenvalues ``exp(Gamma_alpha - Gamma_0)`` for time-local decoherence rates.

    ``rates`` has shape ``(len(grid), d+1)``; column ``alpha-1`` holds
    ``gamma_alpha(t)``.
    """
    grid = np.asarray(grid, dtype=float)
    grid_step(grid)
    rates = np.asarray(rates, dtype=float)
    if rates.ndim != 2 or rates.shape[0] != grid.size:
        raise GridError(f"rates must have shape (len(grid), d+1), got {rates.shape}")
    if not np.all(np.isfinite(rates)):
        raise SolverError("rates contain non-finite values")
    big_gamma = cumulative_trapezoid(rates, grid, axis=0, initial=0.0)
    total = big_gamma.sum(axis=1, keepdims=True)
    return EigenTrajectory(grid, np.exp(big_gamma - total))


def integrated_rates(rates: np.ndarray, grid: np.ndarray) -> np.ndarray:
    return cumulative_trapezoid(np.asarray(rates, dtype=float), np.asarray(grid, dtype=float), axis=0, initial=0.0)


def timelocal_cp_check(big_gamma, d: int, tol: float = 1e-12) -> bool:
    """Fujiwara-Algoet condition for a time-local map, given ``Gamma_alpha(t)``.

    Checks ``sum exp(Gamma_alpha) <= exp(Gamma_0) + d * min exp(Gamma_beta)``
    with ``Gamma_0 = sum Gamma_alpha``. Evaluated in scaled form to avoid
    overflow.
    """
    g = np.asarray(big_gamma, dtype=float)
    if g.shape != (d + 1,):
        raise ValueError(f"expected {d + 1} integrated rates, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError("integrated rates must be finite")
    g0 = g.sum()
    # divide through by exp(Gamma_0): the inequality becomes one on the eigenvalues
    lam = np.exp(g - g0)
    return bool(lam.sum() <= 1.0 + d * lam.min() + tol)


def product_spectrum(a: ChannelSpectrum, b: ChannelSpectrum) -> ChannelSpectrum:
    if a.d != b.d:
        raise ChannelValidationError(f"dimension mismatch: {a.d} vs {b.d}")
    return ChannelSpectrum(a.d, a.lambdas * b.lambdas)


@dataclass(frozen=True)
class LaplaceEstimate:
    value: float
    s: float
    tail_bound: float
    warning: str | None = None


def numeric_laplace(traj: EigenTrajectory, s: float, tail_tol: float = LAPLACE_TAIL_TOL) -> LaplaceEstimate:
    """Trapezoid estimate of ``int_0^T lam(t) exp(-s t) dt`` on the trajectory window."""
    if not s > 0:
        raise ValueError(f"s must be positive, got {s}")
    grid = np.asarray(traj.grid, dtype=float)
    values = np.asarray(traj.values, dtype=float)
    if values.ndim != 1:
        raise ValueError("numeric_laplace expects a single eigenvalue trajectory")
    T = float(grid[-1])
    value = float(np.trapezoid(values * np.exp(-s * grid), grid))
    tail = float(np.exp(-s * T))
    warning = None
    if tail >= tail_tol:
        warning = f"truncation tail exp(-sT)={tail:.3e} exceeds {tail_tol:.1e} (s={s}, T={T})"
    return LaplaceEstimate(value, float(s), tail, warning)


@dataclass(frozen=True)
class CompositionCheck:
    residual: float
    per_s: dict
    warnings: tuple


def composition_law_check(lam_markov: EigenTrajectory, lam_noise: EigenTrajectory, lam: EigenTrajectory, s_values) -> CompositionCheck:
    """Max residual of the Laplace-domain composition law over ``s_values``.

    The combined transform must equal ``M N / (M + N - s M N)`` where ``M``
    and ``N`` are the Markovian and noise transforms.
    """
    for other in (lam_noise, lam):
        if other.grid.shape != lam_markov.grid.shape or np.abs(other.grid - lam_markov.grid).max() > 0:
            raise GridError("composition check needs trajectories on a common grid")
    per_s = {}
    warnings = []
    for s in s_values:
        m = numeric_laplace(lam_markov, s)
        n = numeric_laplace(lam_noise, s)
        c = numeric_laplace(lam, s)
        warnings.extend(w.warning for w in (m, n, c) if w.warning)
        rhs = m.value * n.value / (m.value + n.value - s * m.value * n.value)
        per_s[float(s)] = abs(c.value - rhs)
    return CompositionCheck(max(per_s.values()), per_s, tuple(dict.fromkeys(warnings)))
