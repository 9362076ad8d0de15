"""Kernel-engineering scenarios with closed-form dynamics.

Each scenario combines a Markovian part (local kernel, or a time-local
generator rewritten as a kernel) with a purely non-local noise kernel that
leaves one eigenvalue, ``alpha_star``, untouched. Three families have closed
forms; ``custom`` scenarios carry tabulated kernels and are solved
numerically.

Rates are in 1/s and times in s.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .channel import ChannelSpectrum
from .dynamics import KernelFunction, grid_step, solve_nakajima_zwanzig


class ScenarioParameterError(ValueError):
    pass


class Variant(str, enum.Enum):
    CONSTANT = "constant-isotropic"
    EXP_DECAY = "exp-decay"
    BEYOND = "beyond-semigroup"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class CustomKernels:
    """Tabulated kernels for a custom scenario.

    ``markov[a]`` and ``noise[a]`` are the kernel eigenvalues for
    ``alpha = a + 1``. The noise part must be purely non-local.
    """

    grid: np.ndarray
    markov: tuple[KernelFunction, ...]
    noise: tuple[KernelFunction, ...]

    def __post_init__(self):
        grid_step(self.grid)
        if len(self.markov) != len(self.noise):
            raise ScenarioParameterError("markov and noise kernels need one entry per eigenvalue")
        if any(k.delta_weight != 0 for k in self.noise):
            raise ScenarioParameterError("noise kernels must not contain a delta term")


@dataclass(frozen=True)
class ScenarioSpec:
    variant: Variant
    d: int = 2
    gamma: float | None = None
    omega: float | None = None
    z: float | None = None
    r: float | None = None
    alpha_star: int | None = None
    custom: CustomKernels | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.alpha_star is None:
            object.__setattr__(self, "alpha_star", self.d + 1)
        _validate(self)

    @classmethod
    def constant_isotropic(cls, gamma: float, omega: float) -> ScenarioSpec:
        return cls(Variant.CONSTANT, d=2, gamma=gamma, omega=omega, alpha_star=3)

    @classmethod
    def exp_decay(cls, gamma: float, z: float, omega: float, d: int = 2, alpha_star: int | None = None) -> ScenarioSpec:
        return cls(Variant.EXP_DECAY, d=d, gamma=gamma, z=z, omega=omega, alpha_star=alpha_star)

    @classmethod
    def beyond_semigroup(cls, r: float, omega: float, d: int = 2, alpha_star: int | None = None) -> ScenarioSpec:
        return cls(Variant.BEYOND, d=d, r=r, omega=omega, alpha_star=alpha_star)

    @classmethod
    def from_kernels(
        cls,
        grid: np.ndarray,
        markov: Sequence[KernelFunction],
        noise: Sequence[KernelFunction],
        alpha_star: int | None = None,
    ) -> ScenarioSpec:
        d = len(markov) - 1
        return cls(Variant.CUSTOM, d=d, alpha_star=alpha_star, custom=CustomKernels(np.asarray(grid, float), tuple(markov), tuple(noise)))

    @property
    def noise_decay(self) -> float | None:
        """Decay rate of the noise kernel (fixed to ``r/(d+1)`` beyond the semigroup)."""
        if self.variant is Variant.BEYOND:
            return self.r / (self.d + 1)
        return self.z

    def params(self) -> dict[str, float]:
        names = {
            Variant.CONSTANT: ("gamma", "omega"),
            Variant.EXP_DECAY: ("gamma", "z", "omega"),
            Variant.BEYOND: ("r", "omega"),
            Variant.CUSTOM: (),
        }[self.variant]
        return {n: getattr(self, n) for n in names}


def _validate(spec: ScenarioSpec) -> None:
    v, d = spec.variant, spec.d
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise ScenarioParameterError(f"d must be an integer >= 2, got {d!r}")
    if not 1 <= spec.alpha_star <= d + 1:
        raise ScenarioParameterError(f"alpha_star must lie in 1..{d + 1}, got {spec.alpha_star}")
    if v is Variant.CUSTOM:
        if spec.custom is None:
            raise ScenarioParameterError("custom scenario needs tabulated kernels")
        if len(spec.custom.markov) != d + 1:
            raise ScenarioParameterError(f"custom scenario needs {d + 1} kernels per part")
        return
    required = {Variant.CONSTANT: ("gamma", "omega"), Variant.EXP_DECAY: ("gamma", "z", "omega"), Variant.BEYOND: ("r", "omega")}[v]
    for name in required:
        value = getattr(spec, name)
        if value is None or not math.isfinite(value) or value <= 0:
            raise ScenarioParameterError(f"{name} must be a positive rate, got {value!r}")
    w = spec.omega
    if v is Variant.CONSTANT:
        if d != 2:
            raise ScenarioParameterError("the constant-isotropic scenario is defined for d=2 only")
        if spec.alpha_star != 3:
            raise ScenarioParameterError("the constant-isotropic scenario has alpha_star=3")
        if not spec.gamma < 2 * w:
            raise ScenarioParameterError(
                f"gamma={spec.gamma} must be < 2*omega={2 * w}: oscillation is a necessary condition for complete positivity"
            )
    elif v is Variant.EXP_DECAY:
        if not 4 * w * w > (spec.gamma - spec.z) ** 2:
            raise ScenarioParameterError("need 4*omega^2 > (gamma - z)^2 for the combined map to oscillate")
        if not 4 * w * w > spec.z**2:
            raise ScenarioParameterError("need 4*omega^2 > z^2 for the noise map to oscillate")
    else:
        r = spec.r
        if not 4 * w * w > r * r:
            raise ScenarioParameterError("need 4*omega^2 > r^2")
        if not (d + 1) ** 2 * w * w > d * r * r:
            raise ScenarioParameterError("need (d+1)^2*omega^2 > d*r^2")


@dataclass(frozen=True)
class ScenarioSpectra:
    t: float
    markov: ChannelSpectrum
    noise: ChannelSpectrum
    combined: ChannelSpectrum


def _damped_cos(amp, decay, freq, phase, t):
    out = amp * np.exp(-decay * t) * np.cos(freq * t + phase)
    # amp * cos(phase) == 1 analytically; pin the initial condition exactly
    return np.where(t == 0, 1.0, out)


def _fill(d: int, alpha_star: int, t: np.ndarray, noisy: np.ndarray, quiet: np.ndarray) -> np.ndarray:
    out = np.repeat(np.asarray(noisy, float)[:, None], d + 1, axis=1)
    out[:, alpha_star - 1] = quiet
    return out


def _constant_arrays(gamma, omega, t):
    P = math.sqrt(4 * omega**2 - gamma**2)
    markov = np.repeat(np.exp(-gamma * t)[:, None], 3, axis=1)
    noise = _fill(2, 3, t, np.cos(omega * t), np.ones_like(t))
    osc = _damped_cos(2 * omega / P, gamma / 2, P / 2, math.atan(gamma / P), t)
    combined = _fill(2, 3, t, osc, np.exp(-gamma * t))
    return markov, noise, combined


def _expdecay_arrays(gamma, z, omega, d, alpha_star, t):
    P = math.sqrt(4 * omega**2 - z**2)
    R = math.sqrt(4 * omega**2 - (gamma - z) ** 2)
    semigroup = np.exp(-gamma * t)
    markov = np.repeat(semigroup[:, None], d + 1, axis=1)
    noise = _fill(d, alpha_star, t, _damped_cos(2 * omega / P, z / 2, P / 2, -math.atan(z / P), t), np.ones_like(t))
    osc = _damped_cos(2 * omega / R, (gamma + z) / 2, R / 2, math.atan((gamma - z) / R), t)
    combined = _fill(d, alpha_star, t, osc, semigroup)
    return markov, noise, combined


def beyond_constants(r: float, omega: float, d: int) -> dict[str, float]:
    """``P``, ``X`` and ``Y`` of the beyond-semigroup closed forms."""
    return {
        "P": math.sqrt(4 * omega**2 - r**2 / (d + 1) ** 2),
        "Y": math.sqrt(4 * omega**2 - r**2),
        "X": math.sqrt((d + 1) ** 2 * omega**2 - d * r**2),
    }


def _beyond_arrays(r, omega, d, alpha_star, t):
    c = beyond_constants(r, omega, d)
    P, X, Y = c["P"], c["X"], c["Y"]
    lam_m = (1 + d * np.exp(-r * t)) / (d + 1)
    markov = np.repeat(lam_m[:, None], d + 1, axis=1)
    noise_osc = _damped_cos(2 * omega / P, r / (2 * (d + 1)), P / 2, -math.atan(r / (P * (d + 1))), t)
    noise = _fill(d, alpha_star, t, noise_osc, np.ones_like(t))
    osc = _damped_cos(2 * X / ((d + 1) * Y), r / 2, Y / 2, math.atan(r * (d - 1) / (Y * (d + 1))), t)
    combined = _fill(d, alpha_star, t, osc, lam_m)
    return markov, noise, combined


def _custom_arrays(spec: ScenarioSpec, t: np.ndarray):
    ck = spec.custom
    if t.shape != ck.grid.shape or np.abs(t - ck.grid).max() > 1e-12:
        raise ScenarioParameterError("custom scenarios can only be evaluated on their own grid")
    markov = np.column_stack([solve_nakajima_zwanzig(k, ck.grid).values for k in ck.markov])
    noise = np.column_stack([solve_nakajima_zwanzig(k, ck.grid).values for k in ck.noise])
    combined = np.column_stack([solve_nakajima_zwanzig(m + n, ck.grid).values for m, n in zip(ck.markov, ck.noise)])
    return markov, noise, combined


def spectra_arrays(spec: ScenarioSpec, times) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Markov, noise and combined eigenvalues, each of shape ``(len(times), d+1)``."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(t < 0):
        raise ScenarioParameterError("times must be nonnegative")
    v = spec.variant
    if v is Variant.CONSTANT:
        return _constant_arrays(spec.gamma, spec.omega, t)
    if v is Variant.EXP_DECAY:
        return _expdecay_arrays(spec.gamma, spec.z, spec.omega, spec.d, spec.alpha_star, t)
    if v is Variant.BEYOND:
        return _beyond_arrays(spec.r, spec.omega, spec.d, spec.alpha_star, t)
    return _custom_arrays(spec, t)


def evaluate(spec: ScenarioSpec, t: float) -> ScenarioSpectra:
    if spec.variant is Variant.CUSTOM:
        raise ScenarioParameterError("custom scenarios have no closed form; use spectra_arrays on their grid")
    m, n, c = spectra_arrays(spec, [t])
    d = spec.d
    return ScenarioSpectra(float(t), ChannelSpectrum(d, m[0]), ChannelSpectrum(d, n[0]), ChannelSpectrum(d, c[0]))


def eval_constant_scenario(gamma: float, omega: float, t: float) -> ScenarioSpectra:
    return evaluate(ScenarioSpec.constant_isotropic(gamma, omega), t)


def eval_expdecay_scenario(gamma: float, z: float, omega: float, d: int, alpha_star: int | None, t: float) -> ScenarioSpectra:
    return evaluate(ScenarioSpec.exp_decay(gamma, z, omega, d, alpha_star), t)


def eval_beyond_scenario(r: float, omega: float, d: int, alpha_star: int | None, t: float) -> ScenarioSpectra:
    return evaluate(ScenarioSpec.beyond_semigroup(r, omega, d, alpha_star), t)


# -- kernels ---------------------------------------------------------------


def markov_kernel(spec: ScenarioSpec, alpha: int) -> KernelFunction:
    """Kernel eigenvalue of the Markovian part for eigenvalue ``alpha``."""
    v = spec.variant
    if v is Variant.CUSTOM:
        return spec.custom.markov[alpha - 1]
    if v in (Variant.CONSTANT, Variant.EXP_DECAY):
        return KernelFunction(-spec.gamma, 0.0)
    r, d = spec.r, spec.d
    rate = d * r / (d + 1)
    decay = r / (d + 1)
    return KernelFunction(-rate, lambda t: rate * decay * np.exp(-decay * np.asarray(t)))


def noise_kernel(spec: ScenarioSpec, alpha: int) -> KernelFunction:
    """Purely non-local noise kernel eigenvalue for eigenvalue ``alpha``."""
    v = spec.variant
    if v is Variant.CUSTOM:
        return spec.custom.noise[alpha - 1]
    if alpha == spec.alpha_star:
        return KernelFunction(0.0, 0.0)
    w2 = spec.omega**2
    if v is Variant.CONSTANT:
        return KernelFunction(0.0, -w2)
    z = spec.noise_decay
    return KernelFunction(0.0, lambda t: -w2 * np.exp(-z * np.asarray(t)))


def combined_kernel(spec: ScenarioSpec, alpha: int) -> KernelFunction:
    return markov_kernel(spec, alpha) + noise_kernel(spec, alpha)


@dataclass(frozen=True)
class KernelEigenvalue:
    delta_weight: float
    smooth: float


def kernel_eigenvalues(spec: ScenarioSpec, t: float) -> list[KernelEigenvalue]:
    """Full-kernel eigenvalues at time ``t`` split into delta weight and smooth value."""
    if t < 0:
        raise ScenarioParameterError("t must be nonnegative")
    out = []
    grid = np.array([float(t)])
    for alpha in range(1, spec.d + 2):
        k = combined_kernel(spec, alpha)
        if spec.variant is Variant.CUSTOM:
            ck = spec.custom
            smooth = float(np.interp(t, ck.grid, k.sample(ck.grid)))
        else:
            smooth = float(k.sample(grid)[0])
        out.append(KernelEigenvalue(float(k.delta_weight), smooth))
    return out


# -- complete positivity ---------------------------------------------------


@dataclass(frozen=True)
class CpSufficiencyReport:
    """Sufficient CP condition evaluated at the first cosine minimum ``t_star``.

    ``holds`` is ``lhs >= rhs`` or ``lhs <= rhs`` according to ``relation``.
    ``noise`` carries the separate condition for the noise-only map, when the
    scenario has one.
    """

    t_star: float
    lhs: float
    rhs: float
    relation: str
    holds: bool
    noise: CpSufficiencyReport | None = None


def _report(t_star, lhs, rhs, relation, noise=None):
    holds = lhs >= rhs if relation == ">=" else lhs <= rhs
    return CpSufficiencyReport(t_star, lhs, rhs, relation, bool(holds), noise)


def _noise_condition(z: float, omega: float, d: int) -> CpSufficiencyReport:
    P = math.sqrt(4 * omega**2 - z**2)
    t_star = 2 / P * (math.pi + math.atan(z / P))
    return _report(t_star, math.exp(z * t_star / 2), 2 * (d - 1) * omega / P, ">=")


def cp_sufficient(spec: ScenarioSpec) -> CpSufficiencyReport:
    v, d, w = spec.variant, spec.d, spec.omega
    if v is Variant.CONSTANT:
        g = spec.gamma
        P = math.sqrt(4 * w**2 - g**2)
        t_star = 2 / P * (math.pi - math.atan(g / P))
        return _report(t_star, math.cosh(g * t_star / 2), 2 * w / P, ">=")
    if v is Variant.EXP_DECAY:
        g, z = spec.gamma, spec.z
        R = math.sqrt(4 * w**2 - (g - z) ** 2)
        t_star = 2 / R * (math.pi - math.atan((g - z) / R))
        lhs = 2 * d * (d - 1) * w / R
        rhs = math.exp(z * t_star / 2) * ((d - 1) * math.exp(-g * t_star / 2) + math.exp(g * t_star / 2))
        return _report(t_star, lhs, rhs, "<=", _noise_condition(z, w, d))
    if v is Variant.BEYOND:
        r = spec.r
        c = beyond_constants(r, w, d)
        X, Y = c["X"], c["Y"]
        t_star = 2 / Y * (math.pi - math.atan((d - 1) * r / ((d + 1) * Y)))
        rhs = math.exp(r * t_star / 2) / (d - 1) + 0.5 * math.exp(-r * t_star / 2)
        return _report(t_star, X / Y, rhs, "<=", _noise_condition(spec.noise_decay, w, d))
    raise ScenarioParameterError("custom scenarios have no closed-form sufficient condition; use full CP validation")


# -- kernel legitimacy -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class AdmissibilityReport:
    """Outcome of the integrated-``ell`` legitimacy conditions.

    ``first_violation`` maps each condition name to the first grid time at
    which it fails, or ``None``.
    """

    grid: np.ndarray
    integrals: np.ndarray
    lambdas: np.ndarray
    first_violation: dict[str, float | None]

    @property
    def passed(self) -> bool:
        return all(t is None for t in self.first_violation.values())


def _first_time(grid, mask):
    return float(grid[np.argmax(mask)]) if mask.any() else None


def admissibility_from_integrals(integrals: np.ndarray, grid: np.ndarray, d: int, tol: float = 1e-9) -> AdmissibilityReport:
    L = np.asarray(integrals, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if L.shape != (grid.size, d + 1):
        raise ScenarioParameterError(f"expected table of shape {(grid.size, d + 1)}, got {L.shape}")
    total = L.sum(axis=1)
    first = {
        "nonnegative": _first_time(grid, (L < -tol).any(axis=1)),
        "lower": _first_time(grid, (d * L > total[:, None] + tol).any(axis=1)),
        "upper": _first_time(grid, total > d * d / (d - 1) + tol),
    }
    return AdmissibilityReport(grid, L, 1.0 - L, first)


def kernel_admissibility(ell: np.ndarray, grid: np.ndarray, d: int, tol: float = 1e-9) -> AdmissibilityReport:
    """Check the legitimacy conditions on ``L_alpha(t) = int_0^t ell_alpha``.

    ``ell`` has shape ``(len(grid), d+1)``. Conditions: ``L_alpha >= 0`` and
    ``d L_alpha <= sum_beta L_beta <= d^2/(d-1)`` at every grid point.
    """
    grid = np.asarray(grid, dtype=float)
    ell = np.asarray(ell, dtype=float)
    if ell.ndim != 2 or ell.shape[0] != grid.size:
        raise ScenarioParameterError(f"ell table has shape {ell.shape}, grid has {grid.size} points")
    grid_step(grid)
    L = cumulative_trapezoid(ell, grid, axis=0, initial=0.0)
    return admissibility_from_integrals(L, grid, d, tol)


@dataclass(frozen=True)
class NondecreasingReport:
    is_invertible: bool
    is_kernel_nondecreasing: bool
    zero_crossings: tuple[float, ...]


def kernel_nondecreasing_check(values, grid, tol: float = 1e-9) -> NondecreasingReport:
    """Detect zeros of one eigenvalue trajectory and whether it revives after one."""
    lam = np.asarray(values, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if lam.shape != grid.shape:
        raise ScenarioParameterError("values and grid must have the same length")
    grid_step(grid)
    small = np.abs(lam) < tol
    crossings = []
    first_zero = None
    for i in range(1, lam.size):
        if small[i] and not small[i - 1]:
            crossings.append(float(grid[i]))
            first_zero = i if first_zero is None else first_zero
        elif not small[i] and not small[i - 1] and np.sign(lam[i]) != np.sign(lam[i - 1]):
            t0, t1 = grid[i - 1], grid[i]
            crossings.append(float(t0 + (t1 - t0) * lam[i - 1] / (lam[i - 1] - lam[i])))
            first_zero = i if first_zero is None else first_zero
    if small[0]:
        first_zero = 0
    is_invertible = first_zero is None
    nondecreasing = is_invertible or bool(small[first_zero:].all())
    return NondecreasingReport(is_invertible, nondecreasing, tuple(crossings))
