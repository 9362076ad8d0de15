"""Capacity trajectories, advantage windows and parameter sweeps."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .capacity import CapacityDomainError, CapacityKind, c_alpha_array, classify_and_compute
from .channel import CP_TOL, ChannelSpectrum, cp_margins
from .dynamics import grid_step, integrated_rates, timelocal_cp_check
from .scenarios import ScenarioParameterError, ScenarioSpec, Variant, cp_sufficient, spectra_arrays

ADVANTAGE_TOL = 1e-9
BISECTION_TOL = 1e-6


class EmptySweepError(ValueError):
    def __init__(self, message: str, skipped=()):
        super().__init__(message)
        self.skipped = tuple(skipped)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Per-time capacities of the Markovian and noise-augmented maps (nats).

    ``bound`` marks rows where a compared capacity is only the lower bound.
    """

    grid: np.ndarray
    d: int
    markov: np.ndarray
    combined: np.ndarray
    capacity_markov: np.ndarray
    capacity_combined: np.ndarray
    advantage: np.ndarray
    cp_lower_margin: np.ndarray
    cp_upper_margin: np.ndarray
    bound: np.ndarray
    spec: ScenarioSpec | None = field(default=None, repr=False)


def _capacities(spectra: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    # spectra outside the channel domain are not CP; their capacity is NaN
    values = np.full(len(spectra), np.nan)
    bound = np.zeros(len(spectra), dtype=bool)
    for i, lam in enumerate(spectra):
        try:
            res = classify_and_compute(ChannelSpectrum(d, lam))
        except CapacityDomainError:
            continue
        values[i] = res.value
        bound[i] = d > 2 and res.kind is CapacityKind.LOWER_BOUND
    return values, bound


def trajectory_from_spectra(grid, markov: np.ndarray, combined: np.ndarray, d: int, spec: ScenarioSpec | None = None) -> Trajectory:
    grid = np.asarray(grid, dtype=float)
    cap_m, bound_m = _capacities(markov, d)
    cap_c, bound_c = _capacities(combined, d)
    lower, upper = cp_margins(combined, d)
    return Trajectory(
        grid=grid,
        d=d,
        markov=markov,
        combined=combined,
        capacity_markov=cap_m,
        capacity_combined=cap_c,
        advantage=cap_c - cap_m,
        cp_lower_margin=lower,
        cp_upper_margin=upper,
        bound=bound_m | bound_c,
        spec=spec,
    )


def capacity_trajectory(spec: ScenarioSpec, grid) -> Trajectory:
    """Capacity of the Markovian and combined maps along a uniform grid.

    Where the combined spectrum leaves the eigenvalue domain of a channel the
    capacities and advantage are NaN (such points also fail the CP margins).
    """
    grid = np.asarray(grid, dtype=float)
    grid_step(grid)
    markov, _, combined = spectra_arrays(spec, grid)
    return trajectory_from_spectra(grid, markov, combined, spec.d, spec)


@dataclass(frozen=True)
class AdvantageReport:
    windows: tuple[tuple[float, float], ...]
    max_advantage: float
    t_at_max: float
    first_cp_violation: float | None

    @property
    def total_length(self) -> float:
        return sum(b - a for a, b in self.windows)


def _crossing(t0, t1, g0, g1):
    # a NaN neighbour (non-channel point) pins the edge to the defined sample
    if np.isnan(g0):
        return t1
    if np.isnan(g1):
        return t0
    if g0 == g1:
        return t0
    return t0 + (t1 - t0) * g0 / (g0 - g1)


def advantage_windows(traj: Trajectory, tol: float = ADVANTAGE_TOL) -> AdvantageReport:
    t = traj.grid
    g = traj.advantage - tol
    above = np.nan_to_num(g, nan=-1.0) > 0
    windows = []
    start = t[0] if above[0] else None
    for i in range(1, t.size):
        if above[i] and not above[i - 1]:
            start = _crossing(t[i - 1], t[i], g[i - 1], g[i])
        elif not above[i] and above[i - 1]:
            windows.append((float(start), float(_crossing(t[i - 1], t[i], g[i - 1], g[i]))))
            start = None
    if start is not None:
        windows.append((float(start), float(t[-1])))
    i_max = int(np.nanargmax(traj.advantage))
    return AdvantageReport(
        windows=tuple(windows),
        max_advantage=float(traj.advantage[i_max]),
        t_at_max=float(t[i_max]),
        first_cp_violation=full_cp_validation(traj),
    )


def _min_margin(spec: ScenarioSpec, t: float) -> float:
    _, _, combined = spectra_arrays(spec, [t])
    lower, upper = cp_margins(combined[0], spec.d)
    return float(min(lower, upper))


def full_cp_validation(traj: Trajectory, tol: float = CP_TOL) -> float | None:
    """Earliest time at which the combined map stops being CP, or ``None``.

    The first failing grid interval is refined by bisection on the closed
    form to ``1e-6`` s; custom scenarios fall back to linear interpolation.
    """
    margin = np.minimum(traj.cp_lower_margin, traj.cp_upper_margin) + tol
    bad = margin < 0
    if not bad.any():
        return None
    i = int(np.argmax(bad))
    if i == 0:
        return float(traj.grid[0])
    lo, hi = float(traj.grid[i - 1]), float(traj.grid[i])
    spec = traj.spec
    if spec is None or spec.variant is Variant.CUSTOM:
        return float(_crossing(lo, hi, margin[i - 1], margin[i]))
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if _min_margin(spec, mid) + tol < 0:
            hi = mid
        else:
            lo = mid
    return hi


# -- time-local no-gain property -------------------------------------------


def timelocal_legitimate(rates: np.ndarray, grid, d: int) -> bool:
    """Whether the time-local map with these rates is CP at every grid point."""
    big = integrated_rates(rates, grid)
    return all(timelocal_cp_check(row, d) for row in big)


def no_gain_check(markov_rates: np.ndarray, noise_rates: np.ndarray, grid, d: int, tol: float = 1e-12) -> bool | None:
    """Check that adding a time-local noise generator never raises capacity.

    Returns ``None`` when the sample is not legitimate: the noise map or the
    summed map fails complete positivity somewhere on the grid. Otherwise
    returns whether ``lam <= lam_markov`` and ``C[lam] <= C[lam_markov]``
    hold at every grid point.
    """
    grid = np.asarray(grid, dtype=float)
    markov_rates = np.asarray(markov_rates, dtype=float)
    noise_rates = np.asarray(noise_rates, dtype=float)
    if np.any(markov_rates < 0):
        raise ValueError("Markovian rates must be nonnegative")
    total = markov_rates + noise_rates
    if not (timelocal_legitimate(noise_rates, grid, d) and timelocal_legitimate(total, grid, d)):
        return None
    big_m = integrated_rates(markov_rates, grid)
    big = integrated_rates(total, grid)
    lam_m = np.exp(big_m - big_m.sum(axis=1, keepdims=True))
    lam = np.exp(big - big.sum(axis=1, keepdims=True))
    if np.any(lam > lam_m * (1 + tol) + tol):
        return False
    cap_m = c_alpha_array(lam_m, d).max(axis=1)
    cap = c_alpha_array(lam, d).max(axis=1)
    return bool(np.all(cap <= cap_m + tol))


# -- sweeps ----------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    params: tuple[tuple[str, float], ...]
    cp_sufficient_holds: bool
    full_cp_ok_until: float
    cp_violated: bool
    max_advantage: float
    window_total_length: float
    bound: bool

    @property
    def param_dict(self) -> dict[str, float]:
        return dict(self.params)


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    skipped: tuple[tuple[tuple[tuple[str, float], ...], str], ...]


def _make_spec(variant: Variant, d: int, alpha_star: int | None, params: Mapping[str, float]) -> ScenarioSpec:
    if variant is Variant.CONSTANT:
        return ScenarioSpec.constant_isotropic(params["gamma"], params["omega"])
    if variant is Variant.EXP_DECAY:
        return ScenarioSpec.exp_decay(params["gamma"], params["z"], params["omega"], d, alpha_star)
    if variant is Variant.BEYOND:
        return ScenarioSpec.beyond_semigroup(params["r"], params["omega"], d, alpha_star)
    raise ScenarioParameterError(f"cannot sweep {variant.value} scenarios")


SWEEP_PARAMS = {
    Variant.CONSTANT: ("gamma", "omega"),
    Variant.EXP_DECAY: ("gamma", "z", "omega"),
    Variant.BEYOND: ("r", "omega"),
}


def _evaluate_point(args) -> SweepRow:
    spec, grid, tol = args
    traj = capacity_trajectory(spec, grid)
    report = advantage_windows(traj, tol)
    violation = report.first_cp_violation
    return SweepRow(
        params=tuple(spec.params().items()),
        cp_sufficient_holds=cp_sufficient(spec).holds,
        full_cp_ok_until=float(grid[-1]) if violation is None else violation,
        cp_violated=violation is not None,
        max_advantage=report.max_advantage,
        window_total_length=report.total_length,
        bound=bool(traj.bound.any()),
    )


def sweep(
    variant: Variant | str,
    param_grid: Mapping[str, Sequence[float]],
    grid,
    tol: float = ADVANTAGE_TOL,
    d: int = 2,
    alpha_star: int | None = None,
    workers: int = 1,
) -> SweepResult:
    """Evaluate every point of a Cartesian parameter grid.

    Invalid points are skipped with a reason; rows are sorted by parameter
    values so the result does not depend on ``workers``.
    """
    variant = Variant(variant)
    if variant not in SWEEP_PARAMS:
        raise ScenarioParameterError(f"cannot sweep {variant.value} scenarios")
    names = SWEEP_PARAMS[variant]
    missing = set(names) - set(param_grid)
    extra = set(param_grid) - set(names)
    if missing or extra:
        raise ScenarioParameterError(f"{variant.value} sweep takes parameters {names}; missing {sorted(missing)}, unexpected {sorted(extra)}")
    grid = np.asarray(grid, dtype=float)
    grid_step(grid)

    tasks, skipped = [], []
    for values in itertools.product(*(sorted(set(map(float, param_grid[n]))) for n in names)):
        point = dict(zip(names, values))
        try:
            spec = _make_spec(variant, d, alpha_star, point)
        except ScenarioParameterError as exc:
            skipped.append((tuple(point.items()), str(exc)))
            continue
        tasks.append((spec, grid, tol))
    if not tasks:
        raise EmptySweepError("no valid parameter points in the sweep", skipped)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_evaluate_point, tasks))
    else:
        rows = [_evaluate_point(t) for t in tasks]
    rows.sort(key=lambda r: r.params)
    return SweepResult(tuple(rows), tuple(skipped))


def advantage_sign_matches_amplitudes(traj: Trajectory, tol: float = ADVANTAGE_TOL) -> bool:
    """For qubits: positive advantage iff some eigenvalue beats the Markovian one in magnitude."""
    if traj.d != 2:
        raise ValueError("only meaningful for d=2")
    gain = np.abs(traj.combined).max(axis=1) > np.abs(traj.markov).max(axis=1)
    positive = traj.advantage > tol
    # rows whose advantage is within tol of zero are not decisive either way
    decisive = np.abs(np.nan_to_num(traj.advantage)) > tol
    return bool(np.all((gain == positive)[decisive]))
