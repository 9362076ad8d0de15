"""Classical capacity of generalized Pauli channels, in nats."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSpectrum

PATTERN_TOL = 1e-9
# float slack allowed at the ends of the eigenvalue domain
DOMAIN_SLACK = 1e-12


class CapacityDomainError(ValueError):
    pass


class CapacityKind(str, enum.Enum):
    EXACT_NEGATIVE = "exact-negative"
    EXACT_POSITIVE = "exact-positive"
    DEPOLARIZING = "depolarizing"
    LOWER_BOUND = "lower-bound"


@dataclass(frozen=True)
class CapacityResult:
    value: float
    kind: CapacityKind
    argmax_alpha: int | None = None

    @property
    def exact(self) -> bool:
        return self.kind is not CapacityKind.LOWER_BOUND


def _xlogx(x: float) -> float:
    if x <= 0.0:
        return 0.0
    return x * math.log(x)


def c_alpha(lam: float, d: int) -> float:
    """Capacity contribution of a single eigenvalue.

    ``c(lam) = x ln x / d + (d-1)/d * y ln y`` with ``x = 1 + (d-1) lam``,
    ``y = 1 - lam`` and ``0 ln 0 = 0``. Defined on ``[-1/(d-1), 1]``.
    """
    lo = -1.0 / (d - 1)
    if not (lo - DOMAIN_SLACK <= lam <= 1.0 + DOMAIN_SLACK):
        raise CapacityDomainError(f"eigenvalue {lam!r} outside [{lo}, 1] for d={d}")
    lam = min(max(lam, lo), 1.0)
    if lam == 1.0:
        return math.log(d)
    x = 1.0 + (d - 1) * lam
    return _xlogx(x) / d + (d - 1) / d * _xlogx(1.0 - lam)


def c_alpha_array(lam, d: int) -> np.ndarray:
    """Vectorized :func:`c_alpha`."""
    lam = np.asarray(lam, dtype=float)
    lo = -1.0 / (d - 1)
    if np.any(lam < lo - DOMAIN_SLACK) or np.any(lam > 1.0 + DOMAIN_SLACK):
        raise CapacityDomainError(f"eigenvalues outside [{lo}, 1] for d={d}")
    lam = np.clip(lam, lo, 1.0)
    x = 1.0 + (d - 1) * lam
    y = 1.0 - lam
    with np.errstate(divide="ignore", invalid="ignore"):
        xlx = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
        yly = np.where(y > 0, y * np.log(np.where(y > 0, y, 1.0)), 0.0)
    return xlx / d + (d - 1) / d * yly


def _close(a: float, b: float, tol: float) -> bool:
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)


def pattern_match_exact(s: ChannelSpectrum, tol: float = PATTERN_TOL) -> CapacityKind:
    """Classify the eigenvalue pattern that decides which capacity formula applies.

    All-equal nonpositive spectra are reported as exact-negative (they satisfy
    that pattern with lambda_min = lambda_max); all-equal positive spectra as
    depolarizing.
    """
    lam = sorted(float(x) for x in s.lambdas)
    d = s.d
    lo, hi = lam[0], lam[-1]
    all_equal = _close(lo, hi, tol)
    if all(x <= tol for x in lam) and all(_close(x, hi, tol) for x in lam[1:]):
        # d equal maximal values, one minimal
        return CapacityKind.EXACT_NEGATIVE
    if all_equal:
        return CapacityKind.DEPOLARIZING
    if all(x >= -tol for x in lam) and all(_close(x, lo, tol) for x in lam[:d]):
        # one maximal value, d equal minimal values
        return CapacityKind.EXACT_POSITIVE
    return CapacityKind.LOWER_BOUND


def lower_bound(s: ChannelSpectrum) -> tuple[float, int]:
    """``max_alpha c_alpha`` and the (1-based) index attaining it."""
    values = [c_alpha(float(x), s.d) for x in s.lambdas]
    i = int(np.argmax(values))
    return values[i], i + 1


def classify_and_compute(s: ChannelSpectrum, tol: float = PATTERN_TOL) -> CapacityResult:
    kind = pattern_match_exact(s, tol)
    d = s.d
    if kind is CapacityKind.EXACT_NEGATIVE:
        return CapacityResult(c_alpha(float(s.lambdas.min()), d), kind)
    if kind is CapacityKind.EXACT_POSITIVE:
        return CapacityResult(c_alpha(float(s.lambdas.max()), d), kind)
    if kind is CapacityKind.DEPOLARIZING:
        return CapacityResult(c_alpha(float(s.lambdas.mean()), d), kind)
    value, alpha = lower_bound(s)
    return CapacityResult(value, kind, argmax_alpha=alpha)


def depolarizing_capacity(lam: float, d: int) -> float:
    """Holevo capacity of the depolarizing channel ``rho -> lam rho + (1-lam) I/d``.

    Written in terms of the output spectrum of a pure input (one eigenvalue
    ``lam + (1-lam)/d`` and ``d-1`` copies of ``(1-lam)/d``), independently of
    :func:`c_alpha`.
    """
    big = lam + (1 - lam) / d
    small = (1 - lam) / d
    entropy = -_xlogx(big) - (d - 1) * _xlogx(small)
    return math.log(d) - entropy
