"""Generalized Pauli channel algebra.

A channel is described either by its mixing probabilities ``p_0..p_{d+1}``
or by its eigenvalues ``lambda_1..lambda_{d+1}`` (``lambda_0 = 1`` is
implicit). Both views are plain immutable records; conversions never clamp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mub import MubFamily

CP_TOL = 1e-9


class ChannelValidationError(ValueError):
    pass


def _as_vector(values, length: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.size != length:
        raise ChannelValidationError(f"{what} needs {length} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ChannelValidationError(f"{what} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ChannelSpectrum:
    d: int
    lambdas: np.ndarray

    def __post_init__(self):
        if self.d < 2:
            raise ChannelValidationError(f"dimension must be >= 2, got {self.d}")
        object.__setattr__(self, "lambdas", _as_vector(self.lambdas, self.d + 1, "spectrum"))

    @classmethod
    def identity(cls, d: int) -> ChannelSpectrum:
        return cls(d, np.ones(d + 1))

    def __iter__(self):
        return iter(self.lambdas)

    def __len__(self):
        return len(self.lambdas)

    def __repr__(self):
        return f"ChannelSpectrum(d={self.d}, lambdas={self.lambdas.tolist()})"


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """Mixing probabilities ``p_0..p_{d+1}``.

    Values are stored unclamped; ``valid`` reports whether they form a
    probability distribution (the underlying map is CP iff they do).
    """

    d: int
    probs: np.ndarray

    def __post_init__(self):
        if self.d < 2:
            raise ChannelValidationError(f"dimension must be >= 2, got {self.d}")
        object.__setattr__(self, "probs", _as_vector(self.probs, self.d + 2, "probability vector"))

    def is_valid(self, tol: float = CP_TOL) -> bool:
        return bool(np.all(self.probs >= -tol) and abs(self.probs.sum() - 1) <= 1e-12 + tol)

    @property
    def valid(self) -> bool:
        return self.is_valid()

    def __repr__(self):
        return f"ProbabilityVector(d={self.d}, probs={self.probs.tolist()})"


@dataclass(frozen=True)
class CpReport:
    holds: bool
    lower_margin: float
    upper_margin: float


def cp_margins(lambdas, d: int):
    """Fujiwara-Algoet margins ``(lower, upper)``; vectorized over leading axes.

    ``lower = sum(lambda) + 1/(d-1)`` and
    ``upper = 1 + d*min(lambda) - sum(lambda)``; the map is CP iff both are
    nonnegative.
    """
    lam = np.asarray(lambdas, dtype=float)
    total = lam.sum(axis=-1)
    return total + 1 / (d - 1), 1 + d * lam.min(axis=-1) - total


def spectrum_from_probs(p: ProbabilityVector) -> ChannelSpectrum:
    if not p.is_valid():
        raise ChannelValidationError(f"not a probability distribution: {p.probs.tolist()}")
    d = p.d
    lam = (d * (p.probs[0] + p.probs[1:]) - 1) / (d - 1)
    return ChannelSpectrum(d, lam)


def probs_from_spectrum(s: ChannelSpectrum) -> ProbabilityVector:
    d = s.d
    total = s.lambdas.sum()
    p0 = (1 + (d - 1) * total) / d**2
    rest = (d - 1) * (1 + d * s.lambdas - total) / d**2
    return ProbabilityVector(d, np.concatenate([[p0], rest]))


def check_cp(s: ChannelSpectrum, tol: float = CP_TOL) -> CpReport:
    lower, upper = cp_margins(s.lambdas, s.d)
    return CpReport(holds=bool(lower >= -tol and upper >= -tol), lower_margin=float(lower), upper_margin=float(upper))


def apply_channel(p: ProbabilityVector, mubs: MubFamily, X: np.ndarray) -> np.ndarray:
    """Evaluate the channel on an arbitrary ``d x d`` operator."""
    d = p.d
    if mubs.d != d:
        raise ChannelValidationError(f"MUB family has d={mubs.d}, channel has d={d}")
    X = np.asarray(X, dtype=complex)
    if X.shape != (d, d):
        raise ChannelValidationError(f"operator must be {d}x{d}, got shape {X.shape}")
    out = p.probs[0] * X
    for a in range(d + 1):
        if p.probs[a + 1] == 0:
            continue
        U = mubs.unitaries[a, 1:]
        conj = np.einsum("kij,jl,kml->im", U, X, U.conj())
        out = out + p.probs[a + 1] / (d - 1) * conj
    return out


def verify_eigenaction(p: ProbabilityVector, mubs: MubFamily) -> float:
    """Max entrywise residual of the eigenvalue equations, including ``Lambda[I] = I``."""
    lam = spectrum_from_probs(p).lambdas
    d = p.d
    residual = np.abs(apply_channel(p, mubs, np.eye(d)) - np.eye(d)).max()
    for a in range(d + 1):
        for k in range(1, d):
            U = mubs.unitaries[a, k]
            residual = max(residual, np.abs(apply_channel(p, mubs, U) - lam[a] * U).max())
    return float(residual)


def random_probs(d: int, rng: np.random.Generator) -> ProbabilityVector:
    """Draw a probability vector uniformly from the simplex."""
    return ProbabilityVector(d, rng.dirichlet(np.ones(d + 2)))
