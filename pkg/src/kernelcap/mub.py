"""Maximal sets of mutually unbiased bases in prime dimension.

Bases are indexed ``alpha = 1..d+1``. The first ``d`` bases come from the
quadratic-phase (Fourier) family and the computational basis is always the
last one, so for ``d = 2`` the bases are the eigenbases of sigma_1, sigma_2
and sigma_3 in that order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class UnsupportedDimensionError(ValueError):
    """Raised when no maximal MUB construction is available for ``d``."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MubFamily:
    """d+1 mutually unbiased bases and the unitaries they diagonalize.

    Attributes
    ----------
    d : int
        Prime dimension.
    bases : ndarray, shape (d+1, d, d)
        ``bases[alpha-1, l]`` is the unit vector psi_l^(alpha).
    unitaries : ndarray, shape (d+1, d, d, d)
        ``unitaries[alpha-1, k]`` is U_alpha^k; ``k = 0`` is the identity.
    """

    d: int
    bases: np.ndarray
    unitaries: np.ndarray

    def basis(self, alpha: int) -> np.ndarray:
        return self.bases[alpha - 1]

    def unitary(self, alpha: int, k: int) -> np.ndarray:
        return self.unitaries[alpha - 1, k % self.d]

    def projector(self, alpha: int, l: int) -> np.ndarray:
        v = self.bases[alpha - 1, l]
        return np.outer(v, v.conj())


def _qubit_bases() -> np.ndarray:
    s = 1 / np.sqrt(2)
    return np.array(
        [
            [[s, s], [s, -s]],  # sigma_1
            [[s, 1j * s], [s, -1j * s]],  # sigma_2
            [[1, 0], [0, 1]],  # sigma_3
        ],
        dtype=complex,
    )


def _odd_prime_bases(d: int) -> np.ndarray:
    l = np.arange(d)
    out = np.empty((d + 1, d, d), dtype=complex)
    for a in range(d):
        for k in range(d):
            # exponents reduced mod d before exponentiating keeps phases exact
            out[a, k] = np.exp(2j * np.pi * ((a * l * l + k * l) % d) / d) / np.sqrt(d)
    out[d] = np.eye(d)
    return out


def build_unitaries(bases: np.ndarray) -> np.ndarray:
    """Return ``U[alpha-1, k] = sum_l omega^(k l) |psi_l><psi_l|`` for every basis.

    Raises ``ValueError`` if a basis is not orthonormal.
    """
    bases = np.asarray(bases, dtype=complex)
    n_bases, d, d2 = bases.shape
    if d != d2:
        raise ValueError(f"each basis must hold d vectors of length d, got shape {bases.shape}")
    for a in range(n_bases):
        gram = bases[a].conj() @ bases[a].T
        if np.abs(gram - np.eye(d)).max() > 1e-10:
            raise ValueError(f"basis {a + 1} is not orthonormal")
    l = np.arange(d)
    out = np.empty((n_bases, d, d, d), dtype=complex)
    for a in range(n_bases):
        # columns of V are the basis vectors
        v = bases[a].T
        for k in range(d):
            phases = np.exp(2j * np.pi * ((k * l) % d) / d)
            out[a, k] = (v * phases) @ v.conj().T
        out[a, 0] = np.eye(d)
    return out


def build_mub_family(d: int) -> MubFamily:
    """Construct the maximal MUB family for a prime dimension ``d``."""
    if not isinstance(d, (int, np.integer)) or not is_prime(int(d)):
        raise UnsupportedDimensionError(
            f"d={d} is not supported: the maximal MUB construction requires a prime d >= 2"
        )
    d = int(d)
    bases = _qubit_bases() if d == 2 else _odd_prime_bases(d)
    unitaries = build_unitaries(bases)
    return MubFamily(d=d, bases=_freeze(bases), unitaries=_freeze(unitaries))


def mub_deviations(family: MubFamily) -> dict[str, float]:
    """Max absolute deviations from the defining MUB/unitary properties."""
    d = family.d
    eye = np.eye(d)
    ortho = unbiased = unitarity = eigen = 0.0
    for a in range(d + 1):
        B = family.bases[a]
        ortho = max(ortho, np.abs(B.conj() @ B.T - eye).max())
        for b in range(a + 1, d + 1):
            overlaps = np.abs(B.conj() @ family.bases[b].T) ** 2
            unbiased = max(unbiased, np.abs(overlaps - 1 / d).max())
        for k in range(d):
            U = family.unitaries[a, k]
            unitarity = max(unitarity, np.abs(U @ U.conj().T - eye).max())
            for l in range(d):
                psi = B[l]
                eigen = max(eigen, np.abs(U @ psi - np.exp(2j * np.pi * ((k * l) % d) / d) * psi).max())
    return {
        "orthonormality": float(ortho),
        "unbiasedness": float(unbiased),
        "unitarity": float(unitarity),
        "eigenaction": float(eigen),
    }
