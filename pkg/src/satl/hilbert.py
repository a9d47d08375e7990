"""Truncated atom-field state space and the elementary operators on it.

Basis ordering is level-major: all photon numbers of atomic level 1 first,
then level 2, and so on.  Atomic levels are 1-based (level 1 is the ground
state of each scheme), photon numbers run 0..n_max.  Everything downstream
(generator assembly, spectral sector selection, trajectory bookkeeping)
relies on this ordering, so it is fixed here and nowhere else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class StateSpace:
    """Truncated tensor basis |level, n> with a flat bijective index."""

    n_levels: int
    n_max: int

    def __post_init__(self):
        if self.n_levels < 2 or self.n_levels > 4:
            raise ConfigurationError(
                f"n_levels must be 2, 3 or 4, got {self.n_levels}")
        if self.n_max < 0:
            raise ConfigurationError(f"n_max must be >= 0, got {self.n_max}")

    @property
    def dim(self) -> int:
        return self.n_levels * (self.n_max + 1)

    def flat_index(self, level: int, photons: int) -> int:
        """Map (level, photons) to the flat basis index (level-major)."""
        if not 1 <= level <= self.n_levels:
            raise IndexError(
                f"level {level} outside 1..{self.n_levels}")
        if not 0 <= photons <= self.n_max:
            raise IndexError(
                f"photon number {photons} outside 0..{self.n_max}")
        return (level - 1) * (self.n_max + 1) + photons

    def level_photons(self, index: int) -> tuple[int, int]:
        """Inverse of flat_index."""
        if not 0 <= index < self.dim:
            raise IndexError(f"flat index {index} outside 0..{self.dim - 1}")
        return index // (self.n_max + 1) + 1, index % (self.n_max + 1)

    def basis_labels(self):
        """All (level, photons) pairs in flat-index order."""
        return [self.level_photons(i) for i in range(self.dim)]


# module-level convenience mirroring the operation names used elsewhere
def flat_index(space: StateSpace, level: int, photons: int) -> int:
    return space.flat_index(level, photons)


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense operator on a StateSpace plus a semantic tag.

    kind is one of 'annihilation', 'atomic-transition', 'hamiltonian',
    'collapse'.  The payload is a plain complex ndarray; numerical code
    works with .data directly.
    """

    data: np.ndarray
    kind: str

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.data.conj().T, self.kind)


def annihilation(space: StateSpace) -> OperatorMatrix:
    """Photon annihilation operator a, acting trivially on the atom.

    <level, n-1| a |level, n> = sqrt(n); the top photon sector has no
    outgoing ladder element, which is what breaks [a, a^dag] there.
    """
    a = np.zeros((space.dim, space.dim), dtype=complex)
    for level in range(1, space.n_levels + 1):
        for n in range(1, space.n_max + 1):
            a[space.flat_index(level, n - 1), space.flat_index(level, n)] = np.sqrt(n)
    return OperatorMatrix(a, "annihilation")


def atomic_transition(space: StateSpace, from_level: int, to_level: int) -> OperatorMatrix:
    """Atomic flip operator |to><from|, diagonal in photon number."""
    if not 1 <= from_level <= space.n_levels:
        raise IndexError(f"from_level {from_level} outside 1..{space.n_levels}")
    if not 1 <= to_level <= space.n_levels:
        raise IndexError(f"to_level {to_level} outside 1..{space.n_levels}")
    sigma = np.zeros((space.dim, space.dim), dtype=complex)
    for n in range(space.n_max + 1):
        sigma[space.flat_index(to_level, n), space.flat_index(from_level, n)] = 1.0
    return OperatorMatrix(sigma, "atomic-transition")


def number_operator(space: StateSpace) -> np.ndarray:
    """Diagonal of a^dag a as a real vector over the flat basis."""
    diag = np.empty(space.dim)
    for i in range(space.dim):
        _, n = space.level_photons(i)
        diag[i] = n
    return diag


def level_projector_diag(space: StateSpace, level: int) -> np.ndarray:
    """Diagonal of the projector onto one atomic level, as a real vector."""
    diag = np.zeros(space.dim)
    for n in range(space.n_max + 1):
        diag[space.flat_index(level, n)] = 1.0
    return diag
