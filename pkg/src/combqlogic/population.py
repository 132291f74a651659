"""Population bookkeeping over rotational, Zeeman and phonon labels.

Levels are stored in a flat triangular layout: the (J, m) pair lives at row
``J*J + J + m`` so a block of ``2J+1`` consecutive rows holds one rotational
level. The second axis is the phonon number n in {0, 1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

N_PHONON = 2


def level_index(J: int, m: int) -> int:
    if J < 0 or abs(m) > J:
        raise ValueError(f"invalid level J={J}, m={m}")
    return J * J + J + m


def block(J: int) -> slice:
    """Rows of the flat layout belonging to rotational level J."""
    return slice(J * J, (J + 1) * (J + 1))


@lru_cache(maxsize=16)
def level_labels(j_max: int) -> tuple[np.ndarray, np.ndarray]:
    """J and m label of every row for a layout truncated at ``j_max``."""
    J = np.repeat(np.arange(j_max + 1), 2 * np.arange(j_max + 1) + 1)
    m = np.arange(J.size) - J * J - J
    J.setflags(write=False)
    m.setflags(write=False)
    return J, m


@dataclass(frozen=True, eq=False)
class PopulationState:
    """Probability over (J, m, n) plus a ``lost`` bucket.

    ``probs`` has shape ``((j_max + 1)**2, 2)``. Instances are treated as
    immutable; every operation returns a new state.
    """

    probs: np.ndarray
    lost: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2 or probs.shape[1] != N_PHONON:
            raise ValueError(f"probs must have shape (levels, {N_PHONON})")
        side = math.isqrt(probs.shape[0])
        if side * side != probs.shape[0] or side == 0:
            raise ValueError("number of rows must be a perfect square (J_max+1)^2")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "lost", float(self.lost))

    # construction

    @classmethod
    def zeros(cls, j_max: int) -> PopulationState:
        return cls(np.zeros(((j_max + 1) ** 2, N_PHONON)))

    @classmethod
    def delta(cls, J: int, m: int = 0, n: int = 0, j_max: int | None = None) -> PopulationState:
        j_max = J if j_max is None else j_max
        if J > j_max:
            raise ValueError("J exceeds j_max")
        probs = np.zeros(((j_max + 1) ** 2, N_PHONON))
        probs[level_index(J, m), _check_n(n)] = 1.0
        return cls(probs)

    @classmethod
    def from_j_distribution(cls, pj, n: int = 0) -> PopulationState:
        """Spread each rotational weight uniformly over its 2J+1 sublevels."""
        pj = np.asarray(pj, dtype=float)
        if pj.ndim != 1 or pj.size == 0:
            raise ValueError("J distribution must be a non-empty 1-d array")
        if np.any(pj < 0):
            raise ValueError("negative population")
        J, _ = level_labels(pj.size - 1)
        probs = np.zeros((J.size, N_PHONON))
        probs[:, _check_n(n)] = pj[J] / (2 * J + 1)
        return cls(probs)

    # queries

    @property
    def j_max(self) -> int:
        return math.isqrt(self.probs.shape[0]) - 1

    def prob(self, J: int, m: int = 0, n: int = 0) -> float:
        if J > self.j_max:
            return 0.0
        return float(self.probs[level_index(J, m), _check_n(n)])

    def j_distribution(self) -> np.ndarray:
        """Mass per rotational level (m and n summed, lost excluded)."""
        J, _ = level_labels(self.j_max)
        return np.bincount(J, weights=self.probs.sum(axis=1), minlength=self.j_max + 1)

    def phonon_mass(self, n: int) -> float:
        return float(self.probs[:, _check_n(n)].sum())

    def total(self) -> float:
        return float(self.probs.sum()) + self.lost

    def mass(self, levels) -> float:
        """Total mass on a collection of (J, m) pairs, any n."""
        rows = sorted({level_index(J, m) for J, m in levels if J <= self.j_max})
        return float(self.probs[rows].sum()) if rows else 0.0

    def mean_J(self) -> float:
        pj = self.j_distribution()
        kept = pj.sum()
        return float(np.dot(np.arange(pj.size), pj) / kept) if kept > 0 else math.nan

    def populated_levels(self, threshold: float = 1e-3) -> int:
        """Number of rotational levels holding more than ``threshold`` of the kept mass."""
        pj = self.j_distribution()
        kept = pj.sum()
        if kept <= 0:
            return 0
        return int(np.count_nonzero(pj / kept > threshold))

    # transformations

    def with_j_max(self, j_max: int) -> PopulationState:
        """Pad (or trim empty levels) to a new truncation."""
        rows = (j_max + 1) ** 2
        if rows >= self.probs.shape[0]:
            probs = np.zeros((rows, N_PHONON))
            probs[: self.probs.shape[0]] = self.probs
        else:
            if np.any(self.probs[rows:] != 0):
                raise ValueError("cannot trim levels that hold population")
            probs = self.probs[:rows].copy()
        return PopulationState(probs, self.lost)

    def check(self, atol: float = 1e-9) -> PopulationState:
        if np.any(self.probs < -atol) or self.lost < -atol:
            raise ValueError("negative probability")
        if abs(self.total() - 1.0) > atol:
            raise ValueError(f"population not normalized: total = {self.total()!r}")
        return self


def _check_n(n: int) -> int:
    if n not in (0, 1):
        raise ValueError(f"phonon number {n} outside the simulated space {{0, 1}}")
    return n
