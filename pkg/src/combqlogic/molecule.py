"""Rotational structure of a diatomic molecular ion in a single vibronic manifold.

Energies are frequencies (E/h, Hz) throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import h, k as k_B

from .population import PopulationState


@dataclass(frozen=True)
class MolecularConstants:
    """Spectroscopic inputs for one molecule.

    ``d_sign`` multiplies the centrifugal term; +1 keeps the energy formula
    with an added D J^2 (J+1)^2, -1 gives the usual subtracted convention.
    """

    B: float
    D: float = 0.0
    d_sign: int = 1
    lambda_e: float = 383e-9
    gamma: float = 1 / 70e-9
    I_sat: float = 45.0
    B_excited: float | None = None

    def __post_init__(self):
        if not self.B > 0:
            raise ValueError(f"B must be positive, got {self.B!r}")
        if self.D < 0:
            raise ValueError(f"D must be non-negative, got {self.D!r}")
        if self.d_sign not in (1, -1):
            raise ValueError(f"d_sign must be +1 or -1, got {self.d_sign!r}")
        if self.D / self.B >= 1e-2:
            raise ValueError("D/B must stay below 1e-2 for the splitting expansion to hold")
        for name in ("gamma", "I_sat", "lambda_e"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.B_excited is not None and not self.B_excited > 0:
            raise ValueError("B_excited must be positive")

    @property
    def nu_electronic(self) -> float:
        """Band-origin frequency of the electronic transition (Hz)."""
        from scipy.constants import c

        return c / self.lambda_e


SIO_PLUS = MolecularConstants(B=21.51e9, D=33.1e3, lambda_e=383e-9, gamma=1 / 70e-9, I_sat=45.0)
SIO_PLUS_MASS_AMU = 44.0


@dataclass(frozen=True)
class RotLevel:
    J: int
    m: int = 0

    def __post_init__(self):
        if self.J < 0 or abs(self.m) > self.J:
            raise ValueError(f"invalid rotational level J={self.J}, m={self.m}")

    def __iter__(self):
        return iter((self.J, self.m))


def _poly(J: int) -> tuple[int, int]:
    # integer coefficients of B and D in the energy
    x = J * (J + 1)
    return x, x * x


def rot_energy(J: int, c: MolecularConstants) -> float:
    """Rotational energy of level J as a frequency in Hz."""
    if J < 0:
        raise ValueError(f"J must be non-negative, got {J}")
    b, d = _poly(int(J))
    return c.B * b + c.d_sign * c.D * d


def rot_energies(j_max: int, c: MolecularConstants) -> np.ndarray:
    J = np.arange(j_max + 1, dtype=float)
    x = J * (J + 1)
    return c.B * x + c.d_sign * c.D * x * x


def raman_splitting(J_lower: int, c: MolecularConstants) -> float:
    """E(J_lower + 2) - E(J_lower) in Hz.

    The difference is taken on the exact integer coefficients before scaling
    by B and D, so no cancellation error enters at large J.
    """
    if J_lower < 0:
        raise ValueError(f"J_lower must be non-negative, got {J_lower}")
    b2, d2 = _poly(J_lower + 2)
    b0, d0 = _poly(J_lower)
    return c.B * (b2 - b0) + c.d_sign * c.D * (d2 - d0)


def splitting_expansion(J: int, c: MolecularConstants) -> float:
    """Closed form 2B(3+2J)(1 + 2D/B (3+3J+J^2)) of the J -> J+2 splitting.

    Identical to :func:`raman_splitting` when ``d_sign`` is +1.
    """
    return 2 * c.B * (3 + 2 * J) * (1 + 2 * c.D / c.B * (3 + 3 * J + J * J))


def boltzmann_weights(T: float, j_max: int, c: MolecularConstants) -> np.ndarray:
    """Unnormalized (2J+1) exp(-hE/kT) for J = 0..j_max."""
    J = np.arange(j_max + 1)
    if T == 0:
        w = np.zeros(j_max + 1)
        w[0] = 1.0
        return w
    E = rot_energies(j_max, c)
    return (2 * J + 1) * np.exp(-h * (E - E[0]) / (k_B * T))


def boltzmann_distribution(
    T: float, j_max: int, c: MolecularConstants, truncation_tol: float = 1e-10
) -> PopulationState:
    """Thermal population over J = 0..j_max, m sublevels equally weighted, n = 0.

    Raises ValueError if doubling ``j_max`` changes the partition sum by more
    than ``truncation_tol`` (relative).
    """
    if T < 0:
        raise ValueError("temperature must be non-negative")
    if j_max < 0:
        raise ValueError("j_max must be non-negative")
    w = boltzmann_weights(T, j_max, c)
    if T > 0:
        wide = boltzmann_weights(T, 2 * j_max + 1, c).sum()
        discarded = (wide - w.sum()) / wide
        if discarded > truncation_tol:
            raise ValueError(
                f"j_max={j_max} discards {discarded:.3g} of the partition sum at T={T} K"
            )
    return PopulationState.from_j_distribution(w / w.sum())


def cumulative_fraction(p: PopulationState, J_cut: int) -> float:
    """Mass with J <= J_cut (lost bucket excluded)."""
    pj = p.j_distribution()
    return float(pj[: J_cut + 1].sum())


def modal_J(T: float, c: MolecularConstants) -> int:
    """Rigid-rotor estimate of the most populated level."""
    return int(round(np.sqrt(k_B * T / (2 * h * c.B)) - 0.5))
