"""Motional coupling of the two-ion crystal in the Lamb-Dicke regime."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import hbar, atomic_mass

from .molecule import RotLevel
from .population import PopulationState, level_index


@dataclass(frozen=True)
class TrapSettings:
    """Common motional mode plus the idealized atomic-ion cooling and readout.

    ``cool_duration`` of None means one sideband cooling step lasts as long as
    the molecular sideband pi pulse it follows.
    """

    omega_t: float = 2 * math.pi * 10e6
    mass_eff: float = 44 * atomic_mass
    k_eff: float = 4 * math.pi / 383e-9
    eta_override: float | None = None
    cool_efficiency: float = 1.0
    readout_fidelity: float = 1.0
    cool_duration: float | None = None

    def __post_init__(self):
        for name in ("omega_t", "mass_eff", "k_eff"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.eta_override is not None and not 0 < self.eta_override < 1:
            raise ValueError(f"eta_override must lie in (0, 1), got {self.eta_override!r}")
        if not 0 <= self.cool_efficiency <= 1:
            raise ValueError("cool_efficiency must lie in [0, 1]")
        if not 0.5 <= self.readout_fidelity <= 1:
            raise ValueError("readout_fidelity must lie in [0.5, 1]")
        if self.cool_duration is not None and not self.cool_duration > 0:
            raise ValueError("cool_duration must be positive")


@dataclass(frozen=True)
class MotionalState:
    n: int = 0

    def __post_init__(self):
        if self.n not in (0, 1):
            raise ValueError(f"phonon number {self.n} outside the simulated space {{0, 1}}")


def lamb_dicke(t: TrapSettings) -> float:
    if t.eta_override is not None:
        return t.eta_override
    return t.k_eff * math.sqrt(hbar / (2 * t.mass_eff * t.omega_t))


def sideband_rabi(eta: float, omega: float) -> float:
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0, 1), got {eta!r}")
    return eta * omega


def pi_time(omega_s: float) -> float:
    if not omega_s > 0:
        raise ValueError("Rabi frequency must be positive")
    return math.pi / omega_s


def sideband_flop_probability(omega_s, t, detuning_residual=0.0):
    """Transfer probability |m1, 0> -> |m2, 1> after driving for time t.

    ``detuning_residual`` is in Hz; ``omega_s`` in rad/s.
    """
    omega_s = np.asarray(omega_s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    delta = 2 * np.pi * np.asarray(detuning_residual, dtype=float)
    w2 = omega_s**2 + delta**2
    w = np.sqrt(w2)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(w2 > 0, omega_s**2 / w2 * np.sin(w * t / 2) ** 2, 0.0)
    return p if p.ndim else float(p)


def sideband_cool(state: MotionalState, t: TrapSettings, rng: np.random.Generator) -> MotionalState:
    """One Bernoulli phonon-removal attempt through the atomic ion."""
    if state.n == 0:
        return state
    if rng.random() < t.cool_efficiency:
        return MotionalState(0)
    return state


@dataclass(frozen=True)
class Detection:
    outcome: int
    posterior: PopulationState
    p_click: float


def click_probability(p: PopulationState, target, t: TrapSettings) -> float:
    """Probability that a single shot reports a phonon."""
    mass = _target_mass(p, target)
    F = t.readout_fidelity
    return mass * F + (1 - mass) * (1 - F)


def quantum_logic_detect(p: PopulationState, target, t: TrapSettings, rng: np.random.Generator) -> Detection:
    """One detection shot: map ``target`` onto a phonon, then read the phonon out.

    The posterior is the Bayes update of ``p`` on the reported bit. Population
    outside the target, including the lost bucket, never creates a phonon.
    """
    if p.phonon_mass(1) > 0:
        raise ValueError("detection requires the motional mode in n = 0")
    rows = _target_rows(p, target)
    mass = float(p.probs[rows].sum())
    phonon = rng.random() < mass
    correct = rng.random() < t.readout_fidelity
    outcome = int(phonon == correct)
    F = t.readout_fidelity
    like_in, like_out = (F, 1 - F) if outcome else (1 - F, F)
    probs = p.probs * like_out
    probs[rows] = p.probs[rows] * like_in
    lost = p.lost * like_out
    norm = probs.sum() + lost
    return Detection(outcome, PopulationState(probs / norm, lost / norm), mass * F + (1 - mass) * (1 - F))


def _target_rows(p: PopulationState, target) -> list[int]:
    rows = []
    for lvl in target:
        lvl = lvl if isinstance(lvl, RotLevel) else RotLevel(*lvl)
        if lvl.J <= p.j_max:
            rows.append(level_index(lvl.J, lvl.m))
    return sorted(set(rows))


def _target_mass(p: PopulationState, target) -> float:
    rows = _target_rows(p, target)
    return float(p.probs[rows].sum()) if rows else 0.0
