"""Frequency-comb Raman drive: resonance arithmetic, Rabi rates, multi-line matching."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .molecule import MolecularConstants

ALL_Q = frozenset(range(-2, 3))
SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class PolarizationConfig:
    """Net two-photon angular momentum transfers (Delta m) a beam setting allows."""

    allowed_q: frozenset[int]

    def __post_init__(self):
        q = frozenset(int(x) for x in self.allowed_q)
        if not q or not q <= ALL_Q:
            raise ValueError(f"allowed_q must be a non-empty subset of -2..2, got {sorted(q)}")
        object.__setattr__(self, "allowed_q", q)

    @classmethod
    def parse(cls, text: str) -> PolarizationConfig:
        return cls(frozenset(int(tok) for tok in text.replace(" ", "").split(",") if tok))

    def __str__(self) -> str:
        return ",".join(str(q) for q in sorted(self.allowed_q))


FULL_COVERAGE = PolarizationConfig(ALL_Q)
# two beam settings that together reach every q
DEFAULT_POLARIZATIONS = (PolarizationConfig(frozenset({-2, 0, 2})), PolarizationConfig(frozenset({-1, 1})))


@dataclass(frozen=True)
class CombSettings:
    """Two offset combs from one mode-locked laser.

    ``Delta`` is the angular detuning (rad/s) from the intermediate excited
    state; every other frequency is in Hz.
    """

    f_rep: float = 80e6
    nu_AO: float = 0.0
    tau: float = 100e-15
    I_avg: float = 1e7
    Delta: float = 2 * math.pi * 20e12
    pol_schedule: tuple[PolarizationConfig, ...] = field(default=DEFAULT_POLARIZATIONS)

    def __post_init__(self):
        if not self.f_rep > 0:
            raise ValueError(f"f_rep must be positive, got {self.f_rep!r}")
        if not 0 <= self.nu_AO < self.f_rep:
            raise ValueError(f"nu_AO must lie in [0, f_rep), got {self.nu_AO!r}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau!r}")
        if self.I_avg < 0:
            raise ValueError(f"I_avg must be non-negative, got {self.I_avg!r}")
        if self.Delta == 0:
            raise ValueError("Delta must be non-zero")
        if not self.pol_schedule:
            raise ValueError("pol_schedule must hold at least one configuration")
        object.__setattr__(self, "pol_schedule", tuple(self.pol_schedule))

    def with_offset(self, nu_AO: float) -> CombSettings:
        from dataclasses import replace

        return replace(self, nu_AO=nu_AO)


@dataclass(frozen=True)
class CombAssignment:
    M: int
    sign: int
    residual: float
    nu_AO: float = math.nan

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"comb index must be >= 1, got {self.M}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.residual < 0:
            raise ValueError("residual must be non-negative")


def resonance_offset(delta_omega: float, f_rep: float) -> tuple[CombAssignment, CombAssignment]:
    """Offsets that put a splitting exactly on resonance, for both branches.

    Returns ``(plus, minus)`` where plus satisfies ``delta = M f_rep + nu`` and
    minus satisfies ``delta = M f_rep - nu``, each with ``0 <= nu < f_rep``.
    """
    if not f_rep > 0:
        raise ValueError("f_rep must be positive")
    if not delta_omega > f_rep:
        raise ValueError(
            f"splitting {delta_omega!r} Hz does not exceed f_rep {f_rep!r} Hz; comb index would be < 1"
        )
    M = math.floor(delta_omega / f_rep)
    # float division can land one index off near exact harmonics
    while delta_omega - M * f_rep < 0:
        M -= 1
    while delta_omega - (M + 1) * f_rep >= 0:
        M += 1
    nu_plus = delta_omega - M * f_rep
    plus = CombAssignment(M, 1, 0.0, nu_plus)
    if nu_plus == 0:
        minus = CombAssignment(M, -1, 0.0, 0.0)
    else:
        minus = CombAssignment(M + 1, -1, 0.0, (M + 1) * f_rep - delta_omega)
    return plus, minus


def branch_residual(delta_omega, f_rep, nu_AO, sign: int):
    """Best comb index and |delta - (M f_rep + sign nu)| for one branch.

    Vectorized over any argument. ``nu_AO`` need not be reduced to [0, f_rep).
    """
    target = np.asarray(delta_omega, dtype=float) - sign * np.asarray(nu_AO, dtype=float)
    M = np.maximum(np.rint(target / f_rep), 1)
    return M.astype(np.int64), np.abs(target - M * f_rep)


def resonance_residual(delta_omega: float, f_rep: float, nu_AO: float) -> tuple[int, int, float]:
    """(M, sign, residual) of the better branch; ties go to sign = +1."""
    Mp, rp = branch_residual(delta_omega, f_rep, nu_AO, 1)
    Mm, rm = branch_residual(delta_omega, f_rep, nu_AO, -1)
    if rp <= rm:
        return int(Mp), 1, float(rp)
    return int(Mm), -1, float(rm)


def is_resonant(delta_omega: float, settings: CombSettings, tol: float) -> CombAssignment | None:
    if tol < 0:
        raise ValueError("tol must be non-negative")
    M, sign, residual = resonance_residual(delta_omega, settings.f_rep, settings.nu_AO)
    if residual > tol:
        return None
    return CombAssignment(M, sign, residual, settings.nu_AO)


def carrier_rabi(c: MolecularConstants, s: CombSettings) -> float:
    """Carrier two-photon Rabi frequency (rad/s), (I/I_sat) gamma^2 / (2|Delta|)."""
    if not c.I_sat > 0:
        raise ValueError("I_sat must be positive")
    if s.Delta == 0:
        raise ValueError("Delta must be non-zero")
    return (s.I_avg / c.I_sat) * c.gamma**2 / (2 * abs(s.Delta))


def bandwidth_phase(delta_omega, tau):
    """Dimensionless splitting-times-duration product, with the splitting taken as angular."""
    return 2 * np.pi * np.asarray(delta_omega, dtype=float) * tau


def suppression_factor(x):
    """x / (2 sinh(x/2)), continuous through x = 0."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x < SERIES_CUTOFF
    xs = x[small]
    out[small] = 1 - xs**2 / 24 + 7 * xs**4 / 5760
    xl = x[~small]
    # x e^{-x/2} / (1 - e^{-x}) avoids overflow in sinh
    out[~small] = xl * np.exp(-xl / 2) / -np.expm1(-xl)
    return out if out.ndim else float(out)


def comb_rabi(omega0: float, delta_omega, tau: float):
    """Time-averaged Rabi frequency of a pulsed drive across a splitting (rad/s)."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return omega0 * suppression_factor(bandwidth_phase(delta_omega, tau))


def pulse_overlap_budget(tau: float) -> float:
    """Largest tolerable arm-length mismatch, c * tau (m)."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return SPEED_OF_LIGHT * tau


@dataclass(frozen=True)
class MatchSolution:
    f_rep: float
    nu_AO: float
    assignments: tuple[CombAssignment, ...]

    @property
    def worst_residual(self) -> float:
        return max(a.residual for a in self.assignments)


def rep_rate_grid(f_rep_range: tuple[float, float], step: float) -> np.ndarray:
    lo, hi = f_rep_range
    if not hi > lo:
        raise ValueError("f_rep range must be non-degenerate")
    if not step > 0:
        raise ValueError("step must be positive")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(n + 1)


def match_multi(
    splittings,
    f_rep_range: tuple[float, float],
    nu_range: tuple[float, float] = (0.0, math.inf),
    tol: float = 1e3,
    step: float = 100.0,
) -> list[MatchSolution]:
    """Comb settings that drive every splitting at once.

    For each repetition rate on the grid the candidate offsets are the exact
    resonance offsets of each splitting on both branches; a candidate is kept
    when all splittings fall within ``tol`` of some comb line. Sorted by the
    worst residual, then f_rep, then nu_AO.
    """
    splittings = np.asarray(splittings, dtype=float)
    if splittings.size == 0:
        raise ValueError("need at least one splitting")
    nu_lo, nu_hi = nu_range
    if not nu_hi > nu_lo:
        raise ValueError("nu_AO range must be non-degenerate")
    f = rep_rate_grid(f_rep_range, step)
    if np.any(splittings[:, None] <= f[None, :]):
        raise ValueError("every splitting must exceed the largest repetition rate")

    cands = []
    for d in splittings:
        M = np.floor(d / f)
        nu = d - M * f
        # same off-by-one guard as resonance_offset
        M = np.where(nu < 0, M - 1, np.where(nu >= f, M + 1, M))
        nu = d - M * f
        cands.append(nu)
        cands.append(np.where(nu == 0, 0.0, (M + 1) * f - d))
    cands = np.stack(cands, axis=1)  # (grid, candidates)

    in_range = (cands >= nu_lo) & (cands <= nu_hi) & (cands < f[:, None])
    Ms, signs, res = [], [], []
    for d in splittings:
        Mp, rp = branch_residual(d, f[:, None], cands, 1)
        Mm, rm = branch_residual(d, f[:, None], cands, -1)
        plus = rp <= rm
        Ms.append(np.where(plus, Mp, Mm))
        signs.append(np.where(plus, 1, -1))
        res.append(np.where(plus, rp, rm))
    Ms, signs, res = np.stack(Ms, -1), np.stack(signs, -1), np.stack(res, -1)
    ok = in_range & np.all(res <= tol, axis=-1)

    out = []
    for i, j in zip(*np.nonzero(ok)):
        nu = float(cands[i, j])
        if any(cands[i, jj] == nu and ok[i, jj] for jj in range(j)):
            continue
        assigns = tuple(
            CombAssignment(int(Ms[i, j, s]), int(signs[i, j, s]), float(res[i, j, s]), nu)
            for s in range(splittings.size)
        )
        out.append(MatchSolution(float(f[i]), nu, assigns))
    out.sort(key=lambda sol: (sol.worst_residual, sol.f_rep, sol.nu_AO))
    return out
