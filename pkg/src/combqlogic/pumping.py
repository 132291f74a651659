"""Broadband optical pumping on the electronic band with a spectral edge filter.

With the filter passing only the P branch, every scattering event takes J to
J' = J - 1 in the excited state, which decays to J' - 1 or J' + 1. The excited
state is never stored: excitation and decay collapse into one jump with net
Delta J in {-2, 0} (or {0, +2} for R-branch excitation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.linalg import expm
from scipy.optimize import brentq

from . import rng as rngmod
from .cooling import CoolingReport, Event
from .molecule import MolecularConstants, rot_energy
from .population import PopulationState


@dataclass(frozen=True)
class PumpSettings:
    """Filtered broadband source.

    ``filter_edge`` of None puts the transmission ramp just on the red side of
    the band origin, so the whole ramp lies over the P branch.
    ``pass_branch`` selects which side of the edge is transmitted.
    """

    spectral_density: float = 1e6  # W/m, i.e. 1 mW/nm
    spot_diameter: float = 50e-6
    filter_edge: float | None = None
    filter_resolution: float = 0.2e-9
    scatter_rate: float = 1e5
    duration: float = 1e-3
    pass_branch: str = "P"
    vib_loss: float = 0.0
    honl_london: bool = True

    def __post_init__(self):
        for name in ("spectral_density", "spot_diameter", "filter_resolution", "scatter_rate", "duration"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.filter_edge is not None and not self.filter_edge > 0:
            raise ValueError("filter_edge must be positive")
        if self.pass_branch not in ("P", "R"):
            raise ValueError("pass_branch must be 'P' or 'R'")
        if not 0 <= self.vib_loss <= 1:
            raise ValueError("vib_loss must lie in [0, 1]")

    @property
    def intensity_density(self) -> float:
        """Spectral intensity at the ion, W/m^2 per m of wavelength."""
        return self.spectral_density / (math.pi * (self.spot_diameter / 2) ** 2)


class BranchLines(NamedTuple):
    P: float | None  # wavelength (m); None for J = 0
    R: float


def _excited(c: MolecularConstants) -> MolecularConstants:
    if c.B_excited is None:
        return c
    from dataclasses import replace

    return replace(c, B=c.B_excited)


def branch_frequencies(J: int, c: MolecularConstants, nu_00: float | None = None) -> tuple[float | None, float]:
    if J < 0:
        raise ValueError("J must be non-negative")
    nu_00 = c.nu_electronic if nu_00 is None else nu_00
    ex = _excited(c)
    EX = rot_energy(J, c)
    P = None if J == 0 else nu_00 + rot_energy(J - 1, ex) - EX
    R = nu_00 + rot_energy(J + 1, ex) - EX
    return P, R


def branch_wavelengths(J: int, c: MolecularConstants, nu_00: float | None = None) -> BranchLines:
    """P(J) and R(J) line wavelengths; ``P`` is None when J = 0 has no P line."""
    P, R = branch_frequencies(J, c, nu_00)
    return BranchLines(None if P is None else SPEED_OF_LIGHT / P, SPEED_OF_LIGHT / R)


def filter_edge(settings: PumpSettings, c: MolecularConstants) -> float:
    if settings.filter_edge is not None:
        return settings.filter_edge
    return c.lambda_e + settings.filter_resolution / 2


def filter_transmission(wavelength, settings: PumpSettings, c: MolecularConstants):
    """Linear ramp of width ``filter_resolution`` centred on the edge.

    P lines sit on the long-wavelength side; passing P means transmitting
    wavelengths above the edge.
    """
    edge = filter_edge(settings, c)
    ramp = (np.asarray(wavelength, dtype=float) - (edge - settings.filter_resolution / 2)) / settings.filter_resolution
    T = np.clip(ramp, 0.0, 1.0)
    if settings.pass_branch == "R":
        T = 1.0 - T
    return T if T.ndim else float(T)


def excitation_rate(J: int, settings: PumpSettings, c: MolecularConstants, branch: str = "P") -> float:
    """Scattering rate out of J through the given branch (1/s)."""
    if J < 0:
        raise ValueError("J must be non-negative")
    lines = branch_wavelengths(J, c)
    lam = lines.P if branch == "P" else lines.R
    if lam is None:
        return 0.0
    return settings.scatter_rate * filter_transmission(lam, settings, c)


def decay_branching(J_exc: int, honl_london: bool = True) -> tuple[float, float]:
    """(down, up) probabilities for decay from J' to J'-1 and J'+1."""
    if J_exc == 0:
        return 0.0, 1.0
    if not honl_london:
        return 0.5, 0.5
    return J_exc / (2 * J_exc + 1), (J_exc + 1) / (2 * J_exc + 1)


class JumpTable(NamedTuple):
    """Per-J jump rates for net Delta J = -2, 0, +2 and loss."""

    down: np.ndarray
    stay: np.ndarray
    up: np.ndarray
    loss: np.ndarray

    @property
    def moving(self) -> np.ndarray:
        return self.down + self.up + self.loss


def jump_table(settings: PumpSettings, c: MolecularConstants, j_max: int) -> JumpTable:
    """Rates of every composite excite-and-decay jump, truncated at ``j_max``.

    R-branch excitation that would need J + 2 > j_max is dropped.
    """
    down, stay, up, loss = (np.zeros(j_max + 1) for _ in range(4))
    keep = 1 - settings.vib_loss
    for J in range(j_max + 1):
        rP = excitation_rate(J, settings, c, "P") if J >= 1 else 0.0
        rR = excitation_rate(J, settings, c, "R") if J + 2 <= j_max else 0.0
        if rP:
            dn, upw = decay_branching(J - 1, settings.honl_london)
            down[J] += rP * keep * dn
            stay[J] += rP * keep * upw
        if rR:
            dn, upw = decay_branching(J + 1, settings.honl_london)
            stay[J] += rR * keep * dn
            up[J] += rR * keep * upw
        loss[J] = (rP + rR) * settings.vib_loss
    return JumpTable(down, stay, up, loss)


def generator(table: JumpTable) -> np.ndarray:
    """Rate matrix on (J = 0..j_max, lost); columns are source states."""
    n = table.down.size
    A = np.zeros((n + 1, n + 1))
    for J in range(n):
        out = table.moving[J]
        A[J, J] -= out
        if J >= 2:
            A[J - 2, J] += table.down[J]
        if J + 2 < n:
            A[J + 2, J] += table.up[J]
        A[n, J] += table.loss[J]
    return A


def _j_vector(p: PopulationState) -> np.ndarray:
    """(J..., lost) columns for n = 0 and n = 1."""
    J = p.probs.shape[0]
    out = np.zeros((p.j_max + 2, 2))
    from .population import level_labels

    Jl, _ = level_labels(p.j_max)
    for n in (0, 1):
        out[:-1, n] = np.bincount(Jl, weights=p.probs[:, n], minlength=p.j_max + 1)
    out[-1, 0] = p.lost
    return out


def _state(vec: np.ndarray) -> PopulationState:
    s0 = PopulationState.from_j_distribution(np.clip(vec[:-1, 0], 0, None))
    s1 = PopulationState.from_j_distribution(np.clip(vec[:-1, 1], 0, None), n=1)
    return PopulationState(s0.probs + s1.probs, float(vec[-1].sum()))


def run_pumping(
    p0: PopulationState,
    settings: PumpSettings,
    c: MolecularConstants,
    *,
    n_snapshots: int = 40,
    seed: int | None = None,
    n_traj: int = 1,
) -> CoolingReport:
    """Pump for ``settings.duration``.

    With ``seed`` None the expected populations are propagated exactly with a
    matrix exponential; otherwise ``n_traj`` jump trajectories are sampled, each
    from ``rng.stream(seed, "pumping", i)``. m is uniform within each J in
    every snapshot, which is exact for m-uniform inputs such as thermal ones.
    """
    p0.check()
    times = np.linspace(0.0, settings.duration, n_snapshots + 1)
    table = jump_table(settings, c, p0.j_max)
    if seed is None:
        E = expm(generator(table) * (times[1] - times[0]))
        vec = _j_vector(p0)
        vec[-1, 1] = 0.0
        states = [p0]
        for _ in times[1:]:
            vec = E @ vec
            states.append(_state(vec))
        events = [Event(float(times[-1]), "scatter", {"expected": _expected_events(p0, table, settings.duration)})]
        return CoolingReport(times, states, events)
    return _sample_pumping(p0, table, times, seed, n_traj)


def _expected_events(p0: PopulationState, table: JumpTable, duration: float) -> float:
    # mean number of state-changing jumps, integrated on a fine grid
    A = generator(table)
    grid = np.linspace(0, duration, 201)
    E = expm(A * (grid[1] - grid[0]))
    vec = _j_vector(p0).sum(axis=1)
    rate = np.append(table.moving, 0.0)
    total = 0.0
    prev = rate @ vec
    for _ in grid[1:]:
        vec = E @ vec
        cur = rate @ vec
        total += 0.5 * (prev + cur) * (grid[1] - grid[0])
        prev = cur
    return float(total)


def _sample_pumping(p0, table: JumpTable, times, seed: int, n_traj: int) -> CoolingReport:
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    j_max = p0.j_max
    vec = _j_vector(p0)
    flat = vec.reshape(-1)  # index = J*2 + n, last row is lost
    cdf = np.cumsum(flat)
    cdf /= cdf[-1]
    moving = table.moving
    probs = np.stack([table.down, table.up, table.loss], axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = np.where(moving[:, None] > 0, probs / moving[:, None], 0.0)
    cum = np.cumsum(probs, axis=1)
    n_snap = times.size
    at = np.zeros((n_traj, n_snap), dtype=np.int64)  # J at each snapshot, -1 = lost
    phonon = np.zeros(n_traj, dtype=np.int64)
    n_events = 0
    for i in range(n_traj):
        g = rngmod.stream(seed, "pumping", i)
        idx = min(int(np.searchsorted(cdf, g.random(), side="right")), flat.size - 1)
        J, phonon[i] = divmod(idx, 2)
        if J > j_max:
            at[i] = -1
            continue
        t, k = 0.0, 0
        while True:
            r = moving[J]
            t_next = t + g.exponential(1.0 / r) if r > 0 else math.inf
            while k < n_snap and times[k] < t_next:
                at[i, k] = J
                k += 1
            if k == n_snap:
                break
            n_events += 1
            branch = int(np.searchsorted(cum[J], g.random() * cum[J, -1], side="right"))
            if branch == 0:
                J -= 2
            elif branch == 1:
                J += 2
            else:
                at[i, k:] = -1
                break
            t = t_next
    states = []
    for k in range(n_snap):
        vec = np.zeros((j_max + 2, 2))
        Jk = at[:, k]
        gone = Jk < 0
        for n in (0, 1):
            sel = ~gone & (phonon == n)
            vec[:-1, n] = np.bincount(Jk[sel], minlength=j_max + 1) / n_traj
        vec[-1, 0] = gone.mean()
        states.append(_state(vec))
    events = [Event(float(times[-1]), "scatter", {"count": n_events})]
    return CoolingReport(times, states, events, n_traj=n_traj)


def fraction_below(p: PopulationState, j_cut: int) -> float:
    """Share of the unlost population with J < j_cut."""
    pj = p.j_distribution()
    kept = pj.sum()
    return float(pj[:j_cut].sum() / kept) if kept > 0 else math.nan


def compression_time(
    p0: PopulationState,
    settings: PumpSettings,
    c: MolecularConstants,
    j_cut: int = 10,
    fraction: float = 0.99,
    t_max: float = 1.0,
) -> float | None:
    """Earliest time at which ``fraction`` of the unlost population has J < j_cut."""
    A = generator(jump_table(settings, c, p0.j_max))
    v0 = _j_vector(p0).sum(axis=1)

    def excess(t):
        v = expm(A * t) @ v0
        kept = v[:-1].sum()
        return v[:j_cut].sum() / kept - fraction

    if excess(0.0) >= 0:
        return 0.0
    if excess(t_max) < 0:
        return None
    return float(brentq(excess, 0.0, t_max, xtol=1e-12, rtol=1e-10))
