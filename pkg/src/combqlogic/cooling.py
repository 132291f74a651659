"""Quantum-logic rotational cooling: blue-sideband Raman pulses J -> J-2 that
add a phonon, interleaved with phonon removal through the atomic ion.

Two engines share one step model. ``run_rate_equations`` propagates expected
populations exactly, step by step; ``run_monte_carlo`` samples trajectories,
one seeded stream per trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, NamedTuple

import numpy as np

from . import rng as rngmod
from .comb import (
    CombSettings,
    PolarizationConfig,
    carrier_rabi,
    comb_rabi,
    is_resonant,
    resonance_offset,
)
from .molecule import MolecularConstants, raman_splitting
from .population import PopulationState, block, level_index, level_labels
from .trapdyn import TrapSettings, lamb_dicke, pi_time, sideband_flop_probability

# overflow above the tracked J range smaller than this is booked as lost
OVERFLOW_FLOOR = 1e-15
N_UNIFORMS = 7  # scatter, lost, direction, new m, q choice, flop, cool


def spont_rate(gamma: float, omega: float, delta: float) -> float:
    """Off-resonant scattering rate 2 gamma Omega / |Delta| (1/s)."""
    if delta == 0:
        raise ValueError("detuning must be non-zero")
    return 2 * gamma * omega / abs(delta)


def allowed_q(J_upper: int, m: int, pol: PolarizationConfig) -> list[int]:
    """q values that connect (J_upper, m) to an existing sublevel of J_upper - 2."""
    return [q for q in sorted(pol.allowed_q) if abs(m + q) <= J_upper - 2]


def coupling_coverage(J_upper: int, schedule) -> set[int]:
    """Sublevels of J_upper that no configuration in ``schedule`` can move down."""
    if J_upper < 2:
        raise ValueError("J_upper must be >= 2")
    return {
        m
        for m in range(-J_upper, J_upper + 1)
        if not any(allowed_q(J_upper, m, pol) for pol in schedule)
    }


@dataclass(frozen=True)
class Pulse:
    J_upper: int
    pol: PolarizationConfig
    duration: float

    def __post_init__(self):
        if self.J_upper < 2:
            raise ValueError("pulses need J_upper >= 2")
        if not self.duration > 0:
            raise ValueError("pulse duration must be positive")


@dataclass(frozen=True)
class CoolingSchedule:
    pulses: tuple[Pulse, ...]
    cool_after_each: bool = True
    max_rounds: int = 1

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        object.__setattr__(self, "pulses", tuple(self.pulses))


class Transition(NamedTuple):
    frequency: float  # beat note the comb must supply (Hz)
    omega_s: float  # sideband Rabi frequency (rad/s)
    residual: float  # detuning from the nearest comb resonance (Hz)
    nu_AO: float


@dataclass(frozen=True)
class CoolingPhysics:
    """Derived rates for the cooling loop.

    ``omega0`` overrides the carrier Rabi frequency computed from intensity and
    detuning. With ``retune`` the offset nu_AO is re-set for every pulse so the
    blue sideband is driven exactly on resonance; otherwise the comb settings
    are used as given and must be resonant within ``tol``.
    """

    molecule: MolecularConstants
    comb: CombSettings
    trap: TrapSettings
    omega0: float | None = None
    spont_override: float | None = None
    f_vib: float = 0.5
    retune: bool = True
    tol: float = 1e3
    q_weights: Mapping[int, float] | None = None

    def __post_init__(self):
        if not 0 <= self.f_vib <= 1:
            raise ValueError("f_vib must lie in [0, 1]")
        if self.spont_override is not None and self.spont_override < 0:
            raise ValueError("scattering rate must be non-negative")

    @cached_property
    def carrier(self) -> float:
        return self.omega0 if self.omega0 is not None else carrier_rabi(self.molecule, self.comb)

    @cached_property
    def eta(self) -> float:
        return lamb_dicke(self.trap)

    @cached_property
    def R_s(self) -> float:
        if self.spont_override is not None:
            return self.spont_override
        return spont_rate(self.molecule.gamma, self.carrier, self.comb.Delta)

    def transition(self, J_upper: int) -> Transition:
        return _transition(self, J_upper)

    def pi_time(self, J_upper: int) -> float:
        return pi_time(self.transition(J_upper).omega_s)

    def cool_time(self, pulse_duration: float) -> float:
        d = self.trap.cool_duration
        return pulse_duration if d is None else d

    def weight(self, q: int) -> float:
        return 1.0 if self.q_weights is None else float(self.q_weights.get(q, 0.0))


def _transition(physics: CoolingPhysics, J_upper: int) -> Transition:
    cache = physics.__dict__.setdefault("_transitions", {})
    if J_upper in cache:
        return cache[J_upper]
    # blue sideband going down in J: the phonon takes omega_t out of the beat note
    freq = raman_splitting(J_upper - 2, physics.molecule) - physics.trap.omega_t / (2 * math.pi)
    comb = physics.comb
    if physics.retune:
        plus, _ = resonance_offset(freq, comb.f_rep)
        nu, residual = plus.nu_AO, 0.0
    else:
        hit = is_resonant(freq, comb, physics.tol)
        if hit is None:
            raise ValueError(
                f"comb (f_rep={comb.f_rep!r}, nu_AO={comb.nu_AO!r}) is not resonant with "
                f"the J={J_upper} -> {J_upper - 2} sideband at {freq!r} Hz"
            )
        nu, residual = comb.nu_AO, hit.residual
    omega_s = physics.eta * comb_rabi(physics.carrier, freq, comb.tau)
    cache[J_upper] = Transition(freq, float(omega_s), residual, nu)
    return cache[J_upper]


def pulse_transfer(physics: CoolingPhysics, pulse: Pulse) -> float:
    tr = physics.transition(pulse.J_upper)
    return float(sideband_flop_probability(tr.omega_s, pulse.duration, tr.residual))


def _q_split(physics: CoolingPhysics, J_upper: int, m: int, pol: PolarizationConfig) -> list[tuple[int, float]]:
    qs = allowed_q(J_upper, m, pol)
    w = np.array([physics.weight(q) for q in qs])
    if not qs or w.sum() <= 0:
        return []
    return list(zip(qs, w / w.sum()))


def ladder_schedule(
    physics: CoolingPhysics, j_top: int, cycles_per_level: int = 10, pols=None
) -> CoolingSchedule:
    """Step down from ``j_top``: each level gets ``cycles_per_level`` pulse+cool
    cycles (polarization rotating through ``pols``) before the next one."""
    pols = tuple(pols or physics.comb.pol_schedule)
    pulses = [
        Pulse(J, pols[c % len(pols)], physics.pi_time(J))
        for J in range(j_top, 1, -1)
        for c in range(cycles_per_level)
    ]
    return CoolingSchedule(tuple(pulses), True, 1)


def sweep_schedule(physics: CoolingPhysics, j_top: int, rounds: int = 10, pols=None) -> CoolingSchedule:
    """One round sweeps every level from ``j_top`` down, once per polarization."""
    pols = tuple(pols or physics.comb.pol_schedule)
    pulses = [Pulse(J, pol, physics.pi_time(J)) for pol in pols for J in range(j_top, 1, -1)]
    return CoolingSchedule(tuple(pulses), True, rounds)


def ground_fraction(p: PopulationState) -> float:
    """Mass in J = 0 and J = 1, any m and n, lost excluded."""
    return float(p.probs[: min(4, p.probs.shape[0])].sum())


# ----------------------------------------------------------------------------
# expected-value steps


def scatter_redistribute(scattered: PopulationState, f_vib: float) -> PopulationState:
    """Where scattered mass ends up.

    A fraction ``f_vib`` leaves the manifold (``lost``); the rest moves to
    J +/- 1 with equal weight (J = 0 only to J = 1), spread uniformly over the
    new level's sublevels with the phonon number kept. The returned state is an
    unnormalized increment whose ``j_max`` may exceed the input's by one.
    """
    if np.any(scattered.probs < 0) or scattered.lost < 0:
        raise ValueError("scattered mass must be non-negative")
    j_max = scattered.j_max
    J, _ = level_labels(j_max)
    kept = scattered.probs * (1 - f_vib)
    lost = f_vib * float(scattered.probs.sum())
    up = np.zeros((j_max + 2, 2))
    down = np.zeros((j_max + 2, 2))
    for n in (0, 1):
        pj = np.bincount(J, weights=kept[:, n], minlength=j_max + 1)
        frac_up = np.where(np.arange(j_max + 1) == 0, 1.0, 0.5)
        up[1:, n] = pj * frac_up
        down[:-2, n] = pj[1:] * 0.5
    new_j = up + down
    out_j = j_max + 1
    top = float(new_j[-1].sum())
    if top < OVERFLOW_FLOOR:
        lost += top
        new_j = new_j[:-1]
        out_j = j_max
    Jn, _ = level_labels(out_j)
    probs = new_j[Jn] / (2 * Jn + 1)[:, None]
    return PopulationState(probs, scattered.lost + lost)


def _add(a: PopulationState, b: PopulationState) -> PopulationState:
    j = max(a.j_max, b.j_max)
    a, b = a.with_j_max(j), b.with_j_max(j)
    return PopulationState(a.probs + b.probs, a.lost + b.lost)


def _expected_pulse(p: PopulationState, pulse: Pulse, physics: CoolingPhysics):
    p_sc = -math.expm1(-physics.R_s * pulse.duration)
    scattered = PopulationState(p.probs * p_sc)
    coh = p.probs * (1 - p_sc)
    J_up = pulse.J_upper
    transferred = 0.0
    if J_up <= p.j_max:
        P = pulse_transfer(physics, pulse)
        for m in range(-J_up, J_up + 1):
            row = level_index(J_up, m)
            mass = coh[row, 0]
            split = _q_split(physics, J_up, m, pulse.pol)
            if mass == 0 or not split:
                continue
            moved = mass * P
            coh[row, 0] -= moved
            for q, w in split:
                coh[level_index(J_up - 2, m + q), 1] += moved * w
            transferred += moved
    out = _add(PopulationState(coh, p.lost), scatter_redistribute(scattered, physics.f_vib))
    return out, transferred, float(scattered.probs.sum())


def _expected_cool(p: PopulationState, efficiency: float):
    probs = p.probs.copy()
    removed = probs[:, 1] * efficiency
    probs[:, 0] += removed
    probs[:, 1] -= removed
    return PopulationState(probs, p.lost), float(removed.sum())


def cool_motion(p: PopulationState, trap: TrapSettings) -> PopulationState:
    """Expected effect of one sideband-cooling attempt on the phonon mode."""
    return _expected_cool(p, trap.cool_efficiency)[0]


# ----------------------------------------------------------------------------
# sampled steps on many trajectories at once


def _sampled_pulse(J, m, n, lost, U, pulse: Pulse, physics: CoolingPhysics):
    """Advance trajectory arrays in place through one pulse; returns (transfers, scatters)."""
    p_sc = -math.expm1(-physics.R_s * pulse.duration)
    alive = ~lost
    sc = alive & (U[:, 0] < p_sc)
    gone = sc & (U[:, 1] < physics.f_vib)
    lost |= gone
    moving = sc & ~gone
    up = moving & ((J == 0) | (U[:, 2] < 0.5))
    J[:] = np.where(moving, np.where(up, J + 1, J - 1), J)
    m[:] = np.where(moving, np.floor(U[:, 3] * (2 * J + 1)).astype(m.dtype) - J, m)

    J_up = pulse.J_upper
    cand = alive & ~sc & (J == J_up) & (n == 0)
    transfers = 0
    if np.any(cand):
        P = pulse_transfer(physics, pulse)
        for mm in np.unique(m[cand]):
            split = _q_split(physics, J_up, int(mm), pulse.pol)
            if not split:
                continue
            sel = cand & (m == mm) & (U[:, 5] < P)
            if not np.any(sel):
                continue
            cum = np.cumsum([w for _, w in split])
            pick = np.minimum(np.searchsorted(cum, U[sel, 4], side="right"), len(split) - 1)
            qs = np.array([q for q, _ in split])[pick]
            J[sel] = J_up - 2
            m[sel] = mm + qs
            n[sel] = 1
            transfers += int(sel.sum())
    return transfers, int(sc.sum())


def _sampled_cool(n, lost, U, efficiency: float) -> int:
    hit = ~lost & (n == 1) & (U[:, 6] < efficiency)
    n[hit] = 0
    return int(hit.sum())


def _sample_levels(p: PopulationState, u: np.ndarray):
    """Inverse-CDF draw of (J, m, n, lost) from a population state."""
    flat = np.append(p.probs.reshape(-1), p.lost)
    cdf = np.cumsum(flat)
    cdf /= cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), flat.size - 1)
    lost = idx == flat.size - 1
    row, n = np.divmod(np.where(lost, 0, idx), 2)
    Jl, ml = level_labels(p.j_max)
    return Jl[row].astype(np.int64), ml[row].astype(np.int64), n.astype(np.int64), lost


def _histogram(J, m, n, lost, j_max: int) -> PopulationState:
    N = J.size
    keep = ~lost
    rows = J[keep] * J[keep] + J[keep] + m[keep]
    counts = np.bincount(rows * 2 + n[keep], minlength=2 * (j_max + 1) ** 2)
    return PopulationState(counts.reshape(-1, 2) / N, float(lost.sum()) / N)


def apply_pulse(
    p: PopulationState,
    J_upper: int,
    pol: PolarizationConfig,
    duration: float,
    physics: CoolingPhysics,
    rng: np.random.Generator | None = None,
) -> PopulationState:
    """One blue-sideband pulse on J_upper -> J_upper - 2 with scattering.

    Without ``rng`` the expected populations are returned. With ``rng`` a single
    level is drawn from ``p`` and its sampled fate is returned as a point mass.
    Only n = 0 population on J_upper is driven.
    """
    pulse = Pulse(J_upper, pol, duration)
    physics.transition(J_upper)  # raises if the comb is off resonance
    if rng is None:
        return _expected_pulse(p, pulse, physics)[0]
    u = rng.random(N_UNIFORMS + 1)
    J, m, n, lost = _sample_levels(p, u[:1])
    _sampled_pulse(J, m, n, lost, u[None, 1:], pulse, physics)
    j_max = max(p.j_max, int(J[0]))
    return _histogram(J, m, n, lost, j_max)


# ----------------------------------------------------------------------------
# engines


class Event(NamedTuple):
    time: float
    kind: str  # "pulse", "cool" or "scatter"
    detail: dict


@dataclass
class CoolingReport:
    """Snapshots of a cooling or pumping run.

    ``times[0]`` is the initial state. Standard errors are filled in by the
    Monte Carlo engines only.
    """

    times: np.ndarray
    states: list[PopulationState]
    events: list[Event] = field(default_factory=list)
    ground_fraction_err: np.ndarray | None = None
    lost_err: np.ndarray | None = None
    cycles_per_step: dict[int, int | None] = field(default_factory=dict)
    n_traj: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def ground_fraction(self) -> np.ndarray:
        return np.array([ground_fraction(s) for s in self.states])

    @property
    def lost(self) -> np.ndarray:
        return np.array([s.lost for s in self.states])

    @property
    def ground_fraction_final(self) -> float:
        return ground_fraction(self.states[-1])

    @property
    def wall_time_simulated(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> PopulationState:
        return self.states[-1]

    def j_populations(self, j_max: int | None = None) -> np.ndarray:
        j_max = max(s.j_max for s in self.states) if j_max is None else j_max
        out = np.zeros((len(self.states), j_max + 1))
        for i, s in enumerate(self.states):
            pj = s.j_distribution()[: j_max + 1]
            out[i, : pj.size] = pj
        return out

    def time_to(self, threshold: float, series: str = "ground_fraction") -> float | None:
        """First snapshot time at which ``series`` reaches ``threshold``."""
        values = getattr(self, series)
        hit = np.nonzero(values >= threshold)[0]
        return float(self.times[hit[0]]) if hit.size else None

    @property
    def mean_cycles_per_step(self) -> float | None:
        vals = [v for v in self.cycles_per_step.values() if v is not None]
        return float(np.mean(vals)) if vals else None


class _CycleCounter:
    """Pulses spent on each J_upper until it holds <= 10% of what it held before its first pulse."""

    def __init__(self):
        self.start: dict[int, float] = {}
        self.count: dict[int, int] = {}
        self.done: dict[int, int | None] = {}

    def before(self, J: int, mass: float):
        if J not in self.start:
            self.start[J] = mass
            self.count[J] = 0
            self.done[J] = None if mass > 0 else 0

    def after(self, J: int, mass: float):
        if self.done.get(J) is not None:
            return
        self.count[J] += 1
        if mass <= 0.1 * self.start[J]:
            self.done[J] = self.count[J]


def _level_mass(p: PopulationState, J: int) -> float:
    return float(p.probs[block(J), 0].sum()) if J <= p.j_max else 0.0


def _iter_steps(schedule: CoolingSchedule):
    """Yields (pulse, cool_now) across all rounds."""
    last = len(schedule.pulses) - 1
    for _ in range(schedule.max_rounds):
        for i, pulse in enumerate(schedule.pulses):
            yield pulse, schedule.cool_after_each or i == last


def _validate(p0: PopulationState, schedule: CoolingSchedule, physics: CoolingPhysics):
    p0.check()
    if p0.phonon_mass(1) > 0:
        raise ValueError("initial state must have the motional mode in n = 0")
    for pulse in schedule.pulses:
        physics.transition(pulse.J_upper)


def run_rate_equations(
    p0: PopulationState,
    schedule: CoolingSchedule,
    physics: CoolingPhysics,
    stop_at: float | None = None,
) -> CoolingReport:
    """Deterministic propagation of expected populations through the schedule.

    A snapshot is taken after every cooling step (or pulse, when cooling is
    deferred to the end of a round). Stops early once the ground fraction
    reaches ``stop_at``.
    """
    _validate(p0, schedule, physics)
    p, t = p0, 0.0
    times, states, events = [0.0], [p0], []
    counter = _CycleCounter()
    for pulse, cool_now in _iter_steps(schedule):
        counter.before(pulse.J_upper, _level_mass(p, pulse.J_upper))
        p, moved, scattered = _expected_pulse(p, pulse, physics)
        counter.after(pulse.J_upper, _level_mass(p, pulse.J_upper))
        t += pulse.duration
        events.append(Event(t, "pulse", {"J_upper": pulse.J_upper, "pol": str(pulse.pol), "transferred": moved}))
        if scattered > 0:
            events.append(Event(t, "scatter", {"mass": scattered}))
        if cool_now:
            p, removed = _expected_cool(p, physics.trap.cool_efficiency)
            t += physics.cool_time(pulse.duration)
            events.append(Event(t, "cool", {"removed": removed}))
        times.append(t)
        states.append(p)
        if stop_at is not None and ground_fraction(p) >= stop_at:
            break
    return CoolingReport(np.array(times), states, events, cycles_per_step=dict(counter.done))


def run_monte_carlo(
    p0: PopulationState,
    schedule: CoolingSchedule,
    physics: CoolingPhysics,
    n_traj: int,
    seed: int,
    stop_at: float | None = None,
    chunk: int = 64,
) -> CoolingReport:
    """Sampled counterpart of :func:`run_rate_equations`.

    Trajectory i draws all its randomness from ``rng.stream(seed, "cooling", i)``,
    so results depend only on (seed, n_traj), never on batching.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    _validate(p0, schedule, physics)
    gens = rngmod.trajectory_streams(seed, "cooling", n_traj)
    u0 = np.array([g.random() for g in gens])
    J, m, n, lost = _sample_levels(p0, u0)
    j_max = p0.j_max
    t = 0.0
    times, states, events = [0.0], [_histogram(J, m, n, lost, j_max)], []
    counter = _CycleCounter()
    steps = list(_iter_steps(schedule))
    for start in range(0, len(steps), chunk):
        block_steps = steps[start : start + chunk]
        U = np.stack([g.random((len(block_steps), N_UNIFORMS)) for g in gens])
        stopped = False
        for k, (pulse, cool_now) in enumerate(block_steps):
            Uk = U[:, k, :]
            counter.before(pulse.J_upper, np.mean(~lost & (J == pulse.J_upper) & (n == 0)))
            moved, scattered = _sampled_pulse(J, m, n, lost, Uk, pulse, physics)
            counter.after(pulse.J_upper, np.mean(~lost & (J == pulse.J_upper) & (n == 0)))
            t += pulse.duration
            events.append(Event(t, "pulse", {"J_upper": pulse.J_upper, "pol": str(pulse.pol), "transferred": moved}))
            if scattered:
                events.append(Event(t, "scatter", {"count": scattered}))
            if cool_now:
                removed = _sampled_cool(n, lost, Uk, physics.trap.cool_efficiency)
                t += physics.cool_time(pulse.duration)
                events.append(Event(t, "cool", {"removed": removed}))
            j_max = max(j_max, int(J.max()))
            snap = _histogram(J, m, n, lost, j_max)
            times.append(t)
            states.append(snap)
            if stop_at is not None and ground_fraction(snap) >= stop_at:
                stopped = True
                break
        if stopped:
            break
    g = np.array([ground_fraction(s) for s in states])
    lo = np.array([s.lost for s in states])
    return CoolingReport(
        np.array(times),
        states,
        events,
        ground_fraction_err=np.sqrt(g * (1 - g) / n_traj),
        lost_err=np.sqrt(lo * (1 - lo) / n_traj),
        cycles_per_step=dict(counter.done),
        n_traj=n_traj,
    )
