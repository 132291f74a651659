"""Offset-frequency scans and comb-index determination from several repetition rates."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .comb import CombSettings, branch_residual, comb_rabi
from .trapdyn import TrapSettings, lamb_dicke, sideband_flop_probability

SLOPE_TOL = 0.4


@dataclass(frozen=True)
class ScanResult:
    f_rep: float
    nu_AO: np.ndarray
    signal: np.ndarray
    probe_time: float

    def __post_init__(self):
        nu = np.asarray(self.nu_AO, dtype=float)
        sig = np.asarray(self.signal, dtype=float)
        if nu.shape != sig.shape or nu.ndim != 1:
            raise ValueError("nu_AO and signal must be 1-d arrays of equal length")
        if np.any(np.diff(nu) <= 0):
            raise ValueError("nu_AO values must be strictly increasing")
        if nu.size and (nu[0] < 0 or nu[-1] >= self.f_rep):
            raise ValueError("nu_AO values must lie in [0, f_rep)")
        object.__setattr__(self, "nu_AO", nu)
        object.__setattr__(self, "signal", sig)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.nu_AO.tolist(), self.signal.tolist()))

    @property
    def periodic(self) -> bool:
        """True when the grid is uniform and tiles one full period."""
        nu = self.nu_AO
        if nu.size < 3:
            return False
        step = np.diff(nu)
        return bool(np.allclose(step, step[0], rtol=1e-6) and math.isclose(nu[0] + self.f_rep, nu[-1] + step[0], rel_tol=1e-9))


def offset_grid(f_rep: float, step: float) -> np.ndarray:
    """Uniform grid over one full period [0, f_rep)."""
    n = int(round(f_rep / step))
    return np.arange(n) * (f_rep / n)


def scan_signal(splittings, f_rep: float, nu, omega_s, probe_time: float) -> np.ndarray:
    """Best flop probability over all splittings and both branches."""
    nu = np.asarray(nu, dtype=float)
    out = np.zeros_like(nu)
    for d, w in zip(np.atleast_1d(splittings), np.broadcast_to(omega_s, np.shape(np.atleast_1d(splittings)))):
        for sign in (1, -1):
            _, r = branch_residual(d, f_rep, nu, sign)
            out = np.maximum(out, sideband_flop_probability(w, probe_time, r))
    return out


def simulate_scan(
    splittings,
    settings: CombSettings,
    trap: TrapSettings,
    probe_time: float,
    grid,
    *,
    omega0: float,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> ScanResult:
    """Sideband excitation probability versus nu_AO at fixed f_rep.

    ``omega0`` is the carrier Rabi frequency (rad/s). Optional additive
    Gaussian ``noise`` needs ``rng``.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(grid >= settings.f_rep):
        raise ValueError("grid must lie within [0, f_rep)")
    d = np.atleast_1d(np.asarray(splittings, dtype=float))
    omega_s = lamb_dicke(trap) * comb_rabi(omega0, d, settings.tau)
    signal = scan_signal(d, settings.f_rep, grid, omega_s, probe_time)
    if noise:
        if rng is None:
            raise ValueError("noise requires an rng")
        signal = signal + rng.normal(0.0, noise, signal.shape)
    return ScanResult(settings.f_rep, grid, signal, probe_time)


def rabi_fwhm(omega_s: float, probe_time: float) -> float:
    """Full width at half maximum (Hz) of the detuned-Rabi line."""

    def half(delta):
        return sideband_flop_probability(omega_s, probe_time, delta) - 0.5 * peak

    peak = sideband_flop_probability(omega_s, probe_time, 0.0)
    if peak <= 0:
        raise ValueError("no excitation at resonance")
    # first half-maximum crossing lies inside the central lobe
    hi = math.sqrt((2 * math.pi / probe_time) ** 2 - min(omega_s**2, (2 * math.pi / probe_time) ** 2)) / (2 * math.pi)
    hi = max(hi, 1e-12)
    return 2 * brentq(half, 0.0, hi)


def find_peaks(scan: ScanResult, threshold: float, periodic: bool | None = None, gap: int = 3) -> list[float]:
    """Line centres: midpoints of the threshold crossings around each run above ``threshold``.

    Runs separated by at most ``gap`` samples below threshold count as one line,
    so noise near the crossing does not split a peak. Crossings are located by
    linear interpolation. On a grid that tiles a full period, runs may wrap
    around the ends and centres are reduced into [0, f_rep); otherwise runs
    touching either end are dropped as unresolved.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    periodic = scan.periodic if periodic is None else periodic
    y, x, n = scan.signal, scan.nu_AO, scan.signal.size
    above = y > threshold
    if n < 3 or not above.any():
        return []
    if above.all():
        raise ValueError("signal exceeds threshold everywhere")
    # walk positions in an order that starts below threshold
    start = int(np.argmin(above)) if periodic else 0
    order = (start + np.arange(n)) % n

    def coord(pos):
        # position along the walk, unwrapped past the period boundary
        return x[(start + pos) % n] + scan.f_rep * ((start + pos) // n)

    runs, last = [], None
    for pos in np.flatnonzero(above[order]):
        if last is not None and pos - last <= gap + 1:
            runs[-1][1] = pos
        else:
            runs.append([pos, pos])
        last = pos

    found = []
    for lo, hi in runs:
        if not periodic and (lo == 0 or hi == n - 1):
            continue
        a, b = order[lo - 1], order[lo]
        left = coord(lo - 1) + (threshold - y[a]) / (y[b] - y[a]) * (coord(lo) - coord(lo - 1))
        a, b = order[hi], order[(hi + 1) % n]
        right = coord(hi) + (threshold - y[a]) / (y[b] - y[a]) * (coord(hi + 1) - coord(hi))
        centre = 0.5 * (left + right)
        found.append(float(centre % scan.f_rep) if periodic else float(centre))
    return sorted(found)


class CombIndex(NamedTuple):
    M: int
    sign: int
    delta_omega: float
    slope: float


def _unwrap(shift: float, f_rep: float) -> float:
    return shift - f_rep * round(shift / f_rep)


def extract_comb_index(
    scans, threshold: float = 0.5, line: float | None = None
) -> CombIndex:
    """Absolute comb index of one tracked line from scans at different f_rep.

    A line obeying delta = M f_rep + sign nu moves as d nu / d f_rep = -sign M.
    ``line`` picks the tracked peak in the first scan (nearest peak; default
    the lowest). Peaks in later scans are matched by the choice whose
    positions lie closest to a straight line with integer slope.
    """
    scans = list(scans)
    if len(scans) < 2:
        raise ValueError("need at least two scans")
    f = np.array([s.f_rep for s in scans])
    if np.unique(f).size != f.size:
        raise ValueError("repetition rates must be distinct")
    peaks = [find_peaks(s, threshold) for s in scans]
    if any(not p for p in peaks):
        raise ValueError("a scan contains no peak above threshold")
    first = peaks[0]
    start = first[0] if line is None else min(first, key=lambda v: abs(v - line))

    best = None
    for choice in itertools.product(*peaks[1:]):
        # unwrap each position relative to the first scan
        nu = [start] + [start + _unwrap(v - start, s.f_rep) for v, s in zip(choice, scans[1:])]
        nu = np.array(nu)
        slope = np.polyfit(f - f[0], nu, 1)[0]
        k = round(slope)
        if k == 0:
            continue
        intercept = np.mean(nu - k * (f - f[0]))
        cost = np.max(np.abs(nu - intercept - k * (f - f[0])))
        if best is None or cost < best[0]:
            best = (cost, slope, k, nu)
    if best is None:
        raise ValueError("tracked line does not move with f_rep; comb index undetermined")
    _, slope, k, nu = best
    if abs(slope - k) > SLOPE_TOL:
        raise ValueError(f"slope {slope:.3f} is not close to an integer; comb index ambiguous")
    M = abs(int(k))
    sign = 1 if k < 0 else -1
    # unwrapped positions keep the first scan's comb index valid throughout
    delta = np.mean(M * f + sign * nu)
    return CombIndex(M, sign, float(delta), float(slope))
