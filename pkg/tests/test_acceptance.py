"""Acceptance criteria, one test each, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are collected in
the terminal summary (and printed directly under ``-s``).
"""

import dataclasses
import math
import sys

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from combqlogic.cli import cooling_schedule, initial_cooling_state
from combqlogic.comb import FULL_COVERAGE, CombSettings, PolarizationConfig, match_multi, resonance_offset, suppression_factor
from combqlogic.config import sio_plus_profile
from combqlogic.cooling import apply_pulse, cool_motion, coupling_coverage, run_monte_carlo, run_rate_equations
from combqlogic.molecule import SIO_PLUS, boltzmann_distribution, cumulative_fraction, raman_splitting, splitting_expansion
from combqlogic.population import PopulationState
from combqlogic.pumping import PumpSettings, compression_time, fraction_below, run_pumping
from combqlogic.spectro import extract_comb_index, offset_grid, rabi_fwhm, simulate_scan
from combqlogic.trapdyn import TrapSettings, lamb_dicke, sideband_flop_probability

from conftest import ACCEPTANCE_LINES

N_TRAJ = 10_000
SEED = 20100521


def record(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def profile():
    return sio_plus_profile()


@pytest.fixture(scope="module")
def thermal(profile):
    return boltzmann_distribution(profile.temperature, profile.j_max, profile.molecule)


def _binomial_z(mc, rate, n):
    """Largest |MC - rate| in binomial standard errors of the rate value.

    The variance is floored at half a trajectory so that exact 0 or 1 rate
    values still tolerate a single discretization step.
    """
    var = np.maximum(rate * (1 - rate), 0.5 / n) / n
    return float(np.max(np.abs(np.asarray(mc) - np.asarray(rate)) / np.sqrt(var)))


def test_thermal_population(thermal):
    frac = cumulative_fraction(thermal, 35)
    record("thermal population", abs(frac - 0.98) <= 0.01, f"P(J<=35, 300 K) = {frac:.6f}, want 0.98 +/- 0.01")


def test_splitting_identity():
    worst = 0.0
    for J in range(0, 101):
        exact = raman_splitting(J, SIO_PLUS)
        worst = max(worst, abs(exact - splitting_expansion(J, SIO_PLUS)) / math.ulp(exact))
    record("splitting identity", worst <= 10, f"max deviation {worst:.1f} ulp over J = 0..100, want <= 10")


def test_spontaneous_rate(profile):
    R = profile.physics().R_s
    record("spontaneous scattering", abs(R - 0.3) <= 0.03, f"R_s = {R:.4f} /s, want 0.3 +/- 10%")


def test_comb_suppression():
    small = abs(suppression_factor(1e-8) - 1.0)
    big = suppression_factor(10.0)
    closed = 10 / (2 * math.sinh(5))
    ok = small < 1e-14 and abs(big - closed) <= 1e-12 * closed and round(big, 4) == 0.0674
    record("comb suppression", ok, f"|f(1e-8) - 1| = {small:.1e}, f(10) = {big:.6f} vs {closed:.6f}")


@pytest.fixture(scope="module")
def cooling_runs(profile):
    physics = profile.physics()
    p0 = initial_cooling_state(profile)
    sched = cooling_schedule(profile, physics)
    rate = run_rate_equations(p0, sched, physics)
    mc = run_monte_carlo(p0, sched, physics, N_TRAJ, SEED)
    return rate, mc


def test_cooling_time(cooling_runs, profile):
    rate, _ = cooling_runs
    t = rate.time_to(0.9)
    lo, hi = 20e-3 / 3, 60e-3
    cycles = rate.mean_cycles_per_step
    detail = (
        f"t(90% in J<=1) = {t * 1e3:.3f} ms, want [{lo * 1e3:.2f}, {hi * 1e3:.0f}] ms; "
        f"measured {cycles:.2f} cycles per step vs {profile.cooling.cycles_per_level} assumed"
    )
    record("cooling time", t is not None and lo <= t <= hi, detail)


def test_pumping_time(thermal):
    t = compression_time(thermal, PumpSettings(scatter_rate=1e5), SIO_PLUS, j_cut=10, fraction=0.99)
    ok = t is not None and 1e-3 / 3 <= t <= 3e-3
    record("pumping compression", ok, f"t(99% below J=10) = {t * 1e3:.4f} ms, want [0.333, 3] ms")


def test_cross_engine_cooling(cooling_runs):
    rate, mc = cooling_runs
    z_g = _binomial_z(mc.ground_fraction, rate.ground_fraction, N_TRAJ)
    z_l = _binomial_z(mc.lost, rate.lost, N_TRAJ)
    # a noisier variant in which scattering and imperfect cooling matter
    prof = sio_plus_profile()
    prof = dataclasses.replace(prof, trap=dataclasses.replace(prof.trap, cool_efficiency=0.8))
    physics = dataclasses.replace(prof.physics(), spont_override=200.0)
    p0 = initial_cooling_state(prof)
    sched = cooling_schedule(prof, physics)
    r2 = run_rate_equations(p0, sched, physics)
    m2 = run_monte_carlo(p0, sched, physics, N_TRAJ, SEED)
    z_g2 = _binomial_z(m2.ground_fraction, r2.ground_fraction, N_TRAJ)
    z_l2 = _binomial_z(m2.lost, r2.lost, N_TRAJ)
    worst = max(z_g, z_l, z_g2, z_l2)
    detail = (
        f"{N_TRAJ} trajectories, max |MC - rate| = {worst:.2f} sigma "
        f"(profile: ground {z_g:.2f}, lost {z_l:.2f}; noisy: ground {z_g2:.2f}, lost {z_l2:.2f}), want <= 3"
    )
    record("cross-engine cooling", worst <= 3, detail)


def test_cross_engine_pumping(thermal):
    s = PumpSettings(vib_loss=0.02)
    rate = run_pumping(thermal, s, SIO_PLUS, n_snapshots=20)
    mc = run_pumping(thermal, s, SIO_PLUS, n_snapshots=20, seed=SEED, n_traj=N_TRAJ)
    below_r = np.array([st.j_distribution()[:10].sum() for st in rate.states])
    below_m = np.array([st.j_distribution()[:10].sum() for st in mc.states])
    z_b = _binomial_z(below_m, below_r, N_TRAJ)
    z_l = _binomial_z(mc.lost, rate.lost, N_TRAJ)
    worst = max(z_b, z_l)
    record(
        "cross-engine pumping",
        worst <= 3,
        f"{N_TRAJ} trajectories, max |MC - rate| = {worst:.2f} sigma (J<10 {z_b:.2f}, lost {z_l:.2f}), want <= 3",
    )


def test_comb_index_round_trip(profile):
    rng = np.random.default_rng(7)
    trap = TrapSettings(eta_override=0.1)
    omega0 = profile.physics().carrier
    df, step = 500.0, 1e3
    failures, worst_err, worst_frac = [], 0.0, 0.0
    for case in range(50):
        f0 = rng.uniform(75e6, 85e6)
        M = int(rng.integers(600, 6000))
        sign = int(rng.choice([-1, 1]))
        # tracked offset kept clear of nu = 0 and f/2, where the branches merge
        side = rng.choice([0, 1])
        nu = rng.uniform(10e6, f0 / 2 - 10e6) + side * f0 / 2
        delta = M * f0 + sign * nu
        d_arr = np.array([delta])
        omega_s = lamb_dicke(trap) * omega0 * suppression_factor(2 * math.pi * delta * CombSettings().tau)
        probe = math.pi / omega_s
        scans = [
            simulate_scan(d_arr, CombSettings(f_rep=f0 + k * df), trap, probe, offset_grid(f0 + k * df, step), omega0=omega0)
            for k in range(3)
        ]
        fwhm = rabi_fwhm(omega_s, probe)
        try:
            ci = extract_comb_index(scans, threshold=0.5, line=nu)
        except ValueError as err:
            failures.append((case, str(err)))
            continue
        err = abs(ci.delta_omega - delta)
        worst_err = max(worst_err, err)
        worst_frac = max(worst_frac, err / fwhm)
        if ci.M != M or ci.sign != sign or err > fwhm / 10:
            failures.append((case, (ci.M, M, ci.sign, sign, err)))
    detail = (
        f"50 cases x 3 rep rates, {50 - len(failures)} recovered exactly; "
        f"worst splitting error {worst_err:.2f} Hz = {worst_frac:.2e} FWHM, want <= 0.1 FWHM"
    )
    record("comb-index round trip", not failures, detail if not failures else f"{detail}; failures {failures[:3]}")


def _brute_match(splittings, f_lo, f_hi, step, tol):
    """Independent double loop: every grid rate, every exact offset of every line."""
    out = set()
    n = int(round((f_hi - f_lo) / step))
    for i in range(n + 1):
        f = f_lo + step * i
        offsets = set()
        for d in splittings:
            M = int(d // f)
            offsets.add(d - M * f)
            offsets.add((M + 1) * f - d)
        for nu in offsets:
            if not 0 <= nu < f:
                continue
            ok = True
            for d in splittings:
                best = math.inf
                for sgn in (1, -1):
                    M = round((d - sgn * nu) / f)
                    for k in (M - 1, M, M + 1):
                        if k >= 1:
                            best = min(best, abs(d - k * f - sgn * nu))
                if best > tol:
                    ok = False
                    break
            if ok:
                out.add((round(f, 3), round(nu, 3)))
    return out


def test_match_against_brute_force():
    lines = [raman_splitting(3, SIO_PLUS), raman_splitting(5, SIO_PLUS)]
    sols = match_multi(lines, (79e6, 81e6), tol=10e3, step=100.0)
    fast = {(round(s.f_rep, 3), round(s.nu_AO, 3)) for s in sols}
    brute = _brute_match(lines, 79e6, 81e6, 100.0, 10e3)
    record(
        "multi-line matching",
        fast == brute and len(fast) > 0,
        f"{len(fast)} solutions vs {len(brute)} from brute force, symmetric difference {len(fast ^ brute)}",
    )


def test_dark_state_and_coverage(profile):
    physics = dataclasses.replace(profile.physics(), spont_override=0.0)
    q02 = PolarizationConfig(frozenset({-2, 0, 2}))
    p0 = PopulationState.from_j_distribution(np.array([0.0, 0.0, 1.0]))
    p = p0
    for _ in range(5):
        p = cool_motion(apply_pulse(p, 2, q02, physics.pi_time(2), physics), physics.trap)
    dark = p.prob(2, 1) + p.prob(2, -1)
    full = cool_motion(apply_pulse(p0, 2, FULL_COVERAGE, physics.pi_time(2), physics), physics.trap)
    left = full.j_distribution()[2]
    uncovered = coupling_coverage(2, [q02])
    ok = uncovered == {-1, 1} and abs(dark - 0.4) < 1e-12 and left < 1e-9
    record(
        "dark state and coverage",
        ok,
        f"q in {{0,+-2}} leaves m = {sorted(uncovered)} with {dark:.6f} (want 0.4); full coverage leaves {left:.1e} in J=2",
    )


def test_flop_against_ode():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        om = rng.uniform(2 * math.pi * 1e3, 2 * math.pi * 50e3)
        det = rng.uniform(-30e3, 30e3)
        t = rng.uniform(0, 5 * math.pi / om)
        w = 2 * math.pi * det
        H = 0.5 * np.array([[-w, om], [om, w]], dtype=complex)

        def rhs(_t, y):
            psi = y[:2] + 1j * y[2:]
            d = -1j * (H @ psi)
            return np.concatenate([d.real, d.imag])

        sol = solve_ivp(rhs, (0, t), [1.0, 0.0, 0.0, 0.0], method="DOP853", rtol=1e-11, atol=1e-13)
        p_ode = sol.y[1, -1] ** 2 + sol.y[3, -1] ** 2
        worst = max(worst, abs(p_ode - sideband_flop_probability(om, t, det)))
    record("flop against ODE", worst <= 1e-6, f"max |closed form - ODE| = {worst:.1e} over 20 sets, want <= 1e-6")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
