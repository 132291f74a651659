import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from combqlogic.molecule import SIO_PLUS, boltzmann_distribution
from combqlogic.population import PopulationState
from combqlogic.pumping import (
    PumpSettings,
    branch_wavelengths,
    compression_time,
    decay_branching,
    excitation_rate,
    filter_transmission,
    fraction_below,
    generator,
    jump_table,
    run_pumping,
)


@pytest.fixture(scope="module")
def thermal():
    return boltzmann_distribution(300.0, 60, SIO_PLUS, truncation_tol=1e-5)


def test_branch_ordering():
    lines = branch_wavelengths(5, SIO_PLUS)
    assert lines.P > SIO_PLUS.lambda_e > lines.R
    assert branch_wavelengths(0, SIO_PLUS).P is None


def test_default_filter_passes_p_blocks_r():
    s = PumpSettings()
    for J in range(1, 40):
        assert excitation_rate(J, s, SIO_PLUS, "R") == 0.0
    assert excitation_rate(0, s, SIO_PLUS, "P") == 0.0
    assert excitation_rate(30, s, SIO_PLUS, "P") == pytest.approx(1e5)
    rates = [excitation_rate(J, s, SIO_PLUS, "P") for J in range(1, 40)]
    assert all(b >= a for a, b in zip(rates, rates[1:]))


def test_filter_ramp_and_reversal():
    s = PumpSettings()
    r = PumpSettings(pass_branch="R")
    lam = np.linspace(382.5e-9, 383.5e-9, 101)
    np.testing.assert_allclose(filter_transmission(lam, s, SIO_PLUS) + filter_transmission(lam, r, SIO_PLUS), 1.0)
    T = filter_transmission(lam, s, SIO_PLUS)
    assert np.all(np.diff(T) >= 0) and T[0] == 0 and T[-1] == 1


@given(st.integers(0, 200))
def test_decay_branching_sums_to_one(J):
    down, up = decay_branching(J)
    assert down + up == pytest.approx(1.0)
    if J > 0:
        assert decay_branching(J, honl_london=False) == (0.5, 0.5)


def test_generator_columns_sum_to_zero():
    A = generator(jump_table(PumpSettings(vib_loss=0.1), SIO_PLUS, 30))
    np.testing.assert_allclose(A.sum(axis=0), 0.0, atol=1e-9)
    off = A - np.diag(np.diag(A))
    assert np.all(off >= 0)


def test_settings_validation():
    with pytest.raises(ValueError):
        PumpSettings(pass_branch="Q")
    with pytest.raises(ValueError):
        PumpSettings(scatter_rate=0.0)


def test_rate_equations_conserve(thermal):
    rep = run_pumping(thermal, PumpSettings(vib_loss=0.05), SIO_PLUS, n_snapshots=10)
    for s in rep.states:
        assert s.total() == pytest.approx(1.0, abs=1e-10)
    assert np.all(np.diff(rep.lost) >= -1e-14)


def test_pumping_compresses(thermal):
    rep = run_pumping(thermal, PumpSettings(), SIO_PLUS, n_snapshots=10)
    assert rep.final_state.mean_J() < 2.0
    assert fraction_below(rep.final_state, 10) > 0.999


def test_reversed_filter_heats(thermal):
    rep = run_pumping(thermal, PumpSettings(pass_branch="R"), SIO_PLUS, n_snapshots=5)
    assert rep.final_state.mean_J() > thermal.mean_J()


def test_compression_time_consistent(thermal):
    s = PumpSettings()
    t = compression_time(thermal, s, SIO_PLUS)
    assert t is not None
    rep = run_pumping(thermal, PumpSettings(duration=t), SIO_PLUS, n_snapshots=1)
    assert fraction_below(rep.final_state, 10) == pytest.approx(0.99, abs=1e-8)


def test_compression_impossible_returns_none(thermal):
    assert compression_time(thermal, PumpSettings(pass_branch="R"), SIO_PLUS) is None
    assert compression_time(PopulationState.delta(0, j_max=20), PumpSettings(), SIO_PLUS) == 0.0


def test_monte_carlo_reproducible(thermal):
    a = run_pumping(thermal, PumpSettings(), SIO_PLUS, n_snapshots=5, seed=9, n_traj=300)
    b = run_pumping(thermal, PumpSettings(), SIO_PLUS, n_snapshots=5, seed=9, n_traj=300)
    np.testing.assert_array_equal(a.j_populations(), b.j_populations())


@settings(max_examples=10, deadline=None)
@given(st.floats(0, 0.3), st.sampled_from(["P", "R"]))
def test_monte_carlo_conserves(vib_loss, branch):
    p0 = boltzmann_distribution(300.0, 60, SIO_PLUS, truncation_tol=1e-5)
    rep = run_pumping(p0, PumpSettings(vib_loss=vib_loss, pass_branch=branch), SIO_PLUS, n_snapshots=3, seed=1, n_traj=200)
    for s in rep.states:
        assert s.total() == pytest.approx(1.0, abs=1e-12)
