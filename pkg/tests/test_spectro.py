import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from combqlogic.comb import CombSettings, resonance_offset
from combqlogic.spectro import (
    ScanResult,
    extract_comb_index,
    find_peaks,
    offset_grid,
    rabi_fwhm,
    scan_signal,
    simulate_scan,
)
from combqlogic.trapdyn import TrapSettings, sideband_flop_probability

OMEGA_S = 2 * math.pi * 0.02e6
PROBE = 25e-6


def _scan(d, f, step=1e3, **kw):
    return simulate_scan([d], CombSettings(f_rep=f), TrapSettings(eta_override=0.1), PROBE,
                         offset_grid(f, step), omega0=OMEGA_S / 0.1, **kw)


def test_offset_grid_tiles_period():
    g = offset_grid(80e6, 1e3)
    assert g.size == 80000 and g[0] == 0.0 and g[-1] < 80e6
    assert ScanResult(80e6, g, np.zeros_like(g), PROBE).periodic


def test_scan_result_validation():
    with pytest.raises(ValueError):
        ScanResult(1.0, np.array([0.5, 0.2]), np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        ScanResult(1.0, np.array([0.5, 1.5]), np.zeros(2), 1.0)


def test_rabi_fwhm_pi_pulse():
    w = rabi_fwhm(OMEGA_S, PROBE)
    assert sideband_flop_probability(OMEGA_S, PROBE, w / 2) == pytest.approx(0.5, rel=1e-8)
    # detuned Rabi line of a pi pulse: FWHM ~ 0.7987 / t
    assert w == pytest.approx(0.7987 / PROBE, rel=2e-3)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e11, 6e11), st.floats(70e6, 90e6), st.floats(-3e7, 3e7))
def test_scan_periodic_in_offset(d, f, nu):
    a = scan_signal([d], f, np.array([nu]), OMEGA_S, PROBE)
    b = scan_signal([d], f, np.array([nu + f]), OMEGA_S, PROBE)
    assert a[0] == pytest.approx(b[0], abs=1e-6)


def test_peaks_at_both_branch_offsets():
    d = 387.205e9
    f = 80e6
    plus, minus = resonance_offset(d, f)
    peaks = find_peaks(_scan(d, f), 0.5)
    assert len(peaks) == 2
    assert min(abs(p - plus.nu_AO) for p in peaks) < 50.0
    assert min(abs(p - minus.nu_AO) for p in peaks) < 50.0


def test_peak_across_wrap():
    f = 80e6
    # both branches of this line straddle nu = 0 and merge into one peak there
    d = 1000 * f + 200.0
    peaks = find_peaks(_scan(d, f), 0.5)
    assert len(peaks) == 1
    assert min(peaks[0], f - peaks[0]) < 50.0


def test_non_periodic_edge_peak_dropped():
    f = 80e6
    d = 1000 * f + 10e6
    g = np.arange(9.99e6, 10.05e6, 1e3)
    s = ScanResult(f, g, scan_signal([d], f, g, OMEGA_S, PROBE), PROBE)
    assert not s.periodic
    assert find_peaks(s, 0.5) == []
    g = np.arange(9.9e6, 10.1e6, 1e3)
    s = ScanResult(f, g, scan_signal([d], f, g, OMEGA_S, PROBE), PROBE)
    assert find_peaks(s, 0.5) == [pytest.approx(10e6, abs=1.0)]


def test_extract_comb_index_known_case():
    d, f = 387.205e9, 80e6
    plus, _ = resonance_offset(d, f)
    scans = [_scan(d, f + k * 1e3) for k in range(3)]
    ci = extract_comb_index(scans, line=plus.nu_AO)
    assert (ci.M, ci.sign) == (plus.M, 1)
    assert ci.delta_omega == pytest.approx(d, abs=100.0)
    assert ci.slope == pytest.approx(-plus.M, abs=0.05)


def test_extract_comb_index_minus_branch():
    d, f = 387.205e9, 80e6
    _, minus = resonance_offset(d, f)
    scans = [_scan(d, f + k * 1e3) for k in range(3)]
    ci = extract_comb_index(scans, line=minus.nu_AO)
    assert (ci.M, ci.sign) == (minus.M, -1)
    assert ci.delta_omega == pytest.approx(d, abs=100.0)


def test_extract_with_noise(rng):
    d, f = 301.152e9, 80e6
    plus, _ = resonance_offset(d, f)
    scans = [_scan(d, f + k * 1e3, noise=0.03, rng=rng) for k in range(3)]
    ci = extract_comb_index(scans, threshold=0.6, line=plus.nu_AO)
    assert (ci.M, ci.sign) == (plus.M, 1)


def test_extract_requires_distinct_rates():
    s = _scan(387.205e9, 80e6)
    with pytest.raises(ValueError):
        extract_comb_index([s])
    with pytest.raises(ValueError):
        extract_comb_index([s, s])


def test_noise_needs_rng():
    with pytest.raises(ValueError):
        _scan(387.205e9, 80e6, noise=0.1)
