"""Frequency-comb quantum-logic control of a trapped molecular ion, simulated."""

from .comb import (
    CombAssignment,
    CombSettings,
    PolarizationConfig,
    carrier_rabi,
    comb_rabi,
    is_resonant,
    match_multi,
    pulse_overlap_budget,
    resonance_offset,
)
from .cooling import (
    CoolingPhysics,
    CoolingReport,
    CoolingSchedule,
    Pulse,
    apply_pulse,
    coupling_coverage,
    ground_fraction,
    ladder_schedule,
    run_monte_carlo,
    run_rate_equations,
    scatter_redistribute,
    spont_rate,
    sweep_schedule,
)
from .molecule import (
    SIO_PLUS,
    MolecularConstants,
    RotLevel,
    boltzmann_distribution,
    cumulative_fraction,
    raman_splitting,
    rot_energy,
)
from .population import PopulationState
from .pumping import PumpSettings, branch_wavelengths, excitation_rate, run_pumping
from .spectro import ScanResult, extract_comb_index, find_peaks, simulate_scan
from .trapdyn import (
    MotionalState,
    TrapSettings,
    lamb_dicke,
    pi_time,
    quantum_logic_detect,
    sideband_cool,
    sideband_flop_probability,
    sideband_rabi,
)

__version__ = "0.1.0"
