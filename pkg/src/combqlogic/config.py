"""Run configuration: a sectioned key = value text format with unit-suffixed numbers.

Grammar, one statement per line::

    line     := blank | comment | section | entry
    comment  := '#' anything
    section  := '[' name ']'
    entry    := key '=' value [comment]
    value    := number [unit] | word

Numbers use '.' as the decimal separator and may carry an exponent. A key
that stands for a dimensioned quantity must carry one of the units listed in
``UNITS`` for its dimension; keys documented as "/2pi" quantities take a
frequency and are converted to rad/s. Unknown sections or keys are errors.
Anything not set keeps the value of the selected profile.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from scipy.constants import atomic_mass

from .comb import CombSettings, PolarizationConfig
from .cooling import CoolingPhysics
from .molecule import SIO_PLUS, MolecularConstants
from .pumping import PumpSettings
from .trapdyn import TrapSettings


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


UNITS: dict[str, dict[str, float]] = {
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9, "ps": 1e-12, "fs": 1e-15},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9},
    "intensity": {"W/m2": 1.0, "W/cm2": 1e4, "mW/cm2": 10.0},
    "temperature": {"K": 1.0},
    "mass": {"amu": atomic_mass, "u": atomic_mass, "kg": 1.0},
    "rate": {"1/s": 1.0, "/s": 1.0},
    "wavenumber": {"1/m": 1.0, "1/um": 1e6, "1/nm": 1e9},
    "spectral_density": {"W/m": 1.0, "mW/nm": 1e6, "W/nm": 1e9},
    "number": {"": 1.0},
}

# section -> key -> dimension ("int" and "text" are unitless)
SCHEMA: dict[str, dict[str, str]] = {
    "molecule": {
        "B": "frequency",
        "D": "frequency",
        "d_sign": "int",
        "wavelength": "length",
        "lifetime": "time",
        "gamma": "rate",
        "I_sat": "intensity",
        "B_excited": "frequency",
    },
    "comb": {
        "f_rep": "frequency",
        "nu_AO": "frequency",
        "tau": "time",
        "intensity": "intensity",
        "detuning": "frequency",  # Delta/2pi
        "omega0": "frequency",  # carrier Rabi override, Omega_0/2pi
        "polarizations": "text",  # e.g. "-2,0,2; -1,1"
    },
    "trap": {
        "trap_frequency": "frequency",  # omega_t/2pi
        "mass": "mass",
        "k_eff": "wavenumber",
        "eta": "number",
        "cool_efficiency": "number",
        "readout_fidelity": "number",
        "cool_duration": "time",
    },
    "pump": {
        "spectral_density": "spectral_density",
        "spot_diameter": "length",
        "filter_edge": "length",
        "filter_resolution": "length",
        "scatter_rate": "rate",
        "duration": "time",
        "pass_branch": "text",
        "vib_loss": "number",
    },
    "cooling": {
        "structure": "text",
        "j_top": "int",
        "cycles_per_level": "int",
        "rounds": "int",
        "f_vib": "number",
        "scatter_rate": "rate",
        "initial": "text",
        "target": "number",
    },
    "run": {
        "temperature": "temperature",
        "j_max": "int",
        "seed": "int",
        "engine": "text",
        "n_traj": "int",
        "output_dir": "text",
    },
}

_NUMBER = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(.*)$")


def parse_quantity(text: str, dimension: str) -> float:
    """Convert ``"21.51 GHz"`` style text to SI. Raises ConfigError."""
    match = _NUMBER.match(text.strip())
    if not match:
        raise ConfigError(f"not a number: {text!r}")
    value, unit = float(match.group(1)), match.group(2).strip()
    table = UNITS[dimension]
    if unit not in table:
        if dimension == "number":
            raise ConfigError(f"dimensionless value takes no unit, got {unit!r}")
        if not unit:
            raise ConfigError(f"missing unit; expected one of {', '.join(table)}")
        raise ConfigError(f"unit {unit!r} does not measure {dimension}; expected one of {', '.join(table)}")
    return value * table[unit]


@dataclass(frozen=True)
class CoolingOptions:
    structure: str = "ladder"
    j_top: int = 9
    cycles_per_level: int = 10
    rounds: int = 10
    f_vib: float = 0.5
    scatter_rate: float | None = None
    initial: str = "uniform"
    target: float = 0.9

    def __post_init__(self):
        if self.structure not in ("ladder", "sweep"):
            raise ValueError("structure must be 'ladder' or 'sweep'")
        if self.j_top < 2:
            raise ValueError("j_top must be >= 2")
        if self.cycles_per_level < 1 or self.rounds < 1:
            raise ValueError("cycles_per_level and rounds must be >= 1")
        if self.initial not in ("uniform", "thermal", "pumped"):
            raise ValueError("initial must be 'uniform', 'thermal' or 'pumped'")
        if not 0 < self.target <= 1:
            raise ValueError("target must lie in (0, 1]")


@dataclass(frozen=True)
class RunConfig:
    molecule: MolecularConstants = SIO_PLUS
    comb: CombSettings = field(default_factory=CombSettings)
    trap: TrapSettings = field(default_factory=TrapSettings)
    pump: PumpSettings = field(default_factory=PumpSettings)
    cooling: CoolingOptions = field(default_factory=CoolingOptions)
    omega0: float | None = None
    temperature: float = 300.0
    j_max: int = 200
    seed: int = 20100521
    engine: str = "rate"
    n_traj: int = 10_000
    output_dir: str = "results"

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.j_max < 0:
            raise ValueError("j_max must be non-negative")
        if self.engine not in ("rate", "monte_carlo"):
            raise ValueError("engine must be 'rate' or 'monte_carlo'")
        if self.engine == "monte_carlo" and self.n_traj < 1:
            raise ValueError("n_traj must be >= 1 for the Monte Carlo engine")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def physics(self) -> CoolingPhysics:
        return CoolingPhysics(
            self.molecule,
            self.comb,
            self.trap,
            omega0=self.omega0,
            spont_override=self.cooling.scatter_rate,
            f_vib=self.cooling.f_vib,
        )


def sio_plus_profile() -> RunConfig:
    """SiO+ with a co-trapped Yb+ ion, using the worked numbers of the proposal."""
    return RunConfig(
        molecule=SIO_PLUS,
        comb=CombSettings(f_rep=80e6, nu_AO=0.0, tau=100e-15, I_avg=1e7, Delta=2 * math.pi * 20e12),
        trap=TrapSettings(
            omega_t=2 * math.pi * 10e6,
            mass_eff=44 * atomic_mass,
            k_eff=4 * math.pi / SIO_PLUS.lambda_e,
            eta_override=0.1,
            cool_efficiency=1.0,
            readout_fidelity=1.0,
            cool_duration=100e-6,
        ),
        pump=PumpSettings(),
        cooling=CoolingOptions(),
        omega0=2 * math.pi * 0.2e6,
        temperature=300.0,
    )


PROFILES = {"sio+": sio_plus_profile}


def _read_entries(text: str, source: str) -> dict[str, dict[str, tuple[int, str]]]:
    entries: dict[str, dict[str, tuple[int, str]]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{source}:{lineno}: malformed section header {raw.strip()!r}")
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"{source}:{lineno}: unknown section [{section}]")
            entries.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if section is None:
            raise ConfigError(f"{source}:{lineno}: entry outside any section")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r} in [{section}]")
        if key in entries[section]:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} in [{section}]")
        entries[section][key] = (lineno, value)
    return entries


def _convert(entries, source: str) -> dict[str, dict[str, object]]:
    out: dict[str, dict[str, object]] = {}
    for section, items in entries.items():
        out[section] = {}
        for key, (lineno, value) in items.items():
            dim = SCHEMA[section][key]
            try:
                if dim == "text":
                    parsed: object = value
                elif dim == "int":
                    if not re.fullmatch(r"[+-]?\d+", value):
                        raise ConfigError(f"expected an integer, got {value!r}")
                    parsed = int(value)
                else:
                    parsed = parse_quantity(value, dim)
            except ConfigError as err:
                raise ConfigError(f"{source}:{lineno}: [{section}] {key}: {err}") from None
            out[section][key] = parsed
    return out


def _build(base: RunConfig, values: dict[str, dict[str, object]]) -> RunConfig:
    def section(name, build):
        try:
            return build(values.get(name, {}))
        except ConfigError:
            raise
        except (TypeError, ValueError) as err:
            raise ConfigError(f"[{name}] invalid value: {err}") from None

    def molecule(v):
        kw = {}
        for key, attr in (("B", "B"), ("D", "D"), ("d_sign", "d_sign"), ("wavelength", "lambda_e"), ("I_sat", "I_sat"), ("B_excited", "B_excited")):
            if key in v:
                kw[attr] = v[key]
        if "lifetime" in v and "gamma" in v:
            raise ConfigError("[molecule] give either lifetime or gamma, not both")
        if "lifetime" in v:
            if not v["lifetime"] > 0:
                raise ConfigError("[molecule] lifetime must be positive")
            kw["gamma"] = 1 / v["lifetime"]
        if "gamma" in v:
            kw["gamma"] = v["gamma"]
        return replace(base.molecule, **kw)

    def comb(v):
        kw = {}
        for key, attr in (("f_rep", "f_rep"), ("nu_AO", "nu_AO"), ("tau", "tau"), ("intensity", "I_avg")):
            if key in v:
                kw[attr] = v[key]
        if "detuning" in v:
            kw["Delta"] = 2 * math.pi * v["detuning"]
        if "polarizations" in v:
            try:
                kw["pol_schedule"] = tuple(
                    PolarizationConfig.parse(chunk) for chunk in str(v["polarizations"]).split(";") if chunk.strip()
                )
            except ValueError as err:
                raise ConfigError(f"[comb] polarizations: {err}") from None
        return replace(base.comb, **kw)

    def trap(v):
        kw = {}
        if "trap_frequency" in v:
            kw["omega_t"] = 2 * math.pi * v["trap_frequency"]
        for key, attr in (("mass", "mass_eff"), ("k_eff", "k_eff"), ("eta", "eta_override"), ("cool_efficiency", "cool_efficiency"), ("readout_fidelity", "readout_fidelity"), ("cool_duration", "cool_duration")):
            if key in v:
                kw[attr] = v[key]
        return replace(base.trap, **kw)

    def pump(v):
        return replace(base.pump, **v)

    def cooling(v):
        return replace(base.cooling, **v)

    def run(v):
        return v

    mol = section("molecule", molecule)
    cmb = section("comb", comb)
    trp = section("trap", trap)
    pmp = section("pump", pump)
    col = section("cooling", cooling)
    rn = section("run", run)
    omega0 = base.omega0
    if "omega0" in values.get("comb", {}):
        omega0 = 2 * math.pi * values["comb"]["omega0"]
    try:
        return replace(base, molecule=mol, comb=cmb, trap=trp, pump=pmp, cooling=col, omega0=omega0, **rn)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"[run] invalid value: {err}") from None


def parse_config(text: str, profile: str = "sio+", source: str = "<string>") -> RunConfig:
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; available: {', '.join(PROFILES)}")
    return _build(PROFILES[profile](), _convert(_read_entries(text, source), source))


def load_config(path=None, profile: str = "sio+") -> RunConfig:
    """Read a config file on top of ``profile``; no path gives the profile itself."""
    if path is None:
        return PROFILES[profile]() if profile in PROFILES else parse_config("", profile)
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), profile, str(path))
