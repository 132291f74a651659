"""Command-line entry point: ``combqlogic <subcommand> [options]``.

Exit codes: 0 success, 1 configuration error, 2 physics or runtime
precondition violation. ``--error-json`` also prints the error as JSON on
stdout.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from . import rng as rngmod
from .comb import comb_rabi, match_multi
from .config import ConfigError, RunConfig, load_config, parse_quantity
from .cooling import ladder_schedule, run_monte_carlo, run_rate_equations, sweep_schedule
from .molecule import boltzmann_distribution, cumulative_fraction, raman_splitting
from .population import PopulationState
from .pumping import compression_time, fraction_below, run_pumping
from .spectro import extract_comb_index, offset_grid, rabi_fwhm, simulate_scan
from .tables import dumps, write_csv, write_json
from .trapdyn import click_probability, lamb_dicke, pi_time, quantum_logic_detect


def _freq(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return parse_quantity(text, "frequency")


def _time(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return parse_quantity(text, "time")


def _ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


# ----------------------------------------------------------------------------


def cmd_boltzmann(cfg: RunConfig, args, out: Path) -> dict:
    p = boltzmann_distribution(cfg.temperature, cfg.j_max, cfg.molecule)
    pj = p.j_distribution()
    cum = np.cumsum(pj)
    write_csv(out / "boltzmann.csv", ["J", "population", "cumulative"], zip(range(pj.size), pj, cum))
    return {
        "temperature": cfg.temperature,
        "j_max": cfg.j_max,
        "modal_J": int(np.argmax(pj)),
        "cumulative_J35": cumulative_fraction(p, 35),
    }


def cmd_match(cfg: RunConfig, args, out: Path) -> dict:
    if args.splittings:
        splittings = [_freq(s) for s in args.splittings]
    else:
        splittings = [raman_splitting(J, cfg.molecule) for J in _ints(args.lines)]
    lo = _freq(args.f_rep_min) if args.f_rep_min else cfg.comb.f_rep - 1e6
    hi = _freq(args.f_rep_max) if args.f_rep_max else cfg.comb.f_rep + 1e6
    sols = match_multi(splittings, (lo, hi), tol=_freq(args.tol), step=_freq(args.step))
    header = ["f_rep", "nu_AO"]
    for i in range(len(splittings)):
        header += [f"M_{i}", f"sign_{i}", f"residual_{i}"]
    rows = []
    for s in sols:
        row = [s.f_rep, s.nu_AO]
        for a in s.assignments:
            row += [a.M, a.sign, a.residual]
        rows.append(row)
    write_csv(out / "match.csv", header, rows)
    return {"splittings": splittings, "solutions": len(sols), "best": rows[0] if rows else None}


def _pump(cfg: RunConfig, seeded: bool):
    p0 = boltzmann_distribution(cfg.temperature, cfg.j_max, cfg.molecule)
    if seeded:
        return p0, run_pumping(p0, cfg.pump, cfg.molecule, seed=cfg.seed, n_traj=cfg.n_traj)
    return p0, run_pumping(p0, cfg.pump, cfg.molecule)


def cmd_pump(cfg: RunConfig, args, out: Path) -> dict:
    mc = cfg.engine == "monte_carlo"
    p0, rep = _pump(cfg, mc)
    pops = rep.j_populations(cfg.j_max)
    header = ["time", "lost"] + [f"J{j}" for j in range(pops.shape[1])]
    write_csv(out / "pump.csv", header, ([t, lo, *row] for t, lo, row in zip(rep.times, rep.lost, pops)))
    below = np.array([fraction_below(s, 10) for s in rep.states])
    hit = np.nonzero(below >= 0.99)[0]
    summary = {
        "engine": cfg.engine,
        "duration": cfg.pump.duration,
        "final_states_populated": rep.final_state.populated_levels(1e-3),
        "final_fraction_below_J10": below[-1],
        "time_to_fewer_than_10_states": float(rep.times[hit[0]]) if hit.size else None,
        "lost": rep.lost[-1],
    }
    if not mc:
        summary["time_to_fewer_than_10_states_exact"] = compression_time(p0, cfg.pump, cfg.molecule)
    else:
        summary["n_traj"] = cfg.n_traj
    write_json(out / "pump.json", summary)
    return summary


def initial_cooling_state(cfg: RunConfig) -> PopulationState:
    opt = cfg.cooling
    if opt.initial == "uniform":
        return PopulationState.from_j_distribution(np.full(opt.j_top + 1, 1.0 / (opt.j_top + 1)))
    if opt.initial == "thermal":
        return boltzmann_distribution(cfg.temperature, cfg.j_max, cfg.molecule)
    _, rep = _pump(cfg, False)
    final = rep.final_state
    return PopulationState(final.probs / final.total(), final.lost / final.total())


def cooling_schedule(cfg: RunConfig, physics):
    opt = cfg.cooling
    if opt.structure == "ladder":
        return ladder_schedule(physics, opt.j_top, opt.cycles_per_level)
    return sweep_schedule(physics, opt.j_top, opt.rounds)


def cmd_cool(cfg: RunConfig, args, out: Path) -> dict:
    physics = cfg.physics()
    p0 = initial_cooling_state(cfg)
    schedule = cooling_schedule(cfg, physics)
    if cfg.engine == "monte_carlo":
        rep = run_monte_carlo(p0, schedule, physics, cfg.n_traj, cfg.seed)
    else:
        rep = run_rate_equations(p0, schedule, physics)
    j_cols = min(max(s.j_max for s in rep.states), cfg.cooling.j_top + 2)
    pops = rep.j_populations(j_cols)
    gf, lost = rep.ground_fraction, rep.lost
    header = ["time", "ground_fraction", "lost"] + [f"J{j}" for j in range(j_cols + 1)]
    write_csv(out / "cool.csv", header, ([t, g, lo, *row] for t, g, lo, row in zip(rep.times, gf, lost, pops)))
    scatter = sum(e.detail.get("count", e.detail.get("mass", 0.0)) for e in rep.events if e.kind == "scatter")
    summary = {
        "engine": cfg.engine,
        "time_to_90pct_ground": rep.time_to(0.9),
        "time_to_target": rep.time_to(cfg.cooling.target),
        "target": cfg.cooling.target,
        "cycles_per_step": {str(k): v for k, v in sorted(rep.cycles_per_step.items())},
        "mean_cycles_per_step": rep.mean_cycles_per_step,
        "assumed_cycles_per_step": cfg.cooling.cycles_per_level if cfg.cooling.structure == "ladder" else None,
        "scattering_events": scatter,
        "ground_fraction_final": rep.ground_fraction_final,
        "lost_final": lost[-1],
        "wall_time_simulated": rep.wall_time_simulated,
        "pi_time_J2": physics.pi_time(2),
        "spont_rate": physics.R_s,
    }
    if rep.n_traj:
        summary["n_traj"] = rep.n_traj
        summary["ground_fraction_final_stderr"] = rep.ground_fraction_err[-1]
    write_json(out / "cool.json", summary)
    return summary


def cmd_scan(cfg: RunConfig, args, out: Path) -> dict:
    physics = cfg.physics()
    lines = _ints(args.lines)
    # blue-sideband beat notes that leave one phonon behind
    f_t = cfg.trap.omega_t / (2 * math.pi)
    splittings = [raman_splitting(J, cfg.molecule) - f_t for J in lines]
    f_reps = [_freq(f) for f in args.f_rep] if args.f_rep else [cfg.comb.f_rep, cfg.comb.f_rep + 1e3]
    eta = lamb_dicke(cfg.trap)
    omega_s = eta * comb_rabi(physics.carrier, splittings[0], cfg.comb.tau)
    probe = _time(args.probe_time) if args.probe_time else pi_time(omega_s)
    step = _freq(args.step)
    rows, scans = [], []
    for f in f_reps:
        settings = replace(cfg.comb, f_rep=f, nu_AO=0.0)
        scan = simulate_scan(splittings, settings, cfg.trap, probe, offset_grid(f, step), omega0=physics.carrier)
        scans.append(scan)
        rows.extend((f, nu, s) for nu, s in zip(scan.nu_AO, scan.signal))
    write_csv(out / "scan.csv", ["f_rep", "nu_AO", "signal"], rows)
    summary = {"lines": lines, "f_rep": f_reps, "probe_time": probe, "fwhm": rabi_fwhm(omega_s, probe)}
    if len(scans) >= 2:
        idx = extract_comb_index(scans, threshold=args.threshold)
        summary.update(
            {"M": idx.M, "sign": idx.sign, "delta_omega": idx.delta_omega, "rotational_splitting": idx.delta_omega + f_t, "slope": idx.slope}
        )
    write_json(out / "scan.json", summary)
    return summary


def cmd_detect(cfg: RunConfig, args, out: Path) -> dict:
    prior = initial_cooling_state(cfg)
    targets = [(J, m) for J in _ints(args.target_J) for m in range(-J, J + 1)]
    gen = rngmod.stream(cfg.seed, "detect")
    clicks = sum(quantum_logic_detect(prior, targets, cfg.trap, gen).outcome for _ in range(args.shots))
    F = cfg.trap.readout_fidelity
    ci = binomtest(clicks, args.shots).proportion_ci(0.95)

    def invert(rate):
        return rate if F == 0.5 else float(np.clip((rate - (1 - F)) / (2 * F - 1), 0.0, 1.0))

    summary = {
        "shots": args.shots,
        "clicks": clicks,
        "click_fraction": clicks / args.shots,
        "expected_click_probability": click_probability(prior, targets, cfg.trap),
        "true_population": prior.mass(targets),
        "inferred_population": invert(clicks / args.shots),
        "ci95": [invert(ci.low), invert(ci.high)],
        "readout_fidelity": F,
    }
    write_json(out / "detect.json", summary)
    return summary


COMMANDS = {
    "boltzmann": cmd_boltzmann,
    "match": cmd_match,
    "pump": cmd_pump,
    "cool": cmd_cool,
    "scan": cmd_scan,
    "detect": cmd_detect,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="sectioned key = value file")
    common.add_argument("--profile", default="sio+", help="parameter profile the config overrides")
    common.add_argument("--seed", type=int)
    common.add_argument("--engine", choices=["rate", "monte_carlo"])
    common.add_argument("--n-traj", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--error-json", action="store_true", help="print errors as JSON on stdout")

    parser = argparse.ArgumentParser(prog="combqlogic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("boltzmann", parents=[common], help="thermal J distribution")
    p = sub.add_parser("match", parents=[common], help="comb settings driving several splittings")
    p.add_argument("--lines", default="3,5", help="lower J of each J -> J+2 splitting")
    p.add_argument("--splittings", nargs="+", help="explicit splittings, e.g. '387.2 GHz'")
    p.add_argument("--f-rep-min")
    p.add_argument("--f-rep-max")
    p.add_argument("--step", default="100 Hz")
    p.add_argument("--tol", default="10 kHz")
    sub.add_parser("pump", parents=[common], help="broadband optical pumping")
    sub.add_parser("cool", parents=[common], help="quantum-logic rotational cooling")
    p = sub.add_parser("scan", parents=[common], help="nu_AO scans and comb index")
    p.add_argument("--lines", default="0", help="lower J of the scanned lines")
    p.add_argument("--f-rep", nargs="+", help="repetition rates to scan")
    p.add_argument("--step", default="1 kHz")
    p.add_argument("--probe-time")
    p.add_argument("--threshold", type=float, default=0.5)
    p = sub.add_parser("detect", parents=[common], help="repeated quantum-logic detection")
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--target-J", default="0")
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.engine is not None:
        kw["engine"] = args.engine
    if args.n_traj is not None:
        kw["n_traj"] = args.n_traj
    if args.out is not None:
        kw["output_dir"] = args.out
    try:
        return replace(cfg, **kw)
    except ValueError as err:
        raise ConfigError(str(err)) from None


def _fail(args, code: int, kind: str, err: Exception) -> int:
    print(f"combqlogic: {kind}: {err}", file=sys.stderr)
    if getattr(args, "error_json", False):
        print(dumps({"error": {"kind": kind, "message": str(err), "exit_code": code}}))
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config, args.profile), args)
    except ConfigError as err:
        return _fail(args, 1, "config", err)
    try:
        summary = COMMANDS[args.command](cfg, args, Path(cfg.output_dir))
    except ConfigError as err:
        return _fail(args, 1, "config", err)
    except (ValueError, ArithmeticError) as err:
        return _fail(args, 2, "physics", err)
    print(dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
