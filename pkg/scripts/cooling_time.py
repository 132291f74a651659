"""Time to reach a ground-state fraction under the SiO+ cooling profile.

Sweeps the number of cycles per level and reports the rate-equation cooling
time next to a Monte Carlo estimate and the measured cycles per step.
"""

import argparse
import dataclasses

from combqlogic.cli import cooling_schedule, initial_cooling_state
from combqlogic.config import load_config
from combqlogic.cooling import run_monte_carlo, run_rate_equations


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="optional config overriding the sio+ profile")
    ap.add_argument("--target", type=float, default=0.9)
    ap.add_argument("--cycles", type=int, nargs="+", default=[2, 5, 10, 20])
    ap.add_argument("--n-traj", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    base = load_config(args.config)
    physics = base.physics()
    print(f"R_s = {physics.R_s:.4f} /s, pi time J=2->0 = {physics.pi_time(2) * 1e6:.2f} us")
    print(f"{'cycles':>6} {'t_rate/ms':>10} {'t_mc/ms':>10} {'cycles/step':>12} {'final':>8}")
    for c in args.cycles:
        cfg = dataclasses.replace(base, cooling=dataclasses.replace(base.cooling, cycles_per_level=c))
        p0 = initial_cooling_state(cfg)
        sched = cooling_schedule(cfg, physics)
        rate = run_rate_equations(p0, sched, physics)
        mc = run_monte_carlo(p0, sched, physics, args.n_traj, args.seed)
        t_r, t_m = rate.time_to(args.target), mc.time_to(args.target)
        fmt = lambda t: f"{t * 1e3:10.3f}" if t is not None else f"{'never':>10}"
        print(f"{c:6d} {fmt(t_r)} {fmt(t_m)} {rate.mean_cycles_per_step:12.2f} {rate.ground_fraction_final:8.4f}")


if __name__ == "__main__":
    main()
