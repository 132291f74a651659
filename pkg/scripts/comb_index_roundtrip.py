"""Recover comb index, branch and splitting from simulated offset scans.

Each trial draws a line, scans the AO offset at three repetition rates and
checks the extracted (M, sign, splitting) against the truth.
"""

import argparse
import math

import numpy as np

from combqlogic.comb import CombSettings, suppression_factor
from combqlogic.spectro import extract_comb_index, offset_grid, rabi_fwhm, simulate_scan
from combqlogic.trapdyn import TrapSettings


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--df", type=float, default=500.0, help="rep-rate step between scans, Hz")
    ap.add_argument("--step", type=float, default=1e3, help="offset grid step, Hz")
    ap.add_argument("--noise", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    trap = TrapSettings(eta_override=0.1)
    omega0 = 2 * math.pi * 0.2e6
    ok = 0
    for i in range(args.trials):
        f0 = rng.uniform(75e6, 85e6)
        M = int(rng.integers(600, 6000))
        sign = int(rng.choice([-1, 1]))
        nu = rng.uniform(10e6, f0 / 2 - 10e6) + rng.choice([0, 1]) * f0 / 2
        delta = M * f0 + sign * nu
        om_s = 0.1 * omega0 * suppression_factor(2 * math.pi * delta * CombSettings().tau)
        probe = math.pi / om_s
        scans = [
            simulate_scan([delta], CombSettings(f_rep=f), trap, probe, offset_grid(f, args.step),
                          omega0=omega0, noise=args.noise, rng=rng)
            for f in (f0, f0 + args.df, f0 + 2 * args.df)
        ]
        try:
            ci = extract_comb_index(scans, line=nu)
        except ValueError as err:
            print(f"{i:3d}: failed ({err})")
            continue
        err = ci.delta_omega - delta
        good = ci.M == M and ci.sign == sign and abs(err) <= rabi_fwhm(om_s, probe) / 10
        ok += good
        print(f"{i:3d}: M {ci.M:5d}/{M:5d} sign {ci.sign:+d}/{sign:+d} error {err:+9.2f} Hz {'ok' if good else 'WRONG'}")
    print(f"{ok}/{args.trials} recovered")


if __name__ == "__main__":
    main()
