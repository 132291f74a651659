"""Broadband pumping from a thermal SiO+ distribution.

Prints the time for the population below a cutoff to reach a given share, as a
function of the per-line scattering rate, for both filter orientations.
"""

import argparse

from combqlogic.molecule import SIO_PLUS, boltzmann_distribution
from combqlogic.pumping import PumpSettings, compression_time, run_pumping


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--temperature", type=float, default=300.0)
    ap.add_argument("--rates", type=float, nargs="+", default=[3e4, 1e5, 3e5])
    ap.add_argument("--cut", type=int, default=10)
    ap.add_argument("--fraction", type=float, default=0.99)
    args = ap.parse_args()
    p0 = boltzmann_distribution(args.temperature, 120, SIO_PLUS)
    print(f"initial mean J = {p0.mean_J():.2f}")
    for rate in args.rates:
        t = compression_time(p0, PumpSettings(scatter_rate=rate), SIO_PLUS, args.cut, args.fraction)
        end = run_pumping(p0, PumpSettings(scatter_rate=rate), SIO_PLUS, n_snapshots=1).final_state
        hot = run_pumping(p0, PumpSettings(scatter_rate=rate, pass_branch="R"), SIO_PLUS, n_snapshots=1).final_state
        shown = f"{t * 1e3:.4f} ms" if t is not None else "never"
        print(
            f"rate {rate:8.0f}/s: t = {shown}, mean J after 1 ms = {end.mean_J():.3f}"
            f" (reversed filter {hot.mean_J():.2f})"
        )


if __name__ == "__main__":
    main()
