"""Thermal rotational distribution of SiO+ and the share below a cutoff."""

import argparse

from combqlogic.molecule import SIO_PLUS, boltzmann_distribution, cumulative_fraction, modal_J


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--temperature", type=float, default=300.0, help="K")
    ap.add_argument("--j-max", type=int, default=200)
    ap.add_argument("--cut", type=int, default=35)
    args = ap.parse_args()
    p = boltzmann_distribution(args.temperature, args.j_max, SIO_PLUS)
    pj = p.j_distribution()
    print(f"T = {args.temperature} K, j_max = {args.j_max}")
    print(f"P(J <= {args.cut}) = {cumulative_fraction(p, args.cut):.6f}")
    print(f"most populated J = {int(pj.argmax())} (rigid-rotor estimate {modal_J(args.temperature, SIO_PLUS)})")
    print(f"mean J = {p.mean_J():.3f}")


if __name__ == "__main__":
    main()
