"""Effective-parameter counts m and m/(nd) per observable and entangler pattern.

Prints the structural count for the n=12 observables at a given depth. For
Z^6 I^6 the reference value is nd - 21.
"""

import argparse

from barren_lab.circuit import EnsembleSpec, parse_observable, sample_circuit
from barren_lab.lightcone import analyze

OBSERVABLES = ["Z^n", "(ZI)^6", "(IZ)^6", "Z^6I^6", "I^6Z^6"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--d", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    nd = args.n * args.d
    print(f"{'pattern':<7} {'observable':<12} {'m':>6} {'nd-m':>6} {'m/nd':>7}")
    for pattern in ("brick", "ladder", "ring"):
        spec = EnsembleSpec(args.n, args.d, entangler_pattern=pattern, samples=1, master_seed=args.seed)
        c = sample_circuit(spec, 0)
        for text in OBSERVABLES:
            o = parse_observable(text, args.n)
            rep = analyze(c, o)
            print(f"{pattern:<7} {o.pauli_string:<12} {rep.m:>6} {nd - rep.m:>6} {rep.ratio:>7.4f}")


if __name__ == "__main__":
    main()
