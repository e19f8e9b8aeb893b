"""Gradient variance when both halves of the circuit are Haar random.

Compares the sampled value of Var[(i/2) <psi|[O_+, P]|psi>] for O = Z^n with
the closed form 1/(2(2^n + 1)) and with the layered-circuit Monte Carlo. This
is the reference for how the variance of deep circuits should fall with n.
"""

import argparse

import numpy as np

from barren_lab.circuit import EnsembleSpec, observable_matrix
from barren_lab.matkernel import Y, embed
from barren_lab.stats import estimate, predict_weingarten


def haar_unitary(rng, dim):
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def haar_gradient_variance(n, draws, rng):
    dim = 1 << n
    o = observable_matrix("Z" * n)
    p = embed(Y, [0], n)
    vals = np.empty(draws)
    for i in range(draws):
        psi = haar_unitary(rng, dim)[:, 0]
        v = haar_unitary(rng, dim)
        op = v.conj().T @ o @ v
        vals[i] = (0.5j * np.vdot(psi, (op @ p - p @ op) @ psi)).real
    return vals.var()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[2, 3, 4, 5])
    ap.add_argument("--draws", type=int, default=20000)
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'n':>2} {'haar_mc':>10} {'1/(2(D+1))':>11} {'circuit_mc':>11} {'eq6_trO2=2^n':>13} {'eq6_trO2=1':>11}")
    for n in args.n:
        haar = haar_gradient_variance(n, args.draws, rng)
        circ = estimate(EnsembleSpec(n, 15 * n, "Z^n", samples=args.samples, master_seed=args.seed)).variance
        print(f"{n:>2} {haar:10.4g} {1 / (2 * (2**n + 1)):11.4g} {circ:11.4g} "
              f"{predict_weingarten(n, 2.0**n).value:13.4g} {predict_weingarten(n, 1.0).value:11.4g}")


if __name__ == "__main__":
    main()
