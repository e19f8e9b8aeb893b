"""Regenerate tests/golden/brute_force_*.json from the grid-enumeration oracle.

Run once; the tests pin these values. Matrices are stored as nested
[real, imag] pairs.
"""

import json
from pathlib import Path

import numpy as np

from barren_lab.matkernel import Z, kron
from barren_lab.moments import brute_force_moment
from barren_lab.verify import random_hermitian

OUT = Path(__file__).resolve().parents[1] / "tests" / "golden"


def encode(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def write(name: str, n: int, d: int, a, b, c) -> None:
    value = brute_force_moment(n, d, a, b, c)
    doc = {"n": n, "d": d, "a": encode(a), "b": encode(b), "c": encode(c), "value": encode(value)}
    (OUT / name).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {name}")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    zz = kron(Z, Z)
    write("brute_force_n2_d1_zz.json", 2, 1, zz, np.eye(4, dtype=complex), zz)
    rng = np.random.default_rng(1234)
    a, b, c = (random_hermitian(rng, 4) for _ in range(3))
    write("brute_force_n2_d2_random.json", 2, 2, a, b, c)


if __name__ == "__main__":
    main()
