"""Numbered acceptance criteria. Each test prints one PASS/FAIL line.

Run standalone with ``python tests/test_acceptance.py`` or through pytest,
where the lines are repeated in the terminal summary.
"""

import statistics
import time
from fractions import Fraction

import numpy as np
import pytest

from barren_lab import cli
from barren_lab import moments as mo
from barren_lab.circuit import EnsembleSpec, Observable, brick_example_circuit, sample_circuit
from barren_lab.lightcone import analyze, validate_against_gradient
from barren_lab.simulator import gradient_commutator, gradient_fd, gradient_shift
from barren_lab.stats import estimate, expectation_scaling_report
from barren_lab.verify import random_hermitian, random_matrix

pytestmark = pytest.mark.acceptance

RESULTS: dict[int, str] = {}


def record(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[k] = line
    print(line, flush=True)
    assert ok, line


def test_criterion_01_first_moment_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for i in range(500):
        n = 1 + i % 3
        j = int(rng.integers(n))
        a = random_hermitian(rng, 1 << n)
        diff = mo.first_moment_single(a, j, n) - mo.first_moment_single_quadrature(a, j, n)
        worst = max(worst, float(np.max(np.abs(diff))))
    dt = time.perf_counter() - t0
    record(1, worst <= 1e-12 and dt < 10, f"max error {worst:.2e} (<= 1e-12), {dt:.1f}s (< 10s)")


def test_criterion_02_unital_trace_preserving():
    rng = np.random.default_rng(2)
    worst_i = worst_t = 0.0
    for n in range(1, 5):
        eye = np.eye(1 << n)
        a = random_matrix(rng, 1 << n)
        for d in range(1, 11):
            worst_i = max(worst_i, float(np.max(np.abs(mo.first_moment_depth_exact(eye, n, d) - eye))))
            worst_t = max(worst_t, abs(np.trace(mo.first_moment_depth_exact(a, n, d)) - np.trace(a)))
    ok = worst_i <= 1e-12 and worst_t <= 1e-12
    record(2, ok, f"|map(I)-I| {worst_i:.2e}, |trace change| {worst_t:.2e} (<= 1e-12)")


def test_criterion_03_depth_formula_regime():
    rng = np.random.default_rng(3)
    worst = 0.0
    for n in range(1, 5):
        a = random_matrix(rng, 1 << n)
        for d in (1, 2):
            diff = mo.first_moment_depth_paper(a, n, d) - mo.first_moment_depth_exact(a, n, d)
            worst = max(worst, float(np.max(np.abs(diff))))
    printed = mo.closed_form_expansion(1, 3).coefficient((0,))
    exact = mo.exact_expansion(1, 3).coefficient((0,))
    pinned = printed == Fraction(16, 27) and exact == Fraction(13, 27)
    record(3, worst <= 1e-12 and pinned,
           f"d<=2 max error {worst:.2e}; n=1 d=3 coefficient printed {printed} vs exact {exact}")


def test_criterion_04_second_moment():
    rng = np.random.default_rng(4)
    worst_tr = 0.0
    for _ in range(100):
        a, b, c = (random_hermitian(rng, 2) for _ in range(3))
        worst_tr = max(worst_tr, abs(np.trace(mo.second_moment_decomposition(a, b, c, 0, 1).epsilon_part)))
    worst_bf = 0.0
    for _ in range(5):
        a, b, c = (random_hermitian(rng, 2) for _ in range(3))
        diff = mo.brute_force_moment(1, 1, a, b, c) - mo.second_moment_single(a, b, c, 0, 1)
        worst_bf = max(worst_bf, float(np.max(np.abs(diff))))
    record(4, worst_tr <= 1e-10 and worst_bf <= 1e-12,
           f"max |Tr eps| {worst_tr:.2e} (<= 1e-10), grid vs single {worst_bf:.2e} (<= 1e-12)")


def test_criterion_05_gradient_routes():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    patterns = ("brick", "ring", "ladder", "none")
    worst_c = worst_fd = 0.0
    for i in range(50):
        n, d = int(rng.integers(1, 6)), int(rng.integers(1, 7))
        spec = EnsembleSpec(n, d, entangler_pattern=patterns[i % 4], samples=1,
                            master_seed=int(rng.integers(2**32)))
        c = sample_circuit(spec, 0)
        o = Observable("".join(rng.choice(list("XYZ"), size=n)))
        shift = gradient_shift(c, o)
        worst_c = max(worst_c, float(np.max(np.abs(shift - gradient_commutator(c, o)))))
        worst_fd = max(worst_fd, float(np.max(np.abs(shift - gradient_fd(c, o, h=1e-5)))))
    dt = time.perf_counter() - t0
    ok = worst_c <= 1e-10 and worst_fd <= 1e-6 and dt < 30
    record(5, ok, f"shift vs commutator {worst_c:.2e} (<= 1e-10), shift vs FD {worst_fd:.2e} "
                  f"(<= 1e-6), {dt:.1f}s (< 30s)")


def test_criterion_06_light_cone_example():
    c = brick_example_circuit(axes="XYZXYZXYZXYZ")
    rep = analyze(c, "ZIII")
    sound = validate_against_gradient(c, "ZIII", trials=20)
    ok = rep.m == 6 and rep.gray_slots() == [4, 7, 8, 10, 11, 12] and sound.ok
    record(6, ok, f"m={rep.m}, gray={rep.gray_slots()}, violations={len(sound.violations)}")


def test_criterion_07_variance_scaling_in_n():
    t0 = time.perf_counter()
    var = {}
    for n in (2, 4):
        var[n] = estimate(EnsembleSpec(n, 15 * n, "Z^n", "brick", samples=2000, master_seed=0)).variance
    ratio = var[2] / var[4]
    dt = time.perf_counter() - t0
    ok = 32 <= ratio <= 128 and dt < 180
    record(7, ok, f"Var(2)={var[2]:.4g}, Var(4)={var[4]:.4g}, ratio {ratio:.3g} "
                  f"(target [32, 128]), {dt:.1f}s (< 180s)")


def test_criterion_08_depth_saturation_and_m_law():
    t0 = time.perf_counter()
    v60 = estimate(EnsembleSpec(4, 60, "Z^n", samples=2000, master_seed=0))
    v120 = estimate(EnsembleSpec(4, 120, "Z^n", samples=2000, master_seed=0))
    half = estimate(EnsembleSpec(4, 60, "Z^n", replacement_mode="identity", replacement_fraction=0.5,
                                 samples=2000, master_seed=0))
    sat = abs(v120.variance - v60.variance) / v60.variance
    var_ratio = half.variance / v60.variance
    m_ratio = half.m_mean / v60.m_mean
    law = abs(var_ratio / m_ratio - 1)
    dt = time.perf_counter() - t0
    ok = sat < 0.25 and law <= 0.30 and dt < 300
    record(8, ok, f"d=60 vs 120 differ {sat:.1%} (< 25%); Var ratio {var_ratio:.3f} vs m ratio "
                  f"{m_ratio:.3f}, off by {law:.1%} (<= 30%), {dt:.1f}s (< 300s)")


def test_criterion_09_nonzero_expectation():
    medians = []
    nonzero = True
    for n in (2, 3, 4):
        vals = []
        for seed in range(10):
            row = expectation_scaling_report([n], samples=2000, seed=seed)[0]
            nonzero &= row.nonzero
            vals.append(abs(row.mean))
        medians.append(statistics.median(vals))
    monotone = medians[0] > medians[1] > medians[2]
    record(9, nonzero and monotone,
           "median |mean| " + ", ".join(f"n={n}: {m:.3g}" for n, m in zip((2, 3, 4), medians))
           + f"; all nonzero={nonzero}")


def test_criterion_10_determinism(tmp_path):
    first = tmp_path / "first.csv"
    args = ["sweep", "--experiment", "replacement_sweep", "--n", "2", "3", "--d", "4", "8",
            "--replacement-mode", "identity", "--fractions", "0", "0.25", "--samples", "60",
            "--seed", "17", "--sequential", "--workers", "2", "-q", "--out"]
    assert cli.main(args + [str(first)]) == 0
    again = tmp_path / "again.csv"
    assert cli.main(["sweep", "--config", str(cli.manifest_path(first)), "--out", str(again), "-q"]) == 0
    serial = tmp_path / "serial.csv"
    assert cli.main(["sweep", "--config", str(cli.manifest_path(first)), "--workers", "1",
                     "--out", str(serial), "-q"]) == 0
    same = first.read_bytes() == again.read_bytes() == serial.read_bytes()
    record(10, same, f"manifest re-run byte-identical={same} ({len(first.read_bytes())} bytes)")


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as tmp:
                        fn(Path(tmp))
                else:
                    fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
