"""Formula-by-formula oracle checks, as run by ``barren-lab verify``."""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import moments as mo
from .circuit import EnsembleSpec, brick_example_circuit, entangler_pairs, sample_circuit
from .lightcone import analyze, validate_against_gradient
from .matkernel import CZ, embed, max_abs
from .simulator import gradient_commutator, gradient_shift

PASS = "PASS"
FAIL = "FAIL"
EXPECTED_DIVERGENCE = "EXPECTED-DIVERGENCE"


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    error: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (m + m.conj().T) / 2


def random_matrix(rng: np.random.Generator, dim: int) -> np.ndarray:
    return rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))


def _check(name, err, tol, detail="", t0=None) -> CheckResult:
    status = PASS if err <= tol else FAIL
    return CheckResult(name, status, float(err), tol, detail, time.perf_counter() - (t0 or 0))


def check_first_moment_single(rng, count=500, eps=1e-12) -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(count):
        n = 1 + i % 3
        j = int(rng.integers(n))
        a = random_hermitian(rng, 1 << n)
        worst = max(worst, max_abs(mo.first_moment_single(a, j, n) - mo.first_moment_single_quadrature(a, j, n)))
    return _check("first moment, one gate: closed form vs quadrature", worst, eps, f"{count} matrices, n<=3", t0)


def check_layer_powerset(rng, eps=1e-12) -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(1, 5):
        for _ in range(5):
            a = random_matrix(rng, 1 << n)
            worst = max(worst, max_abs(mo.first_moment_layer(a, n) - mo.first_moment_layer_powerset(a, n)))
    return _check("first moment, one layer: sequential vs subset sum", worst, eps, "n<=4", t0)


def check_unital(rng, max_n=4, max_d=10, eps=1e-12) -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(1, max_n + 1):
        eye = np.eye(1 << n)
        a = random_matrix(rng, 1 << n)
        out_i, out_a = eye, a
        for _ in range(max_d):
            out_i = mo.first_moment_layer(out_i, n)
            out_a = mo.first_moment_layer(out_a, n)
            worst = max(worst, max_abs(out_i - eye), abs(np.trace(out_a) - np.trace(a)))
    return _check("exact depth-d first moment: unital and trace-preserving", worst, eps, f"n<={max_n}, d<={max_d}", t0)


def check_paper_depth_agreement(rng, eps=1e-12) -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(1, 5):
        a = random_matrix(rng, 1 << n)
        for d in (1, 2):
            worst = max(worst, max_abs(mo.first_moment_depth_paper(a, n, d) - mo.first_moment_depth_exact(a, n, d)))
    return _check("closed-form depth-d first moment vs exact, d in {1,2}", worst, eps, "n<=4", t0)


def check_paper_depth_divergence() -> CheckResult:
    t0 = time.perf_counter()
    printed = mo.closed_form_expansion(1, 3).coefficient((0,))
    exact = mo.exact_expansion(1, 3).coefficient((0,))
    gap = printed - exact
    ok = printed == Fraction(16, 27) and exact == Fraction(13, 27) and gap == Fraction(1, 9)
    status = EXPECTED_DIVERGENCE if ok else FAIL
    return CheckResult(
        "closed-form depth-d first moment vs exact, n=1 d=3",
        status,
        float(gap),
        0.0,
        f"I*TrA coefficient {printed} printed vs {exact} exact; printed map sends I to "
        f"{mo.closed_form_expansion(1, 3).unitality_sum()} I",
        time.perf_counter() - t0,
    )


def check_second_moment_trace(rng, count=100, eps=1e-10) -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(count):
        a, b, c = (random_hermitian(rng, 2) for _ in range(3))
        dec = mo.second_moment_decomposition(a, b, c, 0, 1)
        worst = max(worst, abs(np.trace(dec.epsilon_part)))
    return _check("second moment, one gate: Tr(epsilon) = 0", worst, eps, f"{count} Hermitian triples, n=1", t0)


def check_brute_force_single(rng, eps=1e-12) -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(5):
        a, b, c = (random_hermitian(rng, 2) for _ in range(3))
        worst = max(worst, max_abs(mo.brute_force_moment(1, 1, a, b, c) - mo.second_moment_single(a, b, c, 0, 1)))
    return _check("second moment: grid enumeration vs single-gate quadrature", worst, eps, "n=1, d=1", t0)


def check_scalar_moments(eps=1e-12) -> CheckResult:
    t0 = time.perf_counter()
    expected = {
        "cos": 0, "sin": 0, "cos^2": 0.5, "sin^2": 0.5, "cos*sin": 0,
        "cos^3": 0, "cos^2*sin": 0, "cos*sin^2": 0, "sin^3": 0,
        "cos^4": 3 / 8, "sin^4": 3 / 8, "cos^3*sin": 0, "cos*sin^3": 0, "cos^2*sin^2": 1 / 8,
    }
    table = mo.moment_scalar_table()
    worst = max(abs(table[k] - v) for k, v in expected.items())
    return _check("angle moments of cos/sin(theta/2) up to 4th order", worst, eps, "16-node rule", t0)


def check_cz_trace_invariance(rng, eps=1e-12) -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    for n in (2, 3, 4):
        w = np.eye(1 << n, dtype=complex)
        for a, b in entangler_pairs("brick", n):
            w = embed(CZ, [a, b], n) @ w
        a_mat = random_matrix(rng, 1 << n)
        lhs = np.trace(mo.first_moment_layer(w.conj().T @ a_mat @ w, n))
        rhs = np.trace(mo.first_moment_layer(a_mat, n))
        worst = max(worst, abs(lhs - rhs))
    return _check("CZ layer leaves trace of first moment unchanged", worst, eps, "n in {2,3,4}", t0)


def check_gradient_routes(rng, count=10, eps=1e-10) -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(count):
        spec = EnsembleSpec(1 + i % 4, 1 + i % 5, entangler_pattern="ring", samples=count, master_seed=int(rng.integers(2**32)))
        c = sample_circuit(spec, i)
        o = spec.obs
        worst = max(worst, max_abs(gradient_shift(c, o) - gradient_commutator(c, o)))
    return _check("gradient: parameter shift vs commutator form", worst, eps, f"{count} random circuits", t0)


def check_brick_example() -> CheckResult:
    t0 = time.perf_counter()
    c = brick_example_circuit(axes="XYZXYZXYZXYZ")
    report = analyze(c, "ZIII")
    sound = validate_against_gradient(c, "ZIII", trials=20)
    ok = report.m == 6 and report.gray_slots() == [4, 7, 8, 10, 11, 12] and sound.ok
    return CheckResult(
        "light cone of the 4x3 brick example",
        PASS if ok else FAIL,
        float(abs(report.m - 6)),
        0.0,
        f"m={report.m}, gray={report.gray_slots()}, soundness violations={len(sound.violations)}",
        time.perf_counter() - t0,
    )


def run_verify_suite(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [
        check_scalar_moments(),
        check_first_moment_single(rng),
        check_layer_powerset(rng),
        check_unital(rng),
        check_paper_depth_agreement(rng),
        check_paper_depth_divergence(),
        check_second_moment_trace(rng),
        check_brute_force_single(rng),
        check_cz_trace_invariance(rng),
        check_gradient_routes(rng),
        check_brick_example(),
    ]


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check'.ljust(width)}  {'status':<20} {'error':>10} {'tol':>8}  detail"]
    for r in results:
        lines.append(
            f"{r.name.ljust(width)}  {r.status:<20} {r.error:10.2e} {r.tolerance:8.0e}  {r.detail}"
        )
    return "\n".join(lines)
