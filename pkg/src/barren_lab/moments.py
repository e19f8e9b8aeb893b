"""First- and second-moment maps of random rotation gates.

The gate ensemble is: axis uniform on {X, Y, Z}, angle uniform on
[-2 pi, 2 pi). The Z rotation is taken in its phase-stripped form
diag(1, e^{i theta}), which leaves every conjugation-type moment unchanged.

Every closed form here has an independent numerical counterpart:

* ``quadrature_gate_average`` integrates over the angle with a 16-node
  equispaced rule. The integrands are trigonometric polynomials in theta/2 of
  degree at most 4, so the rule is exact up to roundoff.
* ``brute_force_moment`` enumerates the full product grid over all gate slots
  of a small layered circuit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np

from .matkernel import (
    DimensionError,
    as_matrix,
    embed,
    identity_on_traced,
    num_qubits,
    rotation_gate,
)

QUADRATURE_NODES = 16
AXES = ("X", "Y", "Z")
MAX_DENSE_SECOND_MOMENT_QUBITS = 6
MAX_BRUTE_FORCE_SLOTS = 4


def quadrature_nodes(num: int = QUADRATURE_NODES) -> np.ndarray:
    return -2 * np.pi + 4 * np.pi * np.arange(num) / num


def theta_average(fn: Callable[[float], object], num: int = QUADRATURE_NODES):
    """Equispaced-rule average of ``fn(theta)`` over one period [-2 pi, 2 pi)."""
    acc = None
    for t in quadrature_nodes(num):
        v = np.asarray(fn(float(t)), dtype=complex)
        acc = v if acc is None else acc + v
    return acc / num


def quadrature_gate_average(
    fn: Callable[[np.ndarray], np.ndarray],
    axes: Iterable[str] = AXES,
    num: int = QUADRATURE_NODES,
) -> np.ndarray:
    """Average ``fn(gate)`` over the rotation ensemble.

    Sums run in a fixed order (axis, then node) so results are bit-stable.
    """
    axes = tuple(axes)
    acc = None
    for axis in axes:
        for t in quadrature_nodes(num):
            v = np.asarray(fn(rotation_gate(axis, float(t))), dtype=complex)
            acc = v if acc is None else acc + v
    return acc / (len(axes) * num)


def _dims(a, n: int) -> np.ndarray:
    a = as_matrix(a)
    if a.shape != (1 << n, 1 << n):
        raise DimensionError(f"operator shape {a.shape} does not match n={n}")
    return a


def _subsets(n: int):
    for r in range(n + 1):
        yield from itertools.combinations(range(n), r)


# -- first moment -------------------------------------------------------------

def first_moment_single(a, j: int, n: int) -> np.ndarray:
    """E[U^dagger A U] for one random rotation on qubit ``j``: (A + I_j (x) Tr_j A) / 3."""
    a = _dims(a, n)
    if not 0 <= j < n:
        raise IndexError(f"qubit {j} out of range for n={n}")
    return (a + identity_on_traced(a, [j], n)) / 3


def first_moment_single_quadrature(a, j: int, n: int) -> np.ndarray:
    a = _dims(a, n)

    def conj(g):
        u = embed(g, [j], n)
        return u.conj().T @ a @ u

    return quadrature_gate_average(conj)


def first_moment_layer(a, n: int) -> np.ndarray:
    """One random rotation on every qubit, applied qubit by qubit."""
    out = _dims(a, n)
    for j in range(n):
        out = first_moment_single(out, j, n)
    return out


def first_moment_layer_powerset(a, n: int) -> np.ndarray:
    """Same map as ``first_moment_layer`` written as the explicit subset sum."""
    a = _dims(a, n)
    out = np.zeros_like(a)
    for sigma in _subsets(n):
        out += identity_on_traced(a, sigma, n)
    return out / 3**n


def first_moment_depth_exact(a, n: int, d: int) -> np.ndarray:
    if d < 1:
        raise ValueError("depth must be at least 1")
    out = _dims(a, n)
    for _ in range(d):
        out = first_moment_layer(out, n)
    return out


def first_moment_depth_paper(a, n: int, d: int) -> np.ndarray:
    """The closed-form depth-d subset sum, coefficients (1/3^n)(4^|s|/3^n)^(d-1).

    Agrees with ``first_moment_depth_exact`` only for d <= 2; from d = 3 on it
    no longer maps the identity to itself.
    """
    if d < 1:
        raise ValueError("depth must be at least 1")
    return closed_form_expansion(n, d).apply(a)


@dataclass(frozen=True)
class FirstMomentExpansion:
    """A depth-d first-moment map stored as subset -> coefficient.

    The map is ``A -> sum_s coeff[s] * I_s (x) Tr_s A``. Coefficients are
    exact rationals.
    """

    n: int
    d: int
    kind: str
    terms: dict = field(default_factory=dict)

    def coefficient(self, sigma) -> Fraction:
        return self.terms[tuple(sorted(sigma))]

    def unitality_sum(self) -> Fraction:
        """Image of the identity divided by the identity; 1 for a unital map."""
        return sum((c * 2 ** len(s) for s, c in self.terms.items()), Fraction(0))

    def apply(self, a) -> np.ndarray:
        a = _dims(a, self.n)
        out = np.zeros_like(a)
        for sigma, c in self.terms.items():
            if c:
                out += float(c) * identity_on_traced(a, sigma, self.n)
        return out


def exact_expansion(n: int, d: int) -> FirstMomentExpansion:
    # per-qubit map M = (id + I Tr)/3 has M^d = 3^-d id + (1 - 3^-d)/2 I Tr
    keep = Fraction(1, 3**d)
    traced = (1 - keep) / 2
    terms = {s: keep ** (n - len(s)) * traced ** len(s) for s in _subsets(n)}
    return FirstMomentExpansion(n, d, "exact", terms)


def closed_form_expansion(n: int, d: int) -> FirstMomentExpansion:
    terms = {
        s: Fraction(1, 3**n) * Fraction(4 ** len(s), 3**n) ** (d - 1) for s in _subsets(n)
    }
    return FirstMomentExpansion(n, d, "closed_form", terms)


# -- second moment ------------------------------------------------------------

def _second_guard(n: int) -> None:
    if n > MAX_DENSE_SECOND_MOMENT_QUBITS:
        raise ValueError(
            f"dense second-moment maps are limited to n <= {MAX_DENSE_SECOND_MOMENT_QUBITS}"
        )


def second_moment_single(a, b, c, j: int, n: int) -> np.ndarray:
    """E[U^dagger A U B U^dagger C U] for one random rotation on qubit ``j`` (exact, by quadrature)."""
    _second_guard(n)
    a, b, c = (_dims(m, n) for m in (a, b, c))

    def term(g):
        u = embed(g, [j], n)
        ud = u.conj().T
        return ud @ a @ u @ b @ ud @ c @ u

    return quadrature_gate_average(term)


# Local index patterns on the rotated qubit for each trilinear term. Operators
# on the other qubits are always multiplied in the order A B C.
_F_TERMS = [
    (1, "ip", "pq", "ql", None),  # ABC
    (1, "pq", "il", "qp", None),  # Tr{AC} B
]
_G_TERMS = [
    (1, "pq", "qr", "rp", "il"),  # Tr{ABC} I
    (-1, "il", "pq", "qp", None),  # -Tr{BC} A
    (-1, "pq", "qp", "il", None),  # -Tr{AB} C
    (1, "pp", "ir", "rl", None),  # Tr{A} BC
    (1, "ir", "pp", "rl", None),  # Tr{B} AC
    (1, "ir", "rl", "pp", None),  # Tr{C} AB
    (-1, "ip", "pq", "ql", None),  # -ABC
]


def _local_terms(terms, a, b, c, j: int, n: int) -> np.ndarray:
    lo, hi = 1 << j, 1 << (n - j - 1)
    shape = (lo, 2, hi, lo, 2, hi)
    ta, tb, tc = (m.reshape(shape) for m in (a, b, c))
    eye = np.eye(2, dtype=complex)
    out = np.zeros(shape, dtype=complex)
    for sign, la, lb, lc, li in terms:
        spec_a = "x" + la[0] + "y" + "u" + la[1] + "v"
        spec_b = "u" + lb[0] + "v" + "s" + lb[1] + "t"
        spec_c = "s" + lc[0] + "t" + "X" + lc[1] + "Y"
        ops, specs = [ta, tb, tc], [spec_a, spec_b, spec_c]
        if li is not None:
            ops.append(eye)
            specs.append(li)
        out += sign * np.einsum(",".join(specs) + "->xiyXlY", *ops)
    return out.reshape(1 << n, 1 << n)


@dataclass(frozen=True)
class SecondMomentDecomposition:
    """exact = (f + epsilon)/4 + g/12, with Tr(epsilon) = 0."""

    exact: np.ndarray
    f_part: np.ndarray
    g_part: np.ndarray
    epsilon_part: np.ndarray

    @property
    def leading(self) -> np.ndarray:
        return self.f_part / 4


def f_term(a, b, c, j: int = 0, n: int | None = None) -> np.ndarray:
    a, b, c = as_matrix(a), as_matrix(b), as_matrix(c)
    n = num_qubits(a) if n is None else n
    return _local_terms(_F_TERMS, a, b, c, j, n)


def g_term(a, b, c, j: int = 0, n: int | None = None) -> np.ndarray:
    a, b, c = as_matrix(a), as_matrix(b), as_matrix(c)
    n = num_qubits(a) if n is None else n
    return _local_terms(_G_TERMS, a, b, c, j, n)


def f_term_printed(a, b, c, j: int, n: int) -> np.ndarray:
    """ABC + (I_j (x) Tr_j{AC}) B, with the other-qubit factors ordered A C B."""
    a, b, c = (_dims(m, n) for m in (a, b, c))
    return a @ b @ c + identity_on_traced(a @ c, [j], n) @ b


def second_moment_decomposition(a, b, c, j: int, n: int) -> SecondMomentDecomposition:
    _second_guard(n)
    a, b, c = (_dims(m, n) for m in (a, b, c))
    exact = second_moment_single(a, b, c, j, n)
    f = _local_terms(_F_TERMS, a, b, c, j, n)
    g = _local_terms(_G_TERMS, a, b, c, j, n)
    eps = 4 * (exact - f / 4 - g / 12)
    return SecondMomentDecomposition(exact, f, g, eps)


def second_moment_depth_paper(a, b, c, n: int, d: int, empty_term: str = "ABC") -> np.ndarray:
    """Leading subset sum (1/4^n) sum_s 4^((|s|-n)(d-1)) (I_s (x) Tr_s{AC}) B, no remainder.

    ``empty_term`` fixes the s = {} summand: ``"ABC"`` (the product as it
    appears in the single-gate f term) or ``"ACB"`` (the compact sum read
    literally). The two agree whenever B commutes with C.
    """
    if d < 1:
        raise ValueError("depth must be at least 1")
    if empty_term not in ("ABC", "ACB"):
        raise ValueError("empty_term must be 'ABC' or 'ACB'")
    _second_guard(n)
    a, b, c = (_dims(m, n) for m in (a, b, c))
    ac = a @ c
    out = np.zeros_like(a)
    for sigma in _subsets(n):
        if sigma:
            coeff = 4.0 ** ((len(sigma) - n) * (d - 1))
            out += coeff * identity_on_traced(ac, sigma, n) @ b
    empty = a @ b @ c if empty_term == "ABC" else ac @ b
    out += 4.0 ** (-n * (d - 1)) * empty
    return out / 4**n


def _slot_unitaries(n: int, j: int) -> np.ndarray:
    gates = [
        embed(rotation_gate(axis, float(t)), [j], n)
        for axis in AXES
        for t in quadrature_nodes()
    ]
    return np.stack(gates)


def brute_force_moment(n: int, d: int, a, b, c) -> np.ndarray:
    """E[U^dagger A U B U^dagger C U] over every gate choice of an n x d entangler-free circuit.

    Enumerates 48 choices (3 axes x 16 nodes) per slot, with the same U on both
    sides. Limited to 4 slots.
    """
    slots = n * d
    if slots > MAX_BRUTE_FORCE_SLOTS:
        raise ValueError(
            f"brute force over {slots} slots exceeds the limit of {MAX_BRUTE_FORCE_SLOTS}"
        )
    a, b, c = (_dims(m, n) for m in (a, b, c))
    per_slot = [_slot_unitaries(n, q) for _ in range(d) for q in range(n)]
    dim = 1 << n
    # U = G_last ... G_first; the first slot is enumerated in the outer loop
    rest = np.eye(dim, dtype=complex)[None]
    for g in per_slot[1:]:
        rest = np.einsum("kij,ljm->klim", g, rest).reshape(-1, dim, dim)
    total = np.zeros((dim, dim), dtype=complex)
    for g0 in per_slot[0]:
        u = rest @ g0
        ud = u.conj().transpose(0, 2, 1)
        vals = ud @ a @ u @ b @ ud @ c @ u
        total += vals.sum(axis=0)
    return total / 48**slots


def moment_scalar_table() -> dict[str, float]:
    """Angle moments of cos/sin(theta/2) up to fourth order, by quadrature."""

    def avg(f):
        return float(np.real(theta_average(f)))

    c = lambda t: math.cos(t / 2)  # noqa: E731
    s = lambda t: math.sin(t / 2)  # noqa: E731
    return {
        "cos": avg(c),
        "sin": avg(s),
        "cos^2": avg(lambda t: c(t) ** 2),
        "sin^2": avg(lambda t: s(t) ** 2),
        "cos*sin": avg(lambda t: c(t) * s(t)),
        "cos^3": avg(lambda t: c(t) ** 3),
        "cos^2*sin": avg(lambda t: c(t) ** 2 * s(t)),
        "cos*sin^2": avg(lambda t: c(t) * s(t) ** 2),
        "sin^3": avg(lambda t: s(t) ** 3),
        "cos^4": avg(lambda t: c(t) ** 4),
        "sin^4": avg(lambda t: s(t) ** 4),
        "cos^3*sin": avg(lambda t: c(t) ** 3 * s(t)),
        "cos*sin^3": avg(lambda t: c(t) * s(t) ** 3),
        "cos^2*sin^2": avg(lambda t: c(t) ** 2 * s(t) ** 2),
    }
