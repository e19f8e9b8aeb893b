"""Dense complex linear algebra on n-qubit operators.

Operators are plain ``numpy`` complex arrays of shape ``(2**n, 2**n)``.
Qubit 0 is the most significant tensor factor, i.e. the leftmost factor in
``kron(q0, q1, ...)``.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence

import numpy as np

EPS = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CZ = np.diag([1, 1, 1, -1]).astype(complex)

PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


class DimensionError(ValueError):
    pass


def as_matrix(a) -> np.ndarray:
    """Coerce to a square complex matrix, rejecting anything else."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {m.shape}")
    return m


def num_qubits(a: np.ndarray) -> int:
    dim = a.shape[0]
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


def qubit_set(indices: Iterable[int], n: int) -> tuple[int, ...]:
    """Validate and normalise a qubit index set to a sorted tuple."""
    idx = tuple(sorted(int(i) for i in indices))
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate qubit indices in {idx}")
    for i in idx:
        if not 0 <= i < n:
            raise IndexError(f"qubit index {i} out of range for n={n}")
    return idx


def kron(*terms: np.ndarray) -> np.ndarray:
    if len(terms) == 1 and isinstance(terms[0], (list, tuple)):
        terms = tuple(terms[0])
    return reduce(np.kron, [np.asarray(t, dtype=complex) for t in terms])


def _check_dim(a: np.ndarray, n: int) -> None:
    if a.shape != (1 << n, 1 << n):
        raise DimensionError(f"operator shape {a.shape} does not match n={n} qubits")


def partial_trace(a, traced: Iterable[int], n: int) -> np.ndarray:
    """Trace out the qubits in ``traced``; the rest keep their relative order."""
    a = as_matrix(a)
    _check_dim(a, n)
    traced = qubit_set(traced, n)
    if not traced:
        return a.copy()
    keep = [q for q in range(n) if q not in traced]
    t = a.reshape((2,) * (2 * n))
    # row axis q pairs with column axis n + q
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    for q in traced:
        cols[q] = rows[q]
    out = "".join(rows[q] for q in keep) + "".join(cols[q] for q in keep)
    res = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    dim = 1 << len(keep)
    return np.ascontiguousarray(res).reshape(dim, dim)


def embed(local, at: Sequence[int], n: int) -> np.ndarray:
    """Place ``local`` on qubits ``at`` (in the given order) and identity elsewhere."""
    local = as_matrix(local)
    at = tuple(int(q) for q in at)
    for q in at:
        if not 0 <= q < n:
            raise IndexError(f"qubit index {q} out of range for n={n}")
    if len(set(at)) != len(at):
        raise ValueError(f"duplicate qubit indices in {at}")
    k = len(at)
    if local.shape != (1 << k, 1 << k):
        raise DimensionError(f"local operator shape {local.shape} does not act on {k} qubits")
    rest = [q for q in range(n) if q not in at]
    full = np.kron(local, np.eye(1 << len(rest), dtype=complex))
    # full currently acts on the qubit order (at..., rest...); permute back
    order = list(at) + rest
    perm = [order.index(q) for q in range(n)]
    t = full.reshape((2,) * (2 * n))
    t = t.transpose(perm + [n + p for p in perm])
    return np.ascontiguousarray(t).reshape(1 << n, 1 << n)


def identity_on_traced(a, traced: Iterable[int], n: int) -> np.ndarray:
    """``I_sigma (x) Tr_sigma{a}``: trace out ``traced`` and re-insert identity there."""
    traced = qubit_set(traced, n)
    keep = [q for q in range(n) if q not in traced]
    return embed(partial_trace(a, traced, n), keep, n)


def commutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return a @ b - b @ a


def rotation_gate(axis: str, theta: float, phase_stripped: bool = True) -> np.ndarray:
    """Single-qubit rotation exp(-i theta P / 2).

    With ``phase_stripped`` the Z rotation is returned as diag(1, e^{i theta}),
    which differs from the textbook form only by a global phase.
    """
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    if axis == "X":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if axis == "Y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "Z":
        if phase_stripped:
            return np.array([[1, 0], [0, np.exp(1j * theta)]], dtype=complex)
        return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)
    raise ValueError(f"unknown rotation axis {axis!r}")


def is_hermitian(a, tol: float = EPS) -> bool:
    a = as_matrix(a)
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def is_unitary(a, tol: float = EPS) -> bool:
    a = as_matrix(a)
    return bool(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0])), initial=0.0) <= tol)


def max_abs(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))
