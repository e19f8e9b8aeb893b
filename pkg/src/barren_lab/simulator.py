"""State-vector evaluation of losses and gradients.

Two gradient routes are provided and cross-checked in the tests:

* ``gradient_shift``: the parameter-shift rule, built only on ``loss``.
* ``gradient_commutator``: ``(i/2) Tr{O_+ [rho_-, P_k]}``. The default path
  evaluates it on pure states in one forward and one backward sweep (batched
  over many circuits, which is what the ensemble statistics use). ``dense=True``
  builds ``rho_-`` and ``O_+`` as explicit matrices instead.

The simulator uses the textbook ``RZ = exp(-i theta Z / 2)``; the moments module
uses the phase-stripped form. Both give identical losses.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .circuit import GATE_NAMES, Circuit, Observable, observable_matrix
from .matkernel import CZ, H, I2, PAULI, DimensionError, embed, rotation_gate

IMAG_TOL = 1e-10

GATE_CODES = {name: i for i, name in enumerate(GATE_NAMES)}
_GENERATORS = np.stack([PAULI["X"], PAULI["Y"], PAULI["Z"], np.zeros((2, 2)), np.zeros((2, 2))])


class NumericalError(RuntimeError):
    pass


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    return psi


def _check_state(psi, n: int) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (1 << n,):
        raise DimensionError(f"state of shape {psi.shape} does not match n={n}")
    return psi


def _check_obs(o, n: int) -> Observable:
    o = o if isinstance(o, Observable) else Observable(str(o))
    if o.n != n:
        raise DimensionError(f"observable {o} has length {o.n}, circuit has {n} qubits")
    return o


def gate_matrix(axis: str, theta: float = 0.0) -> np.ndarray:
    if axis == "ID":
        return I2
    if axis == "H":
        return H
    return rotation_gate(axis, theta, phase_stripped=False)


@lru_cache(maxsize=None)
def cz_signs(a: int, b: int, n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    bit_a = (idx >> (n - 1 - a)) & 1
    bit_b = (idx >> (n - 1 - b)) & 1
    return np.where(bit_a & bit_b, -1.0, 1.0)


def apply_1q(psi: np.ndarray, gate: np.ndarray, q: int, n: int) -> np.ndarray:
    """Apply a 2x2 gate on qubit ``q`` by strided contraction (no 2^n matrix)."""
    t = psi.reshape(1 << q, 2, 1 << (n - q - 1))
    return np.einsum("ij,ljr->lir", gate, t).reshape(-1)


def apply_cz(psi: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    return psi * cz_signs(a, b, n)


def apply_pauli_string(psi: np.ndarray, o: Observable) -> np.ndarray:
    n = o.n
    for q, ch in enumerate(o.pauli_string):
        if ch != "I":
            psi = apply_1q(psi, PAULI[ch], q, n)
    return psi


def run(c: Circuit, init=None) -> np.ndarray:
    psi = zero_state(c.n) if init is None else _check_state(init, c.n)
    theta = c.theta
    for layer in c.layers:
        for q, spec in enumerate(layer.rotations):
            t = theta[spec.param] if spec.param is not None else 0.0
            psi = apply_1q(psi, gate_matrix(spec.axis, t), q, c.n)
        for a, b in layer.entanglers:
            psi = apply_cz(psi, a, b, c.n)
    return psi


def loss(c: Circuit, o, init=None) -> float:
    """<init| U^dagger O U |init> for a Pauli-string observable."""
    o = _check_obs(o, c.n)
    psi = run(c, init)
    val = np.vdot(psi, apply_pauli_string(psi, o))
    if abs(val.imag) > IMAG_TOL:
        raise NumericalError(f"loss has imaginary residue {val.imag:.3e}")
    return float(val.real)


def gradient_shift(c: Circuit, o, init=None) -> np.ndarray:
    o = _check_obs(o, c.n)
    theta = c.params
    grad = np.empty(c.num_params)
    for k in range(c.num_params):
        plus, minus = theta.copy(), theta.copy()
        plus[k] += np.pi / 2
        minus[k] -= np.pi / 2
        grad[k] = 0.5 * (loss(c.with_theta(plus), o, init) - loss(c.with_theta(minus), o, init))
    return grad


def gradient_fd(c: Circuit, o, init=None, h: float = 1e-5) -> np.ndarray:
    """Central finite differences, for testing."""
    theta = c.params
    grad = np.empty(c.num_params)
    for k in range(c.num_params):
        plus, minus = theta.copy(), theta.copy()
        plus[k] += h
        minus[k] -= h
        grad[k] = (loss(c.with_theta(plus), o, init) - loss(c.with_theta(minus), o, init)) / (2 * h)
    return grad


# -- full-matrix oracle -------------------------------------------------------

def _operations(c: Circuit):
    """Flat gate list in application order: (kind, payload, param-or-None)."""
    ops = []
    for layer in c.layers:
        for q, spec in enumerate(layer.rotations):
            t = c.theta[spec.param] if spec.param is not None else 0.0
            ops.append((embed(gate_matrix(spec.axis, t), [q], c.n), spec))
        for a, b in layer.entanglers:
            ops.append((embed(CZ, [a, b], c.n), None))
    return ops


def circuit_unitary(c: Circuit) -> np.ndarray:
    u = np.eye(1 << c.n, dtype=complex)
    for m, _ in _operations(c):
        u = m @ u
    return u


def _gradient_dense(c: Circuit, o: Observable, init) -> np.ndarray:
    psi = zero_state(c.n) if init is None else _check_state(init, c.n)
    rho = np.outer(psi, psi.conj())
    obs = observable_matrix(o)
    ops = _operations(c)
    slot_q = [q for layer in c.layers for q in range(c.n)]
    grad = np.zeros(c.num_params)
    # U_- grows forward; U_+ is rebuilt from the suffix
    u_minus = np.eye(1 << c.n, dtype=complex)
    slot = 0
    for i, (m, spec) in enumerate(ops):
        u_minus = m @ u_minus
        if spec is None:
            continue
        q = slot_q[slot]
        slot += 1
        if spec.param is None:
            continue
        u_plus = np.eye(1 << c.n, dtype=complex)
        for m2, _ in ops[i + 1 :]:
            u_plus = m2 @ u_plus
        rho_minus = u_minus @ rho @ u_minus.conj().T
        o_plus = u_plus.conj().T @ obs @ u_plus
        p = embed(PAULI[spec.axis], [q], c.n)
        val = 0.5j * np.trace(o_plus @ (rho_minus @ p - p @ rho_minus))
        if abs(val.imag) > IMAG_TOL:
            raise NumericalError(f"gradient has imaginary residue {val.imag:.3e}")
        grad[spec.param] = val.real
    return grad


# -- batched adjoint sweep ----------------------------------------------------

def circuit_codes(c: Circuit) -> tuple[np.ndarray, np.ndarray]:
    """Gate codes and per-slot angles, both shaped ``(d, n)``."""
    codes = np.empty((c.d, c.n), dtype=np.int8)
    theta = np.zeros((c.d, c.n))
    for li, q, spec in c.slots():
        codes[li, q] = GATE_CODES[spec.axis]
        if spec.param is not None:
            theta[li, q] = c.theta[spec.param]
    return codes, theta


def gate_tensor(codes: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Vectorised gate matrices, shape ``codes.shape + (2, 2)``."""
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    g = np.zeros(codes.shape + (2, 2), dtype=complex)
    sel = codes == 0
    g[sel, 0, 0] = c[sel]
    g[sel, 1, 1] = c[sel]
    g[sel, 0, 1] = -1j * s[sel]
    g[sel, 1, 0] = -1j * s[sel]
    sel = codes == 1
    g[sel, 0, 0] = c[sel]
    g[sel, 1, 1] = c[sel]
    g[sel, 0, 1] = -s[sel]
    g[sel, 1, 0] = s[sel]
    sel = codes == 2
    g[sel, 0, 0] = np.exp(-0.5j * theta[sel])
    g[sel, 1, 1] = np.exp(0.5j * theta[sel])
    g[codes == 3] = I2
    g[codes == 4] = H
    return g


def _apply_batch(psi: np.ndarray, gates: np.ndarray, q: int, n: int) -> np.ndarray:
    b = psi.shape[0]
    t = psi.reshape(b, 1 << q, 2, 1 << (n - q - 1))
    return np.einsum("bij,bljr->blir", gates, t).reshape(b, -1)


def batch_slot_gradients(
    codes: np.ndarray,
    theta: np.ndarray,
    entanglers,
    o: Observable,
    init=None,
) -> np.ndarray:
    """Gradient of every rotation slot for a batch of same-shape circuits.

    ``codes`` and ``theta`` have shape ``(B, d, n)``; ``entanglers`` is a
    list of CZ pair lists, one per layer. Returns ``(B, d, n)`` real array;
    slots holding ID or H gates are exactly zero.
    """
    codes = np.asarray(codes)
    b, d, n = codes.shape
    o = _check_obs(o, n)
    if not o.support:
        # constant loss
        return np.zeros((b, d, n))
    gates = gate_tensor(codes, np.asarray(theta, dtype=float))
    gens = _GENERATORS[codes.astype(np.intp)]
    psi0 = zero_state(n) if init is None else _check_state(init, n)
    psi = np.tile(psi0, (b, 1))
    for li in range(d):
        for q in range(n):
            psi = _apply_batch(psi, gates[:, li, q], q, n)
        for a, bq in entanglers[li]:
            psi = psi * cz_signs(a, bq, n)
    lam = psi
    for q, ch in enumerate(o.pauli_string):
        if ch != "I":
            lam = _apply_batch(lam, np.broadcast_to(PAULI[ch], (b, 2, 2)), q, n)
    grads = np.zeros((b, d, n))
    for li in range(d - 1, -1, -1):
        for a, bq in reversed(entanglers[li]):
            signs = cz_signs(a, bq, n)
            psi = psi * signs
            lam = lam * signs
        for q in range(n):
            plam = _apply_batch(lam, gens[:, li, q], q, n)
            grads[:, li, q] = -np.einsum("bi,bi->b", psi.conj(), plam).imag
        for q in range(n):
            gdag = gates[:, li, q].conj().transpose(0, 2, 1)
            psi = _apply_batch(psi, gdag, q, n)
            lam = _apply_batch(lam, gdag, q, n)
    return grads


def gradient_commutator(c: Circuit, o, init=None, dense: bool = False) -> np.ndarray:
    o = _check_obs(o, c.n)
    if dense:
        return _gradient_dense(c, o, init)
    codes, theta = circuit_codes(c)
    ents = [layer.entanglers for layer in c.layers]
    slots = batch_slot_gradients(codes[None], theta[None], ents, o, init)[0]
    grad = np.zeros(c.num_params)
    for li, q, spec in c.slots():
        if spec.param is not None:
            grad[spec.param] = slots[li, q]
    return grad
