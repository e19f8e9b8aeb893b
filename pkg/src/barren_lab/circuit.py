"""Layered circuit representation, Pauli-string observables, random ensembles, JSON I/O.

A circuit is a list of layers. Each layer applies one single-qubit gate per
qubit (a rotation, an identity, or a Hadamard) followed by an ordered list of
CZ blocks. Rotation parameters are numbered layer-major, qubit-minor.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .matkernel import PAULI, kron

ROTATION_AXES = ("X", "Y", "Z")
FIXED_GATES = ("ID", "H")
GATE_NAMES = ROTATION_AXES + FIXED_GATES
ENTANGLER_PATTERNS = ("brick", "ring", "ladder", "none")
REPLACEMENT_MODES = ("none", "identity", "hadamard")


class CircuitError(ValueError):
    """Base class for circuit parse/validation failures."""


class MalformedCircuitJSON(CircuitError):
    pass


class CircuitSchemaError(CircuitError):
    pass


class CircuitInvariantError(CircuitError):
    pass


@dataclass(frozen=True)
class RotationSpec:
    axis: str
    param: int | None = None

    def __post_init__(self):
        if self.axis in ROTATION_AXES:
            if self.param is None:
                raise CircuitInvariantError(f"rotation {self.axis} needs a parameter index")
        elif self.axis in FIXED_GATES:
            if self.param is not None:
                raise CircuitInvariantError(f"fixed gate {self.axis} cannot carry a parameter")
        else:
            raise CircuitInvariantError(f"unknown gate axis {self.axis!r}")

    @property
    def is_rotation(self) -> bool:
        return self.param is not None


@dataclass(frozen=True)
class Layer:
    rotations: tuple[RotationSpec, ...]
    entanglers: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class Circuit:
    n: int
    layers: tuple[Layer, ...]
    theta: tuple[float, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise CircuitInvariantError("circuit needs at least one qubit")
        if len(self.layers) < 1:
            raise CircuitInvariantError("circuit needs at least one layer")
        seen = []
        for li, layer in enumerate(self.layers):
            if len(layer.rotations) != self.n:
                raise CircuitInvariantError(
                    f"layer {li} has {len(layer.rotations)} gates for {self.n} qubits"
                )
            for spec in layer.rotations:
                if spec.param is not None:
                    seen.append(spec.param)
            for a, b in layer.entanglers:
                if a == b or not (0 <= a < self.n and 0 <= b < self.n):
                    raise CircuitInvariantError(f"bad CZ pair ({a}, {b}) in layer {li}")
            pairs = [frozenset(p) for p in layer.entanglers]
            if len(set(pairs)) != len(pairs):
                raise CircuitInvariantError(f"repeated CZ pair in layer {li}")
        if sorted(seen) != list(range(len(seen))):
            raise CircuitInvariantError(
                "parameter indices must be 0..m-1, each used exactly once"
            )
        if len(self.theta) != len(seen):
            raise CircuitInvariantError(
                f"theta has {len(self.theta)} entries for {len(seen)} parameters"
            )

    @property
    def d(self) -> int:
        return len(self.layers)

    @property
    def num_params(self) -> int:
        return len(self.theta)

    @property
    def params(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=float)

    def with_theta(self, theta) -> "Circuit":
        return Circuit(self.n, self.layers, tuple(float(t) for t in theta))

    def slots(self):
        """Yield ``(layer, qubit, RotationSpec)`` in parameter order."""
        for li, layer in enumerate(self.layers):
            for q, spec in enumerate(layer.rotations):
                yield li, q, spec

    def param_slots(self) -> list[tuple[int, int]]:
        """(layer, qubit) of each parameter, indexed by parameter number."""
        out: list[tuple[int, int] | None] = [None] * self.num_params
        for li, q, spec in self.slots():
            if spec.param is not None:
                out[spec.param] = (li, q)
        return out  # type: ignore[return-value]


@dataclass(frozen=True)
class Observable:
    pauli_string: str

    def __post_init__(self):
        bad = set(self.pauli_string) - set("IXYZ")
        if bad or not self.pauli_string:
            raise ValueError(f"invalid Pauli string {self.pauli_string!r}")

    @property
    def n(self) -> int:
        return len(self.pauli_string)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.pauli_string) if c != "I")

    @classmethod
    def z_on(cls, n: int, qubits: Sequence[int]) -> "Observable":
        chars = ["I"] * n
        for q in qubits:
            chars[q] = "Z"
        return cls("".join(chars))

    def __str__(self) -> str:
        return self.pauli_string


def _expand_observable(text: str, n: int | None) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth, j = 1, i + 1
            while j < len(text) and depth:
                depth += {"(": 1, ")": -1}.get(text[j], 0)
                j += 1
            if depth:
                raise ValueError(f"unbalanced parentheses in observable {text!r}")
            unit = _expand_observable(text[i + 1 : j - 1], None)
            i = j
        elif ch in "IXYZ":
            unit = ch
            i += 1
        else:
            raise ValueError(f"invalid character {ch!r} in observable {text!r}")
        if i < len(text) and text[i] == "^":
            j = i + 1
            while j < len(text) and (text[j].isdigit() or text[j] in "n*"):
                j += 1
            power = text[i + 1 : j]
            if power == "*":
                if len(unit) != 1:
                    raise ValueError("only a single Pauli can fill with ^*")
                reps = 1
                unit = "*" + unit
            elif power == "n":
                if n is None:
                    raise ValueError("observable uses ^n but n is unknown")
                reps = n
            elif power.isdigit():
                reps = int(power)
            else:
                raise ValueError(f"bad power in observable {text!r}")
            unit *= reps
            i = j
        out.append(unit)
    return "".join(out)


def parse_observable(text: str, n: int | None = None) -> Observable:
    """Parse ``"ZIZI"`` or power shorthands.

    Supported: ``"Z^n"``, ``"Z^6I^6"``, ``"(ZI)^6"``, and one fill unit such as
    ``"Z^2I^*"`` which pads with I up to ``n`` qubits.
    """
    raw = _expand_observable(text.replace(" ", ""), n)
    if "*" in raw:
        if n is None or raw.count("*") > 1:
            raise ValueError(f"cannot resolve fill in observable {text!r}")
        k = raw.index("*")
        fill = n - (len(raw) - 2)
        if fill < 0:
            raise ValueError(f"observable {text!r} is longer than {n} qubits")
        raw = raw[:k] + raw[k + 1] * fill + raw[k + 2 :]
    obs = Observable(raw)
    if n is not None and obs.n != n:
        raise ValueError(f"observable {text!r} has length {obs.n}, expected {n}")
    return obs


def observable_matrix(o: Observable | str) -> np.ndarray:
    s = o.pauli_string if isinstance(o, Observable) else Observable(o).pauli_string
    return kron([PAULI[c] for c in s])


def entangler_pairs(pattern: str, n: int) -> tuple[tuple[int, int], ...]:
    """CZ blocks applied after the rotations of every layer."""
    if pattern == "none" or n < 2:
        return ()
    if pattern == "brick":
        even = [(i, i + 1) for i in range(0, n - 1, 2)]
        odd = [(i, i + 1) for i in range(1, n - 1, 2)]
        return tuple(even + odd)
    if pattern == "ladder":
        return tuple((i, i + 1) for i in range(n - 1))
    if pattern == "ring":
        pairs = [(i, i + 1) for i in range(n - 1)]
        if n > 2:
            pairs.append((n - 1, 0))
        return tuple(pairs)
    raise ValueError(f"unknown entangler pattern {pattern!r}")


def layered_circuit(n: int, d: int, pattern: str, gates, theta=None) -> Circuit:
    """Build a circuit from a ``d x n`` grid of gate names (X/Y/Z/ID/H).

    Parameters are numbered in slot order. ``theta`` defaults to zeros.
    """
    grid = [list(row) for row in gates]
    if len(grid) != d or any(len(row) != n for row in grid):
        raise CircuitInvariantError(f"gate grid must be {d} x {n}")
    pairs = entangler_pairs(pattern, n)
    layers = []
    k = 0
    for row in grid:
        specs = []
        for g in row:
            if g in ROTATION_AXES:
                specs.append(RotationSpec(g, k))
                k += 1
            else:
                specs.append(RotationSpec(g))
        layers.append(Layer(tuple(specs), pairs))
    if theta is None:
        theta = np.zeros(k)
    return Circuit(n, tuple(layers), tuple(float(t) for t in theta))


def brick_example_circuit(theta=None, axes: str = "Y") -> Circuit:
    """The 4-qubit, 3-layer brick circuit used to illustrate effective parameters."""
    if len(axes) == 1:
        grid = [[axes] * 4 for _ in range(3)]
    else:
        grid = [list(axes[4 * i : 4 * i + 4]) for i in range(3)]
    return layered_circuit(4, 3, "brick", grid, theta)


@dataclass(frozen=True)
class EnsembleSpec:
    n: int
    d: int
    observable: str = ""
    entangler_pattern: str = "brick"
    replacement_mode: str = "none"
    replacement_fraction: float = 0.0
    samples: int = 200
    master_seed: int = 0
    init: str = field(default="zero")

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if self.entangler_pattern not in ENTANGLER_PATTERNS:
            raise ValueError(f"unknown entangler pattern {self.entangler_pattern!r}")
        if self.replacement_mode not in REPLACEMENT_MODES:
            raise ValueError(f"unknown replacement mode {self.replacement_mode!r}")
        if not 0.0 <= self.replacement_fraction <= 1.0:
            raise ValueError("replacement_fraction must lie in [0, 1]")
        if self.replacement_mode == "none" and self.replacement_fraction != 0.0:
            raise ValueError("replacement_fraction must be 0 when replacement_mode is none")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @property
    def obs(self) -> Observable:
        text = self.observable or "Z^n"
        return parse_observable(text, self.n)


def sample_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for sample ``index``, keyed by (seed, index)."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def sample_codes(spec: EnsembleSpec, index: int) -> tuple[np.ndarray, np.ndarray]:
    """Raw draw for sample ``index``: gate codes and angles, both ``(d, n)``.

    Codes index ``GATE_NAMES``. Replaced slots carry angle 0.
    """
    if not 0 <= index < spec.samples:
        raise IndexError(f"sample index {index} outside 0..{spec.samples - 1}")
    rng = sample_rng(spec.master_seed, index)
    n, d = spec.n, spec.d
    codes = rng.integers(0, 3, size=(d, n)).astype(np.int8)
    theta = rng.uniform(-2 * math.pi, 2 * math.pi, size=(d, n))
    if spec.replacement_mode != "none":
        k = int(round(spec.replacement_fraction * n * d))
        if k:
            flat = rng.choice(n * d, size=k, replace=False)
            fixed = GATE_NAMES.index("ID" if spec.replacement_mode == "identity" else "H")
            codes.reshape(-1)[flat] = fixed
            theta.reshape(-1)[flat] = 0.0
    return codes, theta


def circuit_from_codes(n: int, pattern: str, codes, theta) -> Circuit:
    grid = [[GATE_NAMES[int(c)] for c in row] for row in codes]
    kept = [t for row_c, row_t in zip(codes, theta) for c, t in zip(row_c, row_t) if c < 3]
    return layered_circuit(n, len(grid), pattern, grid, kept)


def sample_circuit(spec: EnsembleSpec, index: int) -> Circuit:
    codes, theta = sample_codes(spec, index)
    return circuit_from_codes(spec.n, spec.entangler_pattern, codes, theta)


# -- JSON ---------------------------------------------------------------------

def circuit_to_dict(c: Circuit) -> dict:
    layers = []
    for layer in c.layers:
        rots = []
        for spec in layer.rotations:
            entry: dict = {"axis": spec.axis}
            if spec.param is not None:
                entry["param"] = spec.param
            rots.append(entry)
        layers.append({"rotations": rots, "entanglers": [list(p) for p in layer.entanglers]})
    return {"n": c.n, "layers": layers, "theta": list(c.theta)}


def format_float(x: float) -> str:
    """17 significant digits, always written as a decimal."""
    text = format(float(x), ".17g")
    if text.lstrip("-").isdigit():
        text += ".0"
    return text


def serialize(c: Circuit) -> str:
    # repr() of a Python float is the shortest round-tripping decimal (<= 17 digits)
    d = circuit_to_dict(c)
    body = json.dumps({k: v for k, v in d.items() if k != "theta"}, separators=(",", ":"))
    theta = "[" + ",".join(format_float(t) for t in c.theta) + "]"
    return body[:-1] + ',"theta":' + theta + "}"


def _require(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise CircuitSchemaError(f"missing key {key!r} in {where}")
    val = obj[key]
    if kind is int and isinstance(val, bool):
        raise CircuitSchemaError(f"{where}.{key} must be an integer")
    if not isinstance(val, kind):
        raise CircuitSchemaError(f"{where}.{key} has wrong type {type(val).__name__}")
    return val


def circuit_from_dict(obj) -> Circuit:
    if not isinstance(obj, dict):
        raise CircuitSchemaError("circuit document must be a JSON object")
    n = _require(obj, "n", int, "circuit")
    raw_layers = _require(obj, "layers", list, "circuit")
    theta = _require(obj, "theta", list, "circuit")
    for t in theta:
        if isinstance(t, bool) or not isinstance(t, (int, float)):
            raise CircuitSchemaError("theta entries must be numbers")
    layers = []
    for li, raw in enumerate(raw_layers):
        where = f"layers[{li}]"
        if not isinstance(raw, dict):
            raise CircuitSchemaError(f"{where} must be an object")
        rots = _require(raw, "rotations", list, where)
        ents = _require(raw, "entanglers", list, where)
        specs = []
        for ri, r in enumerate(rots):
            if not isinstance(r, dict):
                raise CircuitSchemaError(f"{where}.rotations[{ri}] must be an object")
            axis = _require(r, "axis", str, f"{where}.rotations[{ri}]")
            if axis not in ROTATION_AXES + FIXED_GATES:
                raise CircuitSchemaError(f"{where}.rotations[{ri}].axis {axis!r} not in X|Y|Z|ID|H")
            param = r.get("param")
            if param is not None and (isinstance(param, bool) or not isinstance(param, int)):
                raise CircuitSchemaError(f"{where}.rotations[{ri}].param must be an integer")
            specs.append(RotationSpec(axis, param))
        pairs = []
        for e in ents:
            if (
                not isinstance(e, list)
                or len(e) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in e)
            ):
                raise CircuitSchemaError(f"{where}.entanglers entries must be [int, int]")
            pairs.append((e[0], e[1]))
        layers.append(Layer(tuple(specs), tuple(pairs)))
    return Circuit(n, tuple(layers), tuple(float(t) for t in theta))


def deserialize(text: str) -> Circuit:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedCircuitJSON(f"malformed circuit JSON: {exc}") from exc
    return circuit_from_dict(obj)
