"""Structural effective-parameter count.

A backward sweep tracks, per qubit, how the Heisenberg-evolved observable can
look there:

* ABSENT  -- identity only,
* DIAG    -- only Z-like components (these commute with CZ),
* GENERAL -- may carry X/Y components.

A rotation slot is effective when its qubit is not ABSENT at that point.
The rule over-approximates: every slot it marks ineffective has an
identically zero gradient, but an effective slot may still have zero
gradient (e.g. an RZ acting on a DIAG qubit).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .circuit import GATE_NAMES, Circuit, Observable
from .simulator import circuit_codes, gradient_shift

SOUNDNESS_TOL = 1e-10
_ID = GATE_NAMES.index("ID")


class SupportLabel(IntEnum):
    ABSENT = 0
    DIAG = 1
    GENERAL = 2


@dataclass(frozen=True)
class LightConeReport:
    n: int
    d: int
    observable: str
    effective: tuple[tuple[bool, ...], ...]  # [layer][qubit]
    parameterized: tuple[tuple[bool, ...], ...]
    param_labels: tuple[tuple[int | None, ...], ...]

    @property
    def m(self) -> int:
        return sum(
            e and p
            for erow, prow in zip(self.effective, self.parameterized)
            for e, p in zip(erow, prow)
        )

    @property
    def per_layer(self) -> list[int]:
        return [
            sum(e and p for e, p in zip(erow, prow))
            for erow, prow in zip(self.effective, self.parameterized)
        ]

    @property
    def ratio(self) -> float:
        """m / (n d), rounded to 4 decimals."""
        return round(self.m / (self.n * self.d), 4)

    def gray_slots(self) -> list[int]:
        """1-based slot numbers (layer-major) of parameterized but ineffective gates."""
        out = []
        for li in range(self.d):
            for q in range(self.n):
                if self.parameterized[li][q] and not self.effective[li][q]:
                    out.append(li * self.n + q + 1)
        return out

    def ineffective_params(self) -> list[int]:
        return [
            self.param_labels[li][q]
            for li in range(self.d)
            for q in range(self.n)
            if self.parameterized[li][q] and not self.effective[li][q]
        ]

    def grid(self) -> str:
        """Qubits as rows, layers as columns; gray slots shown in brackets."""
        width = len(str(self.n * self.d)) + 3
        lines = []
        for q in range(self.n):
            cells = []
            for li in range(self.d):
                slot = li * self.n + q + 1
                if not self.parameterized[li][q]:
                    cell = "--"
                elif self.effective[li][q]:
                    cell = f"t{slot}"
                else:
                    cell = f"[t{slot}]"
                cells.append(cell.rjust(width))
            lines.append(f"q{q}:" + "".join(cells))
        lines.append(f"m = {self.m} of {self.n * self.d} slots (m/nd = {self.ratio:.4f})")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "observable": self.observable,
            "m": self.m,
            "m_over_nd": self.ratio,
            "per_layer": self.per_layer,
            "gray_slots": self.gray_slots(),
            "effective": [list(r) for r in self.effective],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _initial_labels(o: Observable) -> list[SupportLabel]:
    table = {"I": SupportLabel.ABSENT, "Z": SupportLabel.DIAG}
    return [table.get(ch, SupportLabel.GENERAL) for ch in o.pauli_string]


def effective_grid(codes, entanglers, o: Observable) -> np.ndarray:
    """Boolean ``(d, n)`` effectiveness grid from gate codes (see ``GATE_NAMES``)."""
    codes = np.asarray(codes)
    d, n = codes.shape
    labels = _initial_labels(o)
    eff = np.zeros((d, n), dtype=bool)
    for li in range(d - 1, -1, -1):
        for a, b in reversed(entanglers[li]):
            la, lb = labels[a], labels[b]
            if la == SupportLabel.GENERAL:
                labels[b] = max(lb, SupportLabel.DIAG)
            if lb == SupportLabel.GENERAL:
                labels[a] = max(la, SupportLabel.DIAG)
        for q in range(n):
            code = codes[li, q]
            if labels[q] == SupportLabel.ABSENT or code == _ID:
                continue
            if code < 3:
                eff[li, q] = True
            labels[q] = SupportLabel.GENERAL
    return eff


def analyze(c: Circuit, o: Observable | str) -> LightConeReport:
    o = o if isinstance(o, Observable) else Observable(str(o))
    if o.n != c.n:
        raise ValueError(f"observable {o} has length {o.n}, circuit has {c.n} qubits")
    codes, _ = circuit_codes(c)
    eff = effective_grid(codes, [layer.entanglers for layer in c.layers], o)
    param = tuple(tuple(s.param is not None for s in layer.rotations) for layer in c.layers)
    plabels = tuple(tuple(s.param for s in layer.rotations) for layer in c.layers)
    return LightConeReport(
        c.n,
        c.d,
        o.pauli_string,
        tuple(tuple(bool(v) for v in row) for row in eff),
        param,
        plabels,
    )


def count_effective(codes, entanglers, o: Observable) -> int:
    return int(effective_grid(codes, entanglers, o).sum())


@dataclass(frozen=True)
class SoundnessReport:
    trials: int
    checked_params: int
    violations: tuple[tuple[int, int, float], ...]  # (trial, param, |grad|)
    max_ineffective_grad: float

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_against_gradient(c: Circuit, o, trials: int = 20, seed: int = 0, init=None) -> SoundnessReport:
    """Check that every slot flagged ineffective has zero gradient at random angles."""
    if c.n > 6:
        raise ValueError("gradient validation is limited to n <= 6")
    o = o if isinstance(o, Observable) else Observable(str(o))
    report = analyze(c, o)
    idle = report.ineffective_params()
    rng = np.random.default_rng(seed)
    violations = []
    worst = 0.0
    for t in range(trials):
        if not idle:
            break
        theta = rng.uniform(-2 * np.pi, 2 * np.pi, size=c.num_params)
        grad = gradient_shift(c.with_theta(theta), o, init)
        for k in idle:
            g = abs(grad[k])
            worst = max(worst, g)
            if g > SOUNDNESS_TOL:
                violations.append((t, k, g))
    return SoundnessReport(trials, len(idle), tuple(violations), worst)
