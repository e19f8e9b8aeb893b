"""Monte Carlo gradient statistics over random circuit ensembles, and scaling predictors."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np

from .circuit import EnsembleSpec, Observable, entangler_pairs, sample_codes
from .lightcone import count_effective
from .simulator import batch_slot_gradients

POOL_MODES = ("slots", "params")


@dataclass
class Welford:
    """Streaming count / mean / M2 accumulator; arrays accumulate elementwise."""

    count: int = 0
    mean: np.ndarray = field(default_factory=lambda: np.zeros(()))
    m2: np.ndarray = field(default_factory=lambda: np.zeros(()))

    @classmethod
    def empty(cls, shape=()) -> "Welford":
        return cls(0, np.zeros(shape), np.zeros(shape))

    def push(self, x) -> None:
        x = np.asarray(x, dtype=float)
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)

    def update(self, batch) -> None:
        """Fold in a batch whose leading axis indexes observations."""
        batch = np.asarray(batch, dtype=float)
        if batch.shape[0] == 0:
            return
        bmean = batch.mean(axis=0)
        bm2 = ((batch - bmean) ** 2).sum(axis=0)
        self.merge_in(Welford(batch.shape[0], bmean, bm2))

    def merge_in(self, other: "Welford") -> None:
        if other.count == 0:
            return
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, np.copy(other.mean), np.copy(other.m2)
            return
        total = self.count + other.count
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.count / total)
        self.m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / total)
        self.count = total

    def merge(self, other: "Welford") -> "Welford":
        out = Welford(self.count, np.copy(self.mean), np.copy(self.m2))
        out.merge_in(other)
        return out

    @property
    def variance(self):
        """Population variance M2 / count."""
        if self.count == 0:
            return np.full(np.shape(self.mean), np.nan)
        return self.m2 / self.count

    @property
    def stderr_mean(self):
        return np.sqrt(self.variance / self.count)

    @property
    def stderr_var(self):
        # normal-theory approximation from M2 alone
        if self.count < 2:
            return np.full(np.shape(self.mean), np.nan)
        return self.variance * math.sqrt(2.0 / (self.count - 1))


@dataclass
class GradientStats:
    spec: EnsembleSpec
    pool: str
    pooled: Welford
    per_slot: Welford
    circuits: int = 0
    m_total: int = 0

    @property
    def mean(self) -> float:
        return float(self.pooled.mean)

    @property
    def variance(self) -> float:
        return float(self.pooled.variance)

    @property
    def stderr_mean(self) -> float:
        return float(self.pooled.stderr_mean)

    @property
    def stderr_var(self) -> float:
        return float(self.pooled.stderr_var)

    @property
    def m_mean(self) -> float:
        """Average light-cone effective count over the sampled circuits."""
        return self.m_total / self.circuits if self.circuits else float("nan")

    def merge_in(self, other: "GradientStats") -> None:
        self.pooled.merge_in(other.pooled)
        self.per_slot.merge_in(other.per_slot)
        self.circuits += other.circuits
        self.m_total += other.m_total


def _empty_stats(spec: EnsembleSpec, pool: str) -> GradientStats:
    return GradientStats(spec, pool, Welford.empty(), Welford.empty((spec.d, spec.n)))


def _chunk_stats(spec: EnsembleSpec, pool: str, indices, init) -> GradientStats:
    obs = spec.obs
    draws = [sample_codes(spec, i) for i in indices]
    codes = np.stack([c for c, _ in draws])
    theta = np.stack([t for _, t in draws])
    ents = [entangler_pairs(spec.entangler_pattern, spec.n)] * spec.d
    grads = batch_slot_gradients(codes, theta, ents, obs, init)
    out = _empty_stats(spec, pool)
    out.per_slot.update(grads)
    if pool == "slots":
        out.pooled.update(grads.reshape(-1))
    else:
        out.pooled.update(grads[codes < 3])
    out.circuits = len(indices)
    out.m_total = sum(count_effective(c, ents, obs) for c in codes)
    return out


def estimate(
    spec: EnsembleSpec,
    init=None,
    pool: str = "slots",
    chunk: int = 250,
    workers: int = 1,
    sequential: bool = True,
) -> GradientStats:
    """Pooled and per-slot gradient statistics over ``spec.samples`` circuits.

    ``pool="slots"`` pools every one of the n*d rotation slots, with replaced
    (parameter-free) slots contributing an exact zero; ``pool="params"`` pools
    only slots that carry a parameter. With ``sequential`` the chunk results
    are merged in index order, which makes the output bit-reproducible.
    """
    if pool not in POOL_MODES:
        raise ValueError(f"pool must be one of {POOL_MODES}")
    if spec.samples < 2:
        raise ValueError("need at least 2 samples")
    chunks = [range(s, min(s + chunk, spec.samples)) for s in range(0, spec.samples, chunk)]
    total = _empty_stats(spec, pool)
    if workers <= 1:
        for idx in chunks:
            total.merge_in(_chunk_stats(spec, pool, idx, init))
        return total
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futures = [ex.submit(_chunk_stats, spec, pool, idx, init) for idx in chunks]
        done = futures if sequential else as_completed(futures)
        for fut in done:
            total.merge_in(fut.result())
    return total


# -- predictors ---------------------------------------------------------------

@dataclass(frozen=True)
class TheoryPrediction:
    model: str
    value: float
    alpha: float | None = None
    inputs: dict = field(default_factory=dict)


def predict_weingarten(n: int, trO2: float, trRho2: float = 1.0) -> TheoryPrediction:
    """Haar-average gradient variance Tr{O^2} Tr{rho^2} / (2^{3n} - 2^n)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > 20:
        raise OverflowError("n > 20 is outside the supported range")
    value = trO2 * trRho2 / (2.0 ** (3 * n) - 2.0**n)
    return TheoryPrediction("weingarten_eq6", value, None, {"n": n, "trO2": trO2, "trRho2": trRho2})


def predict_direct(
    n: int, d: int, m: float, alpha_fit: float, trO2: float = 1.0, trRho2: float = 1.0
) -> TheoryPrediction:
    """Deep-circuit variance (alpha - 1) m Tr{O^2} Tr{rho^2} / (2^{3n+1} n d)."""
    if m > n * d:
        raise ValueError(f"m = {m} exceeds n*d = {n * d}")
    if m < 0:
        raise ValueError("m must be non-negative")
    if alpha_fit <= 1:
        raise ValueError("alpha must exceed 1")
    value = (alpha_fit - 1) * m * trO2 * trRho2 / (2.0 ** (3 * n + 1) * n * d)
    return TheoryPrediction(
        "direct_eq12",
        value,
        alpha_fit,
        {"n": n, "d": d, "m": m, "trO2": trO2, "trRho2": trRho2},
    )


@dataclass(frozen=True)
class AlphaFit:
    alpha: float
    residual: float  # RMS residual in natural-log space
    observations: int


def fit_alpha(observations, trO2: float = 1.0, trRho2: float = 1.0) -> AlphaFit:
    """Least-squares fit of log(alpha - 1) to ``(n, d, m, variance)`` observations."""
    obs = list(observations)
    if len(obs) < 3:
        raise ValueError("fit_alpha needs at least 3 observations")
    base = []
    logs = []
    for n, d, m, var in obs:
        if var <= 0 or m <= 0:
            raise ValueError("observations need positive variance and m")
        base.append(predict_direct(n, d, m, 2.0, trO2, trRho2).value)
        logs.append(math.log(var))
    base = np.array(base)
    if np.allclose(base, base[0], rtol=1e-12, atol=0):
        raise ValueError("degenerate fit: all observations share the same predictor")
    y = np.array(logs) - np.log(base)
    log_am1 = float(y.mean())
    resid = float(np.sqrt(np.mean((y - log_am1) ** 2)))
    return AlphaFit(1.0 + math.exp(log_am1), resid, len(obs))


# -- expectation scaling ------------------------------------------------------

@dataclass(frozen=True)
class ExpectationRow:
    n: int
    d: int
    samples: int
    seed: int
    mean: float
    stderr: float
    three_pow: float

    @property
    def nonzero(self) -> bool:
        return self.mean != 0.0

    @property
    def within_3se_of_zero(self) -> bool:
        return abs(self.mean) <= 3 * self.stderr

    @property
    def ratio_to_three_pow(self) -> float:
        return abs(self.mean) / self.three_pow


def expectation_scaling_report(
    n_list,
    d: int | None = None,
    samples: int = 2000,
    seed: int = 0,
    observable: str = "Z^2I^*",
    pattern: str = "brick",
    **kwargs,
) -> list[ExpectationRow]:
    """Pooled mean gradient per qubit count next to the 3^-n reference column.

    ``d`` defaults to 12 n.
    """
    rows = []
    for n in n_list:
        depth = 12 * n if d is None else d
        spec = EnsembleSpec(
            n, depth, observable, pattern, samples=samples, master_seed=seed
        )
        st = estimate(spec, **kwargs)
        rows.append(ExpectationRow(n, depth, samples, seed, st.mean, st.stderr_mean, 3.0**-n))
    return rows


def obs_traces(o: Observable, n: int) -> tuple[float, float]:
    """Tr{O^2} for a Pauli string and Tr{rho^2} for a pure state."""
    return float(2**n), 1.0
