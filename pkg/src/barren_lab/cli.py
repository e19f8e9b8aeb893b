"""``barren-lab`` command line: verify, channel, lightcone, sample, sweep.

Exit codes: 0 success, 1 verify failure, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from . import moments as mo
from .circuit import (
    ENTANGLER_PATTERNS,
    REPLACEMENT_MODES,
    CircuitError,
    EnsembleSpec,
    deserialize,
    brick_example_circuit,
    format_float,
    parse_observable,
    sample_circuit,
    serialize,
)
from .lightcone import analyze, validate_against_gradient
from .stats import estimate, fit_alpha, predict_direct, predict_weingarten
from .verify import EXPECTED_DIVERGENCE, FAIL, format_table, run_verify_suite

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

EXPERIMENTS = (
    "expectation_sweep",
    "variance_sweep",
    "replacement_sweep",
    "observable_compare",
    "verify",
    "lightcone",
    "channel",
)
STAT_EXPERIMENTS = EXPERIMENTS[:4]

CSV_HEADER = [
    "n", "d", "observable", "entangler", "replacement_mode", "fraction", "samples", "seed",
    "m_effective", "mean_grad", "stderr_mean", "var_grad", "stderr_var",
    "pred_eq6", "pred_eq12_alpha", "alpha_used",
]
TRUNCATED_MARKER = "# TRUNCATED"

DEFAULT_OBSERVABLES = {
    "expectation_sweep": ["Z^2I^*"],
    "variance_sweep": ["Z^n"],
    "replacement_sweep": ["Z^n"],
    "observable_compare": ["Z^n", "(ZI)^*", "(IZ)^*", "Z^hI^h", "I^hZ^h"],
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str = "variance_sweep"
    n_list: list = field(default_factory=lambda: [2, 4])
    d_list: list = field(default_factory=lambda: [5, 10, 20, 40])
    observables: list = field(default_factory=list)
    entangler_pattern: str = "brick"
    replacement_mode: str = "none"
    fractions: list = field(default_factory=lambda: [0.0])
    samples: int = 200
    master_seed: int = 0
    output_path: str = "results/sweep.csv"
    sequential_reduction: bool = True
    workers: int = 1
    pool: str = "slots"
    alpha: float | None = None

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.n_list or not self.d_list or not self.fractions:
            raise ConfigError("n_list, d_list and fractions must be non-empty")
        if any(int(n) < 1 for n in self.n_list) or any(int(d) < 1 for d in self.d_list):
            raise ConfigError("n and d values must be positive")
        if self.entangler_pattern not in ENTANGLER_PATTERNS:
            raise ConfigError(f"unknown entangler pattern {self.entangler_pattern!r}")
        if self.replacement_mode not in REPLACEMENT_MODES:
            raise ConfigError(f"unknown replacement mode {self.replacement_mode!r}")
        if self.replacement_mode == "none" and any(float(f) != 0.0 for f in self.fractions):
            raise ConfigError("fractions must be 0 when replacement_mode is none")
        if any(not 0.0 <= float(f) <= 1.0 for f in self.fractions):
            raise ConfigError("fractions must lie in [0, 1]")
        if self.experiment in STAT_EXPERIMENTS and self.samples < 2:
            raise ConfigError("statistical experiments need samples >= 2")
        if self.pool not in ("slots", "params"):
            raise ConfigError("pool must be 'slots' or 'params'")
        if self.alpha is not None and self.alpha <= 1:
            raise ConfigError("alpha must exceed 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        for n in self.n_list:
            for o in self.resolved_observables():
                try:
                    resolve_observable(o, int(n))
                except ValueError as exc:
                    raise ConfigError(str(exc)) from exc
        return self

    def resolved_observables(self) -> list[str]:
        return list(self.observables) or DEFAULT_OBSERVABLES.get(self.experiment, ["Z^n"])

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        if "config" in obj and isinstance(obj["config"], dict):
            obj = obj["config"]  # a run manifest
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def resolve_observable(text: str, n: int) -> str:
    """Expand ``h`` (half of n) and fill shorthands into a concrete Pauli string."""
    if "h" in text:
        if n % 2:
            raise ValueError(f"observable {text!r} needs an even qubit count, got n={n}")
        text = text.replace("h", str(n // 2))
    if "(" in text and "^*" in text:
        unit = text[text.index("(") + 1 : text.index(")")]
        if n % len(unit):
            raise ValueError(f"observable {text!r} does not tile n={n}")
        text = text.replace("^*", f"^{n // len(unit)}")
    return parse_observable(text, n).pauli_string


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    return obj


# -- sweep --------------------------------------------------------------------

def sweep_rows(cfg: ExperimentConfig, progress=None):
    """Yield one stats record per (n, d, observable, fraction), in that order."""
    for n in cfg.n_list:
        for d in cfg.d_list:
            for otext in cfg.resolved_observables():
                obs = resolve_observable(otext, int(n))
                for frac in cfg.fractions:
                    spec = EnsembleSpec(
                        int(n), int(d), obs, cfg.entangler_pattern, cfg.replacement_mode,
                        float(frac), cfg.samples, cfg.master_seed,
                    )
                    t0 = time.perf_counter()
                    st = estimate(
                        spec, pool=cfg.pool, workers=cfg.workers,
                        sequential=cfg.sequential_reduction,
                    )
                    if progress:
                        progress(f"n={n} d={d} O={obs} p={frac}: var={st.variance:.4e} "
                                 f"({time.perf_counter() - t0:.1f}s)")
                    yield {
                        "n": int(n), "d": int(d), "observable": obs,
                        "entangler": cfg.entangler_pattern,
                        "replacement_mode": cfg.replacement_mode, "fraction": float(frac),
                        "samples": cfg.samples, "seed": cfg.master_seed,
                        "m_effective": st.m_mean, "mean_grad": st.mean,
                        "stderr_mean": st.stderr_mean, "var_grad": st.variance,
                        "stderr_var": st.stderr_var,
                    }


def add_predictions(rows: list[dict], alpha: float | None) -> float | None:
    """Fill the predictor columns; fits alpha from the rows when not given."""
    if alpha is None:
        usable = [(r["n"], r["d"], r["m_effective"], r["var_grad"]) for r in rows
                  if r["m_effective"] > 0 and r["var_grad"] > 0]
        try:
            alpha = fit_alpha(usable).alpha
        except ValueError:
            alpha = None
    for r in rows:
        n, d = r["n"], r["d"]
        r["pred_eq6"] = predict_weingarten(n, float(2**n), 1.0).value
        if alpha is not None and 0 <= r["m_effective"] <= n * d:
            r["pred_eq12_alpha"] = predict_direct(n, d, r["m_effective"], alpha).value
            r["alpha_used"] = alpha
        else:
            r["pred_eq12_alpha"] = None
            r["alpha_used"] = None
    return alpha


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def emit_csv(rows, path, truncated: bool = False) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_cell(r.get(k)) for k in CSV_HEADER])
    if truncated:
        buf.write(TRUNCATED_MARKER + "\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def manifest_path(csv_path: str | Path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".manifest.json")


def run_sweep(cfg: ExperimentConfig, log=None) -> tuple[list[dict], bool]:
    out = Path(cfg.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    rows: list[dict] = []
    truncated = False
    try:
        for row in sweep_rows(cfg, log):
            rows.append(row)
    except KeyboardInterrupt:
        truncated = True
    alpha = add_predictions(rows, cfg.alpha)
    emit_csv(rows, out, truncated)
    manifest = {
        "config": cfg.to_dict(),
        "seed": cfg.master_seed,
        "version": __version__,
        "started": started,
        "elapsed_s": round(time.perf_counter() - t0, 3),
        "csv": out.name,
        "rows": len(rows),
        "alpha_fit": alpha,
        "truncated": truncated,
    }
    manifest_path(out).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return rows, truncated


# -- other subcommands --------------------------------------------------------

def channel_table(n_list, d_list) -> list[dict]:
    rows = []
    for n in n_list:
        for d in d_list:
            ex, pa = mo.exact_expansion(int(n), int(d)), mo.closed_form_expansion(int(n), int(d))
            for k in range(int(n) + 1):
                sigma = tuple(range(k))
                rows.append({
                    "n": int(n), "d": int(d), "traced_qubits": k,
                    "exact": str(ex.coefficient(sigma)), "printed": str(pa.coefficient(sigma)),
                    "agree": ex.coefficient(sigma) == pa.coefficient(sigma),
                    "exact_unitality": str(ex.unitality_sum()),
                    "printed_unitality": str(pa.unitality_sum()),
                })
    return rows


def _print(msg: str = "") -> None:
    print(msg, flush=True)


def _err(msg: str) -> None:
    print(f"barren-lab: {msg}", file=sys.stderr, flush=True)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (or a run manifest)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--samples", type=int, help="circuits per data point")
    common.add_argument("--out", help="output path")
    common.add_argument("--sequential", action="store_true", default=None,
                        help="merge partial results in index order (bit-reproducible)")

    p = argparse.ArgumentParser(prog="barren-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("verify", parents=[common], help="run the moment-formula oracle suite")

    ch = sub.add_parser("channel", parents=[common], help="first-moment coefficients, exact vs printed")
    ch.add_argument("--n", type=int, nargs="+")
    ch.add_argument("--d", type=int, nargs="+")

    lc = sub.add_parser("lightcone", parents=[common], help="effective-parameter analysis")
    lc.add_argument("--circuit", help="circuit JSON file; defaults to the 4x3 brick example")
    lc.add_argument("--observable", default=None)
    lc.add_argument("--trials", type=int, default=20, help="gradient soundness trials (n <= 6)")

    sm = sub.add_parser("sample", parents=[common], help="emit sampled circuits as JSON lines")
    sm.add_argument("--n", type=int, default=4)
    sm.add_argument("--d", type=int, default=3)
    sm.add_argument("--entangler", default="brick", choices=ENTANGLER_PATTERNS)
    sm.add_argument("--replacement-mode", default="none", choices=REPLACEMENT_MODES)
    sm.add_argument("--fraction", type=float, default=0.0)
    sm.add_argument("--index", type=int, default=0)
    sm.add_argument("--count", type=int, default=1)

    sw = sub.add_parser("sweep", parents=[common], help="Monte Carlo gradient statistics sweep")
    sw.add_argument("--experiment", choices=STAT_EXPERIMENTS)
    sw.add_argument("--n", dest="n_list", type=int, nargs="+")
    sw.add_argument("--d", dest="d_list", type=int, nargs="+")
    sw.add_argument("--observable", dest="observables", nargs="+")
    sw.add_argument("--entangler", dest="entangler_pattern", choices=ENTANGLER_PATTERNS)
    sw.add_argument("--replacement-mode", dest="replacement_mode", choices=REPLACEMENT_MODES)
    sw.add_argument("--fractions", type=float, nargs="+")
    sw.add_argument("--workers", type=int)
    sw.add_argument("--pool", choices=("slots", "params"))
    sw.add_argument("--alpha", type=float)
    sw.add_argument("-q", "--quiet", action="store_true")
    return p


def _sweep_config(args) -> ExperimentConfig:
    raw = load_config(args.config)
    cfg = ExperimentConfig.from_dict(raw)
    overrides = {
        "experiment": args.experiment, "n_list": args.n_list, "d_list": args.d_list,
        "observables": args.observables, "entangler_pattern": args.entangler_pattern,
        "replacement_mode": args.replacement_mode, "fractions": args.fractions,
        "workers": args.workers, "pool": args.pool, "alpha": args.alpha,
        "samples": args.samples, "master_seed": args.seed, "output_path": args.out,
        "sequential_reduction": args.sequential,
    }
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    if cfg.experiment not in STAT_EXPERIMENTS:
        raise ConfigError(f"sweep cannot run experiment {cfg.experiment!r}")
    if cfg.replacement_mode != "none" and cfg.fractions == [0.0] and "fractions" not in raw \
            and args.fractions is None:
        cfg.fractions = [0.0, 0.25, 0.5]
    return cfg.validate()


def cmd_verify(args) -> int:
    raw = load_config(args.config)
    seed = args.seed if args.seed is not None else int(raw.get("master_seed", 0))
    results = run_verify_suite(seed)
    _print(format_table(results))
    failed = [r for r in results if r.status == FAIL]
    diverged = [r for r in results if r.status == EXPECTED_DIVERGENCE]
    _print(f"\n{len(results) - len(failed) - len(diverged)} passed, {len(diverged)} expected "
           f"divergence, {len(failed)} failed")
    if args.out:
        payload = [dataclasses.asdict(r) for r in results]
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_channel(args) -> int:
    raw = load_config(args.config)
    n_list = args.n or raw.get("n_list") or [1, 2]
    d_list = args.d or raw.get("d_list") or [1, 2, 3, 4]
    rows = channel_table(n_list, d_list)
    _print(f"{'n':>2} {'d':>3} {'|s|':>3} {'exact':>14} {'printed':>14}  unitality exact vs printed")
    for r in rows:
        flag = "" if r["agree"] else "  <- differs"
        _print(f"{r['n']:>2} {r['d']:>3} {r['traced_qubits']:>3} {r['exact']:>14} "
               f"{r['printed']:>14}  {r['exact_unitality']} vs {r['printed_unitality']}{flag}")
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    return EXIT_OK


def cmd_lightcone(args) -> int:
    raw = load_config(args.config)
    path = args.circuit or raw.get("circuit")
    if path:
        try:
            circ = deserialize(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read circuit {path}: {exc}") from exc
    else:
        circ = brick_example_circuit(axes="XYZXYZXYZXYZ")
    otext = args.observable or (raw.get("observables") or [None])[0] or "ZI^*"
    obs = resolve_observable(otext, circ.n)
    report = analyze(circ, obs)
    _print(f"observable {obs}; brackets mark parameters outside the light cone")
    _print(report.grid())
    payload = report.to_dict()
    if circ.n <= 6 and args.trials > 0:
        sound = validate_against_gradient(circ, obs, trials=args.trials, seed=args.seed or 0)
        payload["soundness"] = {
            "trials": sound.trials, "violations": len(sound.violations),
            "max_ineffective_grad": sound.max_ineffective_grad,
        }
        _print(f"soundness: {len(sound.violations)} violations over {sound.trials} trials")
    text = json.dumps(payload)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        _print(text)
    return EXIT_OK


def cmd_sample(args) -> int:
    raw = load_config(args.config)
    spec = EnsembleSpec(
        args.n, args.d, "", args.entangler, args.replacement_mode, args.fraction,
        samples=args.index + args.count,
        master_seed=args.seed if args.seed is not None else int(raw.get("master_seed", 0)),
    )
    lines = [serialize(sample_circuit(spec, i)) for i in range(args.index, args.index + args.count)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _sweep_config(args)
    log = None if args.quiet else (lambda m: print(m, file=sys.stderr, flush=True))
    rows, truncated = run_sweep(cfg, log)
    _print(f"wrote {len(rows)} rows to {cfg.output_path}" + (" (truncated)" if truncated else ""))
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "channel": cmd_channel,
    "lightcone": cmd_lightcone,
    "sample": cmd_sample,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, CircuitError, TypeError) as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    except ValueError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
