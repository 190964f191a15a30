"""Command line front end.

Subcommands:
    verify       run the named invariant checks, one pass/fail line each
    run          one Monte Carlo cell (single eta/d/n/learner/adversary)
    sweep        cartesian grid of cells, optionally in parallel workers
    attack-eval  one cell evaluated against every shipped adversary
    curve        oblivious-poisoning excess across sample sizes

All randomness is derived from --seed (default 1729) through per-cell counter
streams, so outputs are byte-identical across runs and worker counts. eta and
bias are parsed exactly ("1/64" or "0.015625", never binary float rounding).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .adversaries import build_scheme_1d, lift_scheme
from .core import (
    BiasVector,
    PreconditionError,
    ProductBiasDistribution,
    RandomSource,
    bayes_loss,
    stable_stream_id,
)
from .experiments import (
    ADVERSARY_IDS,
    LEARNER_IDS,
    Z95,
    ExcessEstimate,
    SweepGrid,
    curve_threshold,
    learning_curve_experiment,
    make_learner,
    run_sweep,
)
from .verify import run_checks

DEFAULT_SEED = 1729

COLUMNS = (
    "experiment", "learner", "adversary", "d", "eta", "n", "bias", "trials",
    "seed", "stream", "mean", "ci_low", "ci_high", "bayes", "excess",
    "excess_ci_low", "excess_ci_high", "bound_name", "bound_value", "passed",
    "error", "config_hash",
)


class ConfigError(ValueError):
    """Bad flag value, bad config file, or inconsistent combination."""


# ---------------------------------------------------------------------------
# option parsing and config files


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a fraction: {text!r}") from exc


def _parse_list(text: str, convert) -> tuple:
    items = [part.strip() for part in text.split(",") if part.strip()]
    if not items:
        raise ConfigError(f"empty list: {text!r}")
    return tuple(convert(part) for part in items)


def _parse_int(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError as exc:
        raise ConfigError(f"not an integer: {text!r}") from exc


CONVERTERS = {
    "eta": lambda s: _parse_list(s, parse_fraction),
    "d": lambda s: _parse_list(s, _parse_int),
    "n": lambda s: _parse_list(s, _parse_int),
    "trials": _parse_int,
    "seed": _parse_int,
    "learner": lambda s: _parse_list(s, str),
    "adversary": lambda s: _parse_list(s, str),
    "bias": parse_fraction,
    "format": lambda s: s.strip(),
    "out": lambda s: s,
    "workers": _parse_int,
}

DEFAULTS = {
    "eta": "1/64",
    "d": "1",
    "n": None,
    "trials": "10000",
    "seed": str(DEFAULT_SEED),
    "learner": "exp-mech",
    "adversary": "greedy",
    "bias": "1/4",
    "format": "csv",
    "out": None,
    "workers": "1",
}


def load_config_file(path: str) -> dict[str, str]:
    """Flat key=value file; '#' starts a comment; unknown keys are errors."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in CONVERTERS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r} "
                                  f"(known: {', '.join(sorted(CONVERTERS))})")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = value
    return values


@dataclass(frozen=True)
class RunConfig:
    command: str
    etas: tuple[Fraction, ...]
    dims: tuple[int, ...]
    sizes: tuple[int, ...] | None
    trials: int
    seed: int
    learners: tuple[str, ...]
    adversaries: tuple[str, ...]
    bias: Fraction
    out: str | None
    format: str
    workers: int

    def hash_payload(self) -> dict:
        """Statistical identity of the run; excludes out/format/workers, which
        cannot change any computed number."""
        return {
            "command": self.command,
            "eta": [str(e) for e in self.etas],
            "d": list(self.dims),
            "n": list(self.sizes) if self.sizes is not None else None,
            "trials": self.trials,
            "seed": self.seed,
            "learner": list(self.learners),
            "adversary": list(self.adversaries),
            "bias": str(self.bias),
        }

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.hash_payload(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def resolve_config(ns: argparse.Namespace, overrides: dict[str, str] | None = None) -> RunConfig:
    """Merge flags over config-file values over built-in defaults."""
    file_values = load_config_file(ns.config) if getattr(ns, "config", None) else {}
    defaults = dict(DEFAULTS)
    defaults.update(overrides or {})

    def pick(key: str):
        flag = getattr(ns, key.replace("-", "_"), None)
        raw = flag if flag is not None else file_values.get(key, defaults[key])
        return CONVERTERS[key](raw) if raw is not None else None

    cfg = RunConfig(
        command=ns.command,
        etas=pick("eta"),
        dims=pick("d"),
        sizes=pick("n"),
        trials=pick("trials"),
        seed=pick("seed"),
        learners=pick("learner"),
        adversaries=pick("adversary"),
        bias=pick("bias"),
        out=pick("out"),
        format=pick("format"),
        workers=pick("workers"),
    )
    for eta in cfg.etas:
        if not 0 < eta < 1:
            raise ConfigError(f"eta must lie in (0, 1), got {eta}")
    for d in cfg.dims:
        if not 1 <= d <= 16:
            raise ConfigError(f"d must lie in [1, 16], got {d}")
    if cfg.sizes is not None and any(n < 1 for n in cfg.sizes):
        raise ConfigError("n must be >= 1")
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg.format!r}")
    if abs(cfg.bias) > Fraction(1, 2):
        raise ConfigError(f"bias must lie in [-1/2, 1/2], got {cfg.bias}")
    for name in cfg.learners:
        if name not in LEARNER_IDS:
            raise ConfigError(f"unknown learner {name!r} (known: {', '.join(LEARNER_IDS)})")
    for name in cfg.adversaries:
        if name not in ADVERSARY_IDS:
            raise ConfigError(f"unknown adversary {name!r} (known: {', '.join(ADVERSARY_IDS)})")
    return cfg


def _require_single(cfg: RunConfig, fields: Sequence[str]) -> None:
    lens = {"eta": len(cfg.etas), "d": len(cfg.dims),
            "n": len(cfg.sizes) if cfg.sizes is not None else 1,
            "learner": len(cfg.learners), "adversary": len(cfg.adversaries)}
    for field in fields:
        if lens[field] != 1:
            raise ConfigError(f"{cfg.command} takes a single --{field} value")


# ---------------------------------------------------------------------------
# result rows and emitters


def estimate_to_row(est: ExcessEstimate, experiment: str, config_hash: str,
                    bound_name: str | None = None, bound_value: float | None = None,
                    passed: bool | None = None) -> dict:
    meta = est.metadata
    return {
        "experiment": experiment or meta.get("experiment", ""),
        "learner": meta.get("learner", ""),
        "adversary": meta.get("adversary", ""),
        "d": meta.get("d", ""),
        "eta": meta.get("eta", ""),
        "n": meta.get("n", ""),
        "bias": meta.get("bias", ""),
        "trials": est.trials,
        "seed": est.seed,
        "stream": meta.get("stream", ""),
        "mean": est.mean,
        "ci_low": est.ci_low,
        "ci_high": est.ci_high,
        "bayes": est.bayes,
        "excess": est.excess,
        "excess_ci_low": est.excess_ci_low,
        "excess_ci_high": est.excess_ci_high,
        "bound_name": bound_name,
        "bound_value": bound_value,
        "passed": passed,
        "error": meta.get("error", ""),
        "config_hash": config_hash,
    }


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "" if math.isnan(value) else format(value, ".17g")
    return str(value)


def render_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_format_cell(row[c]) for c in COLUMNS])
    return buf.getvalue()


def _json_cell(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, Fraction):
        return str(value)
    return value


def render_json(rows: Sequence[dict]) -> str:
    payload = [{c: _json_cell(row[c]) for c in COLUMNS} for row in rows]
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def emit(rows: Sequence[dict], cfg: RunConfig) -> None:
    text = render_csv(rows) if cfg.format == "csv" else render_json(rows)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify(ns: argparse.Namespace) -> int:
    seed = _parse_int(ns.seed) if ns.seed is not None else DEFAULT_SEED
    names = list(_parse_list(ns.check, str)) if ns.check else None
    results = run_checks(seed=seed, names=names, inject_fault=ns.inject_fault)
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
    failed = [res.name for res in results if not res.passed]
    print(f"{len(results)} checks, {len(results) - len(failed)} passed, {len(failed)} failed")
    if failed:
        print(f"failed: {', '.join(failed)}")
    return 0 if not failed else 1


def _grid_rows(cfg: RunConfig) -> list[dict]:
    grid = SweepGrid(etas=cfg.etas, dims=cfg.dims, sizes=cfg.sizes,
                     learners=cfg.learners, adversaries=cfg.adversaries,
                     trials=cfg.trials, seed=cfg.seed, bias=cfg.bias)
    results = run_sweep(grid, workers=cfg.workers)
    return [estimate_to_row(est, cfg.command, cfg.config_hash) for est in results]


def cmd_run(ns: argparse.Namespace) -> int:
    cfg = resolve_config(ns)
    _require_single(cfg, ("eta", "d", "n", "learner", "adversary"))
    rows = _grid_rows(cfg)
    emit(rows, cfg)
    return 0 if any(not row["error"] for row in rows) else 1


def cmd_sweep(ns: argparse.Namespace) -> int:
    cfg = resolve_config(ns)
    rows = _grid_rows(cfg)
    emit(rows, cfg)
    return 0 if any(not row["error"] for row in rows) else 1


def cmd_attack_eval(ns: argparse.Namespace) -> int:
    cfg = resolve_config(ns, overrides={"adversary": ",".join(ADVERSARY_IDS)})
    _require_single(cfg, ("eta", "d", "n", "learner"))
    rows = _grid_rows(cfg)
    emit(rows, cfg)
    return 0 if any(not row["error"] for row in rows) else 1


def cmd_curve(ns: argparse.Namespace) -> int:
    cfg = resolve_config(ns, overrides={"n": "16,32,64,128"})
    _require_single(cfg, ("eta", "d", "learner"))
    eta, d = cfg.etas[0], cfg.dims[0]
    if not d * eta < 1:
        raise ConfigError(f"curve requires d * eta < 1, got {d} * {eta}")
    inner, _hard = build_scheme_1d(d * eta)
    scheme = lift_scheme(inner, d)
    coord = cfg.bias if ns.bias is not None else inner.endpoint
    u = BiasVector([coord] * d)
    learner = make_learner(cfg.learners[0], _full_class(d), eta, max(cfg.sizes), u.coords)
    stream = stable_stream_id("curve", str(eta), d, cfg.learners[0], cfg.trials, str(coord))
    rng = RandomSource(cfg.seed, stream)
    report = learning_curve_experiment(learner, u, scheme, cfg.sizes, cfg.trials, rng)
    bayes = float(bayes_loss(ProductBiasDistribution(u)))
    threshold = curve_threshold(eta, d)
    rows = []
    for n, excess, se in zip(report.sizes, report.excesses, report.std_errors):
        half = Z95 * se
        est = ExcessEstimate(
            mean=excess + bayes, ci_low=excess + bayes - half, ci_high=excess + bayes + half,
            bayes=bayes, excess=excess, excess_ci_low=excess - half,
            excess_ci_high=excess + half, trials=cfg.trials, seed=cfg.seed,
            metadata={"experiment": "curve", "learner": learner.name,
                      "adversary": "oblivious-grid", "n": n, "eta": str(eta),
                      "d": d, "stream": stream, "bias": str(coord)})
        rows.append(estimate_to_row(est, "curve", cfg.config_hash,
                                    bound_name="recurring-threshold",
                                    bound_value=threshold,
                                    passed=excess >= threshold))
    emit(rows, cfg)
    return 0


def _full_class(d: int):
    from .core import HypothesisClass

    return HypothesisClass.full(d)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poisonlab",
        description="Simulators for learning under instance-targeted data poisoning.")
    sub = parser.add_subparsers(dest="command", required=True)

    ver = sub.add_parser("verify", help="run the built-in invariant checks")
    ver.add_argument("--seed", help=f"base seed (default {DEFAULT_SEED})")
    ver.add_argument("--check", help="comma list of check names to run (default all)")
    ver.add_argument("--inject-fault", help=argparse.SUPPRESS)
    ver.set_defaults(func=cmd_verify)

    def add_common(p, include=("eta", "d", "n", "trials", "seed", "learner",
                               "adversary", "bias", "out", "format", "workers")):
        helps = {
            "eta": "corruption rate(s), exact fractions, comma separated (default 1/64)",
            "d": "domain size(s), comma separated (default 1)",
            "n": "sample size(s), comma separated (default: ceil(4/eta))",
            "trials": "Monte Carlo trials per cell (default 10000)",
            "seed": f"base seed (default {DEFAULT_SEED})",
            "learner": f"learner id(s): {', '.join(LEARNER_IDS)}",
            "adversary": f"adversary id(s): {', '.join(ADVERSARY_IDS)}",
            "bias": "per-coordinate bias of the test distribution (default 1/4)",
            "out": "output path (default: stdout)",
            "format": "csv or json (default csv)",
            "workers": "parallel worker processes (default 1)",
        }
        for key in include:
            p.add_argument(f"--{key}", help=helps[key])
        p.add_argument("--config", help="key=value config file; flags take precedence")

    run = sub.add_parser("run", help="one Monte Carlo cell")
    add_common(run)
    run.set_defaults(func=cmd_run)

    swp = sub.add_parser("sweep", help="cartesian grid of Monte Carlo cells")
    add_common(swp)
    swp.set_defaults(func=cmd_sweep)

    atk = sub.add_parser("attack-eval", help="one cell against every adversary")
    add_common(atk)
    atk.set_defaults(func=cmd_attack_eval)

    crv = sub.add_parser("curve", help="oblivious-poisoning excess vs sample size")
    add_common(crv)
    crv.set_defaults(func=cmd_curve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except (ConfigError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
