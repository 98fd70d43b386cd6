"""Command-line front end.

Usage::

    fatigue stationary --payoffs a=1,b=10 --gamma 1
    fatigue simulate --config run.yaml --strategy doubling --T 98304 --out trace.csv
    fatigue horizon --payoffs a=1,b=10 --gamma 1 --grid 10:200:10 --out v.csv

A config file is a YAML document with the top-level keys ``actions``,
``gamma``, ``spec``, ``command``, ``params``, ``output``, ``seed`` and
``threads``; anything else is rejected. Flags given on the command line
override the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import discounted, horizon, stationary, trajectories
from .model import ProblemSpec, SpecError, utility_trace, validate_spec

COMMANDS = ("stationary", "greedy", "simulate", "horizon", "discounted", "sweep")
STRATEGIES = ("greedy", "tracking", "doubling", "cyclic", "random", "file")
FORMATS = ("csv", "json")
TOP_KEYS = {"actions", "gamma", "spec", "command", "params", "output", "seed", "threads"}
DEFAULT_SEED = 20240601
THREADS_ENV = "FATIGUE_THREADS"

# allowed params per command: name -> kind
PARAMS: dict[str, dict[str, str]] = {
    "stationary": {},
    "greedy": {"T": "pos_int"},
    "simulate": {
        "strategy": "strategy",
        "T": "pos_int",
        "keep_every": "pos_int",
        "burn_in": "nonneg_int",
        "target": "mapping",
        "history": "path",
        "history_out": "path",
    },
    "horizon": {"T": "pos_int", "grid": "int_grid", "margin": "nonneg_float", "witness_out": "path"},
    "discounted": {
        "lambda": "unit_open",
        "delta": "unit_open",
        "beam_width": "pos_int",
        "depth": "pos_int",
        "eps_tail": "pos_float",
    },
    "sweep": {
        "kind": "sweep_kind",
        "gammas": "float_list",
        "lambdas": "float_list",
        "deltas": "float_list",
        "beam_width": "pos_int",
    },
}


class ConfigError(ValueError):
    """Invalid configuration; reported with exit status 2."""


@dataclass
class RunConfig:
    spec: ProblemSpec
    command: str
    params: dict[str, Any] = field(default_factory=dict)
    output: Path | None = None
    format: str = "csv"
    seed: int = DEFAULT_SEED
    threads: int = 1


# ---------------------------------------------------------------------------
# parsing and validation


def _check_param(cmd: str, key: str, value):
    kinds = PARAMS[cmd]
    if key not in kinds:
        allowed = ", ".join(sorted(kinds)) or "none"
        raise ConfigError(f"params.{key}: unknown parameter for '{cmd}' (allowed: {allowed})")
    kind = kinds[key]
    where = f"params.{key}"
    if kind in ("pos_int", "nonneg_int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        if value < (1 if kind == "pos_int" else 0):
            raise ConfigError(f"{where}: must be {'>= 1' if kind == 'pos_int' else '>= 0'}, got {value}")
        return value
    if kind in ("pos_float", "nonneg_float", "unit_open"):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"{where}: expected a finite number, got {value!r}")
        value = float(value)
        if kind == "pos_float" and not value > 0:
            raise ConfigError(f"{where}: must be > 0, got {value}")
        if kind == "nonneg_float" and value < 0:
            raise ConfigError(f"{where}: must be >= 0, got {value}")
        if kind == "unit_open" and not 0 < value < 1:
            raise ConfigError(f"{where}: must lie strictly inside (0, 1), got {value}")
        return value
    if kind == "strategy":
        if value not in STRATEGIES:
            raise ConfigError(f"{where}: expected one of {', '.join(STRATEGIES)}, got {value!r}")
        return value
    if kind == "sweep_kind":
        if value not in ("fatigue", "patience"):
            raise ConfigError(f"{where}: expected 'fatigue' or 'patience', got {value!r}")
        return value
    if kind == "mapping":
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a mapping action -> weight")
        return value
    if kind == "path":
        if not isinstance(value, str) or not value:
            raise ConfigError(f"{where}: expected a path string")
        return value
    if kind == "float_list":
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{where}: expected a non-empty list of numbers")
        out = []
        for v in value:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{where}: non-numeric entry {v!r}")
            out.append(float(v))
        return out
    if kind == "int_grid":
        return parse_grid(value, where)
    raise AssertionError(kind)


def parse_grid(value, where: str = "grid") -> list[int]:
    """An integer grid from a list or a ``start:stop:step`` string (stop inclusive)."""
    if isinstance(value, str):
        parts = value.split(":")
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise ConfigError(f"{where}: expected 'start:stop[:step]', got {value!r}") from None
        if len(nums) not in (2, 3):
            raise ConfigError(f"{where}: expected 'start:stop[:step]', got {value!r}")
        start, stop = nums[0], nums[1]
        step = nums[2] if len(nums) == 3 else 1
        if step < 1:
            raise ConfigError(f"{where}: step must be >= 1")
        value = list(range(start, stop + 1, step))
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{where}: expected a non-empty list of integers")
    for v in value:
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ConfigError(f"{where}: entries must be positive integers, got {v!r}")
    if any(b <= a for a, b in zip(value, value[1:])):
        raise ConfigError(f"{where}: must be strictly increasing")
    return value


def parse_payoffs(text: str) -> list[tuple[str, float]]:
    """``a=1,b=10`` -> ``[("a", 1.0), ("b", 10.0)]``."""
    pairs = []
    for item in text.split(","):
        name, sep, val = item.partition("=")
        if not sep or not name.strip():
            raise ConfigError(f"--payoffs: expected name=value, got {item!r}")
        try:
            pairs.append((name.strip(), float(val)))
        except ValueError:
            raise ConfigError(f"--payoffs: payoff of {name.strip()!r} is not a number: {val!r}") from None
    return pairs


def _load_spec_file(path: Path) -> dict:
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as e:
        raise ConfigError(f"spec: cannot read {path}: {e.strerror}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"spec: malformed document {path}: {e}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"spec: {path} must contain a mapping")
    return doc


def parse_config(text: str, base_dir: Path | None = None, command: str | None = None) -> RunConfig:
    """Strictly parse a YAML run configuration.

    ``command`` supplies the subcommand when the document has none.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"malformed configuration: {e}") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping at the top level")
    unknown = sorted(set(doc) - TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    base_dir = base_dir or Path.cwd()

    cmd = doc.get("command", command)
    if command is not None and doc.get("command") not in (None, command):
        cmd = command
    if cmd not in COMMANDS:
        raise ConfigError(f"command: expected one of {', '.join(COMMANDS)}, got {cmd!r}")

    if "spec" in doc and "actions" in doc:
        raise ConfigError("give either 'actions' or 'spec', not both")
    if "spec" in doc:
        raw = _load_spec_file(base_dir / str(doc["spec"]))
        if "gamma" in doc:
            raw = {**raw, "gamma": doc["gamma"]}
    elif "actions" in doc:
        acts = doc["actions"]
        if isinstance(acts, dict):
            acts = [{"name": k, "payoff": v} for k, v in acts.items()]
        raw = {"actions": acts}
        if "gamma" in doc:
            raw["gamma"] = doc["gamma"]
    else:
        raise ConfigError("no problem given: set 'actions' (with 'gamma') or 'spec'")
    try:
        spec = validate_spec(raw)
    except SpecError as e:
        raise ConfigError(str(e)) from None

    params_in = doc.get("params") or {}
    if not isinstance(params_in, dict):
        raise ConfigError("params: expected a mapping")
    params = {k: _check_param(cmd, k, v) for k, v in params_in.items()}

    out = doc.get("output") or {}
    if not isinstance(out, dict):
        raise ConfigError("output: expected a mapping with 'path' and/or 'format'")
    bad = sorted(set(out) - {"path", "format"})
    if bad:
        raise ConfigError(f"output: unknown key(s): {', '.join(bad)}")
    fmt = out.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError(f"output.format: expected csv or json, got {fmt!r}")
    path = Path(out["path"]) if out.get("path") else None

    seed = doc.get("seed", DEFAULT_SEED)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed: expected an unsigned 64-bit integer, got {seed!r}")
    threads = doc.get("threads", 1)
    if isinstance(threads, bool) or not isinstance(threads, int) or threads < 1:
        raise ConfigError(f"threads: expected a positive integer, got {threads!r}")
    return RunConfig(spec, cmd, params, path, fmt, seed, threads)


# ---------------------------------------------------------------------------
# output helpers


def fmt_float(v: float) -> str:
    return format(v, ".17g")


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the target directory and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


@dataclass
class Outcome:
    summary: str
    csv: str
    data: dict


# ---------------------------------------------------------------------------
# commands


def _freq_rows(spec: ProblemSpec, x) -> list[list]:
    return [[a, spec.payoffs[i], x.weights[i]] for i, a in enumerate(spec.actions)]


def _support(s) -> str:
    return "{" + ",".join(s) + "}"


def cmd_stationary(cfg: RunConfig) -> Outcome:
    sol = stationary.optimal_stationary(cfg.spec)
    data = {
        "value": sol.value,
        "support": list(sol.support),
        "multiplier": sol.multiplier,
        "gamma": sol.gamma,
        "x": sol.x.as_dict(),
    }
    return Outcome(
        f"stationary value={sol.value:.12g} support={_support(sol.support)}",
        _csv(["action", "payoff", "x"], _freq_rows(cfg.spec, sol.x)),
        data,
    )


def cmd_greedy(cfg: RunConfig) -> Outcome:
    sol = stationary.greedy_fixed_point(cfg.spec)
    data = {"value": sol.value, "support": list(sol.support), "level": sol.level, "x": sol.x.as_dict()}
    rows = _freq_rows(cfg.spec, sol.x)
    header = ["action", "payoff", "x"]
    summary = f"greedy value={sol.value:.12g} support={_support(sol.support)}"
    T = cfg.params.get("T")
    if T:
        h = trajectories.generate_greedy(cfg.spec, T)
        emp = [c / T for c in h.count_vector()]
        trace = utility_trace(cfg.spec, h, T)
        data["simulated"] = {"T": T, "frequencies": dict(zip(cfg.spec.actions, emp)), "U_T": trace.final}
        header.append("simulated")
        rows = [r + [e] for r, e in zip(rows, emp)]
        summary += f" simulated_U_T={trace.final:.12g}"
    return Outcome(summary, _csv(header, rows), data)


def _iid_random(spec: ProblemSpec, seed: int):
    rng = np.random.default_rng(seed)
    while True:
        for i in rng.integers(0, spec.n, size=4096):
            yield spec.actions[i]


def build_source(cfg: RunConfig, T: int):
    spec, p = cfg.spec, cfg.params
    strategy = p.get("strategy", "tracking")
    if strategy == "greedy":
        return trajectories.iter_greedy(spec)
    if strategy == "tracking":
        target = p.get("target")
        x = stationary.optimal_stationary(spec).x if target is None else target
        try:
            return trajectories.iter_tracking(spec, x)
        except (ValueError, KeyError) as e:
            raise ConfigError(f"params.target: {e}") from None
    if strategy == "doubling":
        if spec.n != 2:
            raise ConfigError("strategy 'doubling' needs exactly two actions")
        return trajectories.iter_doubling_blocks(spec.actions)
    if strategy == "cyclic":
        return trajectories.iter_cyclic(trajectories.stationary_cycle(spec))
    if strategy == "random":
        return _iid_random(spec, cfg.seed)
    if "history" not in p:
        raise ConfigError("strategy 'file' needs params.history (run-length file)")
    try:
        return trajectories.read_rle(p["history"], spec.actions)
    except OSError as e:
        raise ConfigError(f"params.history: cannot read {p['history']}: {e.strerror}") from None


def cmd_simulate(cfg: RunConfig) -> Outcome:
    p = cfg.params
    T = p.get("T")
    strategy = p.get("strategy", "tracking")
    src = build_source(cfg, T or 0)
    if T is None:
        if strategy != "file":
            raise ConfigError("params.T is required for generated strategies")
        T = len(src)
    keep = p.get("keep_every", 1)
    burn = p.get("burn_in", T // 10)
    if burn >= T:
        raise ConfigError(f"params.burn_in: must be smaller than T={T}")
    if "history_out" in p:
        h = src if isinstance(src, trajectories.History) else trajectories.History(
            cfg.spec.actions, (a for _, a in zip(range(T), src))
        )
        write_atomic(Path(p["history_out"]), trajectories.dump_rle(h.prefix(T)))
        src = h
    trace = utility_trace(cfg.spec, src, T, burn_in=burn, keep_every=keep)
    data = {
        "strategy": strategy,
        "T": T,
        "burn_in": burn,
        "keep_every": keep,
        "final": trace.final,
        "running_min": trace.running_min,
        "running_max": trace.running_max,
        "argmin": trace.argmin,
        "argmax": trace.argmax,
        "counts": dict(zip(cfg.spec.actions, trace.counts)),
        "trace": {"T": list(map(int, trace.times)), "U_T": [float(v) for v in trace.values]},
    }
    rows = ([int(t), float(v)] for t, v in zip(trace.times, trace.values))
    return Outcome(
        f"simulate strategy={strategy} T={T} U_T={trace.final:.12g} "
        f"min={trace.running_min:.12g} max={trace.running_max:.12g}",
        _csv(["T", "U_T"], rows),
        data,
    )


def cmd_horizon(cfg: RunConfig) -> Outcome:
    p = cfg.params
    if "grid" in p and "T" in p:
        raise ConfigError("give either params.T or params.grid, not both")
    grid = p.get("grid") or [p.get("T") or 10]
    margin = p.get("margin", 0.0)
    try:
        table = horizon.v_convergence(cfg.spec, grid, margin=margin)
        res = horizon.v_exact(cfg.spec, grid[-1])
    except horizon.LatticeTooLarge as e:
        raise ConfigError(str(e)) from None
    if "witness_out" in p:
        write_atomic(Path(p["witness_out"]), trajectories.dump_rle(res.witness))
    data = {
        "rows": [{"T": T, "v_T": v, "delta": None if math.isnan(d) else d} for T, v, d in table.rows],
        "cauchy_window": table.cauchy_window,
        "V_star": table.v_star,
        "margin": margin,
        "exceeds_stationary": table.exceeds_stationary,
        "witness": trajectories.dump_rle(res.witness),
    }
    return Outcome(
        f"horizon T={grid[-1]} value={res.value:.12g} V_star={table.v_star:.12g} "
        f"cauchy_window={table.cauchy_window:.3g}",
        table.to_csv(),
        data,
    )


def _budget(p) -> discounted.SearchBudget:
    return discounted.SearchBudget(
        beam_width=p.get("beam_width", 256), depth=p.get("depth"), eps_tail=p.get("eps_tail")
    )


def cmd_discounted(cfg: RunConfig) -> Outcome:
    p = cfg.params
    lam = p.get("lambda", 0.99)
    delta = p.get("delta", discounted.default_delta(lam))
    res = discounted.discounted_value(cfg.spec, discounted.DiscountParams(lam, delta), _budget(p))
    iv = res.interval
    data = {
        "lambda": lam,
        "delta": delta,
        "lower": iv.lower,
        "upper": iv.upper,
        "depth": iv.depth,
        "tail_bound": iv.tail_bound,
        "certified": iv.certified,
        "scope": iv.scope,
        "notes": list(iv.notes),
        "best": res.best,
        "candidates": {k: {"lower": c.lower, "upper": c.upper} for k, c in res.candidates.items()},
    }
    rows = [[k, c.lower, c.upper] for k, c in res.candidates.items()]
    return Outcome(
        f"discounted lambda={lam:g} delta={delta:g} lower={iv.lower:.12g} upper={iv.upper:.12g} "
        f"best={res.best} certified={iv.certified}",
        _csv(["candidate", "lower", "upper"], rows),
        data,
    )


def cmd_sweep(cfg: RunConfig) -> Outcome:
    p = cfg.params
    kind = p.get("kind", "fatigue")
    if kind == "fatigue":
        gammas = p.get("gammas") or [0.25, 0.5, 0.75, 1.0]
        try:
            sw = stationary.fatigue_sweep(cfg.spec, gammas, threads=cfg.threads)
        except ValueError as e:
            raise ConfigError(f"params.gammas: {e}") from None
        acts = [cfg.spec.actions[i] for i in stationary.payoff_order(cfg.spec)]
        header = ["gamma", "value"] + [f"x_{a}" for a in cfg.spec.actions] + [f"top{k}" for k in range(1, len(acts) + 1)]
        rows = [
            [g, s.value, *s.x.weights, *cum] for g, s, cum in zip(sw.gammas, sw.solutions, sw.cumulative)
        ]
        data = {
            "gammas": sw.gammas,
            "values": [s.value for s in sw.solutions],
            "x": [s.x.as_dict() for s in sw.solutions],
            "cumulative": sw.cumulative,
            "violations": [v.__dict__ for v in sw.violations],
            "fosd_ok": sw.ok,
        }
        return Outcome(f"sweep kind=fatigue points={len(gammas)} fosd_ok={sw.ok}", _csv(header, rows), data)
    lams = p.get("lambdas") or [0.9, 0.99, 0.995]
    deltas = p.get("deltas")
    try:
        sw = discounted.patience_sweep(cfg.spec, lams, deltas, _budget(p))
    except ValueError as e:
        raise ConfigError(f"params: {e}") from None
    data = {
        "rows": [
            {
                "lambda": r.lambda_,
                "delta": r.delta,
                "V_star": r.v_star,
                "lower": r.lower,
                "upper": r.upper,
                "excess_lower": r.excess_lower,
                "excess_upper": r.excess_upper,
                "certified": r.certified,
            }
            for r in sw.rows
        ],
        "upper_excess_nonincreasing": sw.upper_excess_nonincreasing,
    }
    return Outcome(
        f"sweep kind=patience points={len(lams)} upper_excess_nonincreasing={sw.upper_excess_nonincreasing}",
        sw.to_csv(),
        data,
    )


HANDLERS = {
    "stationary": cmd_stationary,
    "greedy": cmd_greedy,
    "simulate": cmd_simulate,
    "horizon": cmd_horizon,
    "discounted": cmd_discounted,
    "sweep": cmd_sweep,
}


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    start = time.perf_counter()
    out = HANDLERS[cfg.command](cfg)
    elapsed = time.perf_counter() - start
    if cfg.output is not None:
        text = out.csv if cfg.format == "csv" else _json(out.data)
        write_atomic(cfg.output, text)
    elif cfg.format == "json":
        stdout.write(_json(out.data))
    print(f"{out.summary} runtime={elapsed:.3f}s", file=stdout)
    return 0


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fatigue", description="Repeated choice with frequency-dependent payoff decay.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="YAML run configuration")
    ap.add_argument("--out", type=Path, help="output file (written atomically)")
    ap.add_argument("--format", choices=FORMATS)
    ap.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--payoffs", help="inline problem, e.g. a=1,b=10")
    ap.add_argument("--gamma", type=float)
    ap.add_argument("--T", type=int, dest="T")
    ap.add_argument("--grid", help="horizon grid start:stop[:step]")
    ap.add_argument("--strategy", choices=STRATEGIES)
    ap.add_argument("--keep-every", type=int, dest="keep_every")
    ap.add_argument("--burn-in", type=int, dest="burn_in")
    ap.add_argument("--history", help="run-length history file for --strategy file")
    ap.add_argument("--history-out", dest="history_out")
    ap.add_argument("--lambda", type=float, dest="lambda_")
    ap.add_argument("--delta", type=float)
    ap.add_argument("--kind", choices=("fatigue", "patience"))
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as e:
            raise ConfigError(f"--config: cannot read {args.config}: {e.strerror}") from None
        doc = yaml.safe_load(text) if text.strip() else {}
        base = args.config.parent
    else:
        doc, base = {}, Path.cwd()
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping at the top level")
    if args.payoffs is not None:
        doc.pop("spec", None)
        doc["actions"] = [{"name": n, "payoff": v} for n, v in parse_payoffs(args.payoffs)]
    if args.gamma is not None:
        doc["gamma"] = args.gamma
    doc["command"] = args.command
    params = dict(doc.get("params") or {}) if isinstance(doc.get("params") or {}, dict) else doc.get("params")
    flag_params = {
        "T": args.T,
        "grid": args.grid,
        "strategy": args.strategy,
        "keep_every": args.keep_every,
        "burn_in": args.burn_in,
        "history": args.history,
        "history_out": args.history_out,
        "lambda": args.lambda_,
        "delta": args.delta,
        "kind": args.kind,
    }
    if isinstance(params, dict):
        for k, v in flag_params.items():
            if v is not None:
                params[k] = v
    doc["params"] = params
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.threads is not None:
        doc["threads"] = args.threads
    elif "threads" not in doc and os.environ.get(THREADS_ENV):
        try:
            doc["threads"] = int(os.environ[THREADS_ENV])
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}: expected an integer, got {os.environ[THREADS_ENV]!r}") from None
    if args.out is not None or args.format is not None:
        out = dict(doc.get("output") or {})
        if args.out is not None:
            out["path"] = str(args.out)
        if args.format is not None:
            out["format"] = args.format
        doc["output"] = out
    return parse_config(yaml.safe_dump(doc, sort_keys=False), base_dir=base)


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return run(cfg)
    except ConfigError as e:
        return _fail("config", str(e), 2)
    except yaml.YAMLError as e:
        return _fail("config", f"malformed configuration: {e}", 2)
    except Exception as e:  # noqa: BLE001 - reported as a machine-readable error
        return _fail(type(e).__name__, f"{args.command}: {e}", 1)


if __name__ == "__main__":
    sys.exit(main())
