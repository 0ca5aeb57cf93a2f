"""
Command-line front end.

    python -m choquard {constants,threshold,sweep,solve,check}
        [--config PATH] [--out DIR] [--threads K] [--seed INT]

Configuration files are flat `key = value` lines; `#` starts a comment and
several assignments may share a line when separated by commas
(`N = 6, alpha = 2`).  List values (`lambdas`) are comma separated as well.
Recognized keys and defaults are listed in `FIELDS`.

Exit codes: 0 success, 1 a check failed, 2 configuration error.  Data goes to
files under --out (or standard output); diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import re
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

logger = logging.getLogger("choquard")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class RunConfig:
    N: int = 7
    alpha: float = 2.0
    R: float = 60.0
    M: int = 2000
    gamma: float = 2.0
    quad_order: int = 64
    cache_dir: str = ""
    lambdas: tuple[float, ...] = ()
    lambda_min: float = 1e-3
    lambda_max: float = 1e3
    lambda_count: int = 25
    richardson: bool = True
    path_nodes: int = 16
    max_outer_iters: int = 2000
    gradient_tol: float = 1e-6
    backtrack: float = 0.5
    max_trials: int = 50
    seed_profile: str = "MU"
    seed_scale: float = 1.0
    endpoint_scale_cap: float = 64.0
    out_dir: str = ""
    formats: tuple[str, ...] = ("json", "csv")

    def lambda_list(self) -> list[float]:
        if self.lambdas:
            return sorted(self.lambdas)
        return [
            float(x)
            for x in np.logspace(math.log10(self.lambda_min), math.log10(self.lambda_max), self.lambda_count)
        ]


FIELDS = {f.name: f for f in fields(RunConfig)}
_SPLIT = re.compile(r",\s*(?=[A-Za-z_]\w*\s*=)")
_FORMATS = {"json", "csv"}


def _convert(name: str, raw: str):
    kind = FIELDS[name].type
    raw = raw.strip()
    if kind == "int":
        try:
            f = float(raw)
        except ValueError:
            raise ValueError(f"{name} expects an integer, got {raw!r}") from None
        if not f.is_integer():
            raise ValueError(f"{name} expects an integer, got {raw!r}")
        return int(f)
    if kind == "float":
        try:
            return float(raw)
        except ValueError:
            raise ValueError(f"{name} expects a number, got {raw!r}") from None
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"{name} expects true/false, got {raw!r}")
    if kind == "tuple[float, ...]":
        if not raw:
            return ()
        try:
            return tuple(float(x) for x in raw.split(","))
        except ValueError:
            raise ValueError(f"{name} expects comma-separated numbers, got {raw!r}") from None
    if kind == "tuple[str, ...]":
        return tuple(x.strip().lower() for x in raw.split(",") if x.strip())
    return raw


def validate(cfg: RunConfig) -> RunConfig:
    """Enforce module invariants; raises ConfigError naming the violated one."""
    from .grid import GridSpec
    from .solver import SeedKind

    try:
        GridSpec(cfg.N, cfg.R, cfg.M, cfg.gamma)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not 0 < cfg.alpha < cfg.N:
        raise ConfigError(f"alpha must lie in (0, N); got alpha={cfg.alpha}, N={cfg.N}")
    if cfg.quad_order < 8:
        raise ConfigError("quad_order must be at least 8")
    if any(not x > 0 for x in cfg.lambdas):
        raise ConfigError("lambdas must be positive")
    if not (0 < cfg.lambda_min < cfg.lambda_max) or cfg.lambda_count < 1:
        raise ConfigError("lambda range needs 0 < lambda_min < lambda_max and lambda_count >= 1")
    if cfg.seed_profile.upper() not in SeedKind.__members__:
        raise ConfigError(f"seed_profile must be one of {sorted(SeedKind.__members__)}")
    if set(cfg.formats) - _FORMATS:
        raise ConfigError(f"formats must be drawn from {sorted(_FORMATS)}")
    try:
        solver_config(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def solver_config(cfg: RunConfig):
    from .solver import SeedKind, SeedProfile, SolverConfig

    return SolverConfig(
        path_nodes=cfg.path_nodes,
        max_outer_iters=cfg.max_outer_iters,
        gradient_tol=cfg.gradient_tol,
        backtrack=cfg.backtrack,
        max_trials=cfg.max_trials,
        seed=SeedProfile(SeedKind(cfg.seed_profile.upper()), cfg.seed_scale),
        endpoint_scale_cap=cfg.endpoint_scale_cap,
    )


def parse_config(text: str) -> RunConfig:
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        for item in _SPLIT.split(body):
            if "=" not in item:
                raise ConfigError(f"expected 'key = value', got {item.strip()!r}", lineno)
            key, raw = (s.strip() for s in item.split("=", 1))
            if key not in FIELDS:
                raise ConfigError(f"unknown key {key!r}", lineno)
            if key in values:
                raise ConfigError(f"duplicate key {key!r}", lineno)
            try:
                values[key] = _convert(key, raw)
            except ValueError as exc:
                raise ConfigError(str(exc), lineno) from None
    if "seed_profile" in values:
        values["seed_profile"] = values["seed_profile"].upper()
    return validate(RunConfig(**values))


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.17g}"
    if isinstance(x, tuple):
        return ", ".join(_fmt(v) for v in x)
    return str(x)


def serialize(cfg: RunConfig) -> str:
    return "".join(f"{name} = {_fmt(getattr(cfg, name))}\n" for name in FIELDS)


# -- output -----------------------------------------------------------------


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits (non-finite as null)."""
    pad = " " * indent

    def enc(o, level):
        if o is None or isinstance(o, bool):
            return json.dumps(o)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            o = float(o)
            return f"{o:.17g}" if math.isfinite(o) else "null"
        if isinstance(o, str):
            return json.dumps(o)
        if hasattr(o, "value") and hasattr(o, "name"):  # enums
            return json.dumps(o.value)
        inner = pad * (level + 1)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{inner}{json.dumps(str(k))}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + pad * level + "}"
        if isinstance(o, (list, tuple, np.ndarray)):
            if len(o) == 0:
                return "[]"
            return "[\n" + ",\n".join(inner + enc(v, level + 1) for v in o) + "\n" + pad * level + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0) + "\n"


def write_csv(rows, header, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(float(v)) for v in row])


def csv_text(rows, header) -> str:
    buf = io.StringIO()
    write_csv(rows, header, buf)
    return buf.getvalue()


def _emit(out_dir: Path | None, name: str, text: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    logger.info("wrote %s", path)


def _document(kind: str, cfg: RunConfig, payload: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "kind": kind, "config": _config_dict(cfg), **payload}


def _config_dict(cfg: RunConfig) -> dict:
    return {name: (list(v) if isinstance(v, tuple) else v) for name in FIELDS for v in [getattr(cfg, name)]}


# -- subcommands ------------------------------------------------------------


def _setup(cfg: RunConfig):
    from .functional import NonlinearityParams
    from .grid import GridSpec, build_grid
    from .riesz import build_kernel

    grid = build_grid(GridSpec(cfg.N, cfg.R, cfg.M, cfg.gamma))
    kernel = build_kernel(grid, cfg.alpha, cfg.quad_order, cache_dir=cfg.cache_dir or None)
    return kernel, NonlinearityParams.doubly_critical(cfg.N, cfg.alpha)


def cmd_constants(cfg, out_dir, seed) -> int:
    from dataclasses import asdict

    from .extremals import normalize_amplitudes, sharp_constants

    kernel, params = _setup(cfg)
    sc = sharp_constants(kernel, params)
    A, B = normalize_amplitudes(kernel, params)
    doc = _document("constants", cfg, {**asdict(sc), "A": A, "B": B})
    _emit(out_dir, "constants.json", dumps(doc))
    return 0


def cmd_threshold(cfg, out_dir, seed) -> int:
    from .threshold import SWEEP_COLUMNS, verify_theorem

    kernel, params = _setup(cfg)
    report = verify_theorem(kernel, params, cfg.lambda_list(), richardson=cfg.richardson)
    if "json" in cfg.formats or out_dir is None:
        _emit(out_dir, "threshold.json", dumps(_document("threshold", cfg, report.to_dict())))
    if "csv" in cfg.formats and out_dir is not None:
        _emit(out_dir, "sweep.csv", csv_text([r.as_tuple() for r in report.sweep], SWEEP_COLUMNS))
    logger.info("verdict %s, margin %.6g", report.verdict.value, report.margin)
    return 0


def cmd_sweep(cfg, out_dir, seed) -> int:
    from .threshold import SWEEP_COLUMNS, path_energy_sweep

    kernel, params = _setup(cfg)
    rows = path_energy_sweep(kernel, params, cfg.lambda_list())
    _emit(out_dir, "sweep.csv", csv_text([r.as_tuple() for r in rows], SWEEP_COLUMNS))
    return 0


def cmd_solve(cfg, out_dir, seed) -> int:
    from .solver import mpa_solve

    kernel, params = _setup(cfg)
    res = mpa_solve(kernel, params, solver_config(cfg))
    if "json" in cfg.formats or out_dir is None:
        _emit(out_dir, "solve.json", dumps(_document("solve", cfg, res.summary())))
    if "csv" in cfg.formats and out_dir is not None:
        rows = zip(kernel.grid.nodes, res.u_star.values)
        _emit(out_dir, "profile.csv", csv_text(rows, ("r", "value")))
    logger.info("solver %s: J=%.12g", res.status.value, res.energy_level)
    return 0


def cmd_check(cfg, out_dir, seed) -> int:
    from .checks import run_checks

    kernel, params = _setup(cfg)
    failed = 0
    lines = []
    for res in run_checks(kernel, params, seed=seed):
        lines.append(res.line())
        print(res.line(), flush=True)
        failed += not res.passed
    if out_dir is not None:
        _emit(out_dir, "check.txt", "\n".join(lines) + "\n")
    print(f"{len(lines) - failed}/{len(lines)} checks passed", file=sys.stderr)
    return 1 if failed else 0


COMMANDS = {
    "constants": cmd_constants,
    "threshold": cmd_threshold,
    "sweep": cmd_sweep,
    "solve": cmd_solve,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="choquard", description="Doubly critical Choquard laboratory")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="key = value configuration file")
    ap.add_argument("--out", type=Path, help="output directory (default: standard output)")
    ap.add_argument("--threads", type=int, help="threads for the kernel assembly")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(command: str, cfg: RunConfig, out_dir: Path | None = None, seed: int = 0) -> int:
    if command not in COMMANDS:
        raise ValueError(f"unknown subcommand {command!r}")
    return COMMANDS[command](cfg, out_dir, seed)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text)
    except (OSError, UnicodeDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.out is not None:
        cfg = replace(cfg, out_dir=str(args.out))
    out_dir = Path(cfg.out_dir) if cfg.out_dir else None
    if args.threads is not None:
        if args.threads < 1:
            print("config error: --threads must be positive", file=sys.stderr)
            return 2
        import numba

        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    return run(args.command, cfg, out_dir, args.seed)


if __name__ == "__main__":
    sys.exit(main())
