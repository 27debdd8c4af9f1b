"""Command-line entry point.

``leanci fit|pcor|simulate|verify`` reads an optional TOML config file whose
keys mirror the long flags (``boot-b`` becomes ``bootstrap_b``); flags given on
the command line override the file. Simulation settings (``n``, ``d``,
``family``, ``reps`` ...) live in the same flat document.

Exit status: 0 on success, 1 on usage errors, 2 on numerical failures. Errors
are written to standard error as a JSON object.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .confidence import DEFAULT_B, METHODS, ci
from .errors import (
    LeanCIError,
    MissingColumn,
    NonNumericCell,
    NumericalError,
    ParseError,
    UsageError,
)
from .lab import DGPSpec, ErrorLaw, coverage_experiment, verify_deterministic_bounds
from .ols import Dataset, fit as ols_fit
from .pcor import pcor_ci, pcor_fit
from .sandwich import assumption_diagnostics, sandwich_cov

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

COMMANDS = ("fit", "pcor", "simulate", "verify")
SIM_KEYS = ("n", "d", "family", "error_law", "error_scale", "error_df", "design_corr", "c",
            "reps", "mode", "eta_n")


# ---------------------------------------------------------------------------
# CSV


def ingest_csv(path, response_column="y", intercept: bool = True) -> Dataset:
    """Read a headed numeric CSV into a :class:`Dataset`.

    ``response_column`` is a header name or a 0-based integer index. The
    remaining columns, in header order, become covariates; an all-ones column
    is prepended when ``intercept`` is set. Parse errors report 1-based line
    and column numbers (the header is line 1).
    """
    header, rows = _read_numeric_csv(path)
    idx = _resolve_column(header, response_column)
    table = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    y = table[:, idx]
    keep = [j for j in range(len(header)) if j != idx]
    x = table[:, keep]
    names = tuple(header[j] for j in keep)
    if intercept:
        return Dataset.with_intercept(x, y, names=names)
    if not keep:
        raise UsageError("no covariate columns left after removing the response")
    return Dataset(x, y, intercept=False, names=names)


def read_matrix_csv(path) -> tuple[list[str], np.ndarray]:
    header, rows = _read_numeric_csv(path)
    return header, np.array(rows, dtype=np.float64).reshape(len(rows), len(header))


def _read_numeric_csv(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file: a header row is required", row=1) from None
        header = [h.strip() for h in header]
        if not header or any(h == "" for h in header):
            raise ParseError("header row has empty column names", row=1)
        rows = []
        for line, raw in enumerate(reader, start=2):
            if not raw or all(c.strip() == "" for c in raw):
                continue
            if len(raw) != len(header):
                raise ParseError(f"line {line}: expected {len(header)} fields, found {len(raw)}",
                                 row=line)
            vals = []
            for col, cell in enumerate(raw, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise NonNumericCell(
                        f"line {line}, column {col} ({header[col - 1]!r}): non-numeric value {cell!r}",
                        row=line, column=col)
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise ParseError("no data rows", row=2)
    return header, rows


def _resolve_column(header, response) -> int:
    if isinstance(response, int) and not isinstance(response, bool):
        if not 0 <= response < len(header):
            raise MissingColumn(f"response index {response} out of range for {len(header)} columns")
        return response
    response = str(response)
    if response in header:
        return header.index(response)
    if response.isdigit() and int(response) < len(header):
        return int(response)
    raise MissingColumn(f"response column {response!r} not found in header {header}")


def write_csv(path, data: Dataset, response_name: str = "y") -> None:
    """Write covariates (without the intercept column) and response; floats round-trip exactly."""
    x = data.x[:, 1:] if data.intercept else data.x
    names = list(data.names[1:] if data.intercept else data.names) if data.names else [
        f"x{j + 1}" for j in range(x.shape[1])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*names, response_name])
        for row, yi in zip(x, data.y):
            w.writerow([repr(float(v)) for v in row] + [repr(float(yi))])


# ---------------------------------------------------------------------------
# JSON


def _fmt_float(v: float) -> str:
    if not math.isfinite(v):
        return "null"
    s = format(v, ".17g")
    if "e" not in s and "." not in s and "inf" not in s:
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with sorted keys and 17 significant digits for every float."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}"
                 for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    return json.dumps(str(obj))


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    command: str
    input_path: str | None = None
    response_column: str | int = "y"
    intercept: bool = True
    alpha: float = 0.05
    method: str = "bootstrap"
    bootstrap_b: int = DEFAULT_B
    seed: int = 0
    output_path: str | None = None
    sim: dict | None = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.command in ("fit", "pcor") and not self.input_path:
            raise UsageError(f"{self.command} requires --input")
        if self.command in ("simulate", "verify") and not self.sim:
            raise UsageError(f"{self.command} requires simulation settings (n, d, reps) in --config")
        if not (isinstance(self.alpha, (int, float)) and 0.0 < float(self.alpha) < 1.0):
            raise UsageError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (isinstance(self.bootstrap_b, int) and self.bootstrap_b >= 1):
            raise UsageError("bootstrap_b must be a positive integer")
        if self.method not in METHODS:
            raise UsageError(f"method must be one of {METHODS}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise UsageError("seed must be an unsigned 64-bit integer")
        return self


_FILE_KEYS = {
    "command": "command", "input": "input_path", "input_path": "input_path",
    "response": "response_column", "response_column": "response_column",
    "intercept": "intercept", "alpha": "alpha", "method": "method",
    "bootstrap_b": "bootstrap_b", "boot_b": "bootstrap_b", "seed": "seed",
    "output": "output_path", "output_path": "output_path",
}


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"invalid config file {path}: {exc}") from None
    out, sim = {}, {}
    for key, value in doc.items():
        if isinstance(value, dict):
            raise UsageError(f"config must be flat; found table [{key}]")
        if key in _FILE_KEYS:
            out[_FILE_KEYS[key]] = value
        elif key in SIM_KEYS:
            sim[key] = value
        else:
            raise UsageError(f"unknown config key {key!r}")
    if sim:
        out["sim"] = sim
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="leanci", description="Assumption-lean inference for regression "
                "projection parameters and partial correlations.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="flat TOML file with run settings")
    p.add_argument("--input", dest="input_path", help="CSV file with a header row")
    p.add_argument("--response", dest="response_column", help="response column name or 0-based index")
    p.add_argument("--alpha", type=float)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--boot-b", dest="bootstrap_b", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-intercept", dest="intercept", action="store_false", default=None)
    p.add_argument("--output", dest="output_path", help="output file (default: standard output)")
    p.add_argument("--reps", type=int, help="override the number of simulation replicates")
    p.add_argument("--workers", type=int, default=1, help="worker threads; does not change results")
    return p


def resolve_config(argv) -> tuple[RunConfig, int]:
    args = build_parser().parse_args(argv)
    values = load_config(args.config) if args.config else {}
    if "command" in values and values["command"] != args.command:
        raise UsageError(f"config command {values['command']!r} conflicts with {args.command!r}")
    values["command"] = args.command
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None and f.name != "command":
            values[f.name] = v
    if args.reps is not None:
        values.setdefault("sim", {})["reps"] = args.reps
    if args.workers is None or args.workers < 1:
        raise UsageError("--workers must be >= 1")
    return RunConfig(**values).validate(), args.workers


def _dgp_from_sim(sim: dict, seed: int, intercept: bool = True) -> tuple[DGPSpec, int]:
    unknown = set(sim) - set(SIM_KEYS)
    if unknown:
        raise UsageError(f"unknown simulation keys {sorted(unknown)}")
    for key in ("n", "d", "reps"):
        if key not in sim:
            raise UsageError(f"simulation settings need {key!r}")
    law = ErrorLaw(sim.get("error_law", "gaussian"), float(sim.get("error_scale", 1.0)),
                   sim.get("error_df"))
    spec = DGPSpec(
        n=int(sim["n"]), d=int(sim["d"]), family=sim.get("family", "linear_homoskedastic"),
        error_law=law, design_corr=float(sim.get("design_corr", 0.0)),
        intercept=bool(intercept), seed=seed, c=float(sim.get("c", 1.0)),
    )
    return spec, int(sim["reps"])


# ---------------------------------------------------------------------------
# commands


def _ci_dict(res) -> dict:
    return {"method": res.method, "level": res.level, "crit": res.crit,
            "lower": res.lower, "upper": res.upper, "width": res.width}


def _run_fit(cfg: RunConfig, workers: int) -> dict:
    data = ingest_csv(cfg.input_path, cfg.response_column, cfg.intercept)
    f = ols_fit(data)
    cov = sandwich_cov(f)
    res = ci(f, cov, cfg.method, cfg.alpha, cfg.bootstrap_b, cfg.seed, workers)
    try:
        diag = assumption_diagnostics(f, cov, (2.0, 4.0))
        diag_out = {"residual_moments": {f"{q:g}": m for q, m in diag.residual_moments.items()},
                    "eig_min": diag.eig_min, "eig_max": diag.eig_max, "kappa_hat": diag.kappa_hat}
    except NumericalError:
        diag_out = None
    return {"n": data.n, "d": data.d, "names": list(data.names or []),
            "beta_hat": f.beta_hat, "std_err": cov.std_err, "ci": _ci_dict(res),
            "diagnostics": diag_out}


def _run_pcor(cfg: RunConfig, workers: int) -> dict:
    header, x = read_matrix_csv(cfg.input_path)
    pf = pcor_fit(x)
    res = pcor_ci(pf, cfg.method, cfg.alpha, cfg.bootstrap_b, cfg.seed, workers)
    pairs = [{"j": j, "k": k, "names": [header[j], header[k]], "estimate": e, "lower": lo,
              "upper": up, "zeta_hat": z}
             for (j, k), e, lo, up, z in zip(res.pairs, res.estimate, res.lower, res.upper, pf.zeta_hat)]
    return {"n": pf.n, "d": pf.d, "names": header, "theta_hat": pf.theta_hat,
            "method": res.method, "level": res.level, "crit": res.crit, "pairs": pairs,
            "edges": [[j, k] for j, k in res.edges()]}


def _run_simulate(cfg: RunConfig, workers: int) -> dict:
    spec, reps = _dgp_from_sim(cfg.sim, cfg.seed, cfg.intercept)
    mode = cfg.sim.get("mode", "regression")
    table = coverage_experiment(spec, METHODS, cfg.alpha, reps, cfg.bootstrap_b, cfg.seed, mode, workers)
    return asdict(table)


def _run_verify(cfg: RunConfig, workers: int) -> dict:
    spec, reps = _dgp_from_sim(cfg.sim, cfg.seed, cfg.intercept)
    eta = cfg.sim.get("eta_n")
    rep = verify_deterministic_bounds(reps, spec, None if eta is None else float(eta), workers)
    out = asdict(rep)
    out["violations"] = rep.violations
    return out


_RUNNERS = {"fit": _run_fit, "pcor": _run_pcor, "simulate": _run_simulate, "verify": _run_verify}


def run(config: RunConfig, workers: int = 1) -> dict:
    """Execute a validated configuration and return the report document."""
    results = _RUNNERS[config.command](config, workers)
    return {"tool_version": __version__, "config_echo": asdict(config), "seed": config.seed,
            "results": results}


def _error(exc: BaseException, code: int) -> int:
    err = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("row", "column"):
        if getattr(exc, attr, None) is not None:
            err[attr] = getattr(exc, attr)
    sys.stderr.write(dumps({"error": err}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        cfg, workers = resolve_config(sys.argv[1:] if argv is None else argv)
        report = run(cfg, workers)
        text = dumps(report) + "\n"
        if cfg.output_path and cfg.output_path != "-":
            Path(cfg.output_path).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    except NumericalError as exc:
        return _error(exc, 2)
    except (UsageError, FileNotFoundError, ValueError, TypeError) as exc:
        return _error(exc, 1)
    except LeanCIError as exc:
        return _error(exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
