"""Command-line front end: ``ionnet {herald,pattern,collect,cavity,estimate}``.

Every parameter can come from a flat ``key = value`` config file
(``--config``) or a flag; flags win. Flag ``--tau-rep-us`` and key
``tau_rep_us`` name the same parameter. Outputs go to ``--output``, or to
``$IONNET_OUTPUT_DIR/<command>.<format>`` (current directory if unset).
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .heralding import DetectionPattern, PathGeometry, type1_herald, type2_herald, COINCIDENCE
from .ion_crystal import MAX_IONS, ConvergenceError, IonChain, sample_cross_section
from .light_collection import (LEFT_CIRCULAR, RIGHT_CIRCULAR, CavityParams, FiberMode, cavity_collection,
                               optimize_focus, sigma_coupling_analytic)
from .network import NetworkParams, _cluster_domain, network_report
from .numerics import QuadratureError

OUTPUT_DIR_ENV = "IONNET_OUTPUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2
COMMANDS = ("herald", "pattern", "collect", "cavity", "estimate")
DEFAULT_FORMAT = {"herald": "json", "pattern": "csv", "collect": "csv", "cavity": "json", "estimate": "json"}


@dataclass(frozen=True)
class Param:
    kind: str  # float, int, complex, bool, str or choice
    default: object = None
    required: bool = False
    check: str = ""  # prob, prob_open, unit_open, positive, nonneg, ge2
    choices: tuple = ()
    help: str = ""


_HALF = 1.0 / math.sqrt(2.0)

PARAMS: dict[str, dict[str, Param]] = {
    "herald": {
        "protocol": Param("choice", required=True, choices=("type1", "type2"), help="type1 or type2"),
        "p_e": Param("float", 0.01, check="prob", help="type1: per-atom emission probability"),
        "eta_det": Param("float", 1.0, check="prob", help="detector efficiency"),
        "which": Param("choice", "D1", choices=("D1", "D2"), help="type1: detector that clicked"),
        "exact": Param("bool", False, help="type1: keep the two-photon term"),
        "kind": Param("choice", "frequency", choices=("frequency", "timebin"), help="type2 qubit kind"),
        "pattern": Param("str", "coincidence", help="type2: e.g. 'D1,D2' or 'D1@t1,D2@t2'"),
        "alpha_a": Param("complex", _HALF), "beta_a": Param("complex", _HALF),
        "alpha_b": Param("complex", _HALF), "beta_b": Param("complex", _HALF),
        "delta_k": Param("float", 0.0, help="1/m"), "delta_x": Param("float", 0.0, help="m"),
        "delta_omega": Param("float", 0.0, help="rad/s"),
        "p_ap": Param("float", 1.0, check="prob", help="type2: atom-photon success per node"),
    },
    "pattern": {
        "n": Param("int", required=True, check="ge2", help="ion count"),
        "eta_lambda": Param("float", 600.0, check="positive"),
        "anisotropy": Param("float", 10.0, check="positive", help="transverse/axial trap frequency"),
        "grid": Param("int", 2048, check="ge2"),
        "theta_in": Param("float", 0.0, help="rad"),
        "recoil_scale": Param("float", 1.0, check="nonneg"),
        "samples": Param("int", 0, check="nonneg", help="Monte-Carlo samples per angle; 0 disables"),
    },
    "collect": {
        "scan": Param("choice", "f-over-w", choices=("f-over-w", "rho")),
        "min": Param("float", 0.05, check="positive"),
        "max": Param("float", 5.0, check="positive"),
        "points": Param("int", 200, check="ge2"),
        "rho_max": Param("float", math.inf, check="positive", help="mirror radius / w for the f-over-w scan"),
        "polarization": Param("choice", "left", choices=("left", "right")),
        "m": Param("int", 1, choices=(1, -1), help="transition index"),
    },
    "cavity": {
        "g": Param("float", required=True, check="nonneg"),
        "kappa": Param("float", required=True, check="positive"),
        "gamma": Param("float", required=True, check="positive"),
        "t_out": Param("float", required=True, check="positive"),
        "loss_total": Param("float", required=True, check="positive"),
    },
    "estimate": {
        "p": Param("float", required=True, check="prob_open", help="two-qubit herald success"),
        "tau_rep_us": Param("float", 1.0, check="positive"),
        "epsilon": Param("float", 0.1, check="unit_open"),
        "n": Param("float", 1000.0, check="ge2", help="cluster node count"),
        "p_e": Param("float", 0.5, check="prob_open"), "p_c": Param("float", 0.02, check="prob_open"),
        "p_t": Param("float", 0.2, check="prob_open"), "eta_det": Param("float", 0.2, check="prob_open"),
        "p_b": Param("float", 0.25, check="prob_open"),
        "n_nodes": Param("float", 2.0, check="ge2", help="repeater node count"),
        "t_detect_us": Param("float", 10.0, check="positive"),
    },
}


@dataclass
class RunConfig:
    command: str
    parameters: dict = field(default_factory=dict)
    output_path: str | None = None
    format: str | None = None
    seed: int = 0


# ------------------------------------------------------------- validation


def _convert(kind, raw):
    if not isinstance(raw, str):
        if kind == "int" and isinstance(raw, float) and raw.is_integer():
            return int(raw)
        return raw
    text = raw.strip()
    if kind == "float":
        return float(text)
    if kind == "int":
        return int(text)
    if kind == "complex":
        return complex(text.replace(" ", ""))
    if kind == "bool":
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(text)
    return text


def _range_message(name, value, check):
    if isinstance(value, (int, float)) and not isinstance(value, bool) and math.isnan(value):
        return f"{name}: must be a number, got nan"
    if check == "prob" and not 0.0 <= value <= 1.0:
        return f"{name}: out of range, must lie in [0, 1], got {value}"
    if check == "prob_open" and not 0.0 < value <= 1.0:
        return f"{name}: out of range, must lie in (0, 1], got {value}"
    if check == "unit_open" and not 0.0 < value < 1.0:
        return f"{name}: out of range, must lie in (0, 1), got {value}"
    if check == "positive" and not value > 0.0:
        return f"{name}: out of range, must be > 0, got {value}"
    if check == "nonneg" and not value >= 0.0:
        return f"{name}: out of range, must be >= 0, got {value}"
    if check == "ge2" and not value >= 2:
        return f"{name}: out of range, must be >= 2, got {value}"
    return None


def resolve(config: RunConfig) -> tuple[dict, list[str]]:
    """Typed parameters with defaults filled in, plus violation messages."""
    if config.command not in PARAMS:
        return {}, [f"command: unknown command {config.command!r}; choose from {', '.join(COMMANDS)}"]
    table = PARAMS[config.command]
    given = {k.replace("-", "_"): v for k, v in config.parameters.items() if v is not None}
    values, problems = {}, []
    for key in sorted(set(given) - set(table)):
        problems.append(f"{key}: unknown parameter for {config.command}")
    for name, entry in table.items():
        if name not in given:
            if entry.required:
                problems.append(f"{name}: missing required parameter")
            else:
                values[name] = entry.default
            continue
        try:
            value = _convert(entry.kind, given[name])
        except (TypeError, ValueError):
            problems.append(f"{name}: cannot parse {given[name]!r} as {entry.kind}")
            continue
        if entry.choices and value not in entry.choices:
            choices = ", ".join(str(c) for c in entry.choices)
            problems.append(f"{name}: invalid choice {value!r}, expected one of {choices}")
            continue
        msg = _range_message(name, value, entry.check) if entry.check else None
        if msg:
            problems.append(msg)
            continue
        values[name] = value
    if not problems:
        problems.extend(_cross_checks(config.command, values))
    if config.format is not None and config.format not in ("csv", "json"):
        problems.append(f"format: invalid choice {config.format!r}, expected one of csv, json")
    if not (isinstance(config.seed, int) and config.seed >= 0):
        problems.append(f"seed: must be an unsigned integer, got {config.seed!r}")
    return values, problems


def _cross_checks(command, v):
    out = []
    if command == "pattern" and v["n"] > MAX_IONS:
        out.append(f"n: out of range, must be <= {MAX_IONS}, got {v['n']}")
    if command == "collect" and not v["min"] < v["max"]:
        out.append(f"max: must exceed min, got min={v['min']} max={v['max']}")
    if command == "cavity" and v["t_out"] > v["loss_total"]:
        out.append(f"t_out: must not exceed loss_total, got {v['t_out']} > {v['loss_total']}")
    if command == "estimate":
        keys = {"P": "p", "4/P": "p", "epsilon": "epsilon", "n": "n", "ln(2n/epsilon)": "n"}
        out.extend(f"{keys[m.split()[0]]}: {m}" for m in _cluster_domain(v["n"], v["p"], v["epsilon"]))
    if command == "herald":
        for node in ("a", "b"):
            norm = abs(v[f"alpha_{node}"]) ** 2 + abs(v[f"beta_{node}"]) ** 2
            if abs(norm - 1.0) > 1e-9:
                out.append(f"alpha_{node}: |alpha_{node}|^2 + |beta_{node}|^2 must equal 1, got {norm:.12g}")
        if v["pattern"] != "coincidence":
            try:
                DetectionPattern.parse(v["pattern"])
            except ValueError as exc:
                out.append(f"pattern: {exc}")
    return out


def validate(config: RunConfig) -> list[str]:
    """Violation messages; empty when ``run`` would pass its precondition checks."""
    return resolve(config)[1]


# ---------------------------------------------------------------- running


def _herald(v, seed):
    geom = PathGeometry(v["delta_k"], v["delta_x"], v["delta_omega"])
    if v["protocol"] == "type1":
        outcome = type1_herald(v["p_e"], geom, v["eta_det"], v["which"], exact=v["exact"])
    else:
        pattern = COINCIDENCE if v["pattern"] == "coincidence" else DetectionPattern.parse(v["pattern"])
        outcome = type2_herald(v["alpha_a"], v["beta_a"], v["alpha_b"], v["beta_b"], v["kind"], pattern,
                               geom, v["eta_det"], v["p_ap"])
    record = outcome.to_record()
    rows = [("label", "re", "im")] + [tuple(r) for r in record["atomic_state"]]
    return record, rows


def _pattern(v, seed):
    chain = IonChain(n_ions=v["n"], eta_lambda=v["eta_lambda"], anisotropy=v["anisotropy"],
                     recoil_scale=v["recoil_scale"], theta_in=v["theta_in"]).fit()
    theta, inten = chain.radiation_pattern(v["grid"])
    record = {"theta_out_rad": theta.tolist(), "normalized_intensity": inten.tolist()}
    header = ["theta_out_rad", "normalized_intensity"]
    cols = [theta, inten]
    if v["samples"]:
        mean, err = sample_cross_section(chain, theta, v["samples"], seed)
        record["monte_carlo_intensity"], record["monte_carlo_stderr"] = mean.tolist(), err.tolist()
        header += ["monte_carlo_intensity", "monte_carlo_stderr"]
        cols += [mean, err]
    return record, [tuple(header)] + list(zip(*cols))


def _collect(v, seed):
    jones = LEFT_CIRCULAR if v["polarization"] == "left" else RIGHT_CIRCULAR
    fiber = FiberMode(1.0, jones)
    grid = np.geomspace(v["min"], v["max"], v["points"])
    if v["scan"] == "f-over-w":
        p = [sigma_coupling_analytic(x, fiber, v["rho_max"], v["m"]) for x in grid]
        record = {"f_over_w": grid.tolist(), "P_sigma": p}
        return record, [("f_over_w", "P_sigma")] + list(zip(grid, p))
    # focus re-optimized for every mirror radius
    best = [optimize_focus(fiber, rho, v["m"]) for rho in grid]
    f = [b.f_star for b in best]
    p = [b.p_star for b in best]
    record = {"rho_max_over_w": grid.tolist(), "f_over_w": f, "P_sigma": p}
    return record, [("rho_max_over_w", "f_over_w", "P_sigma")] + list(zip(grid, f, p))


def _cavity(v, seed):
    report = cavity_collection(CavityParams(v["g"], v["kappa"], v["gamma"], v["t_out"], v["loss_total"]))
    record = report.to_record()
    names = ("outcoupling", "rate", "purcell")
    rows = [("quantity", "value"), ("C", record["C"]), ("p_c", record["p_c"])]
    rows += [(f"factor_{k}", x) for k, x in zip(names, record["factors"])]
    return record, rows


def _estimate(v, seed):
    params = NetworkParams(p_e=v["p_e"], p_c=v["p_c"], p_t=v["p_t"], eta_det=v["eta_det"], p_B=v["p_b"],
                           tau_rep=v["tau_rep_us"] / 1e6, P=v["p"], n=v["n"], epsilon=v["epsilon"],
                           N_nodes=v["n_nodes"], t_detect=v["t_detect_us"] / 1e6)
    record = network_report(params)
    rows = [("quantity", "value")] + [(f"inputs.{k}", x) for k, x in record["inputs"].items()]
    rows += [(k, x) for k, x in record.items() if k != "inputs"]
    return record, rows


_RUNNERS = {"herald": _herald, "pattern": _pattern, "collect": _collect, "cavity": _cavity, "estimate": _estimate}


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def render(record, rows, fmt) -> str:
    if fmt == "json":
        return json.dumps(record, indent=2, ensure_ascii=False, allow_nan=False) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([_cell(x) for x in row])
    return buf.getvalue()


def output_path(config: RunConfig, fmt: str) -> Path | None:
    if config.output_path == "-":
        return None
    if config.output_path:
        return Path(config.output_path)
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / f"{config.command}.{fmt}"


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    """Validate, compute and write. Returns the process exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    values, problems = resolve(config)
    if problems:
        for msg in problems:
            print(f"error: {msg}", file=stderr)
        return EXIT_INVALID
    fmt = config.format or DEFAULT_FORMAT[config.command]
    try:
        record, rows = _RUNNERS[config.command](values, config.seed)
        text = render(record, rows, fmt)
    except (ConvergenceError, QuadratureError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    path = output_path(config, fmt)
    if path is None:
        stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return EXIT_OK


# ----------------------------------------------------------------- parser


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#",))
    parser.optionxform = str
    with open(path, encoding="utf-8") as fh:
        parser.read_string("[run]\n" + fh.read())
    return {k.replace("-", "_"): v for k, v in parser["run"].items()}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ionnet", description="Trapped-ion network calculators.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("--config", help="flat key = value parameter file")
        p.add_argument("--output", help="output file, '-' for stdout")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
        for name, entry in PARAMS[command].items():
            extra = f" (default {entry.default})" if not entry.required else " (required)"
            p.add_argument("--" + name.replace("_", "-"), dest=name, default=None, help=entry.help + extra)
    return parser


def config_from_args(argv=None) -> RunConfig:
    args = build_parser().parse_args(argv)
    params = read_config_file(args.config) if args.config else {}
    seed = params.pop("seed", None)
    for name in PARAMS[args.command]:
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    if args.seed is not None:
        seed = args.seed
    try:
        seed = int(seed) if seed is not None else 0
    except ValueError:
        pass  # reported by validate
    return RunConfig(args.command, params, args.output, args.format, seed)


def main(argv=None) -> int:
    try:
        config = config_from_args(argv)
    except OSError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
