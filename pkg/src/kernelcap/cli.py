"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 numerical or validation
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .capacity import CapacityDomainError
from .channel import CP_TOL, ProbabilityVector, cp_margins, verify_eigenaction
from .dynamics import GridError, KernelFunction, SolverError, solve_nakajima_zwanzig, uniform_grid
from .engineering import ADVANTAGE_TOL, SWEEP_PARAMS, EmptySweepError, capacity_trajectory, sweep
from .mub import UnsupportedDimensionError, build_mub_family, mub_deviations
from .scenarios import (
    ScenarioParameterError,
    ScenarioSpec,
    Variant,
    admissibility_from_integrals,
    kernel_admissibility,
    kernel_nondecreasing_check,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
LN2 = math.log(2)
MUB_TOL = 1e-10


class ConfigError(ValueError):
    pass


def fmt(x: float) -> str:
    return f"{float(x):.17e}"


def parse_number(text, name: str) -> float:
    """Parse a float, accepting fractions such as ``1/3``."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    try:
        return float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{name}: cannot parse number {text!r}") from None


def parse_int(text, name: str) -> int:
    value = parse_number(text, name)
    if value != int(value):
        raise ConfigError(f"{name}: expected an integer, got {text!r}")
    return int(value)


# -- configuration ---------------------------------------------------------

SCENARIO_KEYS = ("gamma", "omega", "z", "r")
COMMON_KEYS = {"scenario", "d", "alpha_star", "t_max", "steps", "format", "bits", "advantage_tol", "cp_tol", "workers"}


@dataclass
class RunConfig:
    command: str
    scenario: dict = field(default_factory=dict)
    t_max: float = 10.0
    steps: int = 10000
    out: str | None = None
    format: str = "csv"
    bits: bool = False
    tolerances: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.steps < 2:
            raise ConfigError(f"steps: must be >= 2, got {self.steps}")
        if not self.t_max > 0:
            raise ConfigError(f"t_max: must be positive, got {self.t_max}")
        if self.format not in ("csv", "jsonl"):
            raise ConfigError(f"format: must be csv or jsonl, got {self.format!r}")


def read_config_file(path: str) -> dict:
    """Read a flat ``key = value`` file, or JSON when the extension is ``.json``."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    if p.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be an object")
        return {k.replace("-", "_"): v for k, v in data.items()}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def parse_range(value, name: str) -> list[float]:
    """A parameter range: a number, a list, ``min:max:count`` or ``{min, max, count}``."""
    if isinstance(value, dict):
        unknown = set(value) - {"min", "max", "count"}
        if unknown or not {"min", "max"} <= set(value):
            raise ConfigError(f"{name}: range needs min, max and optional count")
        lo, hi = parse_number(value["min"], name), parse_number(value["max"], name)
        count = parse_int(value.get("count", 2 if lo != hi else 1), name)
    elif isinstance(value, list):
        return [parse_number(v, name) for v in value]
    elif isinstance(value, str) and ":" in value:
        parts = value.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{name}: range must be min:max:count")
        lo, hi, count = parse_number(parts[0], name), parse_number(parts[1], name), parse_int(parts[2], name)
    elif isinstance(value, str) and "," in value:
        return [parse_number(v, name) for v in value.split(",")]
    else:
        return [parse_number(value, name)]
    if lo > hi:
        raise ConfigError(f"{name}: min {lo} exceeds max {hi}")
    if count < 1:
        raise ConfigError(f"{name}: count must be >= 1")
    if count == 1:
        if lo != hi:
            raise ConfigError(f"{name}: count 1 needs min == max")
        return [lo]
    return np.linspace(lo, hi, count).tolist()


def _check_keys(data: dict, allowed: set) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key")


def _scenario_variant(name) -> Variant:
    try:
        variant = Variant(str(name))
    except ValueError:
        raise ConfigError(f"scenario: unknown scenario {name!r}") from None
    if variant is Variant.CUSTOM:
        raise ConfigError("scenario: custom scenarios are not available from the command line")
    return variant


def build_spec(variant: Variant, values: dict, d: int, alpha_star: int | None) -> ScenarioSpec:
    needed = SWEEP_PARAMS[variant]
    for name in needed:
        if values.get(name) is None:
            raise ConfigError(f"{name}: required for the {variant.value} scenario")
    extra = [n for n in SCENARIO_KEYS if n not in needed and values.get(n) is not None]
    if extra:
        raise ConfigError(f"{extra[0]}: not a parameter of the {variant.value} scenario")
    if variant is Variant.CONSTANT:
        if d != 2:
            raise ConfigError("d: the constant-isotropic scenario requires d=2")
        return ScenarioSpec.constant_isotropic(values["gamma"], values["omega"])
    if variant is Variant.EXP_DECAY:
        return ScenarioSpec.exp_decay(values["gamma"], values["z"], values["omega"], d, alpha_star)
    return ScenarioSpec.beyond_semigroup(values["r"], values["omega"], d, alpha_star)


# -- output ----------------------------------------------------------------


def trajectory_columns(d: int, bits: bool) -> list[str]:
    unit = "bits" if bits else "nats"
    return (
        ["t"]
        + [f"lambda_markov_{a}" for a in range(1, d + 2)]
        + [f"lambda_combined_{a}" for a in range(1, d + 2)]
        + [f"capacity_markov_{unit}", f"capacity_combined_{unit}", f"advantage_{unit}"]
        + ["cp_lower_margin", "cp_upper_margin", "bound_flag"]
    )


def trajectory_rows(traj, bits: bool = False):
    scale = 1 / LN2 if bits else 1.0
    for i, t in enumerate(traj.grid):
        yield (
            [t, *traj.markov[i], *traj.combined[i]]
            + [traj.capacity_markov[i] * scale, traj.capacity_combined[i] * scale, traj.advantage[i] * scale]
            + [traj.cp_lower_margin[i], traj.cp_upper_margin[i], int(traj.bound[i])]
        )


def render_table(columns: list[str], rows, form: str) -> str:
    buf = io.StringIO()
    if form == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([v if isinstance(v, (int, str, bool)) and not isinstance(v, float) else fmt(v) for v in row])
    else:
        for row in rows:
            record = {}
            for c, v in zip(columns, row):
                record[c] = v if isinstance(v, (int, str, bool)) and not isinstance(v, float) else float(v)
            buf.write(json.dumps(record) + "\n")
    return buf.getvalue()


def write_output(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def read_trajectory_csv(path: str) -> dict[str, np.ndarray]:
    """Load a file written by ``simulate`` back into column arrays."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    data = np.array(rows)
    return {name: data[:, i] for i, name in enumerate(header)}


# -- commands --------------------------------------------------------------


def run_simulate(args) -> int:
    data = read_config_file(args.config) if args.config else {}
    _check_keys(data, COMMON_KEYS | set(SCENARIO_KEYS))
    for key in ("scenario", "d", "alpha_star", "t_max", "steps", "format", "gamma", "omega", "z", "r"):
        flag = getattr(args, key, None)
        if flag is not None:
            data[key] = flag
    if args.bits:
        data["bits"] = True
    if "scenario" not in data:
        raise ConfigError("scenario: required")
    variant = _scenario_variant(data["scenario"])
    d = parse_int(data.get("d", 2), "d")
    alpha_star = parse_int(data["alpha_star"], "alpha_star") if data.get("alpha_star") is not None else None
    values = {k: parse_number(data[k], k) for k in SCENARIO_KEYS if data.get(k) is not None}
    cfg = RunConfig(
        command="simulate",
        scenario={"variant": variant.value, "d": d, "alpha_star": alpha_star, **values},
        t_max=parse_number(data.get("t_max", 10.0), "t_max"),
        steps=parse_int(data.get("steps", 10000), "steps"),
        out=args.out,
        format=str(data.get("format", "csv")),
        bits=str(data.get("bits", False)).lower() in ("1", "true", "yes"),
    )
    cfg.validate()
    spec = build_spec(variant, values, d, alpha_star)
    traj = capacity_trajectory(spec, uniform_grid(cfg.t_max, cfg.steps))
    text = render_table(trajectory_columns(d, cfg.bits), trajectory_rows(traj, cfg.bits), cfg.format)
    write_output(text, cfg.out)
    return EXIT_OK


def run_sweep(args) -> int:
    data = read_config_file(args.config)
    if "scenario" not in data:
        raise ConfigError("scenario: required")
    variant = _scenario_variant(data["scenario"])
    _check_keys(data, COMMON_KEYS | set(SWEEP_PARAMS[variant]))
    d = parse_int(data.get("d", 2), "d")
    alpha_star = parse_int(data["alpha_star"], "alpha_star") if data.get("alpha_star") is not None else None
    cfg = RunConfig(
        command="sweep",
        t_max=parse_number(data.get("t_max", 10.0), "t_max"),
        steps=parse_int(data.get("steps", 10000), "steps"),
        out=args.out,
        format=str(args.format or data.get("format", "csv")),
        tolerances={"advantage": parse_number(data.get("advantage_tol", ADVANTAGE_TOL), "advantage_tol")},
    )
    cfg.validate()
    if variant is Variant.CONSTANT and d != 2:
        raise ConfigError("d: the constant-isotropic scenario requires d=2")
    names = SWEEP_PARAMS[variant]
    for n in names:
        if n not in data:
            raise ConfigError(f"{n}: required for the {variant.value} sweep")
    ranges = {n: parse_range(data[n], n) for n in names}
    workers = args.workers if args.workers is not None else parse_int(data.get("workers", 1), "workers")
    try:
        result = sweep(variant, ranges, uniform_grid(cfg.t_max, cfg.steps), cfg.tolerances["advantage"], d, alpha_star, workers)
    except EmptySweepError as exc:
        _print_skipped(exc.skipped)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    columns = list(names) + [
        "cp_sufficient_holds",
        "full_cp_ok_until",
        "cp_violated",
        "max_advantage_nats",
        "window_total_length",
        "bound_flag",
    ]
    rows = (
        [*r.param_dict.values(), int(r.cp_sufficient_holds), r.full_cp_ok_until, int(r.cp_violated), r.max_advantage, r.window_total_length, int(r.bound)]
        for r in result.rows
    )
    write_output(render_table(columns, rows, cfg.format), cfg.out)
    if result.skipped:
        _print_skipped(result.skipped)
    return EXIT_OK


def _print_skipped(skipped) -> None:
    print(f"# skipped {len(skipped)} parameter point(s)", file=sys.stderr)
    for params, reason in skipped:
        point = ", ".join(f"{k}={v:g}" for k, v in params)
        print(f"# {point}: {reason}", file=sys.stderr)


def read_table(path: str, n_cols: int) -> tuple[np.ndarray, np.ndarray]:
    """Read ``t, v_1, ..., v_n`` rows; ``#`` comments and one header line allowed."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"table: cannot read {path}: {exc.strerror}") from None
    rows = []
    header_seen = False
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        cells = [c.strip() for c in line.split(",")]
        try:
            values = [float(c) for c in cells]
        except ValueError:
            if not rows and not header_seen:
                header_seen = True
                continue
            raise ConfigError(f"table line {lineno}: non-numeric entry") from None
        if len(values) != n_cols + 1:
            raise ConfigError(f"table line {lineno}: expected {n_cols + 1} columns, got {len(values)}")
        rows.append(values)
    if len(rows) < 3:
        raise ConfigError("table: need at least 3 rows")
    data = np.array(rows)
    return data[:, 0], data[:, 1:]


def run_validate(args) -> int:
    d = args.d
    if d < 2:
        raise ConfigError(f"d: must be >= 2, got {d}")
    sources = [s for s in (args.ell, args.lam, args.kernel) if s]
    if len(sources) != 1:
        raise ConfigError("validate: give exactly one of --ell, --lambda or --kernel")
    if args.ell:
        grid, ell = read_table(args.ell, d + 1)
        report = kernel_admissibility(ell, grid, d, args.tol)
    elif args.lam:
        grid, lam = read_table(args.lam, d + 1)
        report = admissibility_from_integrals(1.0 - lam, grid, d, args.tol)
    else:
        grid, kappa = read_table(args.kernel, d + 1)
        weights = [parse_number(w, "delta") for w in args.delta.split(",")] if args.delta else [0.0] * (d + 1)
        if len(weights) != d + 1:
            raise ConfigError(f"delta: need {d + 1} weights, got {len(weights)}")
        lam = np.column_stack([solve_nakajima_zwanzig(KernelFunction(w, kappa[:, a]), grid).values for a, w in enumerate(weights)])
        report = admissibility_from_integrals(1.0 - lam, grid, d, args.tol)

    lam = report.lambdas
    ok = True
    for name, t in report.first_violation.items():
        if t is None:
            print(f"admissibility {name}: pass")
        else:
            ok = False
            print(f"admissibility {name}: FAIL first violation t={t:.6g}")
    lower, upper = cp_margins(lam, d)
    bad = np.minimum(lower, upper) < -CP_TOL
    if bad.any():
        ok = False
        print(f"fujiwara-algoet: FAIL first violation t={grid[np.argmax(bad)]:.6g}")
    else:
        print("fujiwara-algoet: pass")
    for a in range(d + 1):
        nd = kernel_nondecreasing_check(lam[:, a], grid)
        zeros = " ".join(f"{z:.6g}" for z in nd.zero_crossings) or "none"
        print(
            f"alpha {a + 1}: invertible={'yes' if nd.is_invertible else 'no'} "
            f"kernel-nondecreasing={'yes' if nd.is_kernel_nondecreasing else 'no'} zeros={zeros}"
        )
    return EXIT_OK if ok else EXIT_NUMERIC


def run_mub_check(args) -> int:
    family = build_mub_family(args.d)
    devs = mub_deviations(family)
    for name, value in devs.items():
        print(f"{name}: {value:.3e}")
    # eigenaction of a fixed non-uniform channel built on this family
    p = ProbabilityVector(args.d, np.arange(1, args.d + 3) / np.arange(1, args.d + 3).sum())
    residual = verify_eigenaction(p, family)
    print(f"channel eigenaction: {residual:.3e}")
    ok = max(*devs.values(), residual) < MUB_TOL
    print("pass" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_NUMERIC


# -- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kernelcap", description="Classical capacity of memory-kernel generalized Pauli dynamics.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="capacity trajectory of one scenario")
    sim.add_argument("--config")
    sim.add_argument("--scenario", choices=[v.value for v in Variant if v is not Variant.CUSTOM])
    sim.add_argument("--gamma")
    sim.add_argument("--omega")
    sim.add_argument("--z")
    sim.add_argument("--r")
    sim.add_argument("--d")
    sim.add_argument("--alpha-star", dest="alpha_star")
    sim.add_argument("--t-max", dest="t_max")
    sim.add_argument("--steps")
    sim.add_argument("--format", choices=["csv", "jsonl"])
    sim.add_argument("--bits", action="store_true", help="report capacities in bits instead of nats")
    sim.add_argument("--out")
    sim.set_defaults(func=run_simulate)

    sw = sub.add_parser("sweep", help="parameter sweep from a config file")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out")
    sw.add_argument("--format", choices=["csv", "jsonl"])
    sw.add_argument("--workers", type=int)
    sw.set_defaults(func=run_sweep)

    val = sub.add_parser("validate", help="legitimacy checks for a tabulated kernel or map")
    val.add_argument("--ell", help="table of t, ell_1..ell_{d+1}")
    val.add_argument("--lambda", dest="lam", help="table of t, lambda_1..lambda_{d+1}")
    val.add_argument("--kernel", help="table of t, smooth kernel eigenvalues kappa_1..kappa_{d+1}")
    val.add_argument("--delta", help="comma-separated delta weights for --kernel")
    val.add_argument("--d", type=int, required=True)
    val.add_argument("--tol", type=float, default=1e-9)
    val.set_defaults(func=run_validate)

    mc = sub.add_parser("mub-check", help="verify the MUB construction")
    mc.add_argument("--d", type=int, required=True)
    mc.set_defaults(func=run_mub_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, UnsupportedDimensionError, ScenarioParameterError, GridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapacityDomainError, SolverError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
