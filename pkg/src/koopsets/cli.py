"""Scenario runner: parse a declarative config, execute named checks,
write CSV reports, and return a machine-readable pass/fail summary.

Exit codes: 0 all checks pass; 1 at least one check fails; 2 config parse
or validation error; 3 runtime divergence (flow blow-up or a flowed point
escaping the observable window).

Config schema (TOML, unknown keys are errors)::

    [system]            # one family with its parameters
    family = "scalar_affine"        # "linear_feedback" | "control_affine"
    a = -1.0                        # scalar_affine: xdot = a x + u
    # A, B, feedbacks                 linear_feedback: xdot = (A + B K) x
    # dims, drift, controlled         control_affine: xdot = f0 + sum u_k f_k

    [controls]
    coords = [[-1.0], [0.0], [1.0]] # control sample; optional for
                                    # linear_feedback (defaults to the
                                    # flattened feedback matrices)
    segments = 4                    # uniform segments per signal
    seed = 0                        # base seed for seeded checks

    [grid]
    lo = [-2.0]
    hi = [2.0]
    points_per_axis = 401

    [time]
    tau = 0.0
    t = 1.0
    step = 1e-3                     # integrator step
    dtau = 1e-2                     # transport curve spacing (optional)
    h0 = 0.1                        # horizon sequence start (optional)
    h_factor = 0.5                  # horizon decay factor (optional)
    h_count = 6                     # horizon count (optional)

    [checks]
    names = ["semigroup", "duality"]
    [checks.tolerances]             # optional per-check overrides
    semigroup = 1e-6

    [output]
    dir = "out/scenario_name"       # optional if --output-dir is passed
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .flows import (
    ControlSampleSet,
    FlowDivergenceError,
    PrimitiveField,
    VectorFieldSpec,
)
from .observables import SpatialGrid, WindowEscapeError
from .checks import (
    CheckContext,
    ORACLE_FAMILIES,
    REGISTRY,
    SPECTRAL_CHECKS,
    list_checks_text,
)


class ScenarioError(ValueError):
    """Configuration parse or validation failure (exit code 2)."""


# ---------------------------------------------------------------------------
# Schema helpers


def _require_table(cfg, key):
    if key not in cfg:
        raise ScenarioError(f"missing required section [{key}]")
    if not isinstance(cfg[key], dict):
        raise ScenarioError(f"[{key}] must be a section")
    return cfg[key]


def _reject_unknown(table, allowed, where):
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ScenarioError(f"unknown key(s) in [{where}]: {', '.join(unknown)}")


def _number(table, key, where, default=None, minimum=None,
            strict_minimum=None):
    if key not in table:
        if default is None:
            raise ScenarioError(f"missing required key {where}.{key}")
        return float(default)
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}.{key} must be a number")
    value = float(value)
    if not np.isfinite(value):
        raise ScenarioError(f"{where}.{key} must be finite")
    if minimum is not None and value < minimum:
        raise ScenarioError(f"{where}.{key} must be >= {minimum}")
    if strict_minimum is not None and value <= strict_minimum:
        raise ScenarioError(f"{where}.{key} must be > {strict_minimum}")
    return value


def _integer(table, key, where, default=None, minimum=None):
    if key not in table:
        if default is None:
            raise ScenarioError(f"missing required key {where}.{key}")
        return int(default)
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}.{key} must be an integer")
    if minimum is not None and value < minimum:
        raise ScenarioError(f"{where}.{key} must be >= {minimum}")
    return value


def _vector(value, where):
    if (not isinstance(value, list) or not value
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                       for v in value)):
        raise ScenarioError(f"{where} must be a nonempty array of numbers")
    return [float(v) for v in value]


def _matrix(value, where):
    if not isinstance(value, list) or not value:
        raise ScenarioError(f"{where} must be a nonempty array of rows")
    rows = [_vector(row, f"{where} row") for row in value]
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise ScenarioError(f"{where} rows must have equal length")
    return rows


# ---------------------------------------------------------------------------
# Section builders


def _build_primitive(table, dims, where):
    if not isinstance(table, dict):
        raise ScenarioError(f"{where} must be a table")
    kind = table.get("kind")
    if kind == "zero":
        _reject_unknown(table, {"kind"}, where)
        return PrimitiveField.zero(dims)
    if kind == "constant":
        _reject_unknown(table, {"kind", "vector"}, where)
        vec = _vector(table.get("vector"), f"{where}.vector")
        if len(vec) != dims:
            raise ScenarioError(f"{where}.vector must have length {dims}")
        return PrimitiveField.constant(vec)
    if kind == "linear":
        _reject_unknown(table, {"kind", "matrix"}, where)
        mat = _matrix(table.get("matrix"), f"{where}.matrix")
        if len(mat) != dims or len(mat[0]) != dims:
            raise ScenarioError(f"{where}.matrix must be {dims}x{dims}")
        return PrimitiveField.linear(mat)
    if kind == "sine":
        _reject_unknown(table, {"kind", "scale"}, where)
        scale = _number(table, "scale", where, default=1.0)
        return PrimitiveField.sine(dims, scale)
    raise ScenarioError(
        f"{where}.kind must be one of zero, constant, linear, sine")


def _build_field(system):
    family = system.get("family")
    if family == "scalar_affine":
        _reject_unknown(system, {"family", "a"}, "system")
        return VectorFieldSpec.scalar_affine(_number(system, "a", "system"))
    if family == "linear_feedback":
        _reject_unknown(system, {"family", "A", "B", "feedbacks"}, "system")
        A = np.array(_matrix(system.get("A"), "system.A"))
        B = np.array(_matrix(system.get("B"), "system.B"))
        if A.shape[0] != A.shape[1]:
            raise ScenarioError("system.A must be square")
        if B.shape[0] != A.shape[0]:
            raise ScenarioError("system.B must have as many rows as A")
        raw = system.get("feedbacks")
        if not isinstance(raw, list) or not raw:
            raise ScenarioError("system.feedbacks must be a nonempty array")
        feedbacks = []
        for i, K in enumerate(raw):
            K = np.array(_matrix(K, f"system.feedbacks[{i}]"))
            if K.shape != (B.shape[1], A.shape[0]):
                raise ScenarioError(
                    f"system.feedbacks[{i}] must be "
                    f"{B.shape[1]}x{A.shape[0]}")
            feedbacks.append(K)
        return VectorFieldSpec.linear_feedback(A, B, feedbacks)
    if family == "control_affine":
        _reject_unknown(system, {"family", "dims", "drift", "controlled"},
                        "system")
        dims = _integer(system, "dims", "system", minimum=1)
        drift = _build_primitive(system.get("drift", {"kind": "zero"}), dims,
                                 "system.drift")
        raw = system.get("controlled")
        if not isinstance(raw, list) or not raw:
            raise ScenarioError("system.controlled must be a nonempty array")
        controlled = [
            _build_primitive(t, dims, f"system.controlled[{i}]")
            for i, t in enumerate(raw)
        ]
        return VectorFieldSpec.control_affine(dims, drift=drift,
                                              controlled=controlled)
    raise ScenarioError(
        "system.family must be one of scalar_affine, linear_feedback, "
        "control_affine")


class Scenario:
    """Validated scenario configuration."""

    def __init__(self, cfg):
        if not isinstance(cfg, dict):
            raise ScenarioError("config root must be a table")
        _reject_unknown(cfg, {"system", "controls", "grid", "time", "checks",
                              "output"}, "config root")

        self.field = _build_field(_require_table(cfg, "system"))

        controls = _require_table(cfg, "controls")
        _reject_unknown(controls, {"coords", "segments", "seed"}, "controls")
        if "coords" in controls:
            coords = [_vector(row, f"controls.coords[{i}]")
                      for i, row in enumerate(_matrix(controls["coords"],
                                                      "controls.coords"))]
            self.sample = ControlSampleSet(coords)
        elif self.field.family == "linear_feedback":
            self.sample = self.field.feedback_sample()
        else:
            raise ScenarioError("missing required key controls.coords")
        if self.sample.dim != self.field.control_dim:
            raise ScenarioError(
                f"controls.coords dimension {self.sample.dim} does not match "
                f"the field's control dimension {self.field.control_dim}")
        self.segments = _integer(controls, "segments", "controls", default=1,
                                 minimum=1)
        self.seed = _integer(controls, "seed", "controls", default=0,
                             minimum=0)

        grid = _require_table(cfg, "grid")
        _reject_unknown(grid, {"lo", "hi", "points_per_axis"}, "grid")
        lo = _vector(grid.get("lo"), "grid.lo")
        hi = _vector(grid.get("hi"), "grid.hi")
        ppa = _integer(grid, "points_per_axis", "grid", minimum=2)
        if len(lo) != len(hi):
            raise ScenarioError("grid.lo and grid.hi must have equal length")
        if len(lo) != self.field.dims:
            raise ScenarioError(
                f"grid box dimension {len(lo)} does not match the field's "
                f"state dimension {self.field.dims}")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ScenarioError("grid.lo must be componentwise below grid.hi")
        self.grid = SpatialGrid(lo, hi, ppa)

        time_t = _require_table(cfg, "time")
        _reject_unknown(time_t, {"tau", "t", "step", "dtau", "h0", "h_factor",
                                 "h_count"}, "time")
        self.tau = _number(time_t, "tau", "time", minimum=0.0)
        self.t = _number(time_t, "t", "time")
        if self.t <= self.tau:
            raise ScenarioError("time.t must exceed time.tau")
        self.step = _number(time_t, "step", "time", strict_minimum=0.0)
        self.dtau = _number(time_t, "dtau", "time", default=1e-2,
                            strict_minimum=0.0)
        h0 = _number(time_t, "h0", "time", default=0.1, strict_minimum=0.0)
        h_factor = _number(time_t, "h_factor", "time", default=0.5,
                           strict_minimum=0.0)
        if h_factor >= 1.0:
            raise ScenarioError("time.h_factor must be < 1")
        h_count = _integer(time_t, "h_count", "time", default=6, minimum=1)
        self.h_values = [h0 * h_factor ** k for k in range(h_count)]

        checks = _require_table(cfg, "checks")
        _reject_unknown(checks, {"names", "tolerances"}, "checks")
        names = checks.get("names")
        if (not isinstance(names, list) or not names
                or not all(isinstance(n, str) for n in names)):
            raise ScenarioError("checks.names must be a nonempty array "
                                "of strings")
        unknown = sorted(set(names) - set(REGISTRY))
        if unknown:
            raise ScenarioError(f"unknown check name(s): {', '.join(unknown)}")
        if len(set(names)) != len(names):
            raise ScenarioError("checks.names contains duplicates")
        self.names = [n for n in REGISTRY if n in set(names)]

        tol_table = checks.get("tolerances", {})
        if not isinstance(tol_table, dict):
            raise ScenarioError("checks.tolerances must be a table")
        self.tolerances = {n: REGISTRY[n].default_tolerance for n in self.names}
        for name, value in tol_table.items():
            if name not in REGISTRY:
                raise ScenarioError(
                    f"checks.tolerances names an unknown check: {name}")
            if name not in self.names:
                raise ScenarioError(
                    f"checks.tolerances sets a tolerance for {name}, which "
                    f"is not in checks.names")
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ScenarioError(f"tolerance for {name} must be a number")
            if not np.isfinite(value) or value < 0:
                raise ScenarioError(
                    f"tolerance for {name} must be finite and >= 0")
            self.tolerances[name] = float(value)

        output = cfg.get("output", {})
        if not isinstance(output, dict):
            raise ScenarioError("[output] must be a section")
        _reject_unknown(output, {"dir"}, "output")
        self.output_dir = output.get("dir")
        if self.output_dir is not None and not isinstance(self.output_dir, str):
            raise ScenarioError("output.dir must be a string")

        self._validate_check_applicability()
        self.spliced_segments = self._resolve_spliced_segments()

    # -- cross-section validation -------------------------------------------

    def _validate_check_applicability(self):
        named = set(self.names)
        if named & SPECTRAL_CHECKS and self.field.family != "linear_feedback":
            bad = ", ".join(sorted(named & SPECTRAL_CHECKS))
            raise ScenarioError(
                f"check(s) {bad} require the linear_feedback family")
        if "flow_oracle" in named and self.field.family not in ORACLE_FAMILIES:
            raise ScenarioError(
                "check flow_oracle requires a family with a closed-form "
                "flow (scalar_affine or linear_feedback)")
        if "continuity_in_control" in named:
            coords = self.sample.coords_array()
            if all(np.allclose(coords[0], row) for row in coords[1:]):
                raise ScenarioError(
                    "check continuity_in_control requires at least two "
                    "distinct control points")
        if "transport_inclusion" in named:
            if (self.t - self.tau) / self.dtau < 2.5:
                raise ScenarioError(
                    "check transport_inclusion needs at least three curve "
                    "samples: decrease time.dtau")

    def _resolve_spliced_segments(self):
        """Smallest segment multiple whose grid contains the midpoint."""
        s = 0.5 * (self.tau + self.t)
        needed = {"semigroup", "adjoint_inequality"} & set(self.names)
        for mult in range(1, 65):
            n_seg = self.segments * mult
            pos = s / (self.t / n_seg)
            if abs(pos - round(pos)) < 1e-9:
                return n_seg
        if needed:
            raise ScenarioError(
                "checks " + ", ".join(sorted(needed)) + " splice signals at "
                "the midpoint of [tau, t], which never falls on a segment "
                "boundary for controls.segments = " + str(self.segments))
        return self.segments


def load_scenario(path):
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"cannot parse config {path}: {exc}") from exc
    return Scenario(cfg)


# ---------------------------------------------------------------------------
# Execution


def build_context(scenario, seed=None, step=None):
    return CheckContext(
        field=scenario.field,
        sample=scenario.sample,
        grid=scenario.grid,
        tau=scenario.tau,
        t=scenario.t,
        step=scenario.step if step is None else step,
        dtau=scenario.dtau,
        h_values=scenario.h_values,
        segments=scenario.segments,
        spliced_segments=scenario.spliced_segments,
        seed=scenario.seed if seed is None else seed,
    )


def execute_checks(ctx, names, parallel=False):
    """Run the named checks; returns {name: CheckOutcome}."""
    if parallel and len(names) > 1:
        with ThreadPoolExecutor(max_workers=min(8, len(names))) as pool:
            futures = {name: pool.submit(REGISTRY[name].runner, ctx)
                       for name in names}
            return {name: fut.result() for name, fut in futures.items()}
    return {name: REGISTRY[name].runner(ctx) for name in names}


def write_reports(output_dir, names, outcomes, tolerances):
    """One CSV per check plus summary.csv; returns {name: passed}."""
    os.makedirs(output_dir, exist_ok=True)
    verdicts = {}
    summary = ["check,status,worst_defect,tolerance"]
    for name in names:
        out = outcomes[name]
        tol = tolerances[name]
        passed = out.worst_defect < tol
        verdicts[name] = passed
        body = "\n".join([out.csv_header] + list(out.csv_rows)) + "\n"
        with open(os.path.join(output_dir, f"{name}.csv"), "w",
                  newline="") as fh:
            fh.write(body)
        summary.append(f"{name},{'pass' if passed else 'fail'},"
                       f"{out.worst_defect:.17g},{tol:.17g}")
    with open(os.path.join(output_dir, "summary.csv"), "w", newline="") as fh:
        fh.write("\n".join(summary) + "\n")
    return verdicts


def run_scenario(config_path, output_dir=None, seed=None, step=None,
                 parallel=False, stream=None):
    """Full run; returns the process exit code."""
    stream = stream if stream is not None else sys.stdout
    try:
        scenario = load_scenario(config_path)
        out_dir = output_dir or scenario.output_dir
        if not out_dir:
            raise ScenarioError(
                "no output directory: set [output] dir or pass --output-dir")
        if step is not None and step <= 0:
            raise ScenarioError("--step must be positive")
        if seed is not None and seed < 0:
            raise ScenarioError("--seed must be nonnegative")
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    ctx = build_context(scenario, seed=seed, step=step)
    try:
        outcomes = execute_checks(ctx, scenario.names, parallel=parallel)
    except (FlowDivergenceError, WindowEscapeError) as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 3

    verdicts = write_reports(out_dir, scenario.names, outcomes,
                             scenario.tolerances)
    for name in scenario.names:
        status = "PASS" if verdicts[name] else "FAIL"
        print(f"[{status}] {name}: worst_defect="
              f"{outcomes[name].worst_defect:.6g} "
              f"tolerance={scenario.tolerances[name]:.6g}", file=stream)
    n_pass = sum(verdicts.values())
    print(f"{n_pass}/{len(scenario.names)} checks passed; reports in "
          f"{out_dir}", file=stream)
    return 0 if n_pass == len(scenario.names) else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="koopsets",
        description="Run verification scenarios for set-valued composition, "
                    "gradient-field, and pushforward operators.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the checks of a scenario config")
    run_p.add_argument("config", help="path to a scenario TOML file")
    run_p.add_argument("--output-dir", default=None,
                       help="override the configured report directory")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the configured base seed")
    run_p.add_argument("--step", type=float, default=None,
                       help="override the configured integrator step")
    run_p.add_argument("--parallel", action="store_true",
                       help="run independent checks concurrently")

    sub.add_parser("list-checks",
                   help="list registered checks with their modules")

    args = parser.parse_args(argv)
    if args.command == "list-checks":
        print(list_checks_text(), end="")
        return 0
    return run_scenario(args.config, output_dir=args.output_dir,
                        seed=args.seed, step=args.step,
                        parallel=args.parallel)


if __name__ == "__main__":
    sys.exit(main())
