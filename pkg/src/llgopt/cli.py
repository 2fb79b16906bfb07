"""Command-line entry point, configuration parsing, and run drivers.

Configs are INI-style text (``key = value`` under ``[section]`` headers);
unknown sections or keys are rejected, and every numeric field is validated
with a message naming the offending ``section.key``.  Exit codes: 0 success,
1 verification-check failure, 2 configuration error, 3 numerical blowup,
4 line-search failure.
"""

import argparse
import configparser
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import control, scenarios, spectral, storage, verify
from .adjoint import AdjointInput, solve_adjoint
from .control import GradientMetric, OptimizeOptions, StoppingReason, optimize
from .errors import BlowupError, ConfigError
from .fields import Trajectory
from .spectral import Grid
from .state import Formulation, SolverConfig, solve_forward
from .storage import fmt_float

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_LINE_SEARCH = 4


def _parse_bool(raw, key):
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(key, f"expected a boolean, got {raw!r}")


def _parse_num(raw, key, kind, minimum=None, strict_min=False):
    try:
        value = kind(raw)
    except ValueError:
        raise ConfigError(key, f"expected {kind.__name__}, got {raw!r}") from None
    if minimum is not None:
        if strict_min and not value > minimum:
            raise ConfigError(key, f"must be > {minimum}, got {value}")
        if not strict_min and not value >= minimum:
            raise ConfigError(key, f"must be >= {minimum}, got {value}")
    return value


# Schema: section -> key -> (parser, required, default).  Parsers receive
# (raw string, dotted key name).
_SCHEMA = {
    "grid": {
        "lx": (lambda r, k: _parse_num(r, k, float, 0.0, True), False, "1.0"),
        "ly": (lambda r, k: _parse_num(r, k, float, 0.0, True), False, "1.0"),
        "nx": (lambda r, k: _parse_num(r, k, int, 4), False, "32"),
        "ny": (lambda r, k: _parse_num(r, k, int, 4), False, "32"),
    },
    "time": {
        "t": (lambda r, k: _parse_num(r, k, float, 0.0, True), True, None),
        "nt": (lambda r, k: _parse_num(r, k, int, 1), True, None),
    },
    "solver": {
        "formulation": (None, False, "ep"),
        "renormalize_every": (lambda r, k: _parse_num(r, k, int, 1), False, None),
        "dealias": (_parse_bool, False, "false"),
    },
    "scenario": {
        "kind": (None, True, None),
        "theta0": (lambda r, k: _parse_num(r, k, float), False, str(math.pi / 4)),
        "h": (lambda r, k: _parse_num(r, k, float), False, "1.0"),
        "scale": (lambda r, k: _parse_num(r, k, float, 0.0, True), False, "1.0"),
        "control_amp": (lambda r, k: _parse_num(r, k, float, 0.0), False, "0.0"),
        "amp": (lambda r, k: _parse_num(r, k, float, 0.0, True), False, "0.15"),
        "e_mf_factor": (lambda r, k: _parse_num(r, k, float, 0.0, True), False, "10.0"),
        "m0": (None, False, None),
        "m_d": (None, False, None),
        "m_omega": (None, False, None),
        "u": (None, False, None),
    },
    "control": {
        "e_mf": (lambda r, k: _parse_num(r, k, float, 0.0, True), False, None),
        "u_init": (None, False, "zero"),
    },
    "optimizer": {
        "max_iter": (lambda r, k: _parse_num(r, k, int, 0), False, "100"),
        "grad_tol": (lambda r, k: _parse_num(r, k, float, 0.0, True), False, "1e-6"),
        "armijo_c": (lambda r, k: _parse_num(r, k, float, 0.0, True), False, "1e-4"),
        "backtrack_ratio": (lambda r, k: _parse_num(r, k, float, 0.0, True), False, "0.5"),
        "max_backtracks": (lambda r, k: _parse_num(r, k, int, 0), False, "40"),
        "initial_step": (lambda r, k: _parse_num(r, k, float, 0.0, True), False, "1.0"),
        "metric": (None, False, "h1"),
        "vi_probes": (lambda r, k: _parse_num(r, k, int, 0), False, "100"),
    },
    "output": {
        "directory": (None, False, "out"),
        "snapshot_stride": (lambda r, k: _parse_num(r, k, int, 1), False, "64"),
    },
}


@dataclass
class RunConfig:
    values: dict
    path: str

    def __getitem__(self, section):
        return self.values[section]


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str.lower
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError("config", f"parse error in {path}: {exc}") from exc

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(section, "unknown section")
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
    for section, keys in _SCHEMA.items():
        got = dict(parser.items(section)) if parser.has_section(section) else {}
        parsed = {}
        for key, (fn, required, default) in keys.items():
            raw = got.get(key, default)
            if raw is None:
                if required:
                    raise ConfigError(f"{section}.{key}", "required key is missing")
                parsed[key] = None
                continue
            parsed[key] = fn(raw, f"{section}.{key}") if fn is not None else raw.strip()
        values[section] = parsed

    _validate_enums(values)
    return RunConfig(values=values, path=str(path))


def _validate_enums(values):
    form = values["solver"]["formulation"].lower()
    if form not in ("ep", "nlp"):
        raise ConfigError("solver.formulation", f"expected 'ep' or 'nlp', got {form!r}")
    kind = values["scenario"]["kind"].lower()
    if kind not in scenarios.SCENARIO_KINDS + ("files",):
        raise ConfigError(
            "scenario.kind",
            f"expected one of {scenarios.SCENARIO_KINDS + ('files',)}, got {kind!r}",
        )
    metric = values["optimizer"]["metric"].lower()
    if metric not in ("l2", "h1"):
        raise ConfigError("optimizer.metric", f"expected 'l2' or 'h1', got {metric!r}")
    if kind == "files":
        for key in ("m0", "m_d", "m_omega"):
            if not values["scenario"][key]:
                raise ConfigError(f"scenario.{key}", "required when scenario.kind = files")


def _grid(cfg) -> Grid:
    g = cfg["grid"]
    return Grid(g["lx"], g["ly"], g["nx"], g["ny"])


def _solver_config(cfg) -> SolverConfig:
    s = cfg["solver"]
    return SolverConfig(
        nt=cfg["time"]["nt"],
        formulation=Formulation(s["formulation"].lower()),
        renormalize_every=s["renormalize_every"],
        dealias=s["dealias"],
    )


def _build_scenario(cfg, seed) -> scenarios.Scenario:
    grid = _grid(cfg)
    horizon = cfg["time"]["t"]
    nt = cfg["time"]["nt"]
    sc = cfg["scenario"]
    kind = sc["kind"].lower()
    if kind == "files":
        m0 = storage.read_field(sc["m0"])
        m_d = storage.read_trajectory(sc["m_d"])
        m_omega = storage.read_field(sc["m_omega"])
        u = storage.read_trajectory(sc["u"]) if sc["u"] else Trajectory.zeros(grid, horizon, nt)
        return scenarios.Scenario(grid, horizon, nt, m0, u, m_d, m_omega,
                                  e_mf=cfg["control"]["e_mf"])
    params = {"theta0": sc["theta0"], "h": sc["h"], "scale": sc["scale"],
              "control_amp": sc["control_amp"], "amp": sc["amp"],
              "e_mf_factor": sc["e_mf_factor"]}
    scen = scenarios.build(kind, grid, horizon, nt, seed=seed,
                           solver=_solver_config(cfg), **params)
    if cfg["control"]["e_mf"] is not None:
        scen.e_mf = cfg["control"]["e_mf"]
    return scen


def _simulate_control(scen, cfg):
    """Control used by plain simulation: the scenario's own drive."""
    if scen.u_true is not None:
        return scen.u_true
    return scen.u


def cmd_simulate(cfg, outdir, seed) -> int:
    scen = _build_scenario(cfg, seed)
    solver = _solver_config(cfg)
    u = _simulate_control(scen, cfg)
    try:
        traj = solve_forward(scen.m0, u, scen.horizon, solver)
    except BlowupError as exc:
        print(f"numerical blowup: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    stride = cfg["output"]["snapshot_stride"]
    storage.write_trajectory(outdir / "m", traj, stride=stride)
    e1_lhs, e1_rhs, e2_lhs, e2_rhs = verify.energy_series(traj, u)
    diag = traj.diagnostics
    rows = []
    for k in range(traj.n_steps + 1):
        rows.append([fmt_float(x) for x in (
            traj.times[k], diag.sphere_defect[k], diag.grad_l2sq[k],
            diag.lap_l2sq[k], diag.mxlap_l2sq[k],
            e1_lhs[k], e1_rhs[k], e2_lhs[k], e2_rhs[k])])
    storage.write_csv(outdir / "timeseries.csv",
                      ["t", "sphere_defect", "grad_m_l2sq", "lap_m_l2sq",
                       "mxlap_l2sq", "e1_lhs", "e1_rhs", "e2_lhs", "e2_rhs"], rows)
    print(f"simulate: wrote {traj.n_steps + 1} frames worth of diagnostics to {outdir}")
    return EXIT_OK


def cmd_optimize(cfg, outdir, seed) -> int:
    scen = _build_scenario(cfg, seed)
    solver = _solver_config(cfg)
    if scen.m_d is None or scen.m_omega is None:
        print("scenario provides no tracking data; cannot optimize", file=sys.stderr)
        return EXIT_CONFIG
    spec = scen.ocp(solver=solver)
    o = cfg["optimizer"]
    opts = OptimizeOptions(
        max_iter=o["max_iter"], grad_tol=o["grad_tol"], armijo_c=o["armijo_c"],
        backtrack_ratio=o["backtrack_ratio"], max_backtracks=o["max_backtracks"],
        initial_step=o["initial_step"], metric=GradientMetric(o["metric"].lower()),
    )
    u_init_src = cfg["control"]["u_init"]
    if u_init_src == "zero":
        u_init = Trajectory.zeros(spec.grid, spec.horizon, spec.nt)
    else:
        u_init = storage.read_trajectory(u_init_src)

    try:
        result = optimize(spec, u_init, opts)
    except BlowupError as exc:
        print(f"numerical blowup during optimization: {exc}", file=sys.stderr)
        return EXIT_BLOWUP

    rows = []
    for rec in result.report.records:
        rows.append([str(rec.iteration)] + [fmt_float(x) for x in (
            rec.cost.tracking, rec.cost.terminal, rec.cost.control_l2,
            rec.cost.control_h1, rec.cost.total, rec.gradient_norm,
            rec.step_size)] + [str(rec.budget_active).lower()])
    storage.write_csv(outdir / "iterations.csv",
                      ["iter", "tracking", "terminal", "control_l2", "control_h1",
                       "total", "grad_norm", "step", "budget_active"], rows)
    storage.write_snapshot(outdir / "m_final.llgf", result.m.frame_array(spec.nt),
                           spec.grid, spec.horizon)
    storage.write_trajectory(outdir / "u_star", result.u,
                             stride=cfg["output"]["snapshot_stride"])
    storage.write_trajectory(outdir / "m_star", result.m,
                             stride=cfg["output"]["snapshot_stride"])

    # First-order-condition certificate on random admissible probes.
    phi = solve_adjoint(AdjointInput(result.m, result.u, spec.m_d, spec.m_omega), solver)
    torque = control.adjoint_torque(phi, result.m)
    rng = np.random.default_rng(seed)
    probes = scenarios.random_admissible_controls(
        spec.grid, spec.horizon, spec.nt, spec.e_mf, cfg["optimizer"]["vi_probes"], rng)
    residuals = control.vi_residuals(result.u, torque, probes)
    lines = [
        f"stopping_reason = {result.report.stopping_reason.value}",
        f"iterations = {len(result.report.records)}",
        f"probes = {len(residuals)}",
    ]
    if residuals:
        worst = min(v / s for v, s in residuals)
        lines.append(f"worst_normalized_residual = {fmt_float(worst)}")
        lines.append("normalization = (|u|_H1 + |torque|_L2 + 1) * |probe - u|_H1")
    (outdir / "vi_report.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))

    if result.report.stopping_reason is StoppingReason.LINE_SEARCH_FAIL:
        return EXIT_LINE_SEARCH
    return EXIT_OK


_SUITES = ("transforms", "operators", "sphere", "equivalence", "energy", "gradient", "all")


def cmd_verify(cfg, outdir, seed, suite) -> int:
    if suite not in _SUITES:
        print(f"unknown suite {suite!r}; expected one of {_SUITES}", file=sys.stderr)
        return EXIT_CONFIG
    grid = _grid(cfg)
    results = verify.run_suite([suite], grid, cfg["time"]["t"], cfg["time"]["nt"], seed,
                               scale=cfg["scenario"]["scale"])
    rows = []
    for res in results:
        print(res.line())
        rows.append([res.name, str(res.passed).lower(), fmt_float(res.measured),
                     fmt_float(res.tolerance),
                     "" if res.observed_order is None else fmt_float(res.observed_order),
                     res.details])
    storage.write_csv(outdir / "checks.csv",
                      ["name", "passed", "measured", "tolerance", "observed_order",
                       "details"], rows)
    (outdir / "checks.txt").write_text("".join(r.line() + "\n" for r in results))
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} of {len(results)} checks failed", file=sys.stderr)
        return EXIT_CHECK_FAILED
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def cmd_make_scenario(cfg, outdir, seed) -> int:
    scen = _build_scenario(cfg, seed)
    grid = scen.grid
    storage.write_snapshot(outdir / "m0.llgf", scen.m0, grid, 0.0)
    if scen.m_omega is not None:
        storage.write_snapshot(outdir / "m_omega.llgf", scen.m_omega, grid, scen.horizon)
    if scen.m_d is not None:
        storage.write_trajectory(outdir / "m_d", scen.m_d)
    if scen.u_true is not None:
        storage.write_trajectory(outdir / "u_true", scen.u_true)
        storage.write_trajectory(outdir / "u", scen.u_true)
    elif scen.u is not None:
        storage.write_trajectory(outdir / "u", scen.u)

    lines = ["[grid]",
             f"lx = {fmt_float(grid.lx)}", f"ly = {fmt_float(grid.ly)}",
             f"nx = {grid.nx}", f"ny = {grid.ny}",
             "", "[time]",
             f"t = {fmt_float(scen.horizon)}", f"nt = {scen.nt}",
             "", "[scenario]", "kind = files",
             f"m0 = {outdir / 'm0.llgf'}"]
    if scen.m_d is not None:
        lines.append(f"m_d = {outdir / 'm_d'}")
    if scen.m_omega is not None:
        lines.append(f"m_omega = {outdir / 'm_omega.llgf'}")
    if scen.u_true is not None or scen.u is not None:
        lines.append(f"u = {outdir / 'u'}")
    lines += ["", "[control]"]
    if scen.e_mf is not None:
        lines.append(f"e_mf = {fmt_float(scen.e_mf)}")
    config_path = outdir / "run.ini"
    config_path.write_text("\n".join(lines) + "\n")
    print(f"make-scenario: wrote fields and {config_path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="llgopt",
        description="LLG magnetization control: simulate, optimize, verify.",
    )
    parser.add_argument("command",
                        choices=["simulate", "optimize", "verify", "make-scenario",
                                 "adjoint-check"])
    parser.add_argument("--config", required=True, help="path to the INI run config")
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--suite", default="all",
                        help="verify: which check suite to run")
    args = parser.parse_args(argv)

    try:
        spectral.set_workers(args.threads)
        cfg = load_config(args.config)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    outdir = Path(args.out if args.out is not None else cfg["output"]["directory"])
    outdir.mkdir(parents=True, exist_ok=True)

    try:
        if args.command == "simulate":
            return cmd_simulate(cfg, outdir, args.seed)
        if args.command == "optimize":
            return cmd_optimize(cfg, outdir, args.seed)
        if args.command == "verify":
            return cmd_verify(cfg, outdir, args.seed, args.suite)
        if args.command == "adjoint-check":
            return cmd_verify(cfg, outdir, args.seed, "gradient")
        return cmd_make_scenario(cfg, outdir, args.seed)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowupError as exc:
        print(f"numerical blowup: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
