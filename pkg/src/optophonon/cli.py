"""Command-line front end.

Subcommands::

    optophonon synth        compile a target into a schedule file
    optophonon simulate     run a target or schedule file under one model
    optophonon sweep-delta  closed-system fidelities versus |delta|/Omega
    optophonon sweep-gamma  open-system fidelities versus gamma_c/Omega and nbar_m
    optophonon table1       the three projected parameter rows

Configuration files are INI files; see ``RunConfig`` for the grammar.
"""

from __future__ import annotations

import argparse
import configparser
import datetime
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from importlib import metadata
from pathlib import Path

import numpy as np

from .couplings import COUPLING_MODELS, SystemParams, table1_presets
from .dynamics import NoiseParams, run_protocol
from .errors import ConfigError, IntegrationError, OptophononError, SynthesisError
from .fockspace import SpaceShape
from .leakage import (
    fidelity_F1_analytic,
    fidelity_F2_analytic,
    overlap_fidelity,
    protocol_fidelity_numeric,
    protocol_schedule,
    run_schedule_closed,
)
from .schedule_io import format_target_spec, load_schedule, parse_target_spec, save_schedule
from .synthesis import TargetState, superposition_02, synthesize, verify_schedule

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SYNTHESIS = 3
EXIT_INTEGRATION = 4

MODELS = ("ideal", "leakage", "lindblad-simplified", "lindblad-full")
ALGORITHMS = ("forward", "reverse")
SWEEP_TARGETS = ("fock2", "superposition02")

#: Relative norm error accepted on command-line targets before rejection.
#: Four-digit amplitudes such as ``0:0.7071, 2:-0.7071`` miss unit norm by
#: about 1e-5; they are rescaled silently. Anything worse needs
#: ``--auto-normalize``.
TARGET_NORM_TOL = 1e-4

TABLE1_TOL = 0.02


@dataclass(frozen=True)
class SweepAxis:
    """``points`` values from ``start`` to ``stop`` (inclusive)."""

    name: str
    start: float
    stop: float
    points: int
    scale: str = "linear"

    def __post_init__(self):
        if self.points < 1:
            raise ConfigError("sweep needs at least one point")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"sweep scale must be 'linear' or 'log', got {self.scale!r}")
        if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            raise ConfigError("log sweep needs positive bounds")

    def values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.start])
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs, parsed from INI sections.

    ``[system]``  ``omega_c_hz, omega_m_hz, g_hz, Omega_hz, gamma_c_hz,
    gamma_m_hz, nbar_m, phi_d``; alternatively ``eta`` and
    ``delta_over_Omega`` (plus optional ``Omega_hz``) fix ``omega_m`` and
    ``g``.
    ``[target]``  ``state`` (target spec), ``auto_normalize``.
    ``[run]``  ``model``, ``algorithm``, ``couplings``.
    ``[sweep]``  ``start, stop, points, scale`` for sweep-delta;
    ``gamma_values, nbar_values, gamma_m_ratio, target`` for sweep-gamma.
    ``[output]``  ``path``.
    """

    system: dict = field(default_factory=dict)
    target: str | None = None
    auto_normalize: bool = False
    model: str = "ideal"
    algorithm: str = "reverse"
    couplings: str = "exact"
    sweep: dict = field(default_factory=dict)
    out: str | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.couplings not in COUPLING_MODELS:
            raise ConfigError(f"unknown coupling model {self.couplings!r}")

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser()
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        known = {"system", "target", "run", "sweep", "output"}
        unknown = set(parser.sections()) - known
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")

        def floats(section):
            out = {}
            if parser.has_section(section):
                for key, value in parser.items(section):
                    try:
                        out[key] = float(value)
                    except ValueError:
                        out[key] = value
            return out

        kwargs = {"system": floats("system"), "sweep": floats("sweep")}
        if parser.has_section("target"):
            kwargs["target"] = parser.get("target", "state", fallback=None)
            try:
                kwargs["auto_normalize"] = parser.getboolean("target", "auto_normalize", fallback=False)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if parser.has_section("run"):
            for key in ("model", "algorithm", "couplings"):
                if parser.has_option("run", key):
                    kwargs[key] = parser.get("run", key)
        if parser.has_section("output"):
            kwargs["out"] = parser.get("output", "path", fallback=None)
        for key, value in kwargs["system"].items():
            if isinstance(value, str):
                raise ConfigError(f"[system] {key} must be numeric, got {value!r}")
        return cls(**kwargs)

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        parser["system"] = {k: repr(v) for k, v in self.system.items()}
        if self.target is not None:
            parser["target"] = {"state": self.target, "auto_normalize": str(self.auto_normalize).lower()}
        parser["run"] = {"model": self.model, "algorithm": self.algorithm, "couplings": self.couplings}
        if self.sweep:
            parser["sweep"] = {k: repr(v) if isinstance(v, float) else v for k, v in self.sweep.items()}
        if self.out is not None:
            parser["output"] = {"path": self.out}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def params(self) -> SystemParams:
        s = dict(self.system)
        try:
            if "eta" in s or "delta_over_Omega" in s:
                Omega = math.tau * s.get("Omega_hz", 1.0 / math.tau)
                params = SystemParams.from_ratios(
                    s.get("eta", 0.1),
                    s.get("delta_over_Omega", 10.0),
                    Omega=Omega,
                    omega_c=math.tau * s.get("omega_c_hz", 0.0),
                )
                return params.with_(
                    gamma_c=math.tau * s.get("gamma_c_hz", 0.0),
                    gamma_m=math.tau * s.get("gamma_m_hz", 0.0),
                    nbar_m=s.get("nbar_m", 0.0),
                    phi_d=s.get("phi_d", 0.0),
                )
            return SystemParams.from_hz(s)
        except KeyError as exc:
            raise ConfigError(f"[system] lacks {exc.args[0]}") from None
        except ValueError as exc:
            raise ConfigError(f"[system] {exc}") from None

    def target_state(self) -> TargetState:
        if not self.target:
            raise ConfigError("no target given (use --target or [target] state)")
        return parse_target(self.target, self.auto_normalize)


def parse_target(spec: str, auto_normalize: bool = False) -> TargetState:
    amps = parse_target_spec(spec)
    norm = float(np.linalg.norm(amps))
    if norm == 0:
        raise ConfigError("target has zero norm")
    if abs(norm - 1.0) > TARGET_NORM_TOL and not auto_normalize:
        raise ConfigError(f"target norm is {norm:.6g}, not 1; rescale it or pass --auto-normalize")
    return TargetState.from_amplitudes(amps, normalize=True)


# -- CSV ---------------------------------------------------------------------


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_csv(path, header: dict, columns: list[str], rows: list[list]) -> str:
    """``#`` metadata lines, one column header, then rows at 17 digits."""
    lines = [f"# tool = optophonon {_version()}"]
    lines.append(f"# created = {datetime.datetime.now(datetime.timezone.utc).isoformat()}")
    lines += [f"# {k} = {v}" for k, v in header.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else f"{v:.17g}" for v in row))
    text = "\n".join(lines) + "\n"
    if path:
        Path(path).write_text(text)
    return text


def _map(func, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


# -- workers (module level so they pickle) -----------------------------------


def _delta_row(args):
    x, eta = args
    row = [x]
    status = "ok"
    for name, analytic in (("fock2", fidelity_F1_analytic), ("superposition02", fidelity_F2_analytic)):
        try:
            row.append(protocol_fidelity_numeric(name, 1.0, eta, -x))
        except OptophononError:
            row.append(float("nan"))
            status = "failed"
        row.append(analytic(1.0, eta, -x))
    return row + [status]


def _gamma_point(args):
    target, eta, delta_over_Omega, gamma, gamma_m_ratio, nbar, model = args
    params = SystemParams.from_ratios(
        eta,
        delta_over_Omega,
        gamma_c_over_Omega=gamma,
        gamma_m_over_Omega=gamma * gamma_m_ratio,
        nbar_m=nbar,
    )
    try:
        schedule = protocol_schedule(target, params, "lamb-dicke")
        return run_protocol(schedule, model=model).fidelity
    except OptophononError:
        return float("nan")


def _table1_point(args):
    index, which = args
    row = table1_presets()[index]
    params = row.to_params()
    target = TargetState.fock(2) if which == "F1" else superposition_02()
    schedule = synthesize(target, params, "reverse", "exact")
    result = run_protocol(schedule, model="simplified")
    return result.fidelity, result.projected_fidelity


# -- commands ----------------------------------------------------------------


def cmd_synth(config: RunConfig, out=None) -> int:
    out = sys.stdout if out is None else out
    target = config.target_state()
    params = config.params()
    schedule = synthesize(target, params, config.algorithm, config.couplings)
    fid = verify_schedule(schedule)
    print(f"target: {format_target_spec(target.coefficients)}", file=out)
    print(f"algorithm: {config.algorithm}  couplings: {config.couplings}  segments: {len(schedule)}", file=out)
    print(f"{'#':>3} {'kind':<8} {'k':>2} {'duration [s]':>24} {'phase [rad]':>22}", file=out)
    for i, seg in enumerate(schedule):
        print(f"{i:>3} {seg.kind:<8} {seg.k:>2} {seg.duration:>24.17g} {seg.phase:>22.17g}", file=out)
    print(f"ideal fidelity: {fid:.15f}", file=out)
    if config.out:
        save_schedule(schedule, config.out)
        print(f"schedule written to {config.out}", file=out)
    return EXIT_OK


def simulate_schedule(schedule, model: str) -> float:
    if model == "ideal":
        return verify_schedule(schedule)
    if model == "leakage":
        target = TargetState(schedule.target)
        cutoff = max(schedule.max_phonon(), target.N) + 6
        psi = run_schedule_closed(schedule, cutoff=cutoff)
        return overlap_fidelity(psi, target, SpaceShape(3, cutoff))
    return run_protocol(schedule, model=model.removeprefix("lindblad-")).fidelity


def cmd_simulate(config: RunConfig, schedule_path=None, out=None) -> int:
    out = sys.stdout if out is None else out
    if schedule_path:
        schedule = load_schedule(schedule_path)
        if schedule.target is None:
            schedule = replace(schedule, target=config.target_state().coefficients)
    else:
        schedule = synthesize(config.target_state(), config.params(), config.algorithm, config.couplings)
    fid = simulate_schedule(schedule, config.model)
    print(f"model: {config.model}  segments: {len(schedule)}  total time: {schedule.total_time:.6g} s", file=out)
    print(f"fidelity: {fid:.15f}", file=out)
    return EXIT_OK


def cmd_sweep_delta(config: RunConfig, jobs: int = 1, out=None) -> int:
    out = sys.stdout if out is None else out
    sw = config.sweep
    axis = SweepAxis(
        "delta_over_Omega",
        float(sw.get("start", 5.0)),
        float(sw.get("stop", 100.0)),
        int(sw.get("points", 40)),
        str(sw.get("scale", "linear")),
    )
    eta = float(config.system.get("eta", 0.1))
    rows = _map(_delta_row, [(float(x), eta) for x in axis.values()], jobs)
    header = {"eta": repr(eta), "axis": f"{axis.start!r}..{axis.stop!r} {axis.points} {axis.scale}",
              "couplings": "lamb-dicke", "Omega": "1 (durations in units of 1/Omega)"}
    columns = ["delta_over_Omega", "F1_numeric", "F1_analytic", "F2_numeric", "F2_analytic", "status"]
    text = write_csv(config.out, header, columns, rows)
    if not config.out:
        out.write(text)
    return EXIT_OK


def cmd_sweep_gamma(config: RunConfig, jobs: int = 1, out=None) -> int:
    out = sys.stdout if out is None else out
    sw = config.sweep

    def number_list(key, default):
        value = sw.get(key, default)
        if isinstance(value, float):
            return [value]
        try:
            return [float(v) for v in str(value).split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"[sweep] {key} must be a comma-separated list of numbers") from None

    gammas = number_list("gamma_values", "0, 0.005, 0.01, 0.02, 0.05")
    nbars = number_list("nbar_values", "0, 1, 5")
    ratio = float(sw.get("gamma_m_ratio", 0.1))
    target = str(sw.get("target", "fock2"))
    if target not in SWEEP_TARGETS:
        raise ConfigError(f"sweep target must be one of {SWEEP_TARGETS}")
    eta = float(config.system.get("eta", 0.1))
    delta = float(config.system.get("delta_over_Omega", 10.0))
    model = "full" if config.model == "lindblad-full" else "simplified"
    tasks = [(target, eta, delta, g, ratio, nb, model) for g in gammas for nb in nbars]
    values = _map(_gamma_point, tasks, jobs)
    rows = []
    for i, g in enumerate(gammas):
        chunk = values[i * len(nbars):(i + 1) * len(nbars)]
        rows.append([g, *chunk, "failed" if any(math.isnan(v) for v in chunk) else "ok"])
    header = {"target": target, "eta": repr(eta), "delta_over_Omega": repr(delta),
              "gamma_m_over_gamma_c": repr(ratio), "model": model, "couplings": "lamb-dicke"}
    columns = ["gamma_c_over_Omega", *[f"F_nbar_{nb:g}" for nb in nbars], "status"]
    text = write_csv(config.out, header, columns, rows)
    if not config.out:
        out.write(text)
    return EXIT_OK


def table1_results(jobs: int = 1) -> list[dict]:
    rows = table1_presets()
    tasks = [(i, which) for i in range(len(rows)) for which in ("F1", "F2")]
    values = _map(_table1_point, tasks, jobs)
    results = []
    for (i, which), (fid, projected) in zip(tasks, values):
        row = rows[i]
        expected = row.expected_F1 if which == "F1" else row.expected_F2
        results.append({
            "row": row.label,
            "quantity": which,
            "computed": fid,
            "expected": expected,
            "projected": projected,
            "passed": abs(fid - expected) <= TABLE1_TOL,
        })
    return results


def cmd_table1(config: RunConfig | None = None, jobs: int = 1, out=None) -> int:
    out = sys.stdout if out is None else out
    results = table1_results(jobs)
    print(f"{'row':<24} {'':<3} {'computed':>9} {'expected':>9} {'diff':>8} {'|t,g> pop':>10}  status", file=out)
    for r in results:
        status = "PASS" if r["passed"] else "FAIL"
        print(
            f"{r['row']:<24} {r['quantity']:<3} {r['computed']:>9.4f} {r['expected']:>9.4f} "
            f"{r['computed'] - r['expected']:>+8.4f} {r['projected']:>10.4f}  {status}",
            file=out,
        )
    for row in table1_presets():
        if row.note:
            print(f"note ({row.label}): {row.note}", file=out)
    return EXIT_OK


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optophonon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, target=True):
        p.add_argument("--config", help="INI configuration file")
        if target:
            p.add_argument("--target", help="target spec, e.g. '0:0.7071, 2:-0.7071'")
            p.add_argument("--auto-normalize", action="store_true", help="rescale targets that are not unit norm")
            p.add_argument("--algorithm", choices=ALGORITHMS)
            p.add_argument("--couplings", choices=COUPLING_MODELS)
        p.add_argument("--model", choices=MODELS)
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
        p.add_argument("--out", help="output path")
        p.add_argument("--eta", type=float, help="Lamb-Dicke parameter (overrides [system])")
        p.add_argument("--delta", type=float, help="|delta|/Omega (overrides [system])")

    common(sub.add_parser("synth", help="compile a target into a pulse schedule"))
    sim = sub.add_parser("simulate", help="simulate a target or schedule file")
    common(sim)
    sim.add_argument("--schedule", help="schedule file written by synth")
    common(sub.add_parser("sweep-delta", help="closed-system fidelity versus |delta|/Omega"), target=False)
    sg = sub.add_parser("sweep-gamma", help="open-system fidelity versus gamma_c/Omega")
    common(sg, target=False)
    sg.add_argument("--sweep-target", choices=SWEEP_TARGETS)
    common(sub.add_parser("table1", help="reproduce the three projected parameter rows"), target=False)
    return parser


def config_from_args(args) -> RunConfig:
    config = RunConfig.from_ini(Path(args.config).read_text()) if args.config else RunConfig()
    system = dict(config.system)
    if args.eta is not None:
        system["eta"] = args.eta
    if args.delta is not None:
        system["delta_over_Omega"] = args.delta
    if not system:
        system = {"eta": 0.1, "delta_over_Omega": 10.0}
    sweep = dict(config.sweep)
    if getattr(args, "sweep_target", None):
        sweep["target"] = args.sweep_target
    changes = {"system": system, "sweep": sweep}
    for name in ("target", "model", "algorithm", "couplings", "out"):
        value = getattr(args, name, None)
        if value is not None:
            changes[name] = value
    if getattr(args, "auto_normalize", False):
        changes["auto_normalize"] = True
    return replace(config, **changes)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        if args.command == "synth":
            return cmd_synth(config)
        if args.command == "simulate":
            return cmd_simulate(config, args.schedule)
        if args.command == "sweep-delta":
            return cmd_sweep_delta(config, args.jobs)
        if args.command == "sweep-gamma":
            return cmd_sweep_gamma(config, args.jobs)
        return cmd_table1(config, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SynthesisError as exc:
        print(f"synthesis error: {exc}", file=sys.stderr)
        return EXIT_SYNTHESIS
    except IntegrationError as exc:
        print(f"integration error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
