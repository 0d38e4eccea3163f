"""Command-line surface: reproducible runs bound to JSON configs and CSV/JSON outputs.

Commands
--------
solve       find a frictionless protocol for the configured task
smooth      level-set descent of the smoothness cost from a solution
compress    level-set descent of the compression cost, plus chunk collapse
spectrum    eigenvalues of the full infidelity Hessian
verify      conservation diagnostics for a protocol
levelset    labeled M = 3 solution cloud and traced curves
theta-scan  the phase-resolved objective on a grid (plus refined minimum)

Exit codes: 0 success, 1 malformed config/input, 2 restart budget exhausted,
3 input protocol is not a solution, 4 corrector failure. Failures print a
single-line JSON object to stderr. All outputs are deterministic functions
of the config and seeds.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import protocol as proto
from .errors import (IndivisibleChunking, NonFiniteEntry, NonPositiveFrequency,
                     NotASolution, OscnavError, RestartBudgetExhausted)
from .navigator import (DescentConfig, NavigationConfig, ScanConfig, TraceConfig,
                        cloud_to_csv, curves_to_csv, navigate, scan_levelset,
                        solve, trajectory_to_csv)
from .objectives import SecondaryCost, theta_scan
from .propagator import bogoliubov, infidelity, particle_number, propagate, wronskian_defect
from .sensitivities import hessian


class ConfigError(Exception):
    pass


def _fail(code: int, error: str, detail: str) -> int:
    sys.stderr.write(json.dumps({"error": error, "detail": detail}) + "\n")
    return code


def _check_keys(section, allowed, where):
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {unknown}")


def _dataclass_from(cls, section, where):
    _check_keys(section, [f.name for f in dataclasses.fields(cls)], where)
    kwargs = {}
    for key, value in section.items():
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {where} section: {exc}") from exc


class RunConfig:
    """Parsed run configuration; dt is always derived as T/M."""

    def __init__(self, doc):
        _check_keys(doc, ["task", "M", "descent", "navigation", "trace", "scan",
                          "output"], "config")
        self.task = None
        if "task" in doc:
            _check_keys(doc["task"], ["omega0", "omegaT", "T"], "task")
            try:
                self.task = (float(doc["task"]["omega0"]), float(doc["task"]["omegaT"]),
                             float(doc["task"]["T"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"task must provide numeric omega0, omegaT, T: {exc}")
        self.m = doc.get("M")
        if self.m is not None and (not isinstance(self.m, int) or self.m < 1):
            raise ConfigError("M must be a positive integer")
        self.descent = _dataclass_from(DescentConfig, doc.get("descent", {}), "descent")
        self.navigation = _dataclass_from(NavigationConfig, doc.get("navigation", {}),
                                          "navigation")
        self.trace = _dataclass_from(TraceConfig, doc.get("trace", {}), "trace")
        scan_doc = dict(doc.get("scan", {}))
        _check_keys(scan_doc, ["assign_distance", "max_curves"], "scan")
        self.scan = ScanConfig(descent=self.descent, trace=self.trace, **scan_doc)
        out = doc.get("output", {})
        _check_keys(out, ["protocol", "trajectory", "cloud", "curves", "collapsed"],
                    "output")
        self.output = out


def _load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return RunConfig(doc)


def _load_protocol(path):
    try:
        return proto.load(path)
    except (OSError, json.JSONDecodeError, ValueError, NonPositiveFrequency,
            NonFiniteEntry) as exc:
        raise ConfigError(f"cannot read protocol {path}: {exc}") from exc


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _cmd_solve(args) -> int:
    cfg = _load_config(args.config)
    if cfg.task is None or cfg.m is None:
        raise ConfigError("solve requires 'task' and 'M' in the config")
    try:
        result = solve(cfg.descent, cfg.m, cfg.task)
    except RestartBudgetExhausted as exc:
        return _fail(2, "RestartBudgetExhausted", str(exc))
    proto.save(result.protocol, cfg.output.get("protocol", "protocol.json"))
    _write(cfg.output.get("trajectory", "trajectory.csv"),
           trajectory_to_csv(result.trajectory))
    print(json.dumps({"infidelity": result.report.infidelity,
                      "restarts": result.restarts,
                      "iterations": result.trajectory.records[-1].iteration}))
    return 0


def _navigate_command(args, cost: SecondaryCost) -> int:
    p = _load_protocol(args.protocol)
    cfg = _load_config(args.config) if args.config else None
    nav = cfg.navigation if cfg else NavigationConfig()
    if args.double:
        try:
            schedule = tuple(int(k) for k in args.double.split(","))
        except ValueError:
            raise ConfigError(f"--double must be comma-separated integers, got {args.double!r}")
        nav = dataclasses.replace(nav, doubling_schedule=schedule)
    try:
        traj = navigate(p, cost, nav)
    except NotASolution as exc:
        return _fail(3, "NotASolution", str(exc))
    final = traj.final_protocol
    out = (cfg.output if cfg else {})
    _write(args.out_trajectory or out.get("trajectory", "trajectory.csv"),
           trajectory_to_csv(traj))
    proto.save(final, args.out_protocol or out.get("protocol", "protocol.json"))
    extra = {}
    if cost.kind == "compression":
        collapsed = proto.collapse(final, cost.chunks)
        path = args.out_collapsed or out.get("collapsed", "collapsed.json")
        proto.save(collapsed, path)
        extra = {"collapsed_infidelity": infidelity(collapsed)}
    print(json.dumps({"status": traj.status,
                      "final_cost": traj.records[-1].cost,
                      "final_infidelity": traj.records[-1].infidelity, **extra}))
    if traj.status == "corrector_failed":
        return _fail(4, "CorrectorFailed", "trajectory truncated at last valid record")
    return 0


def _cmd_smooth(args) -> int:
    return _navigate_command(args, SecondaryCost("smoothness"))


def _cmd_compress(args) -> int:
    return _navigate_command(args, SecondaryCost("compression", args.chunks))


def _cmd_spectrum(args) -> int:
    p = _load_protocol(args.protocol)
    eigs = np.linalg.eigvalsh(hessian(p).hess_infidelity)[::-1]
    lines = ["index,eigenvalue"]
    lines += [f"{i + 1},{repr(float(v))}" for i, v in enumerate(eigs)]
    text = "\n".join(lines) + "\n"
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_verify(args) -> int:
    p = _load_protocol(args.protocol)
    state = propagate(p)
    pair = bogoliubov(state, p.omegaT)
    b2 = abs(pair.beta) ** 2
    report = {
        "infidelity": b2,
        "bogoliubov_defect": abs(pair.alpha) ** 2 - b2 - 1.0,
        "wronskian_defect": wronskian_defect(state),
        "particle_number": {"0": particle_number(0.0, pair.beta),
                            "1": particle_number(1.0, pair.beta)},
    }
    print(json.dumps(report))
    return 0


def _cmd_levelset(args) -> int:
    cfg = _load_config(args.config)
    if cfg.task is None:
        raise ConfigError("levelset requires 'task' in the config")
    result = scan_levelset(cfg.task, cfg.scan, args.seeds)
    _write(args.out_cloud or cfg.output.get("cloud", "cloud.csv"), cloud_to_csv(result))
    _write(args.out_curves or cfg.output.get("curves", "curves.csv"),
           curves_to_csv(result.curves))
    n_components = len(set(int(v) for v in result.labels if v >= 0))
    print(json.dumps({"points": int(len(result.points)), "components": n_components}))
    return 0


def _cmd_theta_scan(args) -> int:
    p = _load_protocol(args.protocol)
    thetas, values, theta_min, value_min = theta_scan(p, args.points)
    rows = sorted(zip(thetas, values)) + [(theta_min, value_min)]
    rows.sort(key=lambda tv: tv[0])
    lines = ["theta,J"] + [f"{repr(float(t))},{repr(float(v))}" for t, v in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oscnav",
                                 description="Frictionless-protocol search and "
                                             "level-set navigation for a "
                                             "frequency-controlled oscillator.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="random-restart descent to a solution")
    sp.add_argument("--config", required=True)
    sp.set_defaults(func=_cmd_solve)

    for name, helptext in (("smooth", "level-set smoothing descent"),
                           ("compress", "level-set compression descent")):
        np_ = sub.add_parser(name, help=helptext)
        np_.add_argument("protocol", help="input protocol JSON (must be a solution)")
        np_.add_argument("--config", default=None)
        np_.add_argument("--double", default=None,
                         help="comma-separated refinement factors applied on stall")
        np_.add_argument("--out-protocol", default=None)
        np_.add_argument("--out-trajectory", default=None)
        if name == "compress":
            np_.add_argument("--chunks", type=int, required=True)
            np_.add_argument("--out-collapsed", default=None)
            np_.set_defaults(func=_cmd_compress)
        else:
            np_.set_defaults(func=_cmd_smooth)

    sp = sub.add_parser("spectrum", help="full Hessian eigenvalues, descending")
    sp.add_argument("protocol")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_spectrum)

    sp = sub.add_parser("verify", help="conservation diagnostics as JSON")
    sp.add_argument("protocol")
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("levelset", help="labeled solution cloud for M = 3")
    sp.add_argument("--config", required=True)
    sp.add_argument("--seeds", type=int, required=True)
    sp.add_argument("--out-cloud", default=None)
    sp.add_argument("--out-curves", default=None)
    sp.set_defaults(func=_cmd_levelset)

    sp = sub.add_parser("theta-scan",
                        help="grid of the phase-resolved objective; the refined "
                             "minimum is included as an extra row")
    sp.add_argument("protocol")
    sp.add_argument("--points", type=int, default=1024)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_theta_scan)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(1, "ConfigError", str(exc))
    except IndivisibleChunking as exc:
        return _fail(1, "IndivisibleChunking", str(exc))
    except RestartBudgetExhausted as exc:
        return _fail(2, "RestartBudgetExhausted", str(exc))
    except NotASolution as exc:
        return _fail(3, "NotASolution", str(exc))
    except OscnavError as exc:
        return _fail(1, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
