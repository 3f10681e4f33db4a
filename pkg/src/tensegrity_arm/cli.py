"""Command-line front end.

    tensegrity-arm <command> [--scenario file.json] [--set key.path=value]...
                   [--overrides summary.json] [--out DIR] [--format csv|json]
                   [--keep-going]

Each run writes ``<command>.<csv|json>`` and ``<command>_summary.json``
into the output directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import buckling, equilibrium, segment, stiffness
from .errors import ConvergenceError, DomainError, InfeasibleError, SingularConfigurationError
from .scenario import Scenario, build_scenario, scenario_to_json

log = logging.getLogger("tensegrity_arm")

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NUMERICAL = 3
EXIT_INFEASIBLE = 4

COLUMNS = {
    "segment-torque": ["q", "torque", "torque_derivative", "energy"],
    "energy-curve": ["branch", "q1", "q2", "q3", "energy", "feasible", "me"],
    "equilibria": ["branch", "q1", "q2", "q3", "energy", "stable", "feasible", "me", "shape"],
    "force-deflection": ["deflection", "fx", "fy", "q1", "q2", "q3", "stable", "jump_flag"],
    "stiffness-profile": ["f_applied", "q1", "q2", "q3", "kxx", "kyy", "quasi_buckling_flag"],
    "buckling-report": ["shape", "root_sign", "alpha1", "alpha3", "lambda", "mu", "fx0", "stable_candidate"],
}


# commands: each returns (rows, derived, warnings) --------------------------


def _segment_torque(s: Scenario):
    geom = s.segment_geometry()
    ctl = s.controls.segments()[s.segment_torque.segment - 1]
    rows = []
    for q in s.segment_torque.q_grid.values():
        q = float(q)
        rows.append(
            {
                "q": q,
                "torque": segment.segment_torque(geom, ctl, q),
                "torque_derivative": segment.segment_torque_derivative(geom, ctl, q),
                "energy": segment.segment_energy(geom, ctl, q),
            }
        )
    derived = {"beta12": geom.beta12, "q_max": geom.q_max, "c": geom.c1}
    if ctl.is_symmetric:
        stable, margin = segment.is_straight_config_stable(geom, ctl)
        derived.update(straight_stable=stable, stability_margin=margin)
    return rows, derived, []


def _energy_curve(s: Scenario):
    geom = s.segment_geometry()
    ctl = s.controls.segments()
    ep = tuple(s.energy_curve.endpoint)
    grid = s.energy_curve.q1_grid.values()
    rows = []
    for branch in (1, -1):
        for smp in equilibrium.energy_curve(geom, ctl, ep, branch, grid):
            me = equilibrium.external_torque_me(geom, ctl, ep, branch, smp.q1) if smp.feasible else None
            rows.append(
                {
                    "branch": branch,
                    "q1": smp.q1,
                    "q2": smp.q2,
                    "q3": smp.q3,
                    "energy": smp.energy,
                    "feasible": smp.feasible,
                    "me": math.nan if me is None else me,
                }
            )
    n_feasible = sum(r["feasible"] for r in rows)
    return rows, {"feasible_points": n_feasible, "q_max": geom.q_max}, []


def _equilibria(s: Scenario):
    geom = s.segment_geometry()
    ctl = s.controls.segments()
    ep = tuple(s.equilibria.endpoint)
    rows = []
    for branch in (1, -1):
        for p in equilibrium.find_equilibria(geom, ctl, ep, branch, s.equilibria.grid_n):
            q = p.q
            me = 0.0 if equilibrium.is_straight_target(ep, geom.b) else equilibrium.external_torque_me(
                geom, ctl, ep, branch, q.q1
            )
            rows.append(
                {
                    "branch": branch,
                    "q1": q.q1,
                    "q2": q.q2,
                    "q3": q.q3,
                    "energy": p.energy,
                    "stable": p.stable,
                    "feasible": p.feasible,
                    "me": math.nan if me is None else me,
                    "shape": buckling.classify_shape(q),
                }
            )
    derived = {
        "stable_count": sum(r["stable"] for r in rows),
        "unstable_count": sum(not r["stable"] for r in rows),
    }
    return rows, derived, []


def _force_deflection(s: Scenario):
    geom = s.segment_geometry()
    ctl = s.controls.segments()
    blk = s.force_deflection
    res = equilibrium.force_deflection_sweep(
        geom,
        ctl,
        tuple(blk.start),
        blk.direction,
        blk.deflection_grid.values(),
        branch=blk.branch,
        settings=s.solver.settings(),
        jumps=equilibrium.JumpSettings(blk.jump_factor, blk.jump_floor),
        unload_start=blk.unload_start,
    )
    rows = [
        {
            "deflection": r.deflection,
            "fx": r.fx,
            "fy": r.fy,
            "q1": r.q1,
            "q2": r.q2,
            "q3": r.q3,
            "stable": r.stable,
            "jump_flag": r.jump_flag,
            "me": r.me,
            "converged": r.converged,
        }
        for r in res.records
    ]
    derived = {
        "force_intercept": res.intercept,
        "jump_count": sum(r.jump_flag for r in res.records),
        "failed_points": sum(not r.converged for r in res.records),
        "controls_used": [[c.l01, c.l02] for c in res.controls],
    }
    if geom.is_symmetric and ctl[0].is_symmetric and ctl[0] == ctl[1] == ctl[2]:
        fu, fz = buckling.critical_force(geom, ctl[0].l01)
        derived.update(critical_force_U=fu, critical_force_Z=fz)
    return rows, derived, res.warnings


def _stiffness_profile(s: Scenario):
    geom = s.segment_geometry()
    ctl = s.controls.segments()
    blk = s.stiffness_profile
    prof = stiffness.stiffness_profile(
        geom,
        ctl,
        tuple(blk.start),
        blk.force_axis,
        blk.force_grid.values(),
        branch=blk.branch,
        settings=s.solver.settings(),
        rule=stiffness.QuasiBucklingRule(blk.collapse_ratio, blk.limit_ratio, blk.jump_rad),
    )
    rows = [
        {
            "f_applied": r.f_applied,
            "q1": r.q1,
            "q2": r.q2,
            "q3": r.q3,
            "kxx": r.kxx,
            "kyy": r.kyy,
            "quasi_buckling_flag": r.quasi_buckling_flag,
            "deflection": r.deflection,
            "min_eigenvalue": r.min_eigenvalue,
            "condition": r.condition,
            "converged": r.converged,
        }
        for r in prof.records
    ]
    first_flag = next((r.f_applied for r in prof.records if r.quasi_buckling_flag), None)
    derived = {
        "start_q": [float(v) for v in prof.start_q] if prof.start_q is not None else None,
        "unloading_controls": [[c.l01, c.l02] for c in prof.controls],
        "first_quasi_buckling_force": first_flag,
        "failed_points": sum(not r.converged for r in prof.records),
    }
    return rows, derived, prof.warnings


def _buckling_report(s: Scenario):
    geom = s.segment_geometry()
    ctl = s.controls.segments()
    if not all(c.is_symmetric for c in ctl) or not (ctl[0] == ctl[1] == ctl[2]):
        raise DomainError("buckling report needs one symmetric free length for all springs")
    l0 = ctl[0].l01
    forces = dict(zip(("U", "Z"), buckling.critical_force(geom, l0)))
    rows = []
    for sign in (1, -1):
        co = buckling.linearized_coefficients(sign)
        rows.append(
            {
                "shape": co.shape,
                "root_sign": sign,
                "alpha1": co.alpha1,
                "alpha3": co.alpha3,
                "lambda": co.lam,
                "mu": co.mu,
                "fx0": forces[co.shape],
                "stable_candidate": co.stable_candidate,
            }
        )
    stable, margin = segment.is_straight_config_stable(geom, ctl[0])
    u, z = rows
    derived = {
        "lambda_U": u["lambda"],
        "lambda_Z": z["lambda"],
        "mu_U": u["mu"],
        "mu_Z": z["mu"],
        "alpha1_U": u["alpha1"],
        "alpha3_U": u["alpha3"],
        "alpha1_Z": z["alpha1"],
        "alpha3_Z": z["alpha3"],
        "Fx0_U": u["fx0"],
        "Fx0_Z": z["fx0"],
        "straight_stable": stable,
        "stability_margin": margin,
        "torque_slope_at_zero": segment.segment_torque_derivative(geom, ctl[0], 0.0),
        "shape_table": {"(-,+,+)": "U", "(+,-,-)": "U", "(-,+,-)": "Z", "(+,-,+)": "Z"},
    }
    return rows, derived, []


COMMANDS = {
    "segment-torque": _segment_torque,
    "energy-curve": _energy_curve,
    "equilibria": _equilibria,
    "force-deflection": _force_deflection,
    "stiffness-profile": _stiffness_profile,
    "buckling-report": _buckling_report,
}


# serialisation -------------------------------------------------------------


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def to_csv(columns, rows) -> str:
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(format_value(r[c]) for c in columns))
    return "\n".join(lines) + "\n"


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def to_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# entry points --------------------------------------------------------------


def run(command: str, scenario_file=None, overrides=(), out_dir=".", fmt="csv", keep_going=False,
        summary_overrides=None) -> int:
    """Execute one command and write its outputs; returns the exit status."""
    if command not in COMMANDS:
        print(f"error: unknown command {command!r}", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        doc = {}
        if scenario_file is not None:
            doc = json.loads(Path(scenario_file).read_text(encoding="utf-8"))
        merged = None
        if summary_overrides is not None:
            summary = json.loads(Path(summary_overrides).read_text(encoding="utf-8"))
            merged = summary.get("scenario", summary) if isinstance(summary, dict) else None
            if not isinstance(merged, dict):
                raise ValueError("overrides file must hold a JSON object")
        scenario = build_scenario(doc, overrides, merged).resolve_defaults()
    except ValidationError as exc:
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            print(f"schema error at {loc}: {err['msg']}", file=sys.stderr)
        return EXIT_SCHEMA
    except (OSError, ValueError) as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA

    try:
        rows, derived, warnings = COMMANDS[command](scenario)
    except InfeasibleError as exc:
        print(f"infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except DomainError as exc:
        print(f"infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConvergenceError, SingularConfigurationError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    out = Path(out_dir)
    stem = command.replace("-", "_")
    data_name = f"{stem}.{fmt}"
    if fmt == "csv":
        write_atomic(out / data_name, to_csv(COLUMNS[command], rows))
    else:
        write_atomic(out / data_name, to_json({"command": command, "records": rows}))
    summary = {
        "command": command,
        "scenario": scenario_to_json(scenario),
        "derived": derived,
        "warnings": list(warnings),
        "outputs": [data_name],
        "rows": len(rows),
    }
    write_atomic(out / f"{stem}_summary.json", to_json(summary))
    for w in warnings:
        log.warning(w)
    if warnings and not keep_going:
        print(f"{len(warnings)} grid point(s) failed; rerun with --keep-going to accept gaps", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tensegrity-arm", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--scenario", help="scenario JSON file (defaults apply when omitted)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a scenario value by dotted key path; VALUE is parsed as JSON")
    p.add_argument("--overrides", dest="summary_overrides", metavar="FILE",
                   help="re-use the resolved scenario from an earlier run summary")
    p.add_argument("--out", default=".", help="output directory (default: current directory)")
    p.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")
    p.add_argument("--keep-going", action="store_true", help="exit 0 even when some grid points fail")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return run(args.command, args.scenario, args.overrides, args.out, args.fmt, args.keep_going,
               args.summary_overrides)


if __name__ == "__main__":
    sys.exit(main())
