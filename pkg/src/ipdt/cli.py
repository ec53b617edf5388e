"""Command-line interface: ``ipdt {tune,simulate,compare,margins,sweep}``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

from .bench import (ALL_METHODS, ScenarioSpec, export_trace, resolve_params, resolve_scenario,
                    run_comparison, run_method, run_sweep)
from .core import ControllerParams, DesignSpec, IpdtModel, NumericalError, ValidationError
from .freq import DEFAULT_W_MAX, DEFAULT_W_MIN, measure_margins
from .tuning import Method, baseline_params, tune_pd

OUT_DIR_ENV = "IPDT_OUT_DIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--dt", type=float, help="simulation step size [s]")
    p.add_argument("--horizon", type=float, help="simulation horizon [s]")
    p.add_argument("--filter-n", type=float, help="derivative filter divisor N (time constant td/N)")
    p.add_argument("--observer-gain", type=float, help="disturbance observer gain (default: kc)")
    p.add_argument("--out-dir", default=None,
                   help=f"output directory (default: ${OUT_DIR_ENV} or current directory)")
    p.add_argument("--format", choices=("json", "csv", "table"), default="table")
    p.add_argument("--jobs", type=int, default=1, help="parallel simulations for compare/sweep")
    return p


def _plant_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kp", type=float, default=0.0506, help="process gain")
    p.add_argument("--d", type=float, default=6.0, help="dead time [s]")


def _design_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ts", type=float, default=40.0, help="desired settling time [s]")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--am", type=float, help="gain margin (ratio)")
    g.add_argument("--am-db", type=float, help="gain margin [dB]")
    h = p.add_mutually_exclusive_group()
    h.add_argument("--pm", type=float, help="phase margin [rad]")
    h.add_argument("--pm-deg", type=float, help="phase margin [deg]")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="ipdt", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("tune", parents=[common], help="PD settings from Ts, Am, phi_m")
    _plant_args(p)
    _design_args(p)

    p = sub.add_parser("simulate", parents=[common], help="simulate one method on a scenario")
    p.add_argument("--scenario", default="step_tracking", help="builtin name or scenario file")
    p.add_argument("--method", default=None, choices=ALL_METHODS)
    p.add_argument("--dob", choices=("auto", "on", "off"), default="auto")

    p = sub.add_parser("compare", parents=[common], help="compare tuning methods on a scenario")
    p.add_argument("--scenario", default="step_tracking", help="builtin name or scenario file")
    p.add_argument("--methods", default="all", help="'all' or comma-separated method names")
    p.add_argument("--dob", choices=("auto", "on", "off"), default="auto")
    p.add_argument("--export-traces", action="store_true", help="write one trace CSV per method")

    p = sub.add_parser("margins", parents=[common], help="measured gain and phase margins")
    _plant_args(p)
    p.add_argument("--method", choices=ALL_METHODS, help="use a published parameter set")
    p.add_argument("--kc", type=float)
    p.add_argument("--ti", type=float)
    p.add_argument("--td", type=float)
    p.add_argument("--w-min", type=float, default=DEFAULT_W_MIN)
    p.add_argument("--w-max", type=float, default=DEFAULT_W_MAX)

    p = sub.add_parser("sweep", parents=[common], help="run a design-parameter sweep")
    p.add_argument("--scenario", default="sweep_ts", help="sweep_ts, sweep_am or a scenario file")
    p.add_argument("--plot-script", action="store_true", help="also write a matplotlib script")

    p = sub.add_parser("scenario", parents=[common], help="print a builtin scenario as a config file")
    p.add_argument("name")
    return parser


def _out_dir(args) -> Path:
    path = Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _design(args) -> DesignSpec:
    am = args.am if args.am is not None else (
        10.0 ** (args.am_db / 20.0) if args.am_db is not None else 2.0)
    pm = args.pm if args.pm is not None else (
        math.radians(args.pm_deg) if args.pm_deg is not None else math.pi)
    return DesignSpec(am=am, phi_m=pm, ts=args.ts)


def _apply_overrides(spec: ScenarioSpec, args) -> ScenarioSpec:
    changes = {}
    if args.dt is not None:
        changes["dt"] = args.dt
    if args.horizon is not None:
        changes["horizon"] = args.horizon
    if args.filter_n is not None:
        changes["n_filter"] = args.filter_n
    if args.observer_gain is not None:
        changes["observer_gain"] = args.observer_gain
    if getattr(args, "dob", "auto") != "auto":
        changes["dob"] = args.dob == "on"
    return replace(spec, **changes) if changes else spec


def _table(rows: list[dict]) -> str:
    if not rows:
        return ""
    keys = list(rows[0])
    for r in rows[1:]:
        keys += [k for k in r if k not in keys]

    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.4g}"
        return str(v)

    cells = [[cell(r.get(k)) for k in keys] for r in rows]
    widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
    lines = ["  ".join(k.ljust(w) for k, w in zip(keys, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def _csv(rows: list[dict]) -> str:
    keys = list(rows[0]) if rows else []
    for r in rows[1:]:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: ("" if r.get(k) is None else repr(r[k]) if isinstance(r.get(k), float)
                             else r[k]) for k in keys})
    return buf.getvalue()


def _emit(fmt: str, payload: dict, rows: list[dict]) -> None:
    if fmt == "json":
        sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    elif fmt == "csv":
        sys.stdout.write(_csv(rows))
    else:
        sys.stdout.write(_table(rows) + "\n")


def _cmd_tune(args) -> int:
    model = IpdtModel(args.kp, args.d)
    report = tune_pd(model, _design(args))
    if report.td_sign_flipped:
        print("warning: derivative-time formula evaluated negative; its magnitude was used and "
              "the design margin identities no longer hold exactly", file=sys.stderr)
    payload = {"kc": report.params.kc, "td": report.params.td, "ti": None,
               "w_pc": report.crossovers.w_pc, "w_gc": report.crossovers.w_gc,
               "am": report.spec.am, "phi_m": report.spec.phi_m, "ts": report.spec.ts,
               "td_sign_flipped": report.td_sign_flipped}
    _emit(args.format, payload, [payload])
    return 0


def _cmd_simulate(args) -> int:
    spec = _apply_overrides(resolve_scenario(args.scenario), args)
    method = args.method or spec.method or Method.PROPOSED_PD.value
    result = run_method(spec, method)
    out = _out_dir(args)
    trace_path = export_trace(result.trace, out / f"{spec.name}_{method}.csv")
    result.trace_path = str(trace_path)
    payload = result.as_dict()
    (out / f"{spec.name}_{method}_metrics.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n")
    rows = [{"method": method, **result.indices.as_dict(),
             **(result.step.as_dict() if result.step else {})}]
    _emit(args.format, payload, rows)
    return 0


def _cmd_compare(args) -> int:
    spec = _apply_overrides(resolve_scenario(args.scenario), args)
    methods = ALL_METHODS if args.methods == "all" else [m.strip() for m in args.methods.split(",")]
    for m in methods:
        if m not in ALL_METHODS:
            raise ValidationError(f"unknown method {m!r}; choose from {ALL_METHODS}")
    report = run_comparison(spec, methods, jobs=args.jobs)
    if args.export_traces:
        out = _out_dir(args)
        for r in report.results:
            r.trace_path = str(export_trace(r.trace, out / f"{spec.name}_{r.method}.csv"))
    _emit(args.format, report.as_dict(), report.rows())
    return 0


def _cmd_margins(args) -> int:
    model = IpdtModel(args.kp, args.d)
    if args.method:
        params = baseline_params(args.method)
    elif args.kc is not None:
        params = ControllerParams(args.kc, args.ti, args.td, "explicit")
    else:
        raise ValidationError("margins needs --method or --kc")
    report = measure_margins(model, params, args.w_min, args.w_max)
    if report.multiple_gain_crossovers:
        print(f"warning: {report.gc_count} gain crossovers found; reporting the lowest",
              file=sys.stderr)
    payload = report.as_dict()
    _emit(args.format, payload, [payload])
    return 0


_PLOT_SCRIPT = '''"""Plot {name}: one curve per swept value."""
import csv
import matplotlib.pyplot as plt

with open({data!r}) as fh:
    rows = list(csv.reader(fh))
header, body = rows[0], rows[1:]
t = [float(r[0]) for r in body]
for i, label in enumerate(header[1:], 1):
    plt.plot(t, [float(r[i]) for r in body], label=label)
plt.xlabel("time [s]")
plt.ylabel("process output")
plt.legend()
plt.savefig({png!r}, dpi=150)
'''


def _cmd_sweep(args) -> int:
    spec = _apply_overrides(resolve_scenario(args.scenario), args)
    result = run_sweep(spec, jobs=args.jobs)
    out = _out_dir(args)
    for p in result.points:
        p.trace_path = str(export_trace(p.trace, out / f"{spec.name}_{p.value:g}.csv"))
    data_path = out / f"{spec.name}_plot_data.csv"
    traces = [p.trace for p in result.points]
    header = ["t"] + [f"{spec.sweep_param}={p.value:g}" for p in result.points]
    lines = [",".join(header)]
    for k in range(len(traces[0])):
        lines.append(",".join([repr(float(traces[0].t[k]))] + [repr(float(tr.y[k])) for tr in traces]))
    data_path.write_text("\n".join(lines) + "\n")
    if args.plot_script:
        (out / f"plot_{spec.name}.py").write_text(_PLOT_SCRIPT.format(
            name=spec.name, data=str(data_path), png=str(out / f"{spec.name}.png")))
    (out / f"{spec.name}_summary.json").write_text(result.to_json())
    rows = [{spec.sweep_param: p.value, "kc": p.params.kc, "td": p.params.td,
             "flipped": p.td_sign_flipped, **p.step.as_dict(), "p2p": p.peak_to_peak,
             "cycles": p.cycles} for p in result.points]
    _emit(args.format, result.as_dict(), rows)
    return 0


def _cmd_scenario(args) -> int:
    sys.stdout.write(_apply_overrides(resolve_scenario(args.name), args).to_json())
    return 0


COMMANDS = {"tune": _cmd_tune, "simulate": _cmd_simulate, "compare": _cmd_compare,
            "margins": _cmd_margins, "sweep": _cmd_sweep, "scenario": _cmd_scenario}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, ValueError) as exc:
        # bare ValueErrors here come from enum lookups and similar input checks
        code = 2 if isinstance(exc, NumericalError) else 1
        print(f"error: {exc}", file=sys.stderr)
        return code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
