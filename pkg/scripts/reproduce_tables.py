"""Print comparison tables for every builtin scenario.

Usage: python3 scripts/reproduce_tables.py [--jobs N] [--json]
"""
import argparse
import json

from ipdt.bench import builtin_scenario, run_comparison, run_sweep

COMPARE = ("step_tracking", "servo_staircase", "regulatory", "servo_plus_regulatory")
SWEEPS = ("sweep_ts", "sweep_am")


def fmt(v):
    if v is None:
        return "-"
    return f"{v:.4g}" if isinstance(v, float) else str(v)


def print_rows(title, rows, keys):
    print(f"\n== {title}")
    print("  ".join(f"{k:>16}" for k in keys))
    for r in rows:
        print("  ".join(f"{fmt(r.get(k)):>16}" for k in keys))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--json", action="store_true", help="dump full reports as JSON instead")
    args = ap.parse_args()

    dump = {}
    for name in COMPARE:
        report = run_comparison(builtin_scenario(name), jobs=args.jobs)
        if args.json:
            dump[name] = report.as_dict()
            continue
        rows = report.rows()
        keys = ["method", "kc", "ti", "td", "ise", "iae", "itae", "energy"]
        if name == "step_tracking":
            keys += ["rise_time", "settling_time", "overshoot"]
        if name == "servo_staircase":
            keys += [f"seg{i}_{k}" for i in (1, 2, 3) for k in ("ise", "iae")]
        print_rows(name, rows, keys)

    for name in SWEEPS:
        result = run_sweep(builtin_scenario(name), jobs=args.jobs)
        if args.json:
            dump[name] = result.as_dict()
            continue
        rows = [{"value": p.value, "kc": p.params.kc, "td": p.params.td,
                 "settling": p.step.settling_time, "overshoot": p.step.overshoot,
                 "p2p": p.peak_to_peak, "cycles": p.cycles} for p in result.points]
        print_rows(name, rows, list(rows[0]))
    if args.json:
        print(json.dumps(dump, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
