"""Experiment registry, comparison harness, parameter sweeps and trace files."""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import (PAPER_PLANT, ControllerParams, DesignSpec, IpdtModel, Scenario, SignalProfile,
                   SimTrace, ValidationError)
from .freq import MarginReport, measure_margins
from .metrics import (IndexReport, StepSpecs, index_report, oscillation_cycles,
                      peak_to_peak_after_first_peak, servo_segment_indices, step_specs)
from .sim import SimOptions, simulate
from .tuning import Method, baseline_params, tune_pd

SCHEMA = "ipdt-scenario/1"
ALL_METHODS = [m.value for m in Method]
BUILTIN_NAMES = ("step_tracking", "servo_staircase", "regulatory", "servo_plus_regulatory",
                 "sweep_ts", "sweep_am")


@dataclass(frozen=True)
class ScenarioSpec:
    """Serializable experiment definition."""

    name: str
    setpoint: tuple[tuple[float, float], ...]
    disturbance: tuple[tuple[float, float], ...] = ((0.0, 0.0),)
    horizon: float = 200.0
    dt: float = 0.01
    kp: float = PAPER_PLANT.kp
    d: float = PAPER_PLANT.d
    # design targets for the proposed PD (am linear, phi_m radians)
    am: float = 2.0
    phi_m: float = math.pi
    ts: float = 40.0
    method: Optional[str] = None
    params: Optional[dict] = None  # explicit {"kc", "ti", "td"} overriding method lookup
    dob: Optional[bool] = None  # None: auto (proposed PD in disturbance scenarios)
    observer_gain: Optional[float] = None
    n_filter: Optional[float] = 10.0
    derivative_on: str = "error"
    sweep_param: Optional[str] = None  # "ts" or "am"
    sweep_values: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "setpoint", tuple((float(a), float(b)) for a, b in self.setpoint))
        object.__setattr__(self, "disturbance",
                           tuple((float(a), float(b)) for a, b in self.disturbance))
        object.__setattr__(self, "sweep_values", tuple(float(v) for v in self.sweep_values))
        if self.sweep_param not in (None, "ts", "am"):
            raise ValidationError(f"sweep_param must be 'ts' or 'am', got {self.sweep_param!r}")
        if self.method is not None and self.method not in ALL_METHODS:
            raise ValidationError(f"unknown method {self.method!r}; choose from {ALL_METHODS}")
        # validate eagerly
        self.plant, self.design, self.scenario()

    @property
    def plant(self) -> IpdtModel:
        return IpdtModel(self.kp, self.d)

    @property
    def design(self) -> DesignSpec:
        return DesignSpec(self.am, self.phi_m, self.ts)

    @property
    def has_disturbance(self) -> bool:
        return any(v != 0.0 for _, v in self.disturbance)

    def scenario(self, dob_enabled: bool = False) -> Scenario:
        return Scenario(setpoint=SignalProfile(self.setpoint),
                        disturbance=SignalProfile(self.disturbance),
                        horizon=self.horizon, dt=self.dt, dob_enabled=dob_enabled)

    def sim_options(self) -> SimOptions:
        return SimOptions(n_filter=self.n_filter, derivative_on=self.derivative_on,
                          observer_gain=self.observer_gain)

    def segments(self) -> list[tuple[tuple[float, float], float]]:
        """Setpoint segments as ((start, end), value), ending at the horizon."""
        bps = self.setpoint
        ends = [b[0] for b in bps[1:]] + [self.horizon]
        return [((start, end), value) for (start, value), end in zip(bps, ends)]

    def to_dict(self) -> dict:
        data = asdict(self)
        data["setpoint"] = [list(b) for b in self.setpoint]
        data["disturbance"] = [list(b) for b in self.disturbance]
        data["sweep_values"] = list(self.sweep_values)
        data["schema"] = SCHEMA
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        data = dict(data)
        schema = data.pop("schema", None)
        if schema != SCHEMA:
            raise ValidationError(f"unsupported scenario schema {schema!r} (expected {SCHEMA!r})")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"scenario file is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioSpec":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ValidationError(f"cannot read scenario file {path}: {exc}") from exc
        return cls.from_json(text)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_json())
        return path


def builtin_scenario(name: str) -> ScenarioSpec:
    if name == "step_tracking":
        return ScenarioSpec(name, setpoint=((0, 1),), horizon=200.0)
    if name == "servo_staircase":
        return ScenarioSpec(name, setpoint=((0, 1), (100, 3), (200, 2)), horizon=300.0)
    if name == "regulatory":
        # onset time and magnitude are not published; unit step at t=0
        return ScenarioSpec(name, setpoint=((0, 0),), disturbance=((0, 1),), horizon=200.0)
    if name == "servo_plus_regulatory":
        # 200 s of regulation after the disturbance enters, as in "regulatory"
        return ScenarioSpec(name, setpoint=((0, 1),), disturbance=((0, 0), (100, 1)),
                            horizon=300.0)
    if name == "sweep_ts":
        return ScenarioSpec(name, setpoint=((0, 1),), horizon=200.0, am=2.0,
                            sweep_param="ts", sweep_values=(40, 50, 60, 70))
    if name == "sweep_am":
        return ScenarioSpec(name, setpoint=((0, 1),), horizon=200.0, ts=40.0,
                            sweep_param="am", sweep_values=(1, 1.5, 2, 2.5))
    raise ValidationError(f"unknown builtin scenario {name!r}; choose from {list(BUILTIN_NAMES)}")


def resolve_scenario(name_or_path: str) -> ScenarioSpec:
    if name_or_path in BUILTIN_NAMES:
        return builtin_scenario(name_or_path)
    path = Path(name_or_path)
    if path.exists():
        return ScenarioSpec.load(path)
    raise ValidationError(f"{name_or_path!r} is neither a builtin scenario nor a readable file")


def resolve_params(spec: ScenarioSpec, method: str | None = None) -> ControllerParams:
    if spec.params is not None:
        p = spec.params
        return ControllerParams(p["kc"], p.get("ti"), p.get("td"), p.get("label", "explicit"))
    method = method or spec.method or Method.PROPOSED_PD.value
    if Method(method) is Method.PROPOSED_PD:
        return tune_pd(spec.plant, spec.design).params
    return baseline_params(method)


def observer_enabled(spec: ScenarioSpec, method: str) -> bool:
    if spec.dob is False:
        return False
    if Method(method) is not Method.PROPOSED_PD and spec.params is None:
        return False
    return spec.dob is True or spec.has_disturbance


@dataclass
class MethodResult:
    method: str
    params: ControllerParams
    dob_enabled: bool
    indices: IndexReport
    step: Optional[StepSpecs]
    segments: list[tuple[float, float]]
    margins: MarginReport
    trace: SimTrace = field(repr=False)
    trace_path: Optional[str] = None

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "params": {"kc": self.params.kc, "ti": self.params.ti, "td": self.params.td,
                       "label": self.params.label},
            "dob_enabled": self.dob_enabled,
            "indices": self.indices.as_dict(),
            "step": None if self.step is None else self.step.as_dict(),
            "segments": [{"ise": a, "iae": b} for a, b in self.segments],
            "margins": self.margins.as_dict(),
            "trace_path": self.trace_path,
        }


@dataclass
class ComparisonReport:
    scenario: ScenarioSpec
    results: list[MethodResult]

    def __getitem__(self, method: str) -> MethodResult:
        for r in self.results:
            if r.method == method:
                return r
        raise KeyError(method)

    def as_dict(self) -> dict:
        return {"scenario": self.scenario.name, "results": [r.as_dict() for r in self.results]}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def rows(self) -> list[dict]:
        out = []
        for r in self.results:
            row = {"method": r.method, "kc": r.params.kc, "ti": r.params.ti, "td": r.params.td,
                   "dob": r.dob_enabled, **r.indices.as_dict()}
            if r.step is not None:
                row.update(rise_time=r.step.rise_time, settling_time=r.step.settling_time,
                           overshoot=r.step.overshoot)
            for i, (ise, iae) in enumerate(r.segments, 1):
                row[f"seg{i}_ise"] = ise
                row[f"seg{i}_iae"] = iae
            row.update(gm=r.margins.am, pm=r.margins.phi_m)
            out.append(row)
        return out


def run_method(spec: ScenarioSpec, method: str) -> MethodResult:
    params = resolve_params(spec, method)
    dob = observer_enabled(spec, method)
    trace = simulate(spec.plant, params, spec.scenario(dob), spec.sim_options())
    step = None
    if len(spec.setpoint) == 1 and spec.setpoint[0][1] != 0.0 and not spec.has_disturbance:
        step = step_specs(trace, 0.0, 0.0, spec.setpoint[0][1])
    segments = []
    if len(spec.setpoint) > 1:
        segments = servo_segment_indices(trace, spec.segments())
    return MethodResult(method=method, params=params, dob_enabled=dob,
                        indices=index_report(trace), step=step, segments=segments,
                        margins=measure_margins(spec.plant, params), trace=trace)


def _run_method_args(args):
    return run_method(*args)


def run_comparison(spec: ScenarioSpec, methods: Sequence[str] = ALL_METHODS,
                   jobs: int = 1) -> ComparisonReport:
    methods = list(methods)
    if len(set(methods)) != len(methods):
        raise ValidationError("each method may appear only once")
    for m in methods:
        Method(m)
    args = [(spec, m) for m in methods]
    if jobs > 1 and len(methods) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_method_args, args))
    else:
        results = [run_method(*a) for a in args]
    return ComparisonReport(scenario=spec, results=results)


@dataclass
class SweepPoint:
    value: float
    params: ControllerParams
    td_sign_flipped: bool
    step: StepSpecs
    peak_to_peak: float
    cycles: int
    trace: SimTrace = field(repr=False)
    trace_path: Optional[str] = None

    def as_dict(self) -> dict:
        return {"value": self.value, "kc": self.params.kc, "td": self.params.td,
                "td_sign_flipped": self.td_sign_flipped, "step": self.step.as_dict(),
                "peak_to_peak": self.peak_to_peak, "cycles": self.cycles,
                "trace_path": self.trace_path}


@dataclass
class SweepResult:
    scenario: ScenarioSpec
    points: list[SweepPoint]

    @property
    def settling_increasing(self) -> Optional[bool]:
        if len(self.points) < 2:
            return None
        s = [p.step.settling_time for p in self.points]
        return all(a is not None and b is not None and b > a for a, b in zip(s, s[1:]))

    @property
    def oscillation_decreasing(self) -> Optional[bool]:
        if len(self.points) < 2:
            return None
        a = [p.peak_to_peak for p in self.points]
        return all(y < x for x, y in zip(a, a[1:]))

    def as_dict(self) -> dict:
        return {"scenario": self.scenario.name, "sweep_param": self.scenario.sweep_param,
                "points": [p.as_dict() for p in self.points],
                "settling_increasing": self.settling_increasing,
                "oscillation_decreasing": self.oscillation_decreasing}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def _sweep_point(spec: ScenarioSpec, value: float) -> SweepPoint:
    point_spec = replace(spec, **{spec.sweep_param: value}, sweep_param=None, sweep_values=())
    report = tune_pd(point_spec.plant, point_spec.design)
    trace = simulate(point_spec.plant, report.params, point_spec.scenario(False),
                     point_spec.sim_options())
    final = spec.setpoint[0][1]
    return SweepPoint(value=value, params=report.params, td_sign_flipped=report.td_sign_flipped,
                      step=step_specs(trace, 0.0, 0.0, final),
                      peak_to_peak=peak_to_peak_after_first_peak(trace),
                      cycles=oscillation_cycles(trace, final), trace=trace)


def _sweep_point_args(args):
    return _sweep_point(*args)


def run_sweep(spec: ScenarioSpec, jobs: int = 1) -> SweepResult:
    if spec.sweep_param is None or not spec.sweep_values:
        raise ValidationError(f"scenario {spec.name!r} is not a sweep")
    if len(spec.setpoint) != 1 or spec.setpoint[0][1] == 0.0:
        raise ValidationError("sweeps need a single nonzero setpoint step")
    args = [(spec, v) for v in spec.sweep_values]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_sweep_point_args, args))
    else:
        points = [_sweep_point(*a) for a in args]
    return SweepResult(scenario=spec, points=points)


def _fmt(x: float) -> str:
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def export_trace(trace: SimTrace, path: str | Path) -> Path:
    """Write ``t,sp,y,u,d,d_hat`` rows; floats use shortest round-trip repr."""
    path = Path(path)
    cols = [getattr(trace, c) for c in SimTrace.COLUMNS]
    lines = [",".join(SimTrace.COLUMNS)]
    lines.extend(",".join(_fmt(v) for v in row) for row in zip(*cols))
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc
    return path


def import_trace(path: str | Path) -> SimTrace:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != SimTrace.COLUMNS:
            raise ValidationError(f"{path}: unexpected trace header {header}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    cols = {name: data[:, i] for i, name in enumerate(header)}
    dt = float(cols["t"][1] - cols["t"][0]) if len(data) > 1 else 0.0
    return SimTrace(dt=dt, **cols)
