"""Performance indices, step-response specifications and control energy."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .core import SimTrace, ValidationError

SETTLING_BAND = 0.02
RISE_LEVELS = (0.1, 0.9)


@dataclass(frozen=True)
class StepSpecs:
    rise_time: Optional[float]
    settling_time: Optional[float]
    overshoot: float
    settled: bool = True

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class IndexReport:
    ise: float
    iae: float
    itae: float
    energy: float

    def as_dict(self) -> dict:
        return asdict(self)


def _window(trace: SimTrace, window: Sequence[float]) -> slice:
    t0, t1 = float(window[0]), float(window[1])
    span = trace.t[-1]
    tol = 1e-9 * max(1.0, span)
    if not t0 < t1:
        raise ValidationError(f"window start must precede its end, got [{t0}, {t1}]")
    if t0 < -tol or t1 > span + tol:
        raise ValidationError(f"window [{t0}, {t1}] lies outside the trace span [0, {span}]")
    i0 = int(math.ceil(t0 / trace.dt - 1e-9))
    i1 = int(math.floor(t1 / trace.dt + 1e-9))
    return slice(max(i0, 0), min(i1, len(trace) - 1) + 1)


def _trapz(values: np.ndarray, dt: float) -> float:
    if len(values) < 2:
        return 0.0
    return float(dt * (values.sum() - 0.5 * (values[0] + values[-1])))


def integral_indices(trace: SimTrace, window: Sequence[float] | None = None,
                     time_origin: float = 0.0) -> tuple[float, float, float]:
    """ISE, IAE and ITAE of ``sp - y`` over ``window`` (trapezoidal)."""
    sl = _window(trace, window if window is not None else (0.0, trace.t[-1]))
    e = trace.error[sl]
    t = trace.t[sl]
    ae = np.abs(e)
    return (_trapz(e * e, trace.dt), _trapz(ae, trace.dt), _trapz((t - time_origin) * ae, trace.dt))


def control_energy(trace: SimTrace, window: Sequence[float] | None = None) -> float:
    sl = _window(trace, window if window is not None else (0.0, trace.t[-1]))
    u = trace.u[sl]
    return _trapz(u * u, trace.dt)


def index_report(trace: SimTrace, window: Sequence[float] | None = None,
                 time_origin: float = 0.0) -> IndexReport:
    ise, iae, itae = integral_indices(trace, window, time_origin)
    return IndexReport(ise=ise, iae=iae, itae=itae, energy=control_energy(trace, window))


def _crossing_time(t: np.ndarray, x: np.ndarray, level: float) -> Optional[float]:
    hits = np.nonzero(x >= level)[0]
    if len(hits) == 0:
        return None
    i = int(hits[0])
    if i == 0:
        return float(t[0])
    x0, x1 = x[i - 1], x[i]
    return float(t[i - 1] + (level - x0) / (x1 - x0) * (t[i] - t[i - 1]))


def step_specs(trace: SimTrace, step_time: float, initial: float, final: float,
               band: float = SETTLING_BAND, rise_levels: tuple[float, float] = RISE_LEVELS) -> StepSpecs:
    """Rise time (10-90 %), settling time (2 % band) and percent overshoot.

    Times are measured from ``step_time``. Settling is the last exit from the
    band, interpolated between samples; if the trace ends outside the band the
    settling time is ``None`` and ``settled`` is False.
    """
    delta = final - initial
    if delta == 0.0:
        raise ValidationError("final and initial values must differ")
    start = int(math.ceil(step_time / trace.dt - 1e-9))
    if start < 0 or start >= len(trace):
        raise ValidationError(f"step_time {step_time} is outside the trace")
    t = trace.t[start:]
    y = trace.y[start:]
    x = (y - initial) / delta  # normalized: 0 -> 1

    lo = _crossing_time(t, x, rise_levels[0])
    hi = _crossing_time(t, x, rise_levels[1])
    rise = None if lo is None or hi is None else hi - lo

    dev = np.abs(x - 1.0) - band
    outside = np.nonzero(dev > 0.0)[0]
    settled = True
    if len(outside) == 0:
        settling = 0.0
    elif outside[-1] == len(x) - 1:
        settling, settled = None, False
    else:
        i = int(outside[-1])
        frac = dev[i] / (dev[i] - dev[i + 1])
        settling = float(t[i] + frac * (t[i + 1] - t[i])) - step_time

    overshoot = 100.0 * max(0.0, float(np.max(x)) - 1.0)
    return StepSpecs(rise_time=rise, settling_time=settling, overshoot=overshoot, settled=settled)


def servo_segment_indices(trace: SimTrace,
                          segments: Sequence[tuple[Sequence[float], float]]) -> list[tuple[float, float]]:
    """Per-segment (ISE, IAE) with the time origin reset at each segment start."""
    ordered = sorted(segments, key=lambda s: s[0][0])
    for (w0, _), (w1, _) in zip(ordered, ordered[1:]):
        if w1[0] < w0[1] - 1e-9:
            raise ValidationError(f"segments {tuple(w0)} and {tuple(w1)} overlap")
    out = []
    for window, _ in segments:
        ise, iae, _ = integral_indices(trace, window, time_origin=window[0])
        out.append((ise, iae))
    return out


def first_peak_index(y: np.ndarray) -> Optional[int]:
    """Index of the first strict local maximum, or None for a monotone trace."""
    dy = np.diff(y)
    rising = dy > 0
    turns = np.nonzero(rising[:-1] & (dy[1:] < 0))[0]
    return int(turns[0]) + 1 if len(turns) else None


def peak_to_peak_after_first_peak(trace: SimTrace) -> float:
    i = first_peak_index(trace.y)
    if i is None:
        return 0.0
    tail = trace.y[i:]
    return float(tail.max() - tail.min())


def oscillation_cycles(trace: SimTrace, final: float, initial: float = 0.0,
                       threshold: float = 1e-3) -> int:
    """Number of complete overshoot/undershoot pairs about ``final``.

    Only extrema further than ``threshold`` (fraction of the step) from the
    final value count.
    """
    delta = final - initial
    x = (trace.y - initial) / delta - 1.0
    dx = np.diff(x)
    idx = np.nonzero(np.sign(dx[:-1]) * np.sign(dx[1:]) < 0)[0] + 1
    over = under = 0
    last = 0
    for i in idx:
        if x[i] > threshold and last <= 0:
            over += 1
            last = 1
        elif x[i] < -threshold and last >= 0 and over > 0:
            under += 1
            last = -1
    return min(over, under)
