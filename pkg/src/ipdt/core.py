"""Shared domain types: plant, controller, design targets and signal profiles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class ValidationError(ValueError):
    """An input violates a documented invariant."""


class NumericalError(ArithmeticError):
    """Base for failures of the numerics rather than of the inputs."""


class DegenerateSpecError(NumericalError):
    """The derivative-time formula sits on a tangent pole."""


class DivergenceError(NumericalError):
    """A simulation produced a non-finite signal."""


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class IpdtModel:
    """Integrator with transport delay, ``kp / s * exp(-d s)``."""

    kp: float
    d: float

    def __post_init__(self):
        kp = _finite("kp", self.kp)
        d = _finite("d", self.d)
        if kp == 0.0:
            raise ValidationError("process gain kp must be nonzero")
        if d < 0.0:
            raise ValidationError(f"dead time d must be >= 0, got {d}")
        object.__setattr__(self, "kp", kp)
        object.__setattr__(self, "d", d)


# Plant used throughout the comparison experiments.
PAPER_PLANT = IpdtModel(kp=0.0506, d=6.0)


@dataclass(frozen=True)
class ControllerParams:
    """Ideal-form gains: ``kc * (1 + 1/(ti s) + td s)``; ``ti=None`` is PD."""

    kc: float
    ti: Optional[float] = None
    td: Optional[float] = None
    label: str = ""

    def __post_init__(self):
        kc = _finite("kc", self.kc)
        if kc <= 0.0:
            raise ValidationError(f"controller gain kc must be > 0, got {kc}")
        object.__setattr__(self, "kc", kc)
        if self.ti is not None:
            ti = _finite("ti", self.ti)
            if ti <= 0.0:
                raise ValidationError(f"integral time ti must be > 0, got {ti}")
            object.__setattr__(self, "ti", ti)
        if self.td is not None:
            td = _finite("td", self.td)
            if td < 0.0:
                raise ValidationError(f"derivative time td must be >= 0, got {td}")
            object.__setattr__(self, "td", td)

    @property
    def is_pd(self) -> bool:
        return self.ti is None


@dataclass(frozen=True)
class DesignSpec:
    """Tuning targets. ``am`` is a linear ratio, ``phi_m`` is in radians."""

    am: float
    phi_m: float
    ts: float

    def __post_init__(self):
        am = _finite("am", self.am)
        phi_m = _finite("phi_m", self.phi_m)
        ts = _finite("ts", self.ts)
        if am <= 0.0:
            raise ValidationError(f"gain margin am must be > 0, got {am}")
        if ts <= 0.0:
            raise ValidationError(f"settling time ts must be > 0, got {ts}")
        if not 0.0 < phi_m <= math.pi:
            raise ValidationError(f"phase margin phi_m must lie in (0, pi], got {phi_m}")
        object.__setattr__(self, "am", am)
        object.__setattr__(self, "phi_m", phi_m)
        object.__setattr__(self, "ts", ts)

    @classmethod
    def from_db_deg(cls, am_db: float, pm_deg: float, ts: float) -> "DesignSpec":
        return cls(am=10.0 ** (am_db / 20.0), phi_m=math.radians(pm_deg), ts=ts)


@dataclass(frozen=True)
class CrossoverPair:
    w_pc: float
    w_gc: float

    def __post_init__(self):
        for name in ("w_pc", "w_gc"):
            if not _finite(name, getattr(self, name)) > 0.0:
                raise ValidationError(f"{name} must be > 0")


@dataclass(frozen=True)
class SignalProfile:
    """Piecewise-constant signal, right-continuous at each breakpoint."""

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        bps = tuple((_finite("start_time", t), _finite("value", v)) for t, v in self.breakpoints)
        if not bps:
            raise ValidationError("a signal profile needs at least one breakpoint")
        if bps[0][0] != 0.0:
            raise ValidationError(f"first breakpoint must start at t=0, got {bps[0][0]}")
        for (t0, _), (t1, _) in zip(bps, bps[1:]):
            if not t1 > t0:
                raise ValidationError(f"breakpoint times must strictly increase ({t0} then {t1})")
        object.__setattr__(self, "breakpoints", bps)

    @classmethod
    def constant(cls, value: float) -> "SignalProfile":
        return cls(((0.0, value),))

    @classmethod
    def step(cls, at: float, value: float, before: float = 0.0) -> "SignalProfile":
        if at == 0.0:
            return cls.constant(value)
        return cls(((0.0, before), (at, value)))

    def __call__(self, t: float) -> float:
        return profile_value(self, t)

    def sample(self, t: np.ndarray) -> np.ndarray:
        times = np.array([b[0] for b in self.breakpoints])
        values = np.array([b[1] for b in self.breakpoints])
        idx = np.searchsorted(times, t, side="right") - 1
        return values[np.clip(idx, 0, None)]


def profile_value(profile: SignalProfile, t: float) -> float:
    """Value of the latest breakpoint whose start time is <= ``t``."""
    value = profile.breakpoints[0][1]
    for start, v in profile.breakpoints:
        if start <= t:
            value = v
        else:
            break
    return value


@dataclass(frozen=True)
class Scenario:
    setpoint: SignalProfile
    disturbance: SignalProfile = field(default_factory=lambda: SignalProfile.constant(0.0))
    horizon: float = 200.0
    dt: float = 0.01
    dob_enabled: bool = False

    def __post_init__(self):
        dt = _finite("dt", self.dt)
        horizon = _finite("horizon", self.horizon)
        if dt <= 0.0 or horizon <= 0.0:
            raise ValidationError("dt and horizon must both be > 0")
        steps = horizon / dt
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise ValidationError(f"horizon {horizon} is not a whole number of dt={dt} steps")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass(frozen=True)
class SimTrace:
    dt: float
    t: np.ndarray
    sp: np.ndarray
    y: np.ndarray
    u: np.ndarray
    d: np.ndarray
    d_hat: np.ndarray

    COLUMNS = ("t", "sp", "y", "u", "d", "d_hat")

    def __post_init__(self):
        n = len(self.t)
        if n < 1:
            raise ValidationError("a trace needs at least one sample")
        for name in self.COLUMNS:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValidationError(f"trace column {name} has shape {arr.shape}, expected ({n},)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def error(self) -> np.ndarray:
        return self.sp - self.y

    @classmethod
    def from_signals(cls, dt: float, sp: Sequence[float], y: Sequence[float], u: Sequence[float],
                     d: Sequence[float] | None = None, d_hat: Sequence[float] | None = None) -> "SimTrace":
        """Build a trace from arrays sampled at ``k * dt``; missing columns are zero."""
        n = len(y)
        zeros = np.zeros(n)
        return cls(dt=dt, t=np.arange(n) * dt, sp=np.asarray(sp, float), y=np.asarray(y, float),
                   u=np.asarray(u, float), d=zeros if d is None else np.asarray(d, float),
                   d_hat=zeros if d_hat is None else np.asarray(d_hat, float))
