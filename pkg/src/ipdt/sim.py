"""Fixed-step closed-loop simulation of an IPDT plant under PD/PID control.

The plant integrator is advanced with the exact zero-order-hold update
``y += kp * dt * v(t - d)``; the dead time is a sample delay line with
linear interpolation for fractional delays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .core import (ControllerParams, DivergenceError, IpdtModel, Scenario, SimTrace,
                   ValidationError)

DerivativeOn = Literal["error", "measurement"]


class DelayLine:
    """Transport delay of ``delay`` seconds over samples spaced ``dt`` apart.

    ``push`` stores the newest input; ``read`` returns the input from ``delay``
    seconds before the newest one. Everything before the first push reads as 0.
    """

    def __init__(self, delay: float, dt: float):
        if delay < 0.0 or dt <= 0.0:
            raise ValidationError("delay must be >= 0 and dt > 0")
        samples = delay / dt
        if abs(samples - round(samples)) < 1e-9 * max(1.0, samples):
            samples = float(round(samples))
        self.whole = int(math.floor(samples))
        self.frac = samples - self.whole
        self._size = self.whole + 2
        self._buf = [0.0] * self._size
        self._head = -1  # slot of the newest sample

    def push(self, value: float) -> None:
        self._head = (self._head + 1) % self._size
        self._buf[self._head] = value

    def read(self) -> float:
        size = self._size
        newer = self._buf[(self._head - self.whole) % size]
        if self.frac == 0.0:
            return newer
        older = self._buf[(self._head - self.whole - 1) % size]
        return (1.0 - self.frac) * newer + self.frac * older


class DelayedIntegrator:
    """Time-domain realization of ``kp / s * exp(-d s)`` for piecewise-constant input."""

    def __init__(self, model: IpdtModel, dt: float):
        self.kp = model.kp
        self.dt = dt
        self.delay = DelayLine(model.d, dt)
        self.y = 0.0

    def step(self, v: float) -> float:
        self.delay.push(v)
        self.y += self.kp * self.dt * self.delay.read()
        return self.y


@dataclass
class ControllerState:
    params: ControllerParams
    n_filter: Optional[float] = 10.0
    derivative_on: DerivativeOn = "error"
    integral: float = 0.0
    deriv: float = 0.0
    prev_e: float = 0.0
    prev_signal: float = 0.0
    started: bool = False

    def __post_init__(self):
        if self.n_filter is not None and not self.n_filter > 0.0:
            raise ValidationError(f"derivative filter divisor N must be > 0, got {self.n_filter}")
        if self.derivative_on not in ("error", "measurement"):
            raise ValidationError(f"derivative_on must be 'error' or 'measurement'")


def controller_step(ctrl: ControllerState, e: float, dt: float, y: float = 0.0) -> float:
    """Advance the controller one sample and return its output.

    The loop is at rest before the first call, so a nonzero first error
    produces a (filtered) derivative kick. ``y`` is only used for
    derivative-on-measurement.
    """
    if not dt > 0.0:
        raise ValidationError("dt must be > 0")
    p = ctrl.params
    if p.ti is not None and ctrl.started:
        ctrl.integral += dt / p.ti * 0.5 * (e + ctrl.prev_e)
    signal = e if ctrl.derivative_on == "error" else -y
    if p.td:
        tf = 0.0 if ctrl.n_filter is None else p.td / ctrl.n_filter
        ctrl.deriv = (tf * ctrl.deriv + p.td * (signal - ctrl.prev_signal)) / (tf + dt)
    ctrl.prev_e = e
    ctrl.prev_signal = signal
    ctrl.started = True
    return p.kc * (e + ctrl.integral + ctrl.deriv)


class ObserverState:
    """Disturbance observer: a parallel plant model driven by the controller output.

    The estimate is ``gain * (y - y_model)``.
    """

    def __init__(self, model: IpdtModel, gain: float, dt: float):
        self.model = model
        self.gain = float(gain)
        self.plant = DelayedIntegrator(model, dt)

    @property
    def y_model(self) -> float:
        return self.plant.y


def observer_step(obs: ObserverState, u_pd: float, y: float, dt: float) -> float:
    if dt != obs.plant.dt:
        raise ValidationError("observer was built for a different step size")
    y_m = obs.plant.step(u_pd)
    return obs.gain * (y - y_m)


@dataclass(frozen=True)
class SimOptions:
    n_filter: Optional[float] = 10.0
    derivative_on: DerivativeOn = "error"
    observer_gain: Optional[float] = None  # None: use the controller kc
    observer_model: Optional[IpdtModel] = None  # None: perfect model


def simulate(model: IpdtModel, params: ControllerParams, scenario: Scenario,
             options: SimOptions = SimOptions()) -> SimTrace:
    dt = scenario.dt
    if model.d > 0.0 and dt > model.d / 10.0 * (1.0 + 1e-12):
        raise ValidationError(f"dt={dt} is too coarse for dead time {model.d} (need dt <= d/10)")
    n = scenario.n_steps + 1
    t = np.arange(n) * dt
    sp = scenario.setpoint.sample(t).tolist()
    dist = scenario.disturbance.sample(t).tolist()

    plant = DelayedIntegrator(model, dt)
    ctrl = ControllerState(params, n_filter=options.n_filter, derivative_on=options.derivative_on)
    obs = None
    if scenario.dob_enabled:
        gain = params.kc if options.observer_gain is None else options.observer_gain
        obs = ObserverState(options.observer_model or model, gain, dt)

    ys = [0.0] * n
    us = [0.0] * n
    dh = [0.0] * n
    y = 0.0
    d_hat = 0.0
    for k in range(n):
        ys[k] = y
        dh[k] = d_hat
        u_pd = controller_step(ctrl, sp[k] - y, dt, y)
        u = u_pd - d_hat
        us[k] = u
        y = plant.step(u + dist[k])
        if obs is not None:
            d_hat = observer_step(obs, u_pd, y, dt)
        if not (math.isfinite(y) and math.isfinite(u) and math.isfinite(d_hat)):
            raise DivergenceError(f"simulation diverged at step {k} (t={k * dt:g} s)")
    return SimTrace(dt=dt, t=t, sp=np.array(sp), y=np.array(ys), u=np.array(us),
                    d=np.array(dist), d_hat=np.array(dh))
