"""Loop frequency response and numerically measured stability margins."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .core import ControllerParams, IpdtModel, ValidationError

DEFAULT_W_MIN = 1e-4
DEFAULT_W_MAX = 1e3
DEFAULT_GRID = 4000
BISECT_RTOL = 1e-10
BISECT_MAXITER = 60


@dataclass(frozen=True)
class MarginReport:
    am: float | None
    w_pc: float | None
    phi_m: float | None
    w_gc: float | None
    pc_found: bool
    gc_found: bool
    gc_count: int = 0
    iterations: int = 0

    @property
    def multiple_gain_crossovers(self) -> bool:
        return self.gc_count > 1

    def as_dict(self) -> dict:
        return {"am": self.am, "w_pc": self.w_pc, "phi_m": self.phi_m, "w_gc": self.w_gc,
                "pc_found": self.pc_found, "gc_found": self.gc_found, "gc_count": self.gc_count}


def _controller(params: ControllerParams, s):
    c = 1.0 + (params.td or 0.0) * s
    if params.ti is not None:
        c = c + 1.0 / (params.ti * s)
    return params.kc * c


def loop_response(model: IpdtModel, params: ControllerParams, w):
    """Complex loop gain ``G_C(jw) * G_I(jw)``; ``w`` may be an array."""
    w_arr = np.asarray(w, dtype=float)
    if np.any(~(w_arr > 0.0)):
        raise ValidationError("frequency must be > 0")
    s = 1j * w_arr
    g = _controller(params, s) * model.kp / s * np.exp(-s * model.d)
    return complex(g) if np.ndim(g) == 0 else g


def loop_phase(model: IpdtModel, params: ControllerParams, w):
    """Continuous (unwrapped) loop phase in radians.

    Built from the factors so there are no 2*pi jumps even where the delay
    term winds quickly between grid points.
    """
    w = np.asarray(w, dtype=float)
    lead = (params.td or 0.0) * w
    if params.ti is not None:
        lead = lead - 1.0 / (params.ti * w)
    phase = np.arctan(lead) - math.pi / 2.0 - w * model.d
    if model.kp < 0.0:
        phase = phase + math.pi
    return phase


def loop_magnitude(model: IpdtModel, params: ControllerParams, w):
    return np.abs(loop_response(model, params, w))


def _first_bracket(f_vals: np.ndarray) -> tuple[int | None, int]:
    sign = np.sign(f_vals)
    changes = np.nonzero(sign[:-1] * sign[1:] <= 0)[0]
    return (int(changes[0]) if len(changes) else None), len(changes)


def measure_margins(model: IpdtModel, params: ControllerParams, w_min: float = DEFAULT_W_MIN,
                    w_max: float = DEFAULT_W_MAX, n_grid: int = DEFAULT_GRID) -> MarginReport:
    """Gain and phase margins at the lowest-frequency crossovers in ``[w_min, w_max]``."""
    if not 0.0 < w_min < w_max:
        raise ValidationError(f"need 0 < w_min < w_max, got {w_min}, {w_max}")
    if n_grid < 2000:
        raise ValidationError("frequency grid needs at least 2000 points")
    grid = np.geomspace(w_min, w_max, n_grid)

    def phase_fn(w):
        return float(loop_phase(model, params, w)) + math.pi

    def mag_fn(w):
        return math.log(abs(loop_response(model, params, w)))

    iterations = 0
    am = w_pc = phi_m = w_gc = None

    i, _ = _first_bracket(loop_phase(model, params, grid) + math.pi)
    if i is not None:
        w_pc, res = _refine(phase_fn, grid[i], grid[i + 1])
        iterations = max(iterations, res)
        am = 1.0 / abs(loop_response(model, params, w_pc))

    j, gc_count = _first_bracket(np.log(loop_magnitude(model, params, grid)))
    if j is not None:
        w_gc, res = _refine(mag_fn, grid[j], grid[j + 1])
        iterations = max(iterations, res)
        phi_m = math.remainder(float(np.angle(loop_response(model, params, w_gc))) + math.pi,
                               2.0 * math.pi)

    return MarginReport(am=am, w_pc=w_pc, phi_m=phi_m, w_gc=w_gc, pc_found=i is not None,
                        gc_found=j is not None, gc_count=gc_count, iterations=iterations)


def _refine(fn, a: float, b: float) -> tuple[float, int]:
    if fn(a) == 0.0:
        return a, 0
    if fn(b) == 0.0:
        return b, 0
    root, info = bisect(fn, a, b, xtol=a * 1e-14, rtol=BISECT_RTOL, maxiter=BISECT_MAXITER,
                        full_output=True)
    return float(root), info.iterations
