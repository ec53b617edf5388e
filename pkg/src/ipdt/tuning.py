"""PD tuning from settling time, gain margin and phase margin, plus literature baselines."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .core import (ControllerParams, CrossoverPair, DegenerateSpecError, DesignSpec, IpdtModel,
                   ValidationError)

POLE_GUARD = 1e-9


@dataclass(frozen=True)
class TuneReport:
    params: ControllerParams
    crossovers: CrossoverPair
    spec: DesignSpec
    td_sign_flipped: bool


def crossover_frequencies(ts: float) -> CrossoverPair:
    """Phase and gain crossover targets implied by a settling time."""
    if not ts > 0.0:
        raise ValidationError(f"settling time ts must be > 0, got {ts}")
    w_pc = 2.0 * math.pi / ts
    return CrossoverPair(w_pc=w_pc, w_gc=2.0 * w_pc)


def pd_derivative_time(phi_m: float, w_gc: float, d: float) -> tuple[float, bool]:
    """Derivative time placing the loop phase at ``phi_m - pi`` at ``w_gc``.

    A negative raw value is folded to its magnitude; the second return value
    says whether that happened.
    """
    if not w_gc > 0.0:
        raise ValidationError(f"w_gc must be > 0, got {w_gc}")
    arg = phi_m + w_gc * d - math.pi / 2.0
    # distance to the nearest odd multiple of pi/2
    offset = math.remainder(arg - math.pi / 2.0, math.pi)
    if abs(offset) < POLE_GUARD:
        raise DegenerateSpecError(
            f"degenerate specification: tangent argument {arg!r} rad is at a pole "
            "(phi_m + w_gc*d - pi/2 is an odd multiple of pi/2)")
    raw = math.tan(arg) / w_gc
    return abs(raw), raw < 0.0


def pd_proportional_gain(kp: float, am: float, w_pc: float, td: float) -> float:
    """Proportional gain giving loop magnitude ``1/am`` at ``w_pc``."""
    if kp == 0.0:
        raise ValidationError("process gain kp must be nonzero")
    if not am > 0.0:
        raise ValidationError(f"gain margin am must be > 0, got {am}")
    if not w_pc > 0.0:
        raise ValidationError(f"w_pc must be > 0, got {w_pc}")
    if td < 0.0:
        raise ValidationError(f"td must be >= 0, got {td}")
    return w_pc / (kp * am * math.sqrt(1.0 + (td * w_pc) ** 2))


def tune_pd(model: IpdtModel, spec: DesignSpec) -> TuneReport:
    crossovers = crossover_frequencies(spec.ts)
    td, flipped = pd_derivative_time(spec.phi_m, crossovers.w_gc, model.d)
    kc = pd_proportional_gain(model.kp, spec.am, crossovers.w_pc, td)
    params = ControllerParams(kc=kc, ti=None, td=td, label="proposed-pd")
    return TuneReport(params=params, crossovers=crossovers, spec=spec, td_sign_flipped=flipped)


class Method(str, Enum):
    WANG_CLUETT = "wang_cluett"
    SREE_CHIDAMBARAM = "sree_chidambaram"
    ALI_MAJHI = "ali_majhi"
    PROPOSED_PD = "proposed_pd"


# Published settings for the kp=0.0506, d=6 plant. The Wang-Cluett row was
# designed with zeta=1, beta=3; those knobs are kept as metadata only.
_BASELINES = {
    Method.WANG_CLUETT: ControllerParams(1.2416, 55.065, 1.028, "wang-cluett (zeta=1, beta=3)"),
    Method.SREE_CHIDAMBARAM: ControllerParams(2.95, 15.0, 3.0, "sree-chidambaram"),
    Method.ALI_MAJHI: ControllerParams(3.39, 19.02, 2.94, "ali-majhi"),
    Method.PROPOSED_PD: ControllerParams(1.5321, None, 1.0343, "proposed-pd"),
}

WANG_CLUETT_DESIGN = {"zeta": 1.0, "beta": 3.0}


def baseline_params(method: Method | str) -> ControllerParams:
    return _BASELINES[Method(method)]
