"""Exit criteria for the package, one test per criterion.

Each test logs a PASS/FAIL line (shown in the terminal summary) with the
numbers it checked, then asserts.
"""
import cmath
import math
from dataclasses import replace

import numpy as np
import pytest

from ipdt import (PAPER_PLANT, DesignSpec, IpdtModel, Scenario, SignalProfile, SimTrace,
                  integral_indices, simulate, step_specs, tune_pd)
from ipdt.bench import builtin_scenario, run_comparison, run_method, run_sweep
from ipdt.freq import loop_response
from ipdt.sim import DelayedIntegrator

PAPER_SPEC = DesignSpec(am=2.0, phi_m=math.pi, ts=40.0)
BASELINES = ("wang_cluett", "sree_chidambaram", "ali_majhi")


class Criterion:
    def __init__(self, log, number, title):
        self.log, self.number, self.title = log, number, title
        self.failures: list[str] = []
        self.notes: list[str] = []

    def check(self, ok, message):
        (self.notes if ok else self.failures).append(("ok   " if ok else "FAIL ") + message)
        return ok

    def finish(self):
        status = "PASS" if not self.failures else "FAIL"
        self.log.append(f"[{status}] criterion {self.number}: {self.title}")
        for line in self.failures + self.notes:
            self.log.append(f"         {line}")
        assert not self.failures, "\n".join(self.failures)


def within_rel(value, target, rel):
    return value is not None and abs(value - target) <= rel * abs(target)


def phase_error_mod_2pi(a, b):
    return abs(math.remainder(a - b, 2 * math.pi))


@pytest.fixture(scope="module")
def step_report():
    return run_comparison(builtin_scenario("step_tracking"))


@pytest.fixture(scope="module")
def servo_report():
    return run_comparison(builtin_scenario("servo_staircase"))


@pytest.fixture(scope="module")
def regulatory_report():
    return run_comparison(builtin_scenario("regulatory"))


def test_c01_tuning_formula(acceptance_log):
    c = Criterion(acceptance_log, 1, "tuning formula reproduces kc=1.5321, td=1.0343 (+/-0.0005)")
    p = tune_pd(PAPER_PLANT, PAPER_SPEC).params
    c.check(abs(p.kc - 1.5321) <= 5e-4, f"kc = {p.kc:.6f}")
    c.check(abs(p.td - 1.0343) <= 5e-4, f"td = {p.td:.6f}")
    c.finish()


def _identity_errors(model, spec):
    report = tune_pd(model, spec)
    w_pc, w_gc = report.crossovers.w_pc, report.crossovers.w_gc
    mag_err = abs(abs(loop_response(model, report.params, w_pc)) * spec.am - 1.0)
    phase = cmath.phase(loop_response(model, report.params, w_gc))
    return report, mag_err, phase_error_mod_2pi(phase + math.pi, spec.phi_m)


def test_c02_margin_identities(acceptance_log):
    c = Criterion(acceptance_log, 2, "by-construction identities |G(j w_pc)|=1/Am and "
                  "arg G(j w_gc)+pi = phi_m (mod 2pi), within 1e-9")
    _, mag_err, ph_err = _identity_errors(PAPER_PLANT, PAPER_SPEC)
    c.check(mag_err <= 1e-9, f"paper design: | |G(j w_pc)|*Am - 1 | = {mag_err:.2e}")
    c.check(ph_err <= 1e-9, f"paper design: phase identity error = {ph_err:.6g} rad")

    rng = np.random.default_rng(20240601)
    specs = []
    while len(specs) < 100:
        spec = DesignSpec(am=rng.uniform(1.2, 4.0), phi_m=rng.uniform(0.5, math.pi),
                          ts=rng.uniform(20.0, 100.0))
        if not tune_pd(PAPER_PLANT, spec).td_sign_flipped:
            specs.append(spec)
    mag_bad = ph_bad = 0
    worst_phase = 0.0
    for spec in specs:
        _, m, p = _identity_errors(PAPER_PLANT, spec)
        mag_bad += m > 1e-9
        ph_bad += p > 1e-9
        worst_phase = max(worst_phase, p)
    c.check(mag_bad == 0, f"100 random non-flipped specs: {mag_bad} magnitude violations")
    c.check(ph_bad == 0, f"100 random non-flipped specs: {ph_bad} phase violations "
                         f"(worst {worst_phase:.6g} rad)")
    c.finish()


def test_c03_step_specs_proposed(acceptance_log, step_report):
    c = Criterion(acceptance_log, 3, "proposed PD step specs vs 14.03 s / 28.12 s / 0.19 %")
    s = step_report["proposed_pd"].step
    c.check(abs(s.overshoot - 0.19) <= 0.5, f"overshoot {s.overshoot:.4g} % (+/-0.5 pp)")
    c.check(within_rel(s.settling_time, 28.12, 0.15), f"settling {s.settling_time:.3f} s (+/-15 %)")
    c.check(within_rel(s.rise_time, 14.03, 0.10), f"rise {s.rise_time:.3f} s (+/-10 %)")
    c.finish()


def test_c04_step_specs_baselines(acceptance_log, step_report):
    c = Criterion(acceptance_log, 4, "baseline overshoot (+/-5 pp) and settling (+/-20 %)")
    paper = {"wang_cluett": (23.43, 110.97), "sree_chidambaram": (52.24, 65.75),
             "ali_majhi": (69.56, 47.91)}
    for m, (os_ref, ts_ref) in paper.items():
        s = step_report[m].step
        c.check(abs(s.overshoot - os_ref) <= 5.0,
                f"{m}: overshoot {s.overshoot:.2f} % vs {os_ref}")
        c.check(within_rel(s.settling_time, ts_ref, 0.20),
                f"{m}: settling {s.settling_time:.2f} s vs {ts_ref}")
    c.finish()


SERVO_PAPER = {
    "wang_cluett": ((10.91, 43.63, 10.92), (22.7, 45.39, 22.7)),
    "sree_chidambaram": ((8.774, 35.1, 8.779), (15.56, 31.11, 15.58)),
    "ali_majhi": ((8.264, 33.05, 8.256), (13.63, 27.26, 13.64)),
    "proposed_pd": ((9.887, 39.55, 9.887), (12.95, 25.9, 12.95)),
}


def test_c05_servo_indices(acceptance_log, servo_report):
    c = Criterion(acceptance_log, 5, "servo staircase per-segment ISE/IAE (+/-10 %), "
                  "ISE(SP=3)/ISE(SP=1) = 4 (+/-2 %)")
    for m, (ise_ref, iae_ref) in SERVO_PAPER.items():
        segs = servo_report[m].segments
        for k, label in enumerate(("SP=1", "SP=3", "SP=2")):
            ise, iae = segs[k]
            c.check(within_rel(ise, ise_ref[k], 0.10), f"{m} {label}: ISE {ise:.4g} vs {ise_ref[k]}")
            c.check(within_rel(iae, iae_ref[k], 0.10), f"{m} {label}: IAE {iae:.4g} vs {iae_ref[k]}")
        ratio = segs[1][0] / segs[0][0]
        c.check(within_rel(ratio, 4.0, 0.02), f"{m}: ISE ratio {ratio:.4f}")
    c.finish()


def test_c06_energy_ordering(acceptance_log, step_report):
    c = Criterion(acceptance_log, 6, "control energy on [0,200]: proposed < WC < SC < AM; "
                  "proposed within +/-50 % of 78.22")
    order = ("proposed_pd", "wang_cluett", "sree_chidambaram", "ali_majhi")
    energies = [step_report[m].indices.energy for m in order]
    c.check(all(a < b for a, b in zip(energies, energies[1:])),
            "ordering " + " < ".join(f"{m}={e:.2f}" for m, e in zip(order, energies)))
    c.check(within_rel(energies[0], 78.22, 0.50), f"proposed energy {energies[0]:.2f} vs 78.22")
    spr = run_comparison(builtin_scenario("servo_plus_regulatory"))
    e8 = [spr[m].indices.energy for m in order]
    c.check(all(a < b for a, b in zip(e8, e8[1:])),
            "servo+regulatory ordering " + " < ".join(f"{m}={e:.2f}" for m, e in zip(order, e8)))
    c.finish()


def test_c07_observer_dc_gain(acceptance_log):
    c = Criterion(acceptance_log, 7, "observer estimate -> a and output -> setpoint "
                  "within 1e-3 by t=150 s")
    params = tune_pd(PAPER_PLANT, PAPER_SPEC).params
    for a in (0.5, 1.0, 2.0):
        scen = Scenario(SignalProfile.constant(0.0), SignalProfile.constant(a), horizon=200.0,
                        dt=0.01, dob_enabled=True)
        tr = simulate(PAPER_PLANT, params, scen)
        late = tr.t >= 150.0
        dh_err = float(np.max(np.abs(tr.d_hat[late] - a)))
        y_err = float(np.max(np.abs(tr.y[late] - tr.sp[late])))
        c.check(dh_err < 1e-3, f"a={a}: max |d_hat - a| on t>=150 = {dh_err:.2e}")
        c.check(y_err < 1e-3, f"a={a}: max |y - sp| on t>=150 = {y_err:.2e}")
    c.finish()


def test_c08_regulatory(acceptance_log, regulatory_report):
    c = Criterion(acceptance_log, 8, "regulatory: proposed PD + observer has the smallest "
                  "ISE and IAE; values within +/-50 % of (0.03, 1.002)")
    r = regulatory_report
    prop = r["proposed_pd"].indices
    for m in BASELINES:
        b = r[m].indices
        c.check(prop.ise < b.ise, f"ISE proposed {prop.ise:.4g} < {m} {b.ise:.4g}")
        c.check(prop.iae < b.iae, f"IAE proposed {prop.iae:.4g} < {m} {b.iae:.4g}")
    c.check(within_rel(prop.ise, 0.03, 0.5), f"proposed ISE {prop.ise:.4g} vs 0.03")
    c.check(within_rel(prop.iae, 1.002, 0.5), f"proposed IAE {prop.iae:.4g} vs 1.002")
    spec = builtin_scenario("regulatory")
    for gain in (0.5, 1.0, 1.5321, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5):
        res = run_method(replace(spec, observer_gain=gain), "proposed_pd")
        c.notes.append(f"     gain sweep: K={gain:<6g} ISE={res.indices.ise:.4g} "
                       f"IAE={res.indices.iae:.4g} energy={res.indices.energy:.4g}")
    c.finish()


def test_c09_sweeps(acceptance_log):
    c = Criterion(acceptance_log, 9, "Ts sweep settles in order and within +/-20 % of Ts; "
                  "Am sweep oscillation decreases, Am=1 has >= 2 cycles")
    ts_sweep = run_sweep(builtin_scenario("sweep_ts"))
    settle = [p.step.settling_time for p in ts_sweep.points]
    c.check(ts_sweep.settling_increasing, f"settling times {[round(s, 2) for s in settle]}")
    for p in ts_sweep.points:
        c.check(within_rel(p.step.settling_time, p.value, 0.20),
                f"Ts={p.value:g}: measured settling {p.step.settling_time:.2f} s")
    am_sweep = run_sweep(builtin_scenario("sweep_am"))
    p2p = [p.peak_to_peak for p in am_sweep.points]
    c.check(am_sweep.oscillation_decreasing, f"peak-to-peak after first peak {p2p}")
    c.check(am_sweep.points[0].cycles >= 2, f"Am=1 cycles = {am_sweep.points[0].cycles}")
    c.finish()


def _converged(a, b, rel=0.005, floor=1e-3):
    return abs(a - b) <= max(rel * max(abs(a), abs(b)), floor)


def test_c10_numerical_hygiene(acceptance_log):
    c = Criterion(acceptance_log, 10, "dt halving, analytic metric oracles, dead time and "
                  "exact integrator")
    base = builtin_scenario("step_tracking")
    coarse = run_method(replace(base, dt=0.02), "proposed_pd").step
    fine = run_method(base, "proposed_pd").step
    for name in ("rise_time", "settling_time"):
        a, b = getattr(coarse, name), getattr(fine, name)
        c.check(abs(a - b) <= 0.005 * abs(b), f"{name}: {a:.5f} (dt=0.02) vs {b:.5f} (dt=0.01)")
    # overshoot is ~1e-6 %: compare against a 1e-3 percentage-point noise floor
    c.check(_converged(coarse.overshoot, fine.overshoot),
            f"overshoot: {coarse.overshoot:.3g} vs {fine.overshoot:.3g} %")

    dt = 0.01
    t = np.arange(2001) * dt
    tr = SimTrace.from_signals(dt, sp=np.exp(-t), y=np.zeros_like(t), u=np.zeros_like(t))
    ise, iae, itae = integral_indices(tr, (0.0, 20.0))
    c.check(abs(ise - 0.5) < 1e-3 and abs(iae - 1.0) < 1e-3 and abs(itae - 1.0) < 1e-3,
            f"e^-t oracle: ISE {ise:.6f} IAE {iae:.6f} ITAE {itae:.6f}")
    fo = SimTrace.from_signals(dt, sp=np.ones_like(t), y=1 - np.exp(-t), u=np.zeros_like(t))
    s = step_specs(fo, 0.0, 0.0, 1.0)
    c.check(abs(s.rise_time - math.log(9)) < 1e-3 and abs(s.settling_time - math.log(50)) < 1e-3
            and s.overshoot == 0.0,
            f"first-order oracle: rise {s.rise_time:.5f} settling {s.settling_time:.5f}")

    plant = DelayedIntegrator(PAPER_PLANT, dt)
    ys = [plant.step(1.0 if k == 0 else 0.0) for k in range(1000)]
    first = next(k for k, y in enumerate(ys) if y != 0.0)
    # ys[k] is the output at t=(k+1)*dt
    c.check(ys[first] == PAPER_PLANT.kp * dt and abs((first + 1) * dt - 6.0 - dt) < 1e-9,
            f"dead time: pulse first seen at t={(first + 1) * dt:.2f} s")

    plant = DelayedIntegrator(IpdtModel(0.5, 0.0), 0.25)
    ys = [plant.step(3.0) for _ in range(100)]
    inc = np.diff([0.0] + ys)
    c.check(bool(np.all(inc == 0.5 * 3.0 * 0.25)), "exact integrator: increments all kp*v*dt")
    c.finish()
