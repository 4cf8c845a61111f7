"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line (collected again in the pytest
terminal summary).  Run directly with ``python3 tests/test_acceptance.py``
to get only the criterion lines.
"""
import math
import os
import subprocess
import sys
import tempfile
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conftest import record_acceptance  # noqa: E402
from nematic_el.checks import coercivity_check, gradient_check, identity_suite  # noqa: E402
from nematic_el.config import parse_config  # noqa: E402
from nematic_el.diagnostics import (  # noqa: E402
    convergence_monitor,
    gradient_flow_trajectory,
    radial_ode_solution,
    steady_state_solve,
)
from nematic_el.dynamics import SimState, constant_director, continuous_dependence_probe, perturbed_constant  # noqa: E402
from nematic_el.dynamics import random_solenoidal  # noqa: E402
from nematic_el.runner import build_system, initial_state, run_simulation  # noqa: E402
from nematic_el.spectral import Grid  # noqa: E402

INIT = """
init:
  velocity: {kind: random_solenoidal, amplitude: 1.0, seed: 3}
  director: {kind: perturbed_constant, vector: [1.0, 0.0], amplitude: 0.3, seed: 4%s}
"""

CASE1_LESLIE = "leslie: {mu1: 0.1, mu2: -0.55, mu3: 0.45, mu5: 0.3, mu6: 0.2}\ncase: 1\n"
CASE2_LESLIE = "leslie: {mu1: 0.1, mu2: -0.6, mu3: 0.4, mu5: 0.3, mu6: 0.2}\ncase: 2\n"
COROT_LESLIE = "leslie: {mu1: 0.1, mu2: -0.5, mu3: 0.5, mu5: 0.25, mu6: 0.25}\ncase: 1\n"


def config(model, leslie, n, dt, t_end, extra="", director_extra=""):
    text = (f"model: {model}\n{leslie}grid: {{dim: 2, n_modes: {n}}}\n"
            f"time: {{dt: {dt}, t_end: {t_end}{extra}}}\n" + INIT % director_extra)
    return text


def report(number, title, passed, detail, elapsed):
    status = "PASS" if passed else "FAIL"
    record_acceptance(f"[{status}] criterion {number:2d} {title}: {detail} ({elapsed:.1f} s)")
    return passed


def criterion_1():
    t0 = time.perf_counter()
    res = identity_suite(n_seeds=20)
    worst = ", ".join(f"{r.name} {r.value:.1e}" for r in res)
    return report(1, "algebraic identities", all(r.passed for r in res) and time.perf_counter() - t0 < 30,
                  worst, time.perf_counter() - t0)


def criterion_2():
    t0 = time.perf_counter()
    res = gradient_check()
    slope = res[0].value
    return report(2, "gradient check", all(r.passed for r in res) and time.perf_counter() - t0 < 10,
                  f"halving slope {slope:.4f} in [1.9, 2.1]", time.perf_counter() - t0)


def criterion_3():
    t0 = time.perf_counter()
    res = coercivity_check(n_fields=100)
    worst = min(r.value for r in res)
    return report(3, "coercivity", all(r.passed for r in res) and time.perf_counter() - t0 < 10,
                  f"worst relative slack {worst:.2e} >= -1e-12 over 6 presets x 100 fields",
                  time.perf_counter() - t0)


def criterion_4():
    t0 = time.perf_counter()
    means, mono = [], True
    worst_inc = -math.inf
    for dt in (2e-3, 1e-3, 5e-4):
        r = run_simulation(parse_config(config("NSE-EL", CASE1_LESLIE, 64, dt, 5.0)))
        e = np.array([x.e_total for x in r.records])
        inc = float(np.max(np.diff(e))) / (e[0] * dt ** 2)
        worst_inc = max(worst_inc, inc)
        mono = mono and inc <= 1.0
        means.append(float(np.mean([x.budget_residual for x in r.records[1:]])))
    ratios = [means[0] / means[1], means[1] / means[2]]
    elapsed = time.perf_counter() - t0
    ok = mono and min(ratios) >= 1.7 and elapsed < 180
    return report(4, "Case 1 energy law", ok,
                  f"residual ratios {ratios[0]:.3f}, {ratios[1]:.3f} (>= 1.7); "
                  f"max E increase {worst_inc:.2e} E0 dt^2 (<= 1)", elapsed)


def criterion_5():
    t0 = time.perf_counter()
    dt = 1e-3
    cfg = parse_config(config("NSE-EL", CASE2_LESLIE, 64, dt, 5.0))
    assert cfg.validation.passed and cfg.case == 2
    r = run_simulation(cfg)
    worst = max(x.budget_residual for x in r.records[1:])
    bound = r.records[0].e_total * dt
    elapsed = time.perf_counter() - t0
    return report(5, "Case 2 inequality", worst <= bound and elapsed < 180,
                  f"max one-sided residual {worst:.2e} <= E0 dt = {bound:.2e}", elapsed)


def criterion_6():
    t0 = time.perf_counter()
    cfg = parse_config(config("NSE-EL", COROT_LESLIE, 32, 2e-3, 10.0, ", record_every: 50", ", max_abs: 0.9"))
    assert cfg.leslie.lambda2 == 0.0
    r = run_simulation(cfg)
    vals = np.array([x.max_abs_d for x in r.records])
    bound = 0.9 * (1 + 1e-6)
    elapsed = time.perf_counter() - t0
    first = next((x.t for x in r.records if x.max_abs_d > bound), None)
    detail = f"initial {vals[0]:.6f}, max over run {vals.max():.6f} vs bound {bound:.7f}"
    if first is not None:
        detail += f", first exceeded at t = {first:.2f}"
    return report(6, "maximum principle", bool(np.all(vals <= bound)) and elapsed < 120, detail, elapsed)


_LONG_RUN = {}


def long_run():
    """Shared run for criteria 7 and 8 (SBM-EL, decaying forcing)."""
    if not _LONG_RUN:
        t0 = time.perf_counter()
        text = config("SBM-EL", CASE1_LESLIE, 32, 5e-3, 100.0, ", record_every: 20, snapshot_every: 100")
        text += "forcing: {kind: decaying, delta: 0.5, profile: {kind: taylor_green, amplitude: 1.0e-5}}\n"
        cfg = parse_config(text)
        system = build_system(cfg)
        r = run_simulation(cfg, system)
        target = steady_state_solve(r.state.d, tol=1e-12)
        rep = convergence_monitor(r.records, target.d, r.snapshots, system)
        _LONG_RUN.update(result=r, report=rep, system=system, elapsed=time.perf_counter() - t0)
    return _LONG_RUN


def criterion_7():
    run = long_run()
    rep, recs = run["report"], run["result"].records
    ratio = recs[-1].norm_u_m_theta2 / recs[0].norm_u_m_theta2
    ok = (ratio <= 1e-6 and rep.terminal_residual <= 1e-5 and rep.phi_nonincreasing and rep.chi_fit > 0
          and run["elapsed"] < 300)
    return report(7, "convergence to equilibrium", ok,
                  f"u ratio {ratio:.2e} (<= 1e-6), residual {rep.terminal_residual:.2e} (<= 1e-5), "
                  f"Phi non-increasing {rep.phi_nonincreasing}, chi_fit {rep.chi_fit:.3f} (> 0)", run["elapsed"])


def criterion_8():
    run = long_run()
    rep, system = run["report"], run["system"]
    p = system.params
    ok = rep.strong_mode and rep.terminal_d_h1 <= 1e-4
    return report(8, "strong-mode convergence", ok,
                  f"theta + theta2 = {p.theta + p.theta2:g}, |d(T) - d*|_1 = {rep.terminal_d_h1:.2e} (<= 1e-4)",
                  0.0)


def criterion_9():
    t0 = time.perf_counter()
    g = Grid(2, 32)
    res = steady_state_solve(perturbed_constant(g, [1.0, 0.0], 0.3, seed=4), tol=1e-8, max_iters=10_000)
    g8 = Grid(2, 8)
    dt, n = 0.025, 120
    ts = dt * np.arange(n + 1)
    err = 0.0
    for r0 in (0.3, 1.5, -0.8):
        traj = gradient_flow_trajectory(constant_director(g8, [r0, 0.0]), dt, n)
        r = np.array([s.to_physical()[0].mean() for s in traj])
        err = max(err, float(np.max(np.abs(r - radial_ode_solution(r0, ts)))))
    elapsed = time.perf_counter() - t0
    ok = res.converged and res.residual < 1e-8 and res.iterations < 10_000 and err <= 1e-6 and elapsed < 30
    return report(9, "steady-state solver", ok,
                  f"residual {res.residual:.2e} after {res.iterations} iterations, radial ODE error {err:.2e}",
                  elapsed)


def criterion_10():
    t0 = time.perf_counter()
    cfg = parse_config(config("NSE-EL", CASE1_LESLIE, 32, 1e-3, 1.0))
    system = build_system(cfg)
    s0 = initial_state(cfg)
    g = system.grid
    pert = SimState(random_solenoidal(g, 1.0, -2.0, 21), perturbed_constant(g, [0.0, 0.0], 1.0, seed=22))
    d1, d2, ratio = continuous_dependence_probe(system, s0, pert, eps=1e-4, t_end=1.0, dt=1e-3)
    elapsed = time.perf_counter() - t0
    return report(10, "continuous dependence", 1.6 <= ratio <= 2.4 and elapsed < 60,
                  f"separation ratio {ratio:.4f} in [1.6, 2.4] ({d1:.2e} vs {d2:.2e})", elapsed)


def criterion_11():
    t0 = time.perf_counter()
    text = config("NSE-EL", CASE1_LESLIE, 32, 5e-3, 1.0)
    with tempfile.TemporaryDirectory() as tmp:
        cfg = os.path.join(tmp, "c.yaml")
        with open(cfg, "w") as fh:
            fh.write(text)
        outs = []
        for name in ("a.csv", "b.csv"):
            path = os.path.join(tmp, name)
            r = subprocess.run([sys.executable, "-m", "nematic_el", "run", "--config", cfg, "--csv", path],
                               capture_output=True, text=True)
            assert r.returncode == 0, r.stderr
            with open(path, "rb") as fh:
                outs.append(fh.read())
    identical = outs[0] == outs[1]
    t1 = time.perf_counter()
    st = subprocess.run([sys.executable, "-m", "nematic_el", "selftest"], capture_output=True, text=True)
    self_time = time.perf_counter() - t1
    names = st.stdout
    covers = all(k in names for k in ("b0_cancellation", "gradient_slope", "coercivity", "csv_roundtrip",
                                      "snapshot_roundtrip"))
    ok = identical and st.returncode == 0 and covers and self_time < 300
    return report(11, "determinism and selftest", ok,
                  f"bitwise identical CSV {identical}, selftest exit {st.returncode} in {self_time:.1f} s",
                  time.perf_counter() - t0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


@pytest.mark.parametrize("crit", CRITERIA, ids=[f"criterion_{i + 1:02d}" for i in range(len(CRITERIA))])
def test_criterion(crit):
    assert crit()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
