"""Relaxation to equilibrium under decaying forcing, with a decay-rate fit.

Usage: python3 demos/relaxation.py [config]   (default demos/sbm_relaxation.yaml)
"""
import os
import sys

from nematic_el.config import parse_config
from nematic_el.diagnostics import convergence_monitor, steady_state_solve
from nematic_el.runner import build_system, run_simulation

path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "sbm_relaxation.yaml")
with open(path, encoding="utf-8") as fh:
    cfg = parse_config(fh.read())
system = build_system(cfg)
result = run_simulation(cfg, system)
target = steady_state_solve(result.state.d, tol=1e-12)
rep = convergence_monitor(result.records, target.d, result.snapshots, system)
first, last = result.records[0], result.records[-1]
print(f"E_Q: {first.e_total:.6f} -> {last.e_total:.6e}")
print(f"|u|_(-theta2): {first.norm_u_m_theta2:.3e} -> {last.norm_u_m_theta2:.3e}")
print(f"equilibrium residual {rep.terminal_residual:.2e}, |d(T) - d*|_1 {rep.terminal_d_h1:.2e}")
print(f"fitted decay exponent {rep.chi_fit:.3f} over {rep.n_fit} samples, Phi non-increasing {rep.phi_nonincreasing}")
