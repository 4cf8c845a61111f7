"""Energy budget of a Case 1 run at three time steps.

Usage: python3 demos/energy_budget.py
"""
import numpy as np

from nematic_el.config import parse_config
from nematic_el.diagnostics import integrated_budget_defect
from nematic_el.runner import run_simulation

TEXT = """
model: NSE-EL
leslie: {mu1: 0.1, mu2: -0.55, mu3: 0.45, mu5: 0.3, mu6: 0.2}
case: 1
grid: {dim: 2, n_modes: 32}
time: {dt: %g, t_end: 0.5}
init:
  velocity: {kind: random_solenoidal, amplitude: 1.0, seed: 3}
  director: {kind: perturbed_constant, vector: [1.0, 0.0], amplitude: 0.3, seed: 4}
"""

prev = None
for dt in (4e-3, 2e-3, 1e-3):
    cfg = parse_config(TEXT % dt)
    recs = run_simulation(cfg).records
    mean = float(np.mean([r.budget_residual for r in recs[1:]]))
    defect = integrated_budget_defect(recs, cfg.leslie, cfg.case)
    ratio = f"{prev / mean:.3f}" if prev else "-"
    print(f"dt {dt:.0e}  E(0) {recs[0].e_total:.6f}  E(T) {recs[-1].e_total:.6f}  "
          f"mean residual {mean:.3e}  ratio {ratio}  integrated defect {defect:.3e}")
    prev = mean
