"""Invariant checks shared by the ``selftest`` command and the test suite.

Each check returns a CheckResult with the measured worst value and the
threshold it was compared against.
"""
from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .coefficients import PRESETS, coercivity_constants, preset
from .diagnostics import EnergyRecord
from .dynamics import SimState, perturbed_constant, random_solenoidal
from .io import read_records_csv, read_snapshot, write_records_csv, write_snapshot
from .operators import (
    b0_phys,
    dot,
    ericksen_force,
    ericksen_stress_divergence,
    ginzburg_landau_force,
    matvec,
    rate_of_strain,
    trilinear_b0,
    trilinear_b1,
    vorticity_skew,
)
from .spectral import Grid, SpectralField, divergence_coeffs, gradient_coeffs, leray_project, sobolev_norm


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.value:.3e} (threshold {self.threshold:.3e}) {self.detail}".rstrip()


def random_vector(grid: Grid, seed, slope=-2.0, mean=True) -> SpectralField:
    """Smooth random vector field inside the dealiasing band (not solenoidal)."""
    rng = np.random.default_rng(seed)
    c = grid.forward(rng.standard_normal((grid.dim,) + grid.shape))
    kmag = np.where(grid.k2 > 0, grid.kmag, 1.0)
    c = c * kmag ** slope * grid.dealias_mask
    if not mean:
        c[:, grid.mean_mode] = 0.0
    return SpectralField(grid, c)


def _rel(a, b):
    scale = np.max(np.abs(b))
    return float(np.max(np.abs(a - b)) / scale) if scale > 0 else float(np.max(np.abs(a)))


def _cubic_scale_b0(u, params):
    g = u.grid
    m = g.to_padded(params.m_symbol.evaluate(g) * u.coeffs)
    qv = params.q_symbol.evaluate(g) * u.coeffs
    gq = g.to_padded(gradient_coeffs(g, qv))
    w = g.to_padded(qv)
    b = b0_phys(np.abs(m), np.abs(gq), params.chi)
    return g.padded_integral(dot(b, np.abs(w)))


def _cubic_scale_b1(u, psi, params):
    g = u.grid
    v = g.to_padded(params.q_symbol.evaluate(g) * u.coeffs)
    gp = g.to_padded(gradient_coeffs(g, psi.coeffs))
    return g.padded_integral(dot(matvec(np.abs(gp), np.abs(v)), np.abs(g.to_padded(psi.coeffs))))


def identity_suite(n_seeds=20, n_modes=32, dim=2, alpha=1.0):
    """Leray, strain split, trilinear cancellations and the Ericksen identity."""
    grid = Grid(dim, n_modes)
    worst = {"leray_idempotent": 0.0, "leray_divergence": 0.0, "strain_split": 0.0,
             "b0_cancellation": 0.0, "b1_cancellation": 0.0, "ericksen_identity": 0.0}
    for seed in range(n_seeds):
        f = random_vector(grid, 1000 + seed)
        pf = leray_project(f)
        worst["leray_idempotent"] = max(worst["leray_idempotent"], _rel(leray_project(pf).coeffs, pf.coeffs))
        fnorm = sobolev_norm(f, 0.0, "director")
        div = np.max(np.abs(divergence_coeffs(grid, pf.coeffs))) * math.sqrt(grid.volume)
        worst["leray_divergence"] = max(worst["leray_divergence"], float(div / fnorm))
        u = random_solenoidal(grid, 1.0, -2.0, seed)
        psi = random_vector(grid, 2000 + seed)
        d = random_vector(grid, 3000 + seed)
        for name in PRESETS:
            p = preset(name, alpha)
            v = SpectralField(grid, p.q_symbol.evaluate(grid) * u.coeffs)
            a, w = rate_of_strain(v), vorticity_skew(v)
            grad = gradient_coeffs(grid, v.coeffs)
            worst["strain_split"] = max(worst["strain_split"], _rel(a.coeffs + w.coeffs, grad))
            val = trilinear_b0(u, u, v, p)
            worst["b0_cancellation"] = max(worst["b0_cancellation"], abs(val) / _cubic_scale_b0(u, p))
            val = trilinear_b1(u, psi, psi, p)
            worst["b1_cancellation"] = max(worst["b1_cancellation"], abs(val) / _cubic_scale_b1(u, psi, p))
        lhs = leray_project(ericksen_force(d))
        rhs = leray_project(ericksen_stress_divergence(d))
        err = sobolev_norm(lhs - rhs, 0.0, "director") / sobolev_norm(rhs, 0.0, "director")
        worst["ericksen_identity"] = max(worst["ericksen_identity"], err)
    thresholds = {"leray_idempotent": 1e-13, "leray_divergence": 1e-13, "strain_split": 1e-13,
                  "b0_cancellation": 1e-10, "b1_cancellation": 1e-10, "ericksen_identity": 1e-10}
    return [CheckResult(k, worst[k] <= thresholds[k], worst[k], thresholds[k]) for k in worst]


def gradient_check(n_modes=32, eps=(1e-4, 5e-5, 1e-5), seed=7):
    """<f(d), h> against central differences of int W; returns the halving slope."""
    grid = Grid(2, n_modes)
    d = perturbed_constant(grid, [0.6, 0.3], 0.5, seed=seed)
    h = random_vector(grid, seed + 1) * 30.0
    f, _ = ginzburg_landau_force(d)
    lin = grid.inner(f.coeffs, h.coeffs)
    errs = []
    for e in eps:
        wp = ginzburg_landau_force(d + h * e)[1]
        wm = ginzburg_landau_force(d - h * e)[1]
        errs.append(abs((wp - wm) / (2 * e) - lin))
    slope = math.log2(errs[0] / errs[1]) / math.log2(eps[0] / eps[1])
    const = errs[0] / eps[0] ** 2
    bound_ok = all(err <= 2.0 * const * e ** 2 for err, e in zip(errs, eps))
    return [
        CheckResult("gradient_slope", 1.9 <= slope <= 2.1, slope, 2.1, "(accepted range [1.9, 2.1])"),
        CheckResult("gradient_c_eps2", bound_ok, max(err / (const * e ** 2) for err, e in zip(errs, eps)), 2.0),
    ]


def coercivity_check(n_fields=100, n_modes=32, alpha=1.0, mu4=1.0, seed=11):
    """Computed constants positive and the sampled inequalities never violated."""
    grid = Grid(2, n_modes)
    rng = np.random.default_rng(seed)
    out = []
    for name in PRESETS:
        p = preset(name, alpha, mu4)
        cc = coercivity_constants(p, grid)
        a0 = p.a0_symbol.evaluate(grid)
        q = p.q_symbol.evaluate(grid)
        worst = math.inf
        for _ in range(n_fields):
            w = random_solenoidal(grid, 1.0, float(rng.uniform(-3.0, 0.0)), int(rng.integers(1 << 30)))
            lhs = grid.inner(a0 * w.coeffs, q * w.coeffs)
            rhs = cc.c_a0q * sobolev_norm(w, p.theta - p.theta2) ** 2
            worst = min(worst, (lhs - rhs) / lhs)
            lq = grid.inner(q * w.coeffs, w.coeffs)
            rq = cc.c_q * sobolev_norm(w, -p.theta2) ** 2
            worst = min(worst, (lq - rq) / lq)
        ok = cc.c_q > 0 and cc.c_a0q > 0 and worst >= -1e-12
        out.append(CheckResult(f"coercivity[{name}]", ok, worst, -1e-12,
                               f"c_q={cc.c_q:.6g} c_a0q={cc.c_a0q:.6g}"))
    return out


def io_roundtrip_check():
    grid = Grid(2, 16)
    state = SimState(random_solenoidal(grid, 1.0, -2.0, 5), perturbed_constant(grid, [1.0, 0.0], 0.2, seed=6), 0.25)
    rng = np.random.default_rng(3)
    recs = [EnergyRecord(float(i), *rng.standard_normal(14), extra={"norm_u_1": float(rng.standard_normal())})
            for i in range(5)]
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "r.csv")
        write_records_csv(recs, path)
        back = read_records_csv(path)
        csv_ok = back == recs
        spath = os.path.join(tmp, "s.bin")
        write_snapshot(state, spath)
        s2 = read_snapshot(spath)
        dev = max(_rel(s2.u.coeffs, state.u.coeffs), _rel(s2.d.coeffs, state.d.coeffs))
    return [
        CheckResult("csv_roundtrip", csv_ok, 0.0 if csv_ok else 1.0, 0.0, "(bit exact)"),
        CheckResult("snapshot_roundtrip", dev <= 1e-12 and s2.t == state.t, dev, 1e-12),
    ]


def selftest():
    """All invariant checks used by the ``selftest`` command."""
    return identity_suite() + gradient_check() + coercivity_check() + io_roundtrip_check()
