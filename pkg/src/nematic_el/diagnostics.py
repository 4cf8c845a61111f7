"""Energy, dissipation budget, equilibria and long-time convergence diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .coefficients import LeslieCoefficients, ModelParams, coercivity_constants
from .dynamics import SimState, System
from .operators import gl_force
from .spectral import SpectralField, dealias_coeffs, sobolev_norm

BASE_COLUMNS = (
    "t", "e_total", "kinetic", "elastic", "potential", "diss_visc", "diss_rho", "diss_mu1",
    "diss_aqd", "diss_nq", "forcing_power", "budget_residual", "norm_u_m_theta2",
    "norm_u_theta_m_theta2", "max_abs_d",
)


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    e_total: float = 0.0
    kinetic: float = 0.0
    elastic: float = 0.0
    potential: float = 0.0
    diss_visc: float = 0.0
    diss_rho: float = 0.0
    diss_mu1: float = 0.0
    diss_aqd: float = 0.0
    diss_nq: float = 0.0
    forcing_power: float = 0.0
    budget_residual: float = 0.0
    norm_u_m_theta2: float = 0.0
    norm_u_theta_m_theta2: float = 0.0
    max_abs_d: float = 0.0
    extra: dict = field(default_factory=dict)

    def row(self):
        return [getattr(self, c) for c in BASE_COLUMNS] + list(self.extra.values())


def extra_norm_name(fld, s):
    return f"norm_{fld}_{float(s):g}"


def extra_norms(state: SimState, system: System, spec):
    """Values of the configured extra norms; ``spec`` is a list of (field, s) pairs."""
    out = {}
    for fld, s in spec:
        if fld == "u":
            val = sobolev_norm(state.u, s)
        elif fld == "v":
            val = sobolev_norm(SpectralField(state.grid, system.q * state.u.coeffs), s)
        elif fld == "d":
            val = sobolev_norm(state.d, s, "director")
        else:
            raise ValueError(f"extra norm field must be u, v or d, got {fld!r}")
        out[extra_norm_name(fld, s)] = val
    return out


def max_abs(d: SpectralField) -> float:
    phys = d.to_physical()
    return float(np.sqrt(np.max(np.sum(phys * phys, axis=0))))


def record_from_terms(state: SimState, system: System, terms, extra_spec=()) -> EnergyRecord:
    p = system.params
    return EnergyRecord(
        t=state.t,
        e_total=terms.kinetic + terms.elastic + terms.potential,
        kinetic=terms.kinetic,
        elastic=terms.elastic,
        potential=terms.potential,
        diss_visc=terms.diss_visc,
        diss_rho=terms.diss_rho,
        diss_mu1=terms.diss_mu1,
        diss_aqd=terms.diss_aqd,
        diss_nq=terms.diss_nq,
        forcing_power=terms.forcing_power,
        norm_u_m_theta2=sobolev_norm(state.u, -p.theta2),
        norm_u_theta_m_theta2=sobolev_norm(state.u, p.theta - p.theta2),
        max_abs_d=max_abs(state.d),
        extra=extra_norms(state, system, extra_spec),
    )


def evaluate_record(state: SimState, system: System, extra_spec=()) -> EnergyRecord:
    terms = system.terms(state.u.coeffs, state.d.coeffs, state.t, diagnostics=True)
    return record_from_terms(state, system, terms, extra_spec)


def total_energy(state: SimState, params: ModelParams, leslie: LeslieCoefficients) -> EnergyRecord:
    """E_Q = <u, Q u>/2 + |grad d|^2/2 + int W(d); dissipation fields left at zero."""
    rec = evaluate_record(state, System(state.grid, params, leslie, check=False))
    return EnergyRecord(rec.t, rec.e_total, rec.kinetic, rec.elastic, rec.potential)


def dissipation_components(state: SimState, params: ModelParams, leslie: LeslieCoefficients,
                           forcing=None) -> EnergyRecord:
    return evaluate_record(state, System(state.grid, params, leslie, forcing, check=False))


def budget_flux(rec: EnergyRecord, leslie: LeslieCoefficients, case: int) -> float:
    """Everything in the energy law except dE/dt, moved to the left-hand side.

    Case 1: the identity  dE/dt + flux = 0.
    Case 2: the inequality dE/dt + flux <= 0.
    """
    if case == 1:
        return (rec.diss_visc + rec.diss_rho + rec.diss_mu1
                + leslie.case1_aqd_coefficient * rec.diss_aqd - rec.forcing_power)
    return (rec.diss_visc + rec.diss_mu1 - 0.75 * leslie.lambda1 * rec.diss_nq
            + leslie.case2_aqd_coefficient * rec.diss_aqd - rec.forcing_power)


def energy_budget_residual(rec_prev: EnergyRecord, rec_next: EnergyRecord, dt: float,
                           case_selector: int, leslie: LeslieCoefficients) -> float:
    """Residual of the energy law over one interval, fluxes averaged over its endpoints.

    Case 1 returns the absolute defect of the identity; Case 2 only the
    positive part (violations of the inequality).
    """
    flux = 0.5 * (budget_flux(rec_prev, leslie, case_selector) + budget_flux(rec_next, leslie, case_selector))
    defect = (rec_next.e_total - rec_prev.e_total) / dt + flux
    if case_selector == 1:
        return abs(defect)
    return max(0.0, defect)


def integrated_budget_defect(records, leslie: LeslieCoefficients, case=1) -> float:
    """E(T) - E(0) + trapezoidal integral of the flux (zero for an exact Case 1 law)."""
    t = np.array([r.t for r in records])
    flux = np.array([budget_flux(r, leslie, case) for r in records])
    integral = float(np.sum(0.5 * (flux[1:] + flux[:-1]) * np.diff(t)))
    return records[-1].e_total - records[0].e_total + integral


# -- equilibria -------------------------------------------------------------------


def _rho_coeffs(d: SpectralField):
    g = d.grid
    f = dealias_coeffs(g, g.from_padded(gl_force(g.to_padded(d.coeffs))))
    return g.k2 * d.coeffs + f


def equilibrium_residual(d: SpectralField) -> float:
    """L2 norm of A1 d + f(d)."""
    r = _rho_coeffs(d)
    return math.sqrt(d.grid.inner(r, r))


@dataclass(frozen=True)
class SteadyResult:
    d: SpectralField
    residual: float
    iterations: int
    converged: bool
    history: tuple = ()


def radial_ode_solution(r0, t):
    """Exact solution of r' = -(r^2 - 1) r."""
    t = np.asarray(t, dtype=float)
    if r0 == 0:
        return np.zeros_like(t)
    return np.sign(r0) / np.sqrt(1.0 + (1.0 / r0 ** 2 - 1.0) * np.exp(-2.0 * t))


def steady_state_solve(d0: SpectralField, tol=1e-8, max_iters=10_000, dt=0.05, scheme="lawson4",
                       record_every=1):
    """Gradient flow d_tau = -(A1 d + f(d)) until the equilibrium residual drops below tol.

    ``lawson4`` is an integrating-factor RK4 (the diffusion is integrated
    exactly); ``imex1`` is the first-order IMEX Euler step of the dynamics.
    Non-convergence is reported in the result, not raised.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if scheme not in ("lawson4", "imex1"):
        raise ValueError(f"unknown steady scheme {scheme!r}")
    g = d0.grid

    def nonlin(c):
        return -dealias_coeffs(g, g.from_padded(gl_force(g.to_padded(c))))

    e1 = np.exp(-dt * g.k2)
    e2 = np.exp(-0.5 * dt * g.k2)
    imp = 1.0 / (1.0 + dt * g.k2)
    c = dealias_coeffs(g, np.array(d0.coeffs))
    history = []
    res = equilibrium_residual(SpectralField(g, c))
    it = 0
    while res > tol and it < max_iters:
        if scheme == "imex1":
            c = (c + dt * nonlin(c)) * imp
        else:
            k1 = nonlin(c)
            k2 = nonlin(e2 * (c + 0.5 * dt * k1))
            k3 = nonlin(e2 * c + 0.5 * dt * k2)
            k4 = nonlin(e1 * c + dt * e2 * k3)
            c = e1 * c + (dt / 6.0) * (e1 * k1 + 2.0 * e2 * (k2 + k3) + k4)
        it += 1
        res = equilibrium_residual(SpectralField(g, c))
        if not math.isfinite(res):
            break
        if it % record_every == 0:
            history.append((it * dt, res))
    return SteadyResult(SpectralField(g, c), res, it, bool(res <= tol), tuple(history))


def gradient_flow_trajectory(d0: SpectralField, dt, n_steps, scheme="lawson4"):
    """States of the gradient flow at tau = 0, dt, ..., n_steps dt (no stopping test)."""
    out = [d0]
    d = d0
    for _ in range(n_steps):
        d = steady_state_solve(d, tol=1e-300, max_iters=1, dt=dt, scheme=scheme).d
        out.append(d)
    return out


# -- convergence and long-time behaviour ---------------------------------------------


def fit_decay_exponent(t, values, tail_fraction=0.5, floor=0.0):
    """Least-squares fit of log(values) = log(c) - chi log(1 + t) on the tail.

    Samples at or below ``floor`` are excluded.  Returns (chi, c, rms residual, n used).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(values, dtype=float)
    start = int(math.floor(len(t) * (1.0 - tail_fraction)))
    t, y = t[start:], y[start:]
    keep = y > floor
    t, y = t[keep], y[keep]
    if len(t) < 2:
        raise ValueError("not enough samples above the floor to fit a decay exponent")
    x = np.log1p(t)
    a = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(a, np.log(y), rcond=None)
    resid = np.log(y) - a @ coef
    return float(-coef[1]), float(math.exp(coef[0])), float(np.sqrt(np.mean(resid ** 2))), int(len(t))


def phi_series(records, system: System):
    """Phi(t) = E_Q(t) + (2 |Q|^2 / c_a0q) int_t^inf |g(s)|^2_{-theta-theta2} ds."""
    e = np.array([r.e_total for r in records])
    t = np.array([r.t for r in records])
    forcing = system.forcing
    if forcing.kind == "zero":
        return e
    if forcing.kind == "steady":
        raise ValueError("Phi is only defined for decaying (integrable) forcing")
    p = system.params
    cc = coercivity_constants(p, system.grid)
    g0 = sobolev_norm(forcing.profile, -p.theta - p.theta2)
    tails = np.array([forcing.tail_integral(s) for s in t])
    return e + (2.0 * cc.q_norm ** 2 / cc.c_a0q) * g0 ** 2 * tails


def monotone_check(t, values, tol_coeff):
    """True when values[n+1] - values[n] <= tol_coeff (t[n+1] - t[n])^2 for all n.

    Returns (ok, largest normalised increase).
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    inc = np.diff(v) / np.diff(t) ** 2
    worst = float(np.max(inc)) if len(inc) else -math.inf
    return bool(worst <= tol_coeff), worst


@dataclass(frozen=True)
class ConvergenceReport:
    chi_fit: float
    prefactor: float
    fit_residual: float
    n_fit: int
    terminal_u_norm: float
    terminal_residual: float
    phi_nonincreasing: bool
    phi_max_increase: float
    strong_mode: bool
    terminal_d_h1: float
    converged: bool


def convergence_monitor(records, steady_target: SpectralField, trajectory, system: System,
                        tail_fraction=0.5, phi_tol=None, min_records=20, floor_rel=1e-12):
    """Decay-rate fit of |d(t) - d*|_L2 and terminal diagnostics.

    ``trajectory`` is a sequence of SimState samples (snapshots).  The fit
    ignores distances below ``floor_rel`` |d*| (round-off floor).  Phi is
    checked against a per-interval increase of phi_tol * dt^2, with
    phi_tol = Phi(0) by default.
    """
    if len(trajectory) < min_records:
        raise ValueError(f"need at least {min_records} trajectory samples, got {len(trajectory)}")
    g = steady_target.grid
    ts = np.array([s.t for s in trajectory])
    dist = np.array([math.sqrt(g.inner(s.d.coeffs - steady_target.coeffs, s.d.coeffs - steady_target.coeffs))
                     for s in trajectory])
    dstar = math.sqrt(g.inner(steady_target.coeffs, steady_target.coeffs))
    try:
        chi, pref, resid, nfit = fit_decay_exponent(ts, dist, tail_fraction, floor_rel * dstar)
        converged = True
    except ValueError:
        chi, pref, resid, nfit, converged = 0.0, 0.0, math.inf, 0, False
    phi = phi_series(records, system)
    tr = np.array([r.t for r in records])
    tol = phi[0] if phi_tol is None else phi_tol
    phi_ok, phi_worst = monotone_check(tr, phi, tol)
    last = trajectory[-1]
    p = system.params
    strong = p.theta + p.theta2 >= 1 and all(np.isfinite([r.max_abs_d for r in records]))
    dd = SpectralField(g, last.d.coeffs - steady_target.coeffs)
    return ConvergenceReport(
        chi_fit=chi,
        prefactor=pref,
        fit_residual=resid,
        n_fit=nfit,
        terminal_u_norm=sobolev_norm(last.u, -p.theta2),
        terminal_residual=equilibrium_residual(last.d),
        phi_nonincreasing=phi_ok,
        phi_max_increase=phi_worst,
        strong_mode=bool(strong),
        terminal_d_h1=sobolev_norm(dd, 1.0, "director") if strong else math.nan,
        converged=converged,
    )


def absorbing_quantity(state: SimState, theta2: float) -> float:
    """|u|^2_{-theta2} + |d|^2_1, the quantity bounded by the dissipative estimate."""
    return sobolev_norm(state.u, -theta2) ** 2 + sobolev_norm(state.d, 1.0, "director") ** 2


@dataclass(frozen=True)
class BoundReport:
    bounded: bool
    radius: float
    entrance_time: float
    tail_growth: float


def dissipative_bound_detail(t, values, window=0.5, growth_tol=0.05) -> BoundReport:
    """Absorbing-ball test on a time series of |u|^2_{-theta2} + |d|^2_1.

    The tail is the last ``window`` fraction of samples and C* = 1.5 x its
    maximum.  The series is bounded when it enters the ball {<= C*} before the
    last quarter of the record and never leaves, and the last quarter does not
    exceed the maximum of the preceding tail by more than ``growth_tol``.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(v) < 8 or not np.all(np.isfinite(v)):
        return BoundReport(False, math.inf, math.inf, math.inf)
    start = int(math.floor(len(v) * (1.0 - window)))
    quarter = int(math.floor(len(v) * 0.75))
    radius = 1.5 * float(np.max(v[start:]))
    outside = np.nonzero(v > radius)[0]
    entrance_idx = 0 if len(outside) == 0 else int(outside[-1]) + 1
    entrance = float(t[entrance_idx]) if entrance_idx < len(t) else math.inf
    ref = float(np.max(v[start:quarter])) if quarter > start else float(v[start])
    growth = float(np.max(v[quarter:])) / ref - 1.0 if ref > 0 else 0.0
    bounded = entrance_idx < quarter and growth <= growth_tol
    return BoundReport(bool(bounded), radius, entrance, growth)


def dissipative_bound_check(t, values, window=0.5) -> bool:
    return dissipative_bound_detail(t, values, window).bounded


def with_residuals(records, dt_between, case, leslie):
    """Copy of ``records`` with budget_residual filled in from consecutive pairs."""
    out = [records[0]]
    for prev, nxt in zip(records[:-1], records[1:]):
        dt = nxt.t - prev.t if dt_between is None else dt_between
        out.append(replace(nxt, budget_residual=energy_budget_residual(prev, nxt, dt, case, leslie)))
    return out


def record_fields():
    return [f.name for f in fields(EnergyRecord) if f.name != "extra"]
