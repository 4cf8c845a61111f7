"""Right-hand sides, IMEX time stepping, forcing and initial data.

The velocity u (not v = Q u) is evolved.  Stiff diagonal terms are implicit:
A0 u in the momentum equation and (1/|lambda1|) A1 d in the director
equation.  Everything else is explicit and evaluated on the padded grid.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import LeslieCoefficients, ModelParams, validate_constraints
from .operators import b0_phys, dot, gl_density, gl_force, leslie_stress_phys, matvec, skew, sym, tmatvec
from .spectral import Grid, SpectralField, dealias_coeffs, divergence_coeffs, gradient_coeffs, leray_coeffs

log = logging.getLogger(__name__)

SCHEMES = ("imex1", "cnab2")


class BlowUpError(RuntimeError):
    """Raised when the state stops being finite or exceeds the blow-up threshold."""


@dataclass(frozen=True)
class SimState:
    u: SpectralField
    d: SpectralField
    t: float = 0.0

    def __post_init__(self):
        if self.u.rank != "vector" or self.d.rank != "vector":
            raise ValueError("u and d must be vector fields")
        if self.u.grid != self.d.grid:
            raise ValueError("u and d live on different grids")
        if self.t < 0:
            raise ValueError("time must be non-negative")

    @property
    def grid(self):
        return self.u.grid


@dataclass(frozen=True)
class StepReport:
    dt_used: float
    max_abs_d: float
    cfl_estimate: float
    divergence_residual: float


@dataclass(frozen=True)
class ForcingSpec:
    """g(t) = 0, g0, or g0 (1 + t)^-(1 + delta/2)."""

    kind: str = "zero"
    profile: SpectralField | None = None
    delta: float = 0.5

    def __post_init__(self):
        if self.kind not in ("zero", "steady", "decaying"):
            raise ValueError(f"unknown forcing kind {self.kind!r}")
        if self.kind != "zero":
            if self.profile is None or self.profile.rank != "vector":
                raise ValueError("forcing profile must be a vector field")
            p = self.profile
            div = np.max(np.abs(divergence_coeffs(p.grid, p.coeffs)))
            mean = np.max(np.abs(p.coeffs[:, p.grid.mean_mode]))
            scale = max(np.max(np.abs(p.coeffs)), 1e-300)
            if div > 1e-12 * scale * p.grid.n_modes or mean > 1e-14 * scale:
                raise ValueError("forcing profile must be divergence-free with zero mean")
        if self.kind == "decaying" and not 0 < self.delta < 1:
            raise ValueError(f"decaying forcing needs delta in (0, 1), got {self.delta}")

    def amplitude(self, t):
        if self.kind == "zero":
            return 0.0
        if self.kind == "steady":
            return 1.0
        return (1.0 + t) ** (-(1.0 + 0.5 * self.delta))

    def tail_integral(self, t):
        """int_t^inf amplitude(s)^2 ds, finite only for decaying forcing."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "steady":
            return math.inf
        return (1.0 + t) ** (-(1.0 + self.delta)) / (1.0 + self.delta)


def forcing_eval(spec: ForcingSpec, t: float, grid: Grid | None = None) -> SpectralField:
    if spec.kind == "zero":
        if grid is None:
            raise ValueError("zero forcing needs a grid to build the zero field")
        return SpectralField.zeros(grid, "vector")
    return spec.profile * spec.amplitude(t)


# -- fused evaluation --------------------------------------------------------------


@dataclass
class Terms:
    """Explicit right-hand sides at one state plus the energy-budget ingredients."""

    rhs_u: np.ndarray
    rhs_d: np.ndarray
    v_hat: np.ndarray
    rho_hat: np.ndarray
    max_v: float
    kinetic: float = 0.0
    elastic: float = 0.0
    potential: float = 0.0
    diss_visc: float = 0.0
    diss_rho: float = 0.0
    diss_mu1: float = 0.0
    diss_aqd: float = 0.0
    diss_nq: float = 0.0
    nq_aqd: float = 0.0
    forcing_power: float = 0.0
    parts: dict = field(default_factory=dict)


class System:
    """Discretised model: grid, operators and coefficients bound together."""

    def __init__(self, grid: Grid, params: ModelParams, leslie: LeslieCoefficients,
                 forcing: ForcingSpec | None = None, check=True):
        if leslie.lambda1 >= 0:
            raise ValueError(f"lambda1 = {leslie.lambda1} violates lambda1 < 0")
        if check:
            report = validate_constraints(leslie, params.mu4)
            if not report.passed:
                raise ValueError(f"coefficient constraints violated:\n{report}")
        self.grid = grid
        self.params = params
        self.leslie = leslie
        self.forcing = forcing or ForcingSpec()
        self.q = params.q_symbol.evaluate(grid)
        self.msym = params.m_symbol.evaluate(grid)
        self.a0 = params.a0_symbol.evaluate(grid)
        self.a1 = grid.k2
        self.d_implicit = grid.k2 / abs(leslie.lambda1)
        self._m_is_u = params.theta1 == 0
        self._m_is_v = params.theta1 == params.theta2

    # forcing in coefficient form
    def g_hat(self, t):
        if self.forcing.kind == "zero":
            return None
        return self.forcing.profile.coeffs * self.forcing.amplitude(t)

    def terms(self, u_hat, d_hat, t=0.0, diagnostics=False, keep_parts=False) -> Terms:
        g, dim, lam = self.grid, self.grid.dim, self.leslie
        l1, l2 = lam.lambda1, lam.lambda2
        v_hat = self.q * u_hat
        gv_hat = gradient_coeffs(g, v_hat)
        gd_hat = gradient_coeffs(g, d_hat)
        a1d_hat = self.a1 * d_hat
        blocks = [v_hat, gv_hat.reshape((dim * dim,) + g.spectral_shape), d_hat,
                  gd_hat.reshape((dim * dim,) + g.spectral_shape), a1d_hat]
        need_m = not (self._m_is_v)
        if need_m:
            m_hat = u_hat if self._m_is_u else self.msym * u_hat
            blocks.append(m_hat)
        chi_erel = self.params.chi and self.params.chi_form == "e_rel"
        if chi_erel:
            blocks.append(gradient_coeffs(g, m_hat if need_m else v_hat).reshape((dim * dim,) + g.spectral_shape))
        phys = g.to_padded(np.concatenate(blocks, axis=0))
        i = 0
        v = phys[i:i + dim]; i += dim
        gv = phys[i:i + dim * dim].reshape((dim, dim) + phys.shape[1:]); i += dim * dim
        d = phys[i:i + dim]; i += dim
        gd = phys[i:i + dim * dim].reshape((dim, dim) + phys.shape[1:]); i += dim * dim
        a1d = phys[i:i + dim]; i += dim
        m = v
        if need_m:
            m = phys[i:i + dim]; i += dim
        gm = None
        if chi_erel:
            gm = phys[i:i + dim * dim].reshape((dim, dim) + phys.shape[1:]); i += dim * dim

        f_hat = dealias_coeffs(g, g.from_padded(gl_force(d)))
        rho_hat = a1d_hat + f_hat
        rho = g.to_padded(rho_hat)

        a = sym(gv)
        w = skew(gv)
        ad = matvec(a, d)
        n = (rho - l2 * ad) / l1
        sigma = leslie_stress_phys(d, a, n, lam, ad)
        b0 = b0_phys(m, gv, self.params.chi, self.params.chi_form, w=v, gm=gm)
        r0 = tmatvec(gd, a1d)
        transport = matvec(gd, v)
        dexp = -transport + matvec(w, d) - (l2 / l1) * ad

        out = g.from_padded(np.concatenate(
            [r0 - b0, sigma.reshape((dim * dim,) + sigma.shape[2:]), dexp], axis=0))
        mom = out[:dim]
        sig_hat = out[dim:dim + dim * dim].reshape((dim, dim) + g.spectral_shape)
        rhs_u = mom + divergence_coeffs(g, sig_hat)
        g_hat = self.g_hat(t)
        if g_hat is not None:
            rhs_u = rhs_u + g_hat
        rhs_u = dealias_coeffs(g, leray_coeffs(g, rhs_u))
        rhs_d = dealias_coeffs(g, out[dim + dim * dim:] + f_hat / l1)

        terms = Terms(rhs_u, rhs_d, v_hat, rho_hat, float(np.sqrt(np.max(dot(v, v)))))
        if diagnostics:
            dad = dot(d, ad)
            terms.kinetic = 0.5 * g.inner(u_hat, v_hat)
            terms.elastic = 0.5 * g.inner(d_hat, a1d_hat)
            terms.potential = g.padded_integral(gl_density(d))
            terms.diss_visc = g.inner(self.a0 * u_hat, v_hat)
            terms.diss_rho = -g.inner(rho_hat, rho_hat) / l1
            terms.diss_mu1 = lam.mu1 * g.padded_integral(dad * dad)
            terms.diss_aqd = g.padded_integral(dot(ad, ad))
            terms.diss_nq = g.padded_integral(dot(n, n))
            terms.nq_aqd = g.padded_integral(dot(n, ad))
            terms.forcing_power = 0.0 if g_hat is None else g.inner(g_hat, v_hat)
        if keep_parts:
            terms.parts = {
                "b0": dealias_coeffs(g, leray_coeffs(g, g.from_padded(b0))),
                "r0": dealias_coeffs(g, leray_coeffs(g, g.from_padded(r0))),
                "div_sigma": dealias_coeffs(g, leray_coeffs(g, divergence_coeffs(g, sig_hat))),
                "sigma": sig_hat,
                "b1": dealias_coeffs(g, g.from_padded(transport)),
                "n_q": g.from_padded(n),
                "f": f_hat,
            }
        return terms

    # -- stepping ---------------------------------------------------------------
    def implicit_u(self, dt):
        return 1.0 / (1.0 + dt * self.a0)

    def implicit_d(self, dt):
        return 1.0 / (1.0 + dt * self.d_implicit)

    def project_u(self, u_hat):
        return dealias_coeffs(self.grid, leray_coeffs(self.grid, u_hat))


def _as_system(system_or_params, leslie=None, forcing=None, grid=None):
    if isinstance(system_or_params, System):
        return system_or_params
    return System(grid, system_or_params, leslie, forcing)


def rhs_velocity(state: SimState, params: ModelParams, leslie: LeslieCoefficients,
                 forcing: ForcingSpec | None = None, t=None) -> SpectralField:
    """P[-B0(u, u) + R0(A1 d, d) + div sigma_Q + g]; A0 u is left to the stepper."""
    sysm = System(state.grid, params, leslie, forcing, check=False)
    tt = state.t if t is None else t
    return SpectralField(state.grid, sysm.terms(state.u.coeffs, state.d.coeffs, tt).rhs_u)


def rhs_director(state: SimState, params: ModelParams, leslie: LeslieCoefficients) -> SpectralField:
    """-B1(u, d) + omega_Q d - (lambda2/lambda1) A_Q d + f(d)/lambda1; A1 d is left to the stepper."""
    sysm = System(state.grid, params, leslie, check=False)
    return SpectralField(state.grid, sysm.terms(state.u.coeffs, state.d.coeffs, state.t).rhs_d)


class Stepper:
    """Advances a state; holds the explicit-term history needed by CNAB2."""

    def __init__(self, system: System, dt: float, scheme="imex1", blowup_threshold=1e8):
        if not dt > 0:
            raise ValueError("dt must be positive")
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        self.system = system
        self.dt = dt
        self.scheme = scheme
        self.blowup_threshold = blowup_threshold
        self._prev = None
        self._iu = {1: system.implicit_u(dt)}
        self._id = {1: system.implicit_d(dt)}
        if scheme == "cnab2":
            self._cn_u = (1 - 0.5 * dt * system.a0) / (1 + 0.5 * dt * system.a0)
            self._cn_d = (1 - 0.5 * dt * system.d_implicit) / (1 + 0.5 * dt * system.d_implicit)
            self._cn_iu = dt / (1 + 0.5 * dt * system.a0)
            self._cn_id = dt / (1 + 0.5 * dt * system.d_implicit)

    def reset(self):
        self._prev = None

    def step(self, state: SimState, terms: Terms | None = None):
        sysm, dt = self.system, self.dt
        u, d = state.u.coeffs, state.d.coeffs
        if terms is None:
            terms = sysm.terms(u, d, state.t)
        nu, nd = terms.rhs_u, terms.rhs_d
        if self.scheme == "imex1" or self._prev is None:
            un = (u + dt * nu) * self._iu[1]
            dn = (d + dt * nd) * self._id[1]
        else:
            pu, pd = self._prev
            un = self._cn_u * u + self._cn_iu * (1.5 * nu - 0.5 * pu)
            dn = self._cn_d * d + self._cn_id * (1.5 * nd - 0.5 * pd)
        if self.scheme == "cnab2":
            self._prev = (nu, nd)
        un = sysm.project_u(un)
        dn = dealias_coeffs(sysm.grid, dn)
        t_new = state.t + dt
        amp = max(np.max(np.abs(un)), np.max(np.abs(dn)))
        if not np.isfinite(amp) or amp > self.blowup_threshold:
            raise BlowUpError(f"state blew up at t = {t_new:.6g} (max coefficient {amp:.3g})")
        g = sysm.grid
        d_phys = g.inverse(dn)
        max_abs_d = float(np.sqrt(np.max(np.sum(d_phys * d_phys, axis=0))))
        cfl = terms.max_v * dt * g.n_modes / g.length
        if cfl > 0.5:
            log.warning("CFL estimate %.3g exceeds 0.5 at t = %.6g", cfl, state.t)
        unorm = math.sqrt(g.inner(un, un))
        div = np.max(np.abs(divergence_coeffs(g, un))) if unorm > 0 else 0.0
        div_res = float(div * math.sqrt(g.volume) / unorm) if unorm > 0 else 0.0
        new = SimState(SpectralField(g, un), SpectralField(g, dn), t_new)
        return new, StepReport(dt, max_abs_d, cfl, div_res)


def step_imex(state: SimState, dt: float, params: ModelParams, leslie: LeslieCoefficients,
              forcing: ForcingSpec | None = None, scheme="imex1"):
    """One first-order IMEX Euler step (``cnab2`` starts with an Euler step)."""
    sysm = System(state.grid, params, leslie, forcing, check=False)
    return Stepper(sysm, dt, scheme).step(state)


def max_principle_monitor(d: SpectralField, bound: float, tol=1e-6):
    """Maximum of |d| over the physical grid and whether it stays below bound (1 + tol)."""
    phys = d.to_physical()
    max_abs = float(np.sqrt(np.max(np.sum(phys * phys, axis=0))))
    return max_abs <= bound * (1 + tol), max_abs


# -- initial data ----------------------------------------------------------------


def _random_coeffs(grid: Grid, rng, ncomp, slope, kmax=None):
    shape = (ncomp,) + grid.shape
    noise = rng.standard_normal(shape)
    c = grid.forward(noise)
    kmag = np.where(grid.k2 > 0, grid.kmag, 1.0)
    env = np.where(grid.k2 > 0, kmag ** slope, 0.0)
    if kmax is not None:
        env = np.where(grid.kmag <= kmax * 2 * np.pi / grid.length, env, 0.0)
    return dealias_coeffs(grid, c * env)


def taylor_green(grid: Grid, amplitude=1.0) -> SpectralField:
    x = grid.coords()
    s = 2 * np.pi / grid.length
    comps = [amplitude * np.sin(s * x[0]) * np.cos(s * x[1]), -amplitude * np.cos(s * x[0]) * np.sin(s * x[1])]
    if grid.dim == 3:
        comps = [c * np.cos(s * x[2]) for c in comps] + [np.zeros(grid.shape)]
    return SpectralField(grid, leray_coeffs(grid, grid.forward(np.stack(comps))))


def random_solenoidal(grid: Grid, amplitude=1.0, spectrum_slope=-3.0, seed=0, kmax=None) -> SpectralField:
    """Divergence-free, zero-mean field with |u_k| ~ |k|^slope and L2 rms ``amplitude``."""
    rng = np.random.default_rng(seed)
    c = leray_coeffs(grid, _random_coeffs(grid, rng, grid.dim, spectrum_slope, kmax))
    rms = math.sqrt(grid.inner(c, c) / grid.volume)
    return SpectralField(grid, c * (amplitude / rms if rms > 0 else 0.0))


def constant_director(grid: Grid, vector) -> SpectralField:
    vec = np.asarray(vector, dtype=float)
    if vec.shape != (grid.dim,):
        raise ValueError(f"director vector needs {grid.dim} components")
    phys = vec.reshape((grid.dim,) + (1,) * grid.dim) * np.ones((grid.dim,) + grid.shape)
    return SpectralField(grid, grid.forward(phys))


def perturbed_constant(grid: Grid, vector, amplitude=0.1, seed=0, spectrum_slope=-3.0,
                       kmax=None, max_abs=None) -> SpectralField:
    """vector + amplitude * smooth zero-mean perturbation (L2 rms of the perturbation).

    With ``max_abs`` the whole field is rescaled so that max |d| over the grid equals it.
    """
    rng = np.random.default_rng(seed)
    c = _random_coeffs(grid, rng, grid.dim, spectrum_slope, kmax)
    rms = math.sqrt(grid.inner(c, c) / grid.volume)
    c = constant_director(grid, vector).coeffs + c * (amplitude / rms if rms > 0 else 0.0)
    if max_abs is not None:
        phys = grid.inverse(c)
        c = c * (max_abs / float(np.sqrt(np.max(np.sum(phys * phys, axis=0)))))
    return SpectralField(grid, c)


def random_unit(grid: Grid, seed=0, spectrum_slope=-3.0, kmax=None) -> SpectralField:
    """Smooth random field normalised pointwise to unit length, then band limited."""
    rng = np.random.default_rng(seed)
    c = _random_coeffs(grid, rng, grid.dim, spectrum_slope, kmax)
    c[:, grid.mean_mode] = rng.standard_normal(grid.dim)[:, None] * 0.3
    phys = grid.inverse(c)
    norm = np.sqrt(np.sum(phys * phys, axis=0))
    phys = phys / np.maximum(norm, 1e-12)
    return SpectralField(grid, dealias_coeffs(grid, grid.forward(phys)))


def state_distance(a: SimState, b: SimState, theta2: float) -> float:
    """Metric of V^-theta2 x W^1 between two states."""
    from .spectral import sobolev_norm

    du = a.u - b.u
    dd = a.d - b.d
    return math.sqrt(sobolev_norm(du, -theta2) ** 2 + sobolev_norm(dd, 1.0, "director") ** 2)


def integrate(system: System, state: SimState, dt: float, t_end: float, scheme="imex1"):
    """Plain integration to t_end (no diagnostics)."""
    stepper = Stepper(system, dt, scheme)
    nsteps = int(round((t_end - state.t) / dt))
    for _ in range(nsteps):
        state, _ = stepper.step(state)
    return state


def continuous_dependence_probe(system: System, state0: SimState, perturbation: SimState,
                                eps=1e-4, t_end=1.0, dt=1e-3, scheme="imex1"):
    """Final distances from ICs displaced by eps and eps/2 along ``perturbation``.

    Returns (distance_eps, distance_half, ratio).
    """
    base = integrate(system, state0, dt, t_end, scheme)
    dists = []
    for e in (eps, 0.5 * eps):
        pu = system.project_u(state0.u.coeffs + e * perturbation.u.coeffs)
        pd = dealias_coeffs(system.grid, state0.d.coeffs + e * perturbation.d.coeffs)
        s0 = SimState(SpectralField(system.grid, pu), SpectralField(system.grid, pd), state0.t)
        dists.append(state_distance(integrate(system, s0, dt, t_end, scheme), base, system.params.theta2))
    return dists[0], dists[1], dists[0] / dists[1]
