"""Ericksen-Leslie tensors and nonlinear terms.

Conventions: for a vector field v the gradient tensor is G[i, j] = d_j v_i,
A = (G + G^T)/2, omega = (G - G^T)/2 and (a (x) b)[i, j] = a_i b_j.  The
divergence of a tensor is taken row-wise, (div S)_i = sum_j d_j S[i, j].
All products are evaluated on the 3/2 padded grid.
"""
from __future__ import annotations

import numpy as np

from .coefficients import LeslieCoefficients, ModelParams
from .spectral import (
    Grid,
    SpectralField,
    dealias_coeffs,
    divergence_coeffs,
    gradient_coeffs,
    leray_coeffs,
)

# -- physical-space kernels (leading component axes) ----------------------------


def matvec(t, v):
    return np.einsum("ij...,j...->i...", t, v)


def tmatvec(t, v):
    """t^T v."""
    return np.einsum("ji...,j...->i...", t, v)


def dot(a, b):
    return np.sum(a * b, axis=0)


def outer(a, b):
    return a[:, None] * b[None, :]


def sym(g):
    return 0.5 * (g + np.swapaxes(g, 0, 1))


def skew(g):
    return 0.5 * (g - np.swapaxes(g, 0, 1))


def gl_force(d):
    """f(d) = (|d|^2 - 1) d."""
    return (dot(d, d) - 1.0) * d


def gl_density(d):
    """W(d) = (|d|^2 - 1)^2 / 4."""
    return 0.25 * (dot(d, d) - 1.0) ** 2


def leslie_stress_phys(d, a, n, leslie: LeslieCoefficients, ad=None):
    """Five-term Leslie stress from pointwise d, A_Q and N_Q."""
    if ad is None:
        ad = matvec(a, d)
    dad = dot(d, ad)
    return (
        leslie.mu1 * dad * outer(d, d)
        + leslie.mu2 * outer(n, d)
        + leslie.mu3 * outer(d, n)
        + leslie.mu5 * outer(ad, d)
        + leslie.mu6 * outer(d, ad)
    )


def b0_phys(m, gw, chi, chi_form="b00bis", w=None, gm=None):
    """(m . grad) w + chi * transpose term, given gw[i, j] = d_j w_i.

    ``b00bis``: (grad w)^T m, i.e. sum_j d_i w_j m_j.
    ``e_rel``:  sum_j d_i m_j w_j (needs w and gm).
    """
    out = matvec(gw, m)
    if chi:
        out = out + (tmatvec(gw, m) if chi_form == "b00bis" else tmatvec(gm, w))
    return out


# -- field-level helpers ----------------------------------------------------------


def _require(f: SpectralField, rank, name):
    if f.rank != rank:
        raise ValueError(f"{name} must be a {rank} field, got {f.rank}")


def _phys(f: SpectralField):
    return f.grid.to_padded(f.coeffs)


def _back(grid: Grid, phys):
    return SpectralField(grid, grid.from_padded(phys))


def _symbol(grid: Grid, spec):
    return spec.evaluate(grid)


def filtered(u: SpectralField, spec) -> SpectralField:
    return SpectralField(u.grid, _symbol(u.grid, spec) * u.coeffs)


def rate_of_strain(v: SpectralField) -> SpectralField:
    _require(v, "vector", "v")
    g = gradient_coeffs(v.grid, v.coeffs)
    return SpectralField(v.grid, sym(g))


def vorticity_skew(v: SpectralField) -> SpectralField:
    _require(v, "vector", "v")
    g = gradient_coeffs(v.grid, v.coeffs)
    return SpectralField(v.grid, skew(g))


def ginzburg_landau_force(d: SpectralField):
    """Dealiased f(d) and the potential integral of W(d)."""
    _require(d, "vector", "d")
    grid = d.grid
    dp = _phys(d)
    force = dealias_coeffs(grid, grid.from_padded(gl_force(dp)))
    return SpectralField(grid, force), grid.padded_integral(gl_density(dp))


def molecular_field(d: SpectralField) -> SpectralField:
    """rho = A1 d + f(d), with f dealiased."""
    force, _ = ginzburg_landau_force(d)
    return SpectralField(d.grid, d.grid.k2 * d.coeffs + force.coeffs)


def n_q_substituted(d: SpectralField, a_q: SpectralField, leslie: LeslieCoefficients) -> SpectralField:
    """N_Q = (A1 d + f(d) - lambda2 A_Q d) / lambda1."""
    _require(d, "vector", "d")
    _require(a_q, "tensor", "a_q")
    if leslie.lambda1 == 0:
        raise ValueError("lambda1 = 0: N_Q substitution undefined")
    grid = d.grid
    rho = molecular_field(d).coeffs
    ad = grid.from_padded(matvec(_phys(a_q), _phys(d)))
    return SpectralField(grid, (rho - leslie.lambda2 * ad) / leslie.lambda1)


def leslie_stress(d: SpectralField, a_q: SpectralField, n_q: SpectralField, leslie) -> SpectralField:
    _require(d, "vector", "d")
    _require(a_q, "tensor", "a_q")
    _require(n_q, "vector", "n_q")
    sigma = leslie_stress_phys(_phys(d), _phys(a_q), _phys(n_q), leslie)
    return _back(d.grid, sigma)


def ericksen_force(d: SpectralField) -> SpectralField:
    """R0(A1 d, d): component i is sum_k (A1 d)_k d_i(d_k), d_i the i-th partial."""
    _require(d, "vector", "d")
    grid = d.grid
    gd = grid.to_padded(gradient_coeffs(grid, d.coeffs))
    psi = grid.to_padded(grid.k2 * d.coeffs)
    return _back(grid, tmatvec(gd, psi))


def ericksen_stress_divergence(d: SpectralField) -> SpectralField:
    """-div(grad d (.) grad d), where (grad d (.) grad d)[i, j] = sum_k d_i(d_k) d_j(d_k)."""
    _require(d, "vector", "d")
    grid = d.grid
    gd = grid.to_padded(gradient_coeffs(grid, d.coeffs))
    stress = np.einsum("ki...,kj...->ij...", gd, gd)
    return SpectralField(grid, -divergence_coeffs(grid, grid.from_padded(stress)))


def b0_bar(m: SpectralField, w: SpectralField, chi: int, chi_form="b00bis") -> SpectralField:
    """P[(m . grad) w + chi (grad w)^T m], dealiased."""
    if chi not in (0, 1):
        raise ValueError(f"chi must be 0 or 1, got {chi!r}")
    _require(m, "vector", "m")
    _require(w, "vector", "w")
    grid = m.grid
    gw = grid.to_padded(gradient_coeffs(grid, w.coeffs))
    gm = grid.to_padded(gradient_coeffs(grid, m.coeffs)) if chi and chi_form == "e_rel" else None
    out = b0_phys(_phys(m), gw, chi, chi_form, w=_phys(w), gm=gm)
    c = grid.from_padded(out)
    return SpectralField(grid, dealias_coeffs(grid, leray_coeffs(grid, c)))


def b0_nonlinear(u: SpectralField, params: ModelParams) -> SpectralField:
    """B0(u, u) = B0bar(M u, Q u)."""
    _require(u, "vector", "u")
    return b0_bar(filtered(u, params.m_symbol), filtered(u, params.q_symbol), params.chi, params.chi_form)


def b1_transport(u: SpectralField, d: SpectralField, params: ModelParams) -> SpectralField:
    """B1(u, d) = (Q u . grad) d, dealiased."""
    _require(u, "vector", "u")
    _require(d, "vector", "d")
    grid = u.grid
    v = grid.to_padded(_symbol(grid, params.q_symbol) * u.coeffs)
    gd = grid.to_padded(gradient_coeffs(grid, d.coeffs))
    return SpectralField(grid, dealias_coeffs(grid, grid.from_padded(matvec(gd, v))))


def trilinear_b0(u: SpectralField, v: SpectralField, w: SpectralField, params: ModelParams) -> float:
    """<B0bar(M u, Q v), w> by padded quadrature (no projection)."""
    grid = u.grid
    m = grid.to_padded(_symbol(grid, params.m_symbol) * u.coeffs)
    qv = _symbol(grid, params.q_symbol) * v.coeffs
    gq = grid.to_padded(gradient_coeffs(grid, qv))
    gm = None
    if params.chi and params.chi_form == "e_rel":
        gm = grid.to_padded(gradient_coeffs(grid, _symbol(grid, params.m_symbol) * u.coeffs))
    b = b0_phys(m, gq, params.chi, params.chi_form, w=grid.to_padded(qv), gm=gm)
    return grid.padded_integral(dot(b, _phys(w)))


def trilinear_b1(u: SpectralField, psi: SpectralField, phi: SpectralField, params: ModelParams) -> float:
    """<(Q u . grad) psi, phi> by padded quadrature."""
    grid = u.grid
    v = grid.to_padded(_symbol(grid, params.q_symbol) * u.coeffs)
    gp = grid.to_padded(gradient_coeffs(grid, psi.coeffs))
    return grid.padded_integral(dot(matvec(gp, v), _phys(phi)))
