"""Fourier-space field arithmetic on the periodic torus [0, L)^dim.

Fields are stored as half-spectrum coefficients (real-FFT layout: the last
axis keeps only the non-negative wavenumbers), normalised so that

    f(x) = sum_k  f_k exp(i k.x),     k = (2 pi / L) * integer vector.

Conjugate symmetry f_{-k} = conj(f_k) is therefore structural except in the
k_last = 0 and Nyquist planes.  Nyquist modes (index -N/2 on an axis) have no
unique real interpolant; odd derivatives, the Leray projector and the padded
product evaluation all drop them.

Nonlinear products are evaluated on a grid padded to 3N/2 points per axis,
which is alias free for quadratic products.  The state is kept inside the
2/3-rule band ``|k_a| <= N/3``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

RANKS = ("scalar", "vector", "tensor")


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the torus with ``n_modes`` points per axis."""

    dim: int
    n_modes: int
    length: float = 2 * np.pi

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n_modes < 8 or self.n_modes % 2:
            raise ValueError(f"n_modes must be an even integer >= 8, got {self.n_modes}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")

    # -- sizes -------------------------------------------------------------
    @property
    def shape(self):
        return (self.n_modes,) * self.dim

    @property
    def spectral_shape(self):
        return (self.n_modes,) * (self.dim - 1) + (self.n_modes // 2 + 1,)

    @property
    def padded_size(self):
        return 3 * self.n_modes // 2

    @property
    def padded_shape(self):
        return (self.padded_size,) * self.dim

    @property
    def volume(self):
        return self.length ** self.dim

    @property
    def axes(self):
        """Trailing spatial axes for an array with leading component axes."""
        return tuple(range(-self.dim, 0))

    # -- wavenumbers -------------------------------------------------------
    @cached_property
    def kint(self):
        """Integer wavenumbers, shape (dim, *spectral_shape)."""
        n = self.n_modes
        full = np.fft.fftfreq(n, 1.0 / n)
        half = np.arange(n // 2 + 1, dtype=float)
        axes = [full] * (self.dim - 1) + [half]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def k(self):
        return self.kint * (2 * np.pi / self.length)

    @cached_property
    def nyquist(self):
        """True on every mode touching a Nyquist index."""
        return np.any(np.abs(self.kint) == self.n_modes // 2, axis=0)

    @cached_property
    def k_deriv(self):
        """Wavenumbers for odd derivatives; Nyquist entries zeroed."""
        kd = self.k.copy()
        kd[np.abs(self.kint) == self.n_modes // 2] = 0.0
        return kd

    @cached_property
    def k2(self):
        return np.sum(self.k ** 2, axis=0)

    @cached_property
    def kmag(self):
        return np.sqrt(self.k2)

    @cached_property
    def mean_mode(self):
        return np.all(self.kint == 0, axis=0)

    @cached_property
    def dealias_mask(self):
        """2/3 rule: keep modes with every |k_a| <= N/3."""
        return np.all(3 * np.abs(self.kint) <= self.n_modes, axis=0)

    @cached_property
    def weights(self):
        """Multiplicity of each stored half-spectrum mode in the full spectrum."""
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        w[..., -1] = 1.0
        return w

    @cached_property
    def _blocks(self):
        # (source slices on N layout, target slices on M layout); Nyquist skipped
        n, m = self.n_modes, self.padded_size
        h = n // 2
        per_axis = [((slice(0, h), slice(0, h)), (slice(h + 1, n), slice(m - h + 1, m)))] * (
            self.dim - 1
        )
        per_axis.append(((slice(0, h), slice(0, h)),))
        blocks = []
        for combo in itertools.product(*per_axis):
            src = tuple(c[0] for c in combo)
            dst = tuple(c[1] for c in combo)
            blocks.append(((Ellipsis,) + src, (Ellipsis,) + dst))
        return blocks

    def coords(self, padded=False):
        n = self.padded_size if padded else self.n_modes
        x = np.arange(n) * (self.length / n)
        return np.meshgrid(*([x] * self.dim), indexing="ij")

    # -- array level transforms ---------------------------------------------
    def forward(self, phys):
        return sfft.rfftn(phys, axes=self.axes, norm="forward")

    def inverse(self, coeffs):
        return sfft.irfftn(coeffs, s=self.shape, axes=self.axes, norm="forward")

    def pad(self, coeffs):
        lead = coeffs.shape[: coeffs.ndim - self.dim]
        m = self.padded_size
        out = np.zeros(lead + (m,) * (self.dim - 1) + (m // 2 + 1,), dtype=complex)
        for src, dst in self._blocks:
            out[dst] = coeffs[src]
        return out

    def truncate(self, padded_coeffs):
        lead = padded_coeffs.shape[: padded_coeffs.ndim - self.dim]
        out = np.zeros(lead + self.spectral_shape, dtype=complex)
        for src, dst in self._blocks:
            out[src] = padded_coeffs[dst]
        return out

    def to_padded(self, coeffs):
        """Physical values on the 3/2 padded grid."""
        return sfft.irfftn(self.pad(coeffs), s=self.padded_shape, axes=self.axes, norm="forward")

    def from_padded(self, phys):
        """Coefficients (N layout) of data sampled on the padded grid."""
        return self.truncate(sfft.rfftn(phys, axes=self.axes, norm="forward"))

    # -- array level reductions ---------------------------------------------
    def inner(self, a, b):
        """Sum over components and modes of L^dim * Re(a conj b), full-spectrum weighted."""
        prod = np.real(a * np.conj(b))
        if prod.ndim > self.dim:
            prod = prod.reshape((-1,) + self.spectral_shape).sum(axis=0)
        return float(self.volume * np.sum(self.weights * prod))

    def weighted_norm2(self, coeffs, weight):
        amp = np.abs(coeffs) ** 2
        if amp.ndim > self.dim:
            amp = amp.reshape((-1,) + self.spectral_shape).sum(axis=0)
        return float(self.volume * np.sum(self.weights * weight * amp))

    def padded_integral(self, phys):
        """Quadrature of padded-grid samples (sums leading components)."""
        return float(np.sum(phys) * self.volume / self.padded_size ** self.dim)


def _rank_of(shape, grid: Grid, spectral=True):
    tail = grid.spectral_shape if spectral else grid.shape
    lead = tuple(shape[: len(shape) - grid.dim])
    if tuple(shape[len(shape) - grid.dim:]) != tail:
        raise ValueError(f"array shape {shape} does not match grid {tail}")
    if lead == ():
        return "scalar"
    if lead == (grid.dim,):
        return "vector"
    if lead == (grid.dim, grid.dim):
        return "tensor"
    raise ValueError(f"cannot infer rank from leading shape {lead}")


class SpectralField:
    """Immutable Fourier representation of a real scalar, vector or tensor field."""

    __slots__ = ("grid", "coeffs", "rank")

    def __init__(self, grid: Grid, coeffs, rank=None):
        coeffs = np.array(coeffs, dtype=complex)
        inferred = _rank_of(coeffs.shape, grid)
        if rank is not None and rank != inferred:
            raise ValueError(f"coefficient shape implies rank {inferred!r}, not {rank!r}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("non-finite spectral coefficients")
        coeffs.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "rank", inferred)

    def __setattr__(self, name, value):
        raise AttributeError("SpectralField is immutable")

    @classmethod
    def zeros(cls, grid: Grid, rank="scalar"):
        lead = {"scalar": (), "vector": (grid.dim,), "tensor": (grid.dim, grid.dim)}[rank]
        return cls(grid, np.zeros(lead + grid.spectral_shape, dtype=complex))

    @classmethod
    def from_physical(cls, grid: Grid, data):
        return forward(grid, data)

    def to_physical(self):
        return inverse(self)

    def coefficient(self, k, component=()):
        """Coefficient of integer wavevector ``k`` (any sign), via conjugate symmetry."""
        n = self.grid.n_modes
        k = tuple(int(v) for v in k)
        if len(k) != self.grid.dim or any(not -n // 2 <= v < n // 2 for v in k):
            raise ValueError(f"wavevector {k} outside the grid band")
        comp = self.coeffs[component]
        if k[-1] >= 0:
            return complex(comp[tuple(v % n for v in k[:-1]) + (k[-1],)])
        mk = tuple((-v) % n for v in k[:-1]) + (-k[-1],)
        return complex(np.conj(comp[mk]))

    def _same(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.grid != self.grid or other.rank != self.rank:
            raise ValueError("fields live on different grids or have different ranks")
        return other

    def __add__(self, other):
        other = self._same(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        other = self._same(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar):
        if not np.isscalar(scalar) or np.iscomplexobj(scalar):
            return NotImplemented
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __getitem__(self, idx):
        """Component access; returns a lower-rank field."""
        return SpectralField(self.grid, self.coeffs[idx])

    def __repr__(self):
        return f"SpectralField(rank={self.rank!r}, dim={self.grid.dim}, N={self.grid.n_modes})"


# -- transforms ----------------------------------------------------------------

def forward(grid: Grid, data) -> SpectralField:
    data = np.asarray(data)
    if np.iscomplexobj(data):
        raise ValueError("physical data must be real")
    _rank_of(data.shape, grid, spectral=False)
    if not np.all(np.isfinite(data)):
        raise ValueError("non-finite physical data")
    return SpectralField(grid, grid.forward(data.astype(float)))


def inverse(field: SpectralField):
    return field.grid.inverse(field.coeffs)


def transform_pair(value, grid: Grid | None = None):
    """Physical array -> SpectralField, or SpectralField -> physical array."""
    if isinstance(value, SpectralField):
        return inverse(value)
    if grid is None:
        raise ValueError("a grid is required to transform physical data")
    return forward(grid, value)


# -- linear operators ----------------------------------------------------------

def spectral_derivative(f: SpectralField, axis: int) -> SpectralField:
    g = f.grid
    if not 0 <= axis < g.dim:
        raise ValueError(f"axis {axis} out of range for dim {g.dim}")
    return SpectralField(g, 1j * g.k_deriv[axis] * f.coeffs)


def gradient_coeffs(grid: Grid, coeffs):
    """Append a derivative axis: out[..., j, :] = d/dx_j coeffs[...]."""
    return 1j * grid.k_deriv * coeffs[(Ellipsis, None) + (slice(None),) * grid.dim]


def gradient(f: SpectralField) -> SpectralField:
    """Scalar -> vector; vector v -> tensor G[i, j] = d_j v_i."""
    if f.rank == "tensor":
        raise ValueError("gradient of a tensor field is not supported")
    return SpectralField(f.grid, gradient_coeffs(f.grid, f.coeffs))


def divergence_coeffs(grid: Grid, coeffs):
    """Contract the last component axis with the derivative (row-wise for tensors)."""
    return np.sum(1j * grid.k_deriv * coeffs, axis=coeffs.ndim - grid.dim - 1)


def divergence(f: SpectralField) -> SpectralField:
    if f.rank == "scalar":
        raise ValueError("divergence needs a vector or tensor field")
    return SpectralField(f.grid, divergence_coeffs(f.grid, f.coeffs))


def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, -f.grid.k2 * f.coeffs)


def leray_coeffs(grid: Grid, coeffs):
    k = grid.k_deriv
    k2 = np.sum(k * k, axis=0)
    safe = np.where(k2 > 0, k2, 1.0)
    kdotu = np.sum(k * coeffs, axis=0)
    out = coeffs - k * (kdotu / safe)
    out[:, k2 == 0] = 0.0
    out[:, grid.nyquist] = 0.0
    return out


def leray_project(vf: SpectralField) -> SpectralField:
    """L2-orthogonal projection onto zero-mean divergence-free fields."""
    if vf.rank != "vector":
        raise ValueError("leray_project needs a vector field")
    return SpectralField(vf.grid, leray_coeffs(vf.grid, vf.coeffs))


def dealias_coeffs(grid: Grid, coeffs):
    return coeffs * grid.dealias_mask


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, dealias_coeffs(f.grid, f.coeffs))


# -- multipliers ---------------------------------------------------------------

@dataclass(frozen=True)
class SymbolSpec:
    """A real, even Fourier multiplier.

    ``kind`` is one of ``lambda_pow`` (|k|^s, mean excluded), ``a0``
    (mu4 |k|^(2 theta) (1 + alpha^2 |k|^2)^(-filter)), ``helmholtz``
    ((1 + alpha^2 |k|^2)^(-s)), ``inv_helmholtz`` and ``a1_pow`` (|k|^(2 s)).
    """

    kind: str
    power: float
    alpha: float = 1.0
    mu4: float = 1.0
    filter_power: float = 0.0

    def __post_init__(self):
        if self.kind not in ("lambda_pow", "a0", "helmholtz", "inv_helmholtz", "a1_pow"):
            raise ValueError(f"unknown symbol kind {self.kind!r}")

    @property
    def singular_at_zero(self):
        return self.kind in ("lambda_pow", "a1_pow") and self.power < 0

    def evaluate(self, grid: Grid):
        k2 = grid.k2
        if self.kind in ("lambda_pow", "a1_pow"):
            expo = self.power / 2 if self.kind == "lambda_pow" else self.power
            safe = np.where(k2 > 0, k2, 1.0)
            out = safe ** expo
            if self.kind == "lambda_pow" or self.power != 0:
                out = np.where(k2 > 0, out, 0.0)
            return out
        if self.kind == "a0":
            safe = np.where(k2 > 0, k2, 1.0)
            out = self.mu4 * safe ** self.power * (1 + self.alpha ** 2 * k2) ** (-self.filter_power)
            return np.where(k2 > 0, out, 0.0 if self.power > 0 else out)
        sign = -1.0 if self.kind == "helmholtz" else 1.0
        return (1 + self.alpha ** 2 * k2) ** (sign * self.power)


def lambda_pow(s):
    return SymbolSpec("lambda_pow", s)


def a0(theta, mu4, alpha=1.0, filter_power=0.0):
    return SymbolSpec("a0", theta, alpha=alpha, mu4=mu4, filter_power=filter_power)


def helmholtz(vartheta, alpha):
    return SymbolSpec("helmholtz", vartheta, alpha=alpha)


def inv_helmholtz(vartheta, alpha):
    return SymbolSpec("inv_helmholtz", vartheta, alpha=alpha)


def a1_pow(s):
    return SymbolSpec("a1_pow", s)


def _has_mean(f: SpectralField, rel=1e-12):
    """True when the mean mode is above round-off relative to the field."""
    scale = float(np.max(np.abs(f.coeffs))) if f.coeffs.size else 0.0
    return float(np.max(np.abs(f.coeffs[..., f.grid.mean_mode]))) > rel * scale


def apply_multiplier(f: SpectralField, symbol: SymbolSpec) -> SpectralField:
    if symbol.singular_at_zero and _has_mean(f):
        raise ValueError(f"{symbol.kind}({symbol.power}) needs a field with zero mean mode")
    return SpectralField(f.grid, symbol.evaluate(f.grid) * f.coeffs)


# -- norms and pairings ----------------------------------------------------------

def sobolev_norm(f: SpectralField, s: float, convention="velocity") -> float:
    """H^s norm normalised so that s = 0 gives the L2 norm over the torus.

    ``velocity``: sum over k != 0 of |k|^(2s) |f_k|^2 (mean mode must vanish
    when s < 0).  ``director``: shifted weight (1 + |k|^2)^s over all k.
    """
    g = f.grid
    if convention == "velocity":
        if s < 0 and _has_mean(f):
            raise ValueError("negative-order velocity norm needs zero mean mode")
        safe = np.where(g.k2 > 0, g.k2, 1.0)
        weight = np.where(g.k2 > 0, safe ** s, 0.0)
    elif convention == "director":
        weight = (1 + g.k2) ** s
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return float(np.sqrt(g.weighted_norm2(f.coeffs, weight)))


def inner_product(f: SpectralField, g: SpectralField) -> float:
    """Integral over the torus of f . g (Parseval)."""
    if f.grid != g.grid or f.rank != g.rank:
        raise ValueError("inner_product needs fields of equal grid and rank")
    return f.grid.inner(f.coeffs, g.coeffs)


# -- products ---------------------------------------------------------------------

_PRODUCT_KINDS = {
    ("scalar", "scalar"): ("scale",),
    ("scalar", "vector"): ("scale",),
    ("scalar", "tensor"): ("scale",),
    ("vector", "scalar"): ("scale",),
    ("tensor", "scalar"): ("scale",),
    ("vector", "vector"): ("dot", "outer"),
    ("tensor", "vector"): ("matvec",),
    ("tensor", "tensor"): ("contract", "matmul"),
}


def _physical_product(a, b, kind):
    if kind == "scale":
        return a * b
    if kind == "dot":
        return np.sum(a * b, axis=0)
    if kind == "outer":
        return a[:, None] * b[None, :]
    if kind == "matvec":
        return np.einsum("ij...,j...->i...", a, b)
    if kind == "contract":
        return np.einsum("ij...,ij...->...", a, b)
    return np.einsum("ij...,jk...->ik...", a, b)


def pointwise_product(f: SpectralField, g: SpectralField, kind=None, pad=True) -> SpectralField:
    """Product of two fields evaluated in physical space.

    ``kind`` selects the contraction for vector/tensor operands (``dot``,
    ``outer``, ``matvec``, ``contract``, ``matmul``).  With ``pad`` the
    operands are sampled on the 3/2 padded grid, which removes aliasing of
    quadratic products; ``pad=False`` multiplies on the native grid.
    """
    if f.grid != g.grid:
        raise ValueError("operands live on different grids")
    ra, rb = f.rank, g.rank
    if (ra, rb) not in _PRODUCT_KINDS:
        raise ValueError(f"incompatible ranks {ra} x {rb}")
    allowed = _PRODUCT_KINDS[(ra, rb)]
    kind = kind or allowed[0]
    if kind not in allowed:
        raise ValueError(f"product kind {kind!r} not defined for {ra} x {rb}")
    grid = f.grid
    if ra != "scalar" and rb == "scalar":
        f, g = g, f
    if pad:
        a, b = grid.to_padded(f.coeffs), grid.to_padded(g.coeffs)
        return SpectralField(grid, grid.from_padded(_physical_product(a, b, kind)))
    a, b = grid.inverse(f.coeffs), grid.inverse(g.coeffs)
    return SpectralField(grid, grid.forward(_physical_product(a, b, kind)))
