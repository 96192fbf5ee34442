"""Periodic grids, spectral fields and Fourier multipliers.

Everything downstream works on a rectangular periodic box discretised with an
even number of points per axis.  Fields are stored as stacks of complex
Fourier coefficients in the native numpy FFT layout (index order
0, 1, ..., N/2-1, -N/2, ..., -1 per axis).  Conventions fixed here:

* forward transform unscaled, backward scaled by 1/N^dim,
* wavenumbers are integer lattice indices times 2*pi/L,
* dealiasing zeroes every mode with any axis index of magnitude > N/3.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "BoxGrid",
    "SpectralField",
    "apply_multiplier",
    "dealias",
    "grad",
    "div",
    "curl_2d",
    "perp_grad",
]


@dataclass(frozen=True)
class BoxGrid:
    """Uniform periodic lattice in 2 or 3 dimensions.

    Attributes:
        dim: spatial dimension, 2 or 3.
        n: points per axis (one even integer per axis).
        lengths: physical period per axis.
    """

    dim: int
    n: tuple[int, ...]
    lengths: tuple[float, ...]

    def __init__(self, dim, n, lengths):
        if dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        n = (n,) * dim if np.isscalar(n) else tuple(int(v) for v in n)
        lengths = (
            (float(lengths),) * dim
            if np.isscalar(lengths)
            else tuple(float(v) for v in lengths)
        )
        if len(n) != dim or len(lengths) != dim:
            raise ValueError("n and lengths must match dim")
        for v in n:
            if v <= 0 or v % 2:
                raise ValueError(f"points per axis must be positive and even, got {v}")
        for L in lengths:
            if L <= 0:
                raise ValueError(f"box length must be positive, got {L}")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "lengths", lengths)

    @property
    def shape(self):
        return self.n

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    @property
    def npoints(self):
        return int(np.prod(self.n))

    @property
    def dx(self):
        return tuple(L / n for L, n in zip(self.lengths, self.n))

    def axis_wavenumbers(self, axis):
        """Physical wavenumbers 2*pi*k/L along one axis, FFT index order."""
        n, L = self.n[axis], self.lengths[axis]
        return np.fft.fftfreq(n, d=1.0 / n) * (2.0 * np.pi / L)

    def wavenumbers(self):
        """Meshgrid of physical wavenumbers, one array per axis."""
        return _wavenumber_mesh(self)

    def wavenumber_magnitude(self):
        return _wavenumber_mag(self)

    def dealias_mask(self):
        """Boolean array, True where the 2/3-rule keeps the mode."""
        return _dealias_mask(self)

    def coordinates(self):
        """Physical coordinate meshgrid, one array per axis."""
        axes = [
            np.arange(n) * (L / n) for n, L in zip(self.n, self.lengths)
        ]
        return np.meshgrid(*axes, indexing="ij")


@lru_cache(maxsize=32)
def _wavenumber_mesh(grid: BoxGrid):
    axes = [grid.axis_wavenumbers(a) for a in range(grid.dim)]
    return tuple(np.meshgrid(*axes, indexing="ij"))


@lru_cache(maxsize=32)
def _wavenumber_mag(grid: BoxGrid):
    ks = _wavenumber_mesh(grid)
    return np.sqrt(sum(k * k for k in ks))


@lru_cache(maxsize=32)
def _dealias_mask(grid: BoxGrid):
    mask = np.ones(grid.n, dtype=bool)
    for axis, n in enumerate(grid.n):
        idx = np.abs(np.fft.fftfreq(n, d=1.0 / n))
        cut = idx > n / 3.0
        shape = [1] * grid.dim
        shape[axis] = n
        mask &= ~cut.reshape(shape)
    return mask


@dataclass
class SpectralField:
    """Stack of complex Fourier coefficient arrays on a BoxGrid.

    coeffs has shape (components, *grid.n) and dtype complex128.  A field
    representing real physical data satisfies conjugate symmetry
    fhat(-k) = conj(fhat(k)) componentwise.
    """

    grid: BoxGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim == self.grid.dim:
            c = c[None]
        if c.shape[1:] != self.grid.n:
            raise ValueError(
                f"coefficient shape {c.shape} does not match grid {self.grid.n}"
            )
        self.coeffs = c

    @property
    def components(self):
        return self.coeffs.shape[0]

    @classmethod
    def from_physical(cls, grid, values):
        """Transform physical-space samples (components, *grid.n) to spectral."""
        v = np.asarray(values)
        if v.ndim == grid.dim:
            v = v[None]
        coeffs = np.fft.fftn(v, axes=tuple(range(1, grid.dim + 1)))
        return cls(grid, coeffs)

    @classmethod
    def zeros(cls, grid, components=1):
        return cls(grid, np.zeros((components, *grid.n), dtype=np.complex128))

    def to_physical(self):
        """Inverse transform; returns real arrays of shape (components, *n)."""
        out = np.fft.ifftn(self.coeffs, axes=tuple(range(1, self.grid.dim + 1)))
        return out.real

    def to_physical_padded(self, factor=2):
        """Inverse transform onto a zero-padded lattice (for sup norms)."""
        return ifft_padded(self.grid, self.coeffs, factor)

    def component(self, i):
        return SpectralField(self.grid, self.coeffs[i : i + 1].copy())

    def copy(self):
        return SpectralField(self.grid, self.coeffs.copy())

    def __add__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    if a.components != b.components:
        raise ValueError("fields have different component counts")


def ifft_padded(grid, coeffs, factor=2):
    """Zero-pad spectral coefficients and inverse transform.

    Returns real physical values on the refined lattice (factor*n per axis);
    amplitudes are preserved (trigonometric interpolation of the field).
    """
    if factor < 1 or int(factor) != factor:
        raise ValueError("padding factor must be a positive integer")
    c = np.asarray(coeffs, dtype=np.complex128)
    single = c.ndim == grid.dim
    if single:
        c = c[None]
    big = tuple(factor * n for n in grid.n)
    out = np.zeros((c.shape[0], *big), dtype=np.complex128)
    idx = [np.fft.fftfreq(n, d=1.0 / n).astype(int) for n in grid.n]
    sel = np.ix_(*[np.mod(i, b) for i, b in zip(idx, big)])
    out[(slice(None),) + sel] = c
    phys = np.fft.ifftn(out, axes=tuple(range(1, grid.dim + 1))).real
    phys *= factor**grid.dim
    return phys[0] if single else phys


def apply_multiplier(f: SpectralField, symbol) -> SpectralField:
    """Multiply a field by a wavevector symbol.

    symbol is either an array over the lattice (scalar symbol, applied to
    every component), or an array of shape (c_out, c_in, *grid.n) acting as a
    per-wavevector matrix on the component stack.
    """
    m = np.asarray(symbol)
    if m.shape == f.grid.n:
        return SpectralField(f.grid, f.coeffs * m[None])
    if m.ndim == f.grid.dim + 2 and m.shape[2:] == f.grid.n:
        if m.shape[1] != f.components:
            raise ValueError(
                f"multiplier expects {m.shape[1]} components, field has {f.components}"
            )
        out = np.einsum("ij...,j...->i...", m, f.coeffs)
        return SpectralField(f.grid, out)
    raise ValueError(f"symbol shape {m.shape} incompatible with grid {f.grid.n}")


def dealias(f: SpectralField) -> SpectralField:
    """Zero every coefficient with any axis index of magnitude > N/3."""
    return SpectralField(f.grid, f.coeffs * f.grid.dealias_mask()[None])


def grad(f: SpectralField, component=0):
    """Spectral gradient of one component; returns a dim-component field."""
    ks = f.grid.wavenumbers()
    c = f.coeffs[component]
    out = np.stack([1j * k * c for k in ks])
    return SpectralField(f.grid, out)


def div(f: SpectralField) -> SpectralField:
    """Spectral divergence of a dim-component field."""
    if f.components != f.grid.dim:
        raise ValueError("divergence needs one component per axis")
    ks = f.grid.wavenumbers()
    out = sum(1j * k * f.coeffs[i] for i, k in enumerate(ks))
    return SpectralField(f.grid, out[None])


def curl_2d(f: SpectralField) -> SpectralField:
    """Scalar curl d1 f2 - d2 f1 of a 2-component 2D field."""
    if f.grid.dim != 2 or f.components != 2:
        raise ValueError("curl_2d needs a 2-component 2D field")
    k1, k2 = f.grid.wavenumbers()
    out = 1j * k1 * f.coeffs[1] - 1j * k2 * f.coeffs[0]
    return SpectralField(f.grid, out[None])


def perp_grad(f: SpectralField, component=0) -> SpectralField:
    """Rotated gradient (-d2 f, d1 f) of a scalar 2D field."""
    if f.grid.dim != 2:
        raise ValueError("perp_grad is 2D only")
    k1, k2 = f.grid.wavenumbers()
    c = f.coeffs[component]
    out = np.stack([-1j * k2 * c, 1j * k1 * c])
    return SpectralField(f.grid, out)
