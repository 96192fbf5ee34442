"""Sobolev, Lebesgue, Besov and space-time norms of spectral fields.

All spatial norms are normalised so that they approximate the corresponding
integral norms over the physical box (Plancherel with volume weight); the
zeroth Sobolev norm therefore reproduces the L2 norm over the box exactly.
Time integration uses the trapezoid rule throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import DyadicLadder, dyadic_block
from .grids import SpectralField

__all__ = [
    "NormSpec",
    "sobolev_norm",
    "l2_norm",
    "lp_norm",
    "besov_norm",
    "chemin_lerner_norm",
    "time_lebesgue_norm",
    "time_lebesgue_norm_nonuniform",
]


@dataclass(frozen=True)
class NormSpec:
    """Exponent bundle (q in time, r in space, regularity m, sum exponent)."""

    q: float = math.inf
    r: float = 2.0
    m: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not 1 <= self.q:
            raise ValueError(f"time exponent q must be >= 1, got {self.q}")
        if not 1 <= self.r:
            raise ValueError(f"space exponent r must be >= 1, got {self.r}")
        if not 1 <= self.sigma:
            raise ValueError(f"summation exponent must be >= 1, got {self.sigma}")


def _spectral_l2_weight(grid):
    # Parseval: sum_x |f|^2 = N^-d sum_k |fhat|^2 ; integral adds V/N^d.
    return grid.volume / grid.npoints**2


def sobolev_norm(f: SpectralField, m: float) -> float:
    """H^m norm, all components summed: (sum (1+|xi|^2)^m |fhat|^2 vol)^(1/2)."""
    mag2 = f.grid.wavenumber_magnitude() ** 2
    weight = (1.0 + mag2) ** m
    total = np.sum(weight[None] * (f.coeffs.real**2 + f.coeffs.imag**2))
    return float(np.sqrt(total * _spectral_l2_weight(f.grid)))


def l2_norm(f: SpectralField) -> float:
    return sobolev_norm(f, 0.0)


def lp_norm(f: SpectralField, r: float, pad: bool = False) -> float:
    """Spatial L^r norm over the box; r in {1, 2, inf}.

    L2 is evaluated spectrally (Plancherel); L1 and Linf on the physical
    lattice, optionally on a 2x zero-padded lattice.  Multi-component fields
    use the pointwise Euclidean magnitude.
    """
    if r == 2:
        return l2_norm(f)
    phys = f.to_physical_padded(2) if pad else f.to_physical()
    mag = np.sqrt(np.sum(phys * phys, axis=0))
    if math.isinf(r):
        return float(mag.max())
    if r == 1:
        cell = f.grid.volume / mag.size
        return float(mag.sum() * cell)
    raise ValueError(f"unsupported spatial exponent r={r}")


def besov_norm(f: SpectralField, spec: NormSpec, ladder: DyadicLadder | None = None,
               pad: bool = False) -> float:
    """Homogeneous Besov seminorm (sum_k (2^{mk} ||Delta_k f||_r)^sigma)^(1/sigma)."""
    if spec.r not in (2.0, math.inf):
        raise ValueError(f"Besov block norms support r in {{2, inf}}, got {spec.r}")
    ladder = ladder or DyadicLadder.for_grid(f.grid)
    terms = []
    for k in ladder.ks:
        blk = dyadic_block(f, k)
        val = lp_norm(blk, spec.r, pad=pad)
        terms.append(2.0 ** (spec.m * k) * val)
    return _sigma_sum(np.array(terms), spec.sigma)


def _sigma_sum(terms, sigma):
    if math.isinf(sigma):
        return float(terms.max()) if terms.size else 0.0
    return float(np.sum(terms**sigma) ** (1.0 / sigma))


def time_lebesgue_norm(values, dt: float, q: float) -> float:
    """L^q(0,T) norm of a sampled nonnegative scalar, trapezoid in time."""
    v = np.asarray(values, dtype=float)
    if np.any(v < 0):
        raise ValueError("time_lebesgue_norm expects nonnegative samples")
    if math.isinf(q):
        return float(v.max()) if v.size else 0.0
    if q < 1:
        raise ValueError(f"time exponent must be >= 1, got {q}")
    if v.size < 2:
        raise ValueError("need at least two snapshots for a finite-q time norm")
    return float(np.trapezoid(v**q, dx=dt) ** (1.0 / q))


def time_lebesgue_norm_nonuniform(values, times, q: float) -> float:
    """Same as time_lebesgue_norm but on an explicit (sorted) time grid."""
    v = np.asarray(values, dtype=float)
    t = np.asarray(times, dtype=float)
    if np.any(v < 0):
        raise ValueError("time_lebesgue_norm expects nonnegative samples")
    if math.isinf(q):
        return float(v.max()) if v.size else 0.0
    if v.size < 2:
        raise ValueError("need at least two snapshots for a finite-q time norm")
    return float(np.trapezoid(v**q, x=t) ** (1.0 / q))


def chemin_lerner_norm(snapshots, dt: float, spec: NormSpec,
                       ladder: DyadicLadder | None = None) -> float:
    """Time-inside-the-dyadic-sum norm of a trajectory of fields.

    snapshots is a uniformly spaced list of SpectralField; per dyadic block
    the L^q-in-time norm of ||Delta_k f(t)||_{L^r} is taken first, then the
    weighted sigma-sum over blocks.
    """
    if not snapshots:
        return 0.0
    grid = snapshots[0].grid
    ladder = ladder or DyadicLadder.for_grid(grid)
    if not math.isinf(spec.q) and len(snapshots) < 2:
        raise ValueError("finite-q Chemin-Lerner norm needs at least two snapshots")
    terms = []
    for k in ladder.ks:
        series = np.array([lp_norm(dyadic_block(f, k), spec.r) for f in snapshots])
        val = time_lebesgue_norm(series, dt, spec.q)
        terms.append(2.0 ** (spec.m * k) * val)
    return _sigma_sum(np.array(terms), spec.sigma)
