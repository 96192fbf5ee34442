"""Linear wave algebra: symbols, eigensystems, projections, propagators.

The linearisation of the rotating compressible system has, per horizontal
wavevector eta, a 3x3 skew-adjoint symbol with frequencies {0, +p, -p},
p(eta) = sqrt(nu^2 + |eta|^2); in 3D the 4x4 symbol carries two wave
branches and two slow branches.  Eigensystems are computed once per
(grid, nu) pair and cached immutably; everything downstream (projections,
slow/fast splitting, exact propagators) is a diagonal operation in the
eigenbasis.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .grids import BoxGrid, SpectralField

__all__ = [
    "PhysicalParams",
    "assemble_symbol_2d",
    "assemble_symbol_3d",
    "eigendecompose_2d",
    "eigendecompose_3d",
    "EigenSystem2D",
    "EigenSystem3D",
    "eigensystem_2d",
    "eigensystem_3d",
    "project",
    "slow_fast_split",
    "linear_propagate",
    "propagator_matrix",
]

_PHASE_TOL = 1e-8


@dataclass(frozen=True)
class PhysicalParams:
    """Nondimensional constants of the rotating compressible system.

    gamma is the adiabatic exponent (> 1), delta the Mach number, nu the
    fixed ratio delta / (gamma_bar * epsilon); the Rossby number epsilon is
    always derived, never free.
    """

    gamma: float
    delta: float
    nu: float = 1.0

    def __post_init__(self):
        if self.gamma <= 1:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.nu <= 0:
            raise ValueError(f"nu must be positive, got {self.nu}")

    @property
    def gamma_bar(self) -> float:
        return (self.gamma - 1.0) / 2.0

    @property
    def epsilon(self) -> float:
        return self.delta / (self.gamma_bar * self.nu)

    @property
    def stiffness(self) -> float:
        """Coefficient gamma_bar/delta multiplying the linear operator."""
        return self.gamma_bar / self.delta

    def with_delta(self, delta: float) -> "PhysicalParams":
        return PhysicalParams(self.gamma, float(delta), self.nu)


def assemble_symbol_2d(eta, nu: float) -> np.ndarray:
    """Fourier symbol of the 2D linear operator at one wavevector."""
    e1, e2 = float(eta[0]), float(eta[1])
    return np.array(
        [
            [0.0, 1j * e1, 1j * e2],
            [1j * e1, 0.0, -nu],
            [1j * e2, nu, 0.0],
        ],
        dtype=np.complex128,
    )


def assemble_symbol_3d(xi, nu: float) -> np.ndarray:
    """Fourier symbol of the 3D linear operator at one wavevector."""
    x1, x2, x3 = (float(v) for v in xi)
    return np.array(
        [
            [0.0, 1j * x1, 1j * x2, 1j * x3],
            [1j * x1, 0.0, -nu, 0.0],
            [1j * x2, nu, 0.0, 0.0],
            [1j * x3, 0.0, 0.0, 0.0],
        ],
        dtype=np.complex128,
    )


def _fix_phases(vecs):
    """Rotate each eigenvector so its first nonzero component is real > 0.

    vecs has shape (..., c) with the component axis last.
    """
    mag = np.abs(vecs)
    first = np.argmax(mag > _PHASE_TOL, axis=-1)
    lead = np.take_along_axis(vecs, first[..., None], axis=-1)[..., 0]
    scale = np.abs(lead)
    scale[scale == 0] = 1.0
    phase = np.conj(lead) / scale
    return vecs * phase[..., None]


def _kernel_vector_2d(k1, k2, nu):
    """Analytic zero-frequency eigenvector (nu, -i eta2, i eta1)/p."""
    p = np.sqrt(nu * nu + k1 * k1 + k2 * k2)
    d0 = np.stack([nu / p, -1j * k2 / p, 1j * k1 / p])
    return d0.astype(np.complex128)


def eigendecompose_2d(eta, nu: float):
    """Eigenfrequencies and orthonormal eigenvectors at one 2D wavevector.

    Returns (freqs, vecs): freqs descending (+p, 0, -p); vecs[j] is the
    branch-j eigenvector, satisfying symbol @ v = 1j * freq * v.  The zero
    branch uses the analytic kernel vector; the wave branches come from a
    Hermitian eigensolve with the first-nonzero-real-positive phase fix.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    e1, e2 = float(eta[0]), float(eta[1])
    herm = -1j * assemble_symbol_2d(eta, nu)
    w, v = np.linalg.eigh(herm)
    vecs = _fix_phases(v.T.copy())
    order = np.argsort(-w, kind="stable")
    freqs = w[order]
    vecs = vecs[order]
    vecs[1] = _kernel_vector_2d(np.array(e1), np.array(e2), nu)
    freqs[1] = 0.0
    return freqs, vecs


def eigendecompose_3d(xi, nu: float):
    """Eigenfrequencies (descending) and eigenvectors at one 3D wavevector."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    herm = -1j * assemble_symbol_3d(xi, nu)
    try:
        w, v = np.linalg.eigh(herm)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"eigensolver failed at wavevector {tuple(xi)}") from exc
    vecs = _fix_phases(v.T.copy())
    order = np.argsort(-w, kind="stable")
    return w[order], _lexsort_ties(w[order], vecs[order])


def _lexsort_ties(freqs, vecs, tol=1e-10):
    """Canonical order inside degenerate frequency groups (lexicographic)."""
    scale = max(1.0, float(np.max(np.abs(freqs))))
    i = 0
    n = len(freqs)
    while i < n:
        j = i + 1
        while j < n and abs(freqs[j] - freqs[i]) <= tol * scale:
            j += 1
        if j - i > 1:
            keys = [tuple(np.round(np.stack([vecs[b].real, vecs[b].imag], -1).ravel(), 12))
                    for b in range(i, j)]
            perm = sorted(range(j - i), key=lambda b: keys[b])
            vecs[i:j] = vecs[i:j][perm]
        i = j
    return vecs


class EigenSystem2D:
    """Per-lattice-wavevector eigensystem of the 2D symbol.

    freqs: (3, *n) real, branches ordered (+p, 0, -p).
    vecs:  (3, 3, *n) complex, vecs[j, i] = component i of branch j.
    """

    branches = ("+", "0", "-")

    def __init__(self, grid: BoxGrid, nu: float):
        if grid.dim != 2:
            raise ValueError("EigenSystem2D needs a 2D grid")
        self.grid = grid
        self.nu = float(nu)
        k1, k2 = grid.wavenumbers()
        p = np.sqrt(nu * nu + k1 * k1 + k2 * k2)
        self.freqs = np.stack([p, np.zeros_like(p), -p])

        herm = np.zeros((*grid.n, 3, 3), dtype=np.complex128)
        herm[..., 0, 1] = k1
        herm[..., 1, 0] = k1
        herm[..., 0, 2] = k2
        herm[..., 2, 0] = k2
        herm[..., 1, 2] = 1j * nu
        herm[..., 2, 1] = -1j * nu
        w, v = np.linalg.eigh(herm)
        # ascending (-p, 0, +p) -> branch-major descending (+p, 0, -p)
        vecs = np.moveaxis(v, -1, 0)  # (branch, *n, comp)
        vecs = _fix_phases(vecs)[::-1]
        vecs = np.moveaxis(vecs, -1, 1)  # (branch, comp, *n)
        vecs[1] = _kernel_vector_2d(k1, k2, nu)
        self.vecs = np.ascontiguousarray(vecs)

    def branch_index(self, branch):
        return {"+": 0, "0": 1, "-": 2, 0: 1, 1: 0, -1: 2}[branch]

    def branch_set(self, name):
        if name in ("slow", "0", 0):
            return (1,)
        if name == "fast":
            return (0, 2)
        if name in ("+", 1):
            return (0,)
        if name in ("-", -1):
            return (2,)
        raise ValueError(f"unknown 2D branch {name!r}")


class EigenSystem3D:
    """Per-lattice-wavevector eigensystem of the 4x4 3D symbol.

    freqs: (4, *n) real, sorted descending; the outer pair is the wave set,
    the middle pair the slow set.
    """

    def __init__(self, grid: BoxGrid, nu: float):
        if grid.dim != 3:
            raise ValueError("EigenSystem3D needs a 3D grid")
        self.grid = grid
        self.nu = float(nu)
        k1, k2, k3 = grid.wavenumbers()
        herm = np.zeros((*grid.n, 4, 4), dtype=np.complex128)
        herm[..., 0, 1] = k1
        herm[..., 1, 0] = k1
        herm[..., 0, 2] = k2
        herm[..., 2, 0] = k2
        herm[..., 0, 3] = k3
        herm[..., 3, 0] = k3
        herm[..., 1, 2] = 1j * nu
        herm[..., 2, 1] = -1j * nu
        try:
            w, v = np.linalg.eigh(herm)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(_locate_eigh_failure(herm, grid)) from exc
        freqs = w[..., ::-1]
        vecs = np.moveaxis(v, -1, 0)[::-1]  # (branch, *n, comp), descending
        vecs = _fix_phases(vecs)
        self._canonicalise_ties(freqs, vecs)
        self.freqs = np.ascontiguousarray(np.moveaxis(freqs, -1, 0))
        self.vecs = np.ascontiguousarray(np.moveaxis(vecs, -1, 1))

    @staticmethod
    def _canonicalise_ties(freqs, vecs, tol=1e-10):
        scale = max(1.0, float(np.max(np.abs(freqs))))
        gaps = np.diff(freqs, axis=-1)  # descending: gaps <= 0
        tie = np.any(np.abs(gaps) <= tol * scale, axis=-1)
        for idx in np.argwhere(tie):
            sel = tuple(idx)
            f = freqs[sel].copy()
            vv = np.stack([vecs[(b,) + sel] for b in range(len(f))])
            vv = _lexsort_ties(f, vv, tol=tol)
            for b in range(len(f)):
                vecs[(b,) + sel] = vv[b]

    def branch_set(self, name):
        if name in ("zero", "slow"):
            return (1, 2)
        if name in ("wave", "fast"):
            return (0, 3)
        raise ValueError(f"unknown 3D branch set {name!r}")


def _locate_eigh_failure(herm, grid):
    flat = herm.reshape(-1, herm.shape[-1], herm.shape[-1])
    for i in range(flat.shape[0]):
        try:
            np.linalg.eigh(flat[i])
        except np.linalg.LinAlgError:
            idx = np.unravel_index(i, grid.n)
            xi = tuple(grid.wavenumbers()[a][idx] for a in range(grid.dim))
            return f"eigensolver failed to converge at wavevector {xi}"
    return "eigensolver failed to converge (location not reproducible)"


_EIGEN_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()


def eigensystem_2d(grid: BoxGrid, nu: float) -> EigenSystem2D:
    key = ("2d", grid, float(nu))
    with _CACHE_LOCK:
        sys = _EIGEN_CACHE.get(key)
        if sys is None:
            sys = EigenSystem2D(grid, nu)
            _EIGEN_CACHE[key] = sys
    return sys


def eigensystem_3d(grid: BoxGrid, nu: float) -> EigenSystem3D:
    key = ("3d", grid, float(nu))
    with _CACHE_LOCK:
        sys = _EIGEN_CACHE.get(key)
        if sys is None:
            sys = EigenSystem3D(grid, nu)
            _EIGEN_CACHE[key] = sys
    return sys


def _eigensystem_for(f: SpectralField, nu: float):
    if f.grid.dim == 2:
        if f.components != 3:
            raise ValueError("2D wave algebra acts on 3-component fields")
        return eigensystem_2d(f.grid, nu)
    if f.components != 4:
        raise ValueError("3D wave algebra acts on 4-component fields")
    return eigensystem_3d(f.grid, nu)


def project(f: SpectralField, branch, params: PhysicalParams) -> SpectralField:
    """Spectral projection onto an eigenbranch (or branch set).

    2D branches: '+', '0', '-', 'slow', 'fast'.  3D sets: 'zero'/'slow',
    'wave'/'fast'.
    """
    sys = _eigensystem_for(f, params.nu)
    if f.grid.dim == 2 and branch in ("+", "0", "-", 0, 1, -1):
        idxs = sys.branch_set({0: "0", 1: "+", -1: "-"}.get(branch, branch))
    else:
        idxs = sys.branch_set(branch)
    out = np.zeros_like(f.coeffs)
    for j in idxs:
        d = sys.vecs[j]
        inner = np.einsum("i...,i...->...", np.conj(d), f.coeffs)
        out += d * inner[None]
    return SpectralField(f.grid, out)


def slow_fast_split(W: SpectralField, params: PhysicalParams):
    """Decompose a 3-component 2D state into (slow, fast) parts."""
    if W.grid.dim != 2 or W.components != 3:
        raise ValueError("slow_fast_split expects a 3-component 2D field")
    sys = eigensystem_2d(W.grid, params.nu)
    d0 = sys.vecs[1]
    inner = np.einsum("i...,i...->...", np.conj(d0), W.coeffs)
    slow = d0 * inner[None]
    return SpectralField(W.grid, slow), SpectralField(W.grid, W.coeffs - slow)


def propagator_matrix(grid: BoxGrid, params: PhysicalParams, t: float,
                      components: int | None = None) -> np.ndarray:
    """Matrix of exp(-(gamma_bar t / delta) * symbol) on the lattice.

    Returns (c, c, *n); each branch coefficient is multiplied by
    exp(-1j * (gamma_bar t / delta) * freq_j), which is exactly unitary per
    wavevector.  On a 2D grid with components=4 the passive fourth component
    gets an identity block.
    """
    if grid.dim == 2:
        sys = eigensystem_2d(grid, params.nu)
        nwave = 3
    else:
        sys = eigensystem_3d(grid, params.nu)
        nwave = 4
    phase = np.exp(-1j * (params.gamma_bar * t / params.delta) * sys.freqs)
    mat = np.einsum("j...,ji...,jl...->il...", phase, sys.vecs, np.conj(sys.vecs))
    if components is not None and components == nwave + 1:
        big = np.zeros((nwave + 1, nwave + 1, *grid.n), dtype=np.complex128)
        big[:nwave, :nwave] = mat
        big[nwave, nwave] = 1.0
        return big
    if components is not None and components != nwave:
        raise ValueError(f"cannot build a {components}-component propagator")
    return mat


def apply_matrix(mat: np.ndarray, f: SpectralField) -> SpectralField:
    """Apply a per-wavevector matrix (c, c, *n) to a field."""
    out = np.einsum("il...,l...->i...", mat, f.coeffs)
    return SpectralField(f.grid, out)


def linear_propagate(f: SpectralField, t: float, params: PhysicalParams) -> SpectralField:
    """Exact solution of the stiff linear sub-flow after time t."""
    if f.grid.dim == 2 and f.components == 4:
        mat = propagator_matrix(f.grid, params, t, components=4)
    else:
        _eigensystem_for(f, params.nu)
        mat = propagator_matrix(f.grid, params, t)
    return apply_matrix(mat, f)
