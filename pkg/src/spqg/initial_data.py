"""Seeded, reproducible initial data.

Random fields are generated as white noise on the physical lattice and then
band-limited by a smooth radial taper in Fourier space, so conjugate symmetry
is automatic and a fixed seed gives bit-identical data.  Deterministic
Gaussian-bump presets complement the random families.
"""

from __future__ import annotations

import numpy as np

from .grids import BoxGrid, SpectralField, dealias, perp_grad
from .norms import sobolev_norm
from .waves import PhysicalParams, slow_fast_split

__all__ = [
    "random_band_field",
    "scale_to_norm",
    "ill_prepared_state_2d",
    "geostrophic_state_2d",
    "gaussian_vortex",
    "random_state_3d",
]


def _band_taper(radius, lo, hi):
    """Smooth bump supported on lo <= r <= hi (zero outside, peak mid-band)."""
    u = (radius - 0.5 * (lo + hi)) / (0.5 * (hi - lo))
    out = np.zeros_like(radius)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def random_band_field(grid: BoxGrid, components: int, seed, band=(0.25, 2.0),
                      exclude_kz0: bool = False) -> SpectralField:
    """Real random field with spectrum supported in a radial wavenumber band.

    exclude_kz0 removes the whole vertical-mean plane (3D only), mirroring
    the fact that x3-independent content belongs to the 2D data family.
    """
    lo, hi = band
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got {band}")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((components, *grid.n))
    f = SpectralField.from_physical(grid, noise)
    taper = _band_taper(grid.wavenumber_magnitude(), lo, hi)
    if exclude_kz0:
        if grid.dim != 3:
            raise ValueError("exclude_kz0 only applies to 3D grids")
        taper = taper.copy()
        taper[:, :, 0] = 0.0
    return dealias(SpectralField(grid, f.coeffs * taper[None]))


def scale_to_norm(f: SpectralField, m: float, target: float) -> SpectralField:
    """Rescale a field to a prescribed H^m norm (no-op on a zero field)."""
    cur = sobolev_norm(f, m)
    if cur == 0.0 or target == 0.0:
        return SpectralField(f.grid, f.coeffs * 0.0) if target == 0.0 else f.copy()
    return f * (target / cur)


def ill_prepared_state_2d(grid: BoxGrid, params: PhysicalParams, seed,
                          band=(0.25, 2.0), slow_norm=1.0, fast_norm=1.0,
                          w3_norm=0.5, m: float = 2.0) -> SpectralField:
    """4-component (a, w_h, w3) data with prescribed slow/fast H^m norms.

    A nonzero fast_norm excites the wave branches at time zero (ill-prepared
    data); fast_norm=0 gives purely geostrophic data.
    """
    raw = random_band_field(grid, 3, seed, band)
    slow, fast = slow_fast_split(raw, params)
    W = scale_to_norm(slow, m, slow_norm) + scale_to_norm(fast, m, fast_norm)
    w3 = scale_to_norm(random_band_field(grid, 1, seed + 1, band), m, w3_norm)
    coeffs = np.concatenate([W.coeffs, w3.coeffs])
    return SpectralField(grid, coeffs)


def geostrophic_state_2d(grid: BoxGrid, params: PhysicalParams, seed,
                         band=(0.25, 2.0), amp=1.0, w3_norm=0.0,
                         m: float = 2.0) -> SpectralField:
    """Balanced data: a random, w_h = perp-grad(a)/nu, so the fast part is zero."""
    a = scale_to_norm(random_band_field(grid, 1, seed, band), m, amp)
    wh = perp_grad(a) * (1.0 / params.nu)
    parts = [a.coeffs, wh.coeffs]
    if w3_norm > 0:
        parts.append(scale_to_norm(random_band_field(grid, 1, seed + 1, band), m, w3_norm).coeffs)
    else:
        parts.append(np.zeros_like(a.coeffs))
    return SpectralField(grid, np.concatenate(parts))


def gaussian_vortex(grid: BoxGrid, amp=1.0, width=None, center=None) -> SpectralField:
    """Deterministic radial Gaussian bump (scalar), centred in the box.

    Width defaults to 1/16 of the shortest box side, comfortably inside the
    box so periodic images are negligible at double precision.
    """
    width = width or min(grid.lengths) / 16.0
    center = center or tuple(L / 2.0 for L in grid.lengths)
    coords = grid.coordinates()
    r2 = sum((x - c) ** 2 for x, c in zip(coords, center))
    bump = amp * np.exp(-r2 / (2.0 * width**2))
    return SpectralField.from_physical(grid, bump[None])


def random_state_3d(grid: BoxGrid, seed, band=(1.0, 3.0), norm=0.5,
                    m: float = 2.0) -> SpectralField:
    """4-component (theta, v) random 3D data, vertical-mean plane excluded."""
    raw = random_band_field(grid, 4, seed, band, exclude_kz0=True)
    return scale_to_norm(raw, m, norm)


def ring_packet(grid: BoxGrid, seed, band, components: int,
                exclude_kz0: bool = False) -> SpectralField:
    """Coherent point-source packet: a nonnegative radial band spectrum.

    Random-phase band data is spatially incoherent, so on a periodic box its
    sup norm sits at the statistical plateau from t = 0 and shows no
    dispersive decay.  This packet instead focuses the whole band at the box
    center (one seeded real amplitude per component), which is the coherent
    object whose collapse the decay norms can see: its group velocities span
    every direction and the full speed range of the band.
    """
    lo, hi = band
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got {band}")
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(components)
    direction /= np.sqrt(np.sum(direction**2))
    taper = _band_taper(grid.wavenumber_magnitude(), lo, hi)
    if exclude_kz0:
        if grid.dim != 3:
            raise ValueError("exclude_kz0 only applies to 3D grids")
        taper = taper.copy()
        taper[:, :, 0] = 0.0
    coeffs = direction[(...,) + (None,) * grid.dim] * taper[None]
    # centre the focus point in the box (spectrum is real, focus at x = 0)
    shift = np.ones(grid.n, dtype=np.complex128)
    for axis in range(grid.dim):
        k = grid.axis_wavenumbers(axis)
        sh = [1] * grid.dim
        sh[axis] = grid.n[axis]
        shift = shift * np.exp(-1j * k * grid.lengths[axis] / 2.0).reshape(sh)
    return dealias(SpectralField(grid, coeffs * shift[None]))


def packet_ill_prepared_2d(grid: BoxGrid, params: PhysicalParams, seed,
                           band=(0.25, 2.2), packet_band=(0.3, 2.5),
                           slow_norm=1.0, fast_sup=1.0, w3_norm=0.5,
                           m: float = 2.0) -> SpectralField:
    """Random balanced background plus a coherent fast point-source packet.

    The fast part is the wave-branch projection of a ring packet, rescaled
    so its pointwise magnitude peaks at fast_sup.
    """
    from .waves import project

    raw = random_band_field(grid, 3, seed, band)
    slow, _ = slow_fast_split(raw, params)
    W = scale_to_norm(slow, m, slow_norm)
    if fast_sup > 0:
        packet = ring_packet(grid, seed + 2, packet_band, 3)
        fast = project(packet, "fast", params)
        phys = fast.to_physical()
        peak = float(np.sqrt(np.sum(phys * phys, axis=0)).max())
        if peak == 0.0:
            raise ValueError("fast packet vanished; check the packet band")
        W = W + fast * (fast_sup / peak)
    w3 = scale_to_norm(random_band_field(grid, 1, seed + 1, band), m, w3_norm)
    return SpectralField(grid, np.concatenate([W.coeffs, w3.coeffs]))


def packet_state_3d(grid: BoxGrid, seed, packet_band=(1.5, 3.5),
                    sup=0.5) -> SpectralField:
    """Localized 4-component 3D shell packet with peak magnitude sup.

    The vertical-mean plane is excluded: those modes do not disperse and
    would leave a permanent floor under the decay norms.
    """
    packet = ring_packet(grid, seed, packet_band, 4, exclude_kz0=True)
    phys = packet.to_physical()
    peak = float(np.sqrt(np.sum(phys * phys, axis=0)).max())
    if peak == 0.0:
        raise ValueError("3D packet vanished; check the packet band")
    return packet * (sup / peak)
