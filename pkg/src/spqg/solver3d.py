"""Time integration of the 3D perturbation around a columnar 2D flow.

The state V = (theta, v) obeys the 3D wave system driven by its own
quadratic terms plus coupling terms whose coefficients come from a 2D run.
The coupling coefficients are served by a ForcingContext that interpolates
the 2D trajectory in time (cubic Hermite; queries landing on stored nodes
are returned bit-exactly, which is how the solvers normally use it).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grids import BoxGrid, SpectralField, dealias
from .norms import l2_norm, sobolev_norm
from .solver2d import SolverBlowupError, SolverConfig2D, State2D, Trajectory2D
from .waves import PhysicalParams, apply_matrix, propagator_matrix

__all__ = [
    "State3D",
    "ForcingContext",
    "nonlinear_rhs_3d",
    "coupling_rhs",
    "extend_2d_to_3d",
    "prolong_horizontal",
    "solve_perturbed",
    "reconstruct_full",
    "reconstruct_density",
]

# Index map of the per-snapshot 2D coefficient stack used by the coupling
# terms: fields first, then horizontal derivatives, then div w.
_A, _W1, _W2, _W3 = 0, 1, 2, 3
_DA1, _DA2 = 4, 5
_DW11, _DW12, _DW21, _DW22, _DW31, _DW32 = 6, 7, 8, 9, 10, 11
_DIVW = 12
_NSTACK = 13


@dataclass
class State3D:
    """Perturbation state (theta, v1, v2, v3) on a 3D grid."""

    field: SpectralField
    time: float = 0.0

    def __post_init__(self):
        if self.field.grid.dim != 3 or self.field.components != 4:
            raise ValueError("State3D wants a 4-component 3D field (theta, v)")

    @property
    def grid(self):
        return self.field.grid

    @property
    def theta(self) -> SpectralField:
        return self.field.component(0)

    @property
    def v(self) -> SpectralField:
        return SpectralField(self.grid, self.field.coeffs[1:4].copy())

    def max_speed(self) -> float:
        v = np.fft.ifftn(self.field.coeffs[1:4], axes=(1, 2, 3)).real
        return float(np.sqrt(np.sum(v * v, axis=0)).max())


def prolong_horizontal(f: SpectralField, n_new) -> SpectralField:
    """Spectral prolongation of a 2D field onto a finer horizontal lattice.

    Exact for band-limited data; requires the target point counts to be
    integer multiples of the source counts.
    """
    grid = f.grid
    n_new = tuple(int(v) for v in n_new)
    if n_new == grid.n:
        return f
    for old, new in zip(grid.n, n_new):
        if new % old or new < old:
            raise ValueError(f"cannot prolong {grid.n} onto {n_new}")
    big = BoxGrid(2, n_new, grid.lengths)
    out = np.zeros((f.components, *n_new), dtype=np.complex128)
    idx = [np.fft.fftfreq(n, d=1.0 / n).astype(int) for n in grid.n]
    sel = np.ix_(*[np.mod(i, nn) for i, nn in zip(idx, n_new)])
    scale = np.prod([nn / n for nn, n in zip(n_new, grid.n)])
    out[(slice(None),) + sel] = f.coeffs * scale
    return SpectralField(big, out)


def extend_2d_to_3d(f2: SpectralField, grid3: BoxGrid) -> SpectralField:
    """Constant-in-x3 extension: spectrum placed on the xi3 = 0 plane."""
    if f2.grid.dim != 2 or grid3.dim != 3:
        raise ValueError("extend_2d_to_3d maps a 2D field onto a 3D grid")
    if tuple(f2.grid.lengths) != tuple(grid3.lengths[:2]):
        raise ValueError("horizontal box lengths differ")
    f2 = prolong_horizontal(f2, grid3.n[:2])
    out = np.zeros((f2.components, *grid3.n), dtype=np.complex128)
    out[:, :, :, 0] = f2.coeffs * grid3.n[2]
    return SpectralField(grid3, out)


class ForcingContext:
    """Dense-in-time access to the 2D coupling coefficients.

    Holds uniformly spaced 2D snapshots (a, w_h, w3); evaluation returns the
    13-field physical stack (fields, horizontal gradients, divergence) on the
    3D run's horizontal lattice, interpolated with cubic Hermite polynomials
    (centred slopes).  Querying a stored node time returns that snapshot's
    stack without interpolation error.
    """

    def __init__(self, times, snapshots, horizontal_n=None):
        times = np.asarray(times, dtype=float)
        if len(times) != len(snapshots):
            raise ValueError("times and snapshots disagree in length")
        if len(times) < 2:
            raise ValueError("a forcing context needs at least two snapshots")
        spacing = np.diff(times)
        if np.any(spacing <= 0) or np.ptp(spacing) > 1e-9 * spacing[0]:
            raise ValueError("forcing context requires uniform time spacing")
        self.times = times
        self.h = float(spacing[0])
        self._snaps = list(snapshots)
        grid2 = snapshots[0].grid
        self._n_h = tuple(horizontal_n) if horizontal_n else grid2.n
        for old, new in zip(grid2.n, self._n_h):
            if new % old:
                raise ValueError(
                    f"2D lattice {grid2.n} incompatible with horizontal {self._n_h}"
                )

    @classmethod
    def from_trajectory(cls, traj: Trajectory2D, grid3: BoxGrid | None = None):
        fields = [s.field for s in traj.snapshots]
        n_h = grid3.n[:2] if grid3 is not None else None
        if grid3 is not None and tuple(fields[0].grid.lengths) != tuple(grid3.lengths[:2]):
            raise ValueError("2D and 3D horizontal box lengths differ")
        return cls(traj.times, fields, horizontal_n=n_h)

    @property
    def t_min(self):
        return float(self.times[0])

    @property
    def t_max(self):
        return float(self.times[-1])

    @lru_cache(maxsize=16)
    def _stack(self, i: int) -> np.ndarray:
        f = prolong_horizontal(self._snaps[i], self._n_h)
        k1, k2 = f.grid.wavenumbers()
        c = f.coeffs
        spect = np.stack(
            [
                c[0], c[1], c[2], c[3],
                1j * k1 * c[0], 1j * k2 * c[0],
                1j * k1 * c[1], 1j * k2 * c[1],
                1j * k1 * c[2], 1j * k2 * c[2],
                1j * k1 * c[3], 1j * k2 * c[3],
                1j * k1 * c[1] + 1j * k2 * c[2],
            ]
        )
        return np.fft.ifftn(spect, axes=(1, 2)).real

    def at(self, t: float) -> np.ndarray:
        """Coupling stack at time t (13, Nx, Ny)."""
        t = float(t)
        if t < self.t_min - 1e-9 * self.h or t > self.t_max + 1e-9 * self.h:
            raise ValueError(
                f"time {t} outside forcing context [{self.t_min}, {self.t_max}]"
            )
        pos = (t - self.t_min) / self.h
        i = min(int(np.floor(pos)), len(self.times) - 2)
        u = pos - i
        if abs(u) < 1e-9:
            return self._stack(i)
        if abs(u - 1.0) < 1e-9:
            return self._stack(i + 1)
        s0, s1 = self._stack(i), self._stack(i + 1)
        m0 = self._slope(i)
        m1 = self._slope(i + 1)
        h00 = (1 + 2 * u) * (1 - u) ** 2
        h10 = u * (1 - u) ** 2
        h01 = u * u * (3 - 2 * u)
        h11 = u * u * (u - 1)
        return h00 * s0 + h10 * self.h * m0 + h01 * s1 + h11 * self.h * m1

    def _slope(self, i: int) -> np.ndarray:
        if i == 0:
            return (self._stack(1) - self._stack(0)) / self.h
        if i == len(self.times) - 1:
            return (self._stack(i) - self._stack(i - 1)) / self.h
        return (self._stack(i + 1) - self._stack(i - 1)) / (2.0 * self.h)

    def max_speed(self, t: float) -> float:
        s = self.at(t)
        return float(np.sqrt(s[_W1] ** 2 + s[_W2] ** 2 + s[_W3] ** 2).max())

    @classmethod
    def zero(cls, grid2: BoxGrid, t_final: float):
        """A vanishing 2D context covering [0, t_final]."""
        z = SpectralField.zeros(grid2, 4)
        return cls(np.array([0.0, t_final]), [z, z.copy()])


def _phys3(coeffs):
    return np.fft.ifftn(coeffs, axes=(1, 2, 3)).real


def _derivative_bundle(V: SpectralField):
    ks = V.grid.wavenumbers()
    c = V.coeffs
    th, v1, v2, v3 = _phys3(c)
    dth = _phys3(np.stack([1j * k * c[0] for k in ks]))
    dv1 = _phys3(np.stack([1j * k * c[1] for k in ks]))
    dv2 = _phys3(np.stack([1j * k * c[2] for k in ks]))
    dv3 = _phys3(np.stack([1j * k * c[3] for k in ks]))
    return th, (v1, v2, v3), dth, (dv1, dv2, dv3)


def nonlinear_rhs_3d(V: SpectralField, params: PhysicalParams,
                     do_dealias: bool = True) -> SpectralField:
    """Minus the quadratic terms -(v.grad th + gb th div v, (v.grad)v + gb th grad th)."""
    gb = params.gamma_bar
    th, (v1, v2, v3), dth, (dv1, dv2, dv3) = _derivative_bundle(V)
    divv = dv1[0] + dv2[1] + dv3[2]

    def vdot(d):
        return v1 * d[0] + v2 * d[1] + v3 * d[2]

    rhs = np.stack(
        [
            -(vdot(dth) + gb * th * divv),
            -(vdot(dv1) + gb * th * dth[0]),
            -(vdot(dv2) + gb * th * dth[1]),
            -(vdot(dv3) + gb * th * dth[2]),
        ]
    )
    out = SpectralField.from_physical(V.grid, rhs)
    return dealias(out) if do_dealias else out


def coupling_rhs(V: SpectralField, ctx: ForcingContext, t: float,
                 params: PhysicalParams, do_dealias: bool = True) -> SpectralField:
    """The forcing G(V): every term is linear in V with 2D coefficients."""
    gb = params.gamma_bar
    th, (v1, v2, v3), dth, (dv1, dv2, dv3) = _derivative_bundle(V)
    divv = dv1[0] + dv2[1] + dv3[2]
    S = ctx.at(t)[..., None]  # broadcast constant in x3
    a, w1, w2, w3 = S[_A], S[_W1], S[_W2], S[_W3]

    def wdot(d):
        return w1 * d[0] + w2 * d[1] + w3 * d[2]

    g_th = -(wdot(dth) + gb * a * divv
             + v1 * S[_DA1] + v2 * S[_DA2] + gb * th * S[_DIVW])
    g_v1 = -(wdot(dv1) + gb * a * dth[0]
             + v1 * S[_DW11] + v2 * S[_DW12] + gb * th * S[_DA1])
    g_v2 = -(wdot(dv2) + gb * a * dth[1]
             + v1 * S[_DW21] + v2 * S[_DW22] + gb * th * S[_DA2])
    g_v3 = -(wdot(dv3) + gb * a * dth[2]
             + v1 * S[_DW31] + v2 * S[_DW32])
    out = SpectralField.from_physical(V.grid, np.stack([g_th, g_v1, g_v2, g_v3]))
    return dealias(out) if do_dealias else out


def _rhs_total(coeffs, grid, params, ctx, t, do_dealias, nonlinear):
    V = SpectralField(grid, coeffs)
    total = np.zeros_like(coeffs)
    if nonlinear:
        total += nonlinear_rhs_3d(V, params, do_dealias).coeffs
    if ctx is not None:
        total += coupling_rhs(V, ctx, t, params, do_dealias).coeffs
    return total


@lru_cache(maxsize=64)
def _cached_propagator_3d(grid: BoxGrid, params: PhysicalParams, t: float):
    return propagator_matrix(grid, params, t)


def solve_perturbed(state0: State3D, ctx: ForcingContext | None,
                    config: SolverConfig2D, params: PhysicalParams,
                    diagnostics=None) -> Trajectory2D:
    """Integrating-factor RK4 march of the perturbed system to t_final."""
    grid = state0.grid
    state = State3D(dealias(state0.field), state0.time)
    dx = min(grid.dx)
    diagnostics = diagnostics or {}

    def cfl_dt(s):
        speed = s.max_speed()
        if ctx is not None:
            speed += ctx.max_speed(min(s.time, ctx.t_max))
        return config.cfl * dx / speed if speed > 0 else np.inf

    dt = min(config.dt, cfl_dt(state))
    n0 = l2_norm(state.field)
    snapshots = [state]
    times = [state.time]
    diag_values = {name: [fn(state)] for name, fn in diagnostics.items()}
    diag_times = [state.time]

    step = 0
    t_end = state0.time + config.t_final
    while state.time < t_end - 1e-12 * config.t_final:
        while dt > cfl_dt(state) and dt > 1e-12 * config.t_final:
            dt /= 2.0
        dt_step = min(dt, t_end - state.time)
        state = _step(state, dt_step, params, ctx, config)
        step += 1
        norm = l2_norm(state.field)
        if n0 > 0 and norm > config.max_growth * n0:
            raise SolverBlowupError(
                f"norm grew {norm / n0:.3g}x initial by t={state.time:.6g}",
                state=state,
                trajectory=Trajectory2D(snapshots, np.array(times)),
            )
        for name, fn in diagnostics.items():
            diag_values[name].append(fn(state))
        diag_times.append(state.time)
        if step % config.snapshot_stride == 0 or state.time >= t_end - 1e-12:
            snapshots.append(state)
            times.append(state.time)

    return Trajectory2D(
        snapshots,
        np.array(times),
        {k: np.array(v) for k, v in diag_values.items()},
        np.array(diag_times),
    )


def _step(state: State3D, dt: float, params: PhysicalParams,
          ctx: ForcingContext | None, config: SolverConfig2D) -> State3D:
    grid = state.grid
    e_half = _cached_propagator_3d(grid, params, dt / 2.0)
    e_full = _cached_propagator_3d(grid, params, dt)
    t0 = state.time

    def rhs(coeffs, t):
        return _rhs_total(coeffs, grid, params, ctx, t,
                          config.dealias, config.nonlinear)

    def prop(mat, coeffs):
        return apply_matrix(mat, SpectralField(grid, coeffs)).coeffs

    c0 = state.field.coeffs
    n1 = rhs(c0, t0)
    wa = prop(e_half, c0 + (dt / 2.0) * n1)
    n2 = rhs(wa, t0 + dt / 2.0)
    wb = prop(e_half, c0) + (dt / 2.0) * n2
    n3 = rhs(wb, t0 + dt / 2.0)
    wc = prop(e_full, c0) + dt * prop(e_half, n3)
    n4 = rhs(wc, t0 + dt)
    c1 = prop(e_full, c0) + (dt / 6.0) * (
        prop(e_full, n1) + 2.0 * prop(e_half, n2 + n3) + n4
    )
    if not np.isfinite(c1).all():
        raise SolverBlowupError(
            f"non-finite coefficients after step at t={t0:.6g}", state=state
        )
    return State3D(SpectralField(grid, c1), t0 + dt)


def reconstruct_full(two_d: State2D, three_d: State3D,
                     time_tol: float) -> SpectralField:
    """Full solution U = (a, w) extended in x3 plus (theta, v)."""
    if abs(two_d.time - three_d.time) > time_tol:
        raise ValueError(
            f"time mismatch {abs(two_d.time - three_d.time):.3g} exceeds {time_tol:.3g}"
        )
    base = extend_2d_to_3d(two_d.field, three_d.grid)
    return base + three_d.field


def reconstruct_density(b_like: SpectralField, params: PhysicalParams) -> SpectralField:
    """Physical density (gb (1 + delta b))^(1/gb) from the working variable b."""
    b = b_like.to_physical()[0]
    arg = 1.0 + params.delta * b
    if np.any(arg <= 0):
        flat = int(np.argmin(arg))
        idx = tuple(int(i) for i in np.unravel_index(flat, b.shape))
        raise ValueError(
            f"density undefined: 1 + delta*b = {arg[idx]:.6g} at grid point {idx}"
        )
    gb = params.gamma_bar
    rho = (gb * arg) ** (1.0 / gb)
    return SpectralField.from_physical(b_like.grid, rho[None])
