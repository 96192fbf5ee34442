"""Time integration of the 2D rotating compressible system.

The state is (a, w_h, w3).  The stiff linear part (coefficient gamma_bar /
delta) is integrated exactly through the eigenbasis propagator; the quadratic
terms are advanced by classical RK4 in the interaction frame, so the time
step is limited only by the advection CFL condition.  w3 rides along as a
passively advected scalar inside the same stages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .grids import BoxGrid, SpectralField, dealias
from .norms import l2_norm, lp_norm, sobolev_norm
from .waves import PhysicalParams, apply_matrix, propagator_matrix

__all__ = [
    "State2D",
    "SolverConfig2D",
    "Trajectory2D",
    "SolverBlowupError",
    "nonlinear_rhs_2d",
    "advection_rhs",
    "advect_scalar",
    "step_if_rk4_2d",
    "solve_intermediate",
    "material_pv",
]


class SolverBlowupError(RuntimeError):
    """Raised when the solution blows up or turns non-finite.

    Carries the last valid state so callers can inspect partial runs.
    """

    def __init__(self, message, state=None, trajectory=None):
        super().__init__(message)
        self.state = state
        self.trajectory = trajectory


@dataclass
class State2D:
    """Solution state (a, w1, w2, w3) as one 4-component spectral field."""

    field: SpectralField
    time: float = 0.0

    def __post_init__(self):
        if self.field.grid.dim != 2 or self.field.components != 4:
            raise ValueError("State2D wants a 4-component 2D field (a, w1, w2, w3)")

    @property
    def grid(self):
        return self.field.grid

    @property
    def W(self) -> SpectralField:
        """The wave-active part (a, w_h)."""
        return SpectralField(self.grid, self.field.coeffs[:3].copy())

    @property
    def a(self) -> SpectralField:
        return self.field.component(0)

    @property
    def wh(self) -> SpectralField:
        return SpectralField(self.grid, self.field.coeffs[1:3].copy())

    @property
    def w3(self) -> SpectralField:
        return self.field.component(3)

    def max_speed(self) -> float:
        w = np.fft.ifftn(self.field.coeffs[1:3], axes=(1, 2)).real
        return float(np.sqrt(w[0] ** 2 + w[1] ** 2).max())


@dataclass
class SolverConfig2D:
    """Stepping controls shared by the 2D solvers."""

    dt: float
    t_final: float
    dealias: bool = True
    snapshot_stride: int = 1
    cfl: float = 0.5
    nonlinear: bool = True
    max_growth: float = 1e6

    def __post_init__(self):
        if self.dt <= 0 or self.t_final <= 0:
            raise ValueError("dt and t_final must be positive")
        if self.dt > self.t_final:
            raise ValueError("dt must not exceed t_final")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be a positive integer")


@dataclass
class Trajectory2D:
    """Snapshots plus per-step diagnostic series from one run."""

    snapshots: list
    times: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    diag_times: np.ndarray | None = None

    def sup_sobolev(self, m: float, components=slice(None)) -> float:
        return max(
            sobolev_norm(SpectralField(s.grid, s.field.coeffs[components]), m)
            for s in self.snapshots
        )

    @property
    def final(self):
        return self.snapshots[-1]


def _phys(coeffs):
    return np.fft.ifftn(coeffs, axes=tuple(range(1, coeffs.ndim))).real


def nonlinear_rhs_2d(W: SpectralField, params: PhysicalParams,
                     do_dealias: bool = True) -> SpectralField:
    """Minus the quadratic terms of the wave-active part.

    Returns -(w.grad a + gb a div w, (w.grad) w + gb a grad a), with products
    formed on the physical lattice and the result dealiased.
    """
    if W.components != 3:
        raise ValueError("nonlinear_rhs_2d expects the 3-component (a, w_h) stack")
    gb = params.gamma_bar
    k1, k2 = W.grid.wavenumbers()
    c = W.coeffs
    a, w1, w2 = _phys(c)
    da = _phys(np.stack([1j * k1 * c[0], 1j * k2 * c[0]]))
    dw1 = _phys(np.stack([1j * k1 * c[1], 1j * k2 * c[1]]))
    dw2 = _phys(np.stack([1j * k1 * c[2], 1j * k2 * c[2]]))
    divw = dw1[0] + dw2[1]
    rhs = np.stack(
        [
            -(w1 * da[0] + w2 * da[1] + gb * a * divw),
            -(w1 * dw1[0] + w2 * dw1[1] + gb * a * da[0]),
            -(w1 * dw2[0] + w2 * dw2[1] + gb * a * da[1]),
        ]
    )
    out = SpectralField.from_physical(W.grid, rhs)
    return dealias(out) if do_dealias else out


def advection_rhs(s: SpectralField, w: SpectralField,
                  do_dealias: bool = True) -> SpectralField:
    """-(w . grad) s for a scalar s and a velocity w on the same grid."""
    if s.grid != w.grid:
        raise ValueError("scalar and velocity live on different grids")
    ks = s.grid.wavenumbers()
    wp = _phys(w.coeffs)
    grads = _phys(np.stack([1j * k * s.coeffs[0] for k in ks]))
    rhs = -sum(wp[i] * grads[i] for i in range(s.grid.dim))
    out = SpectralField.from_physical(s.grid, rhs[None])
    return dealias(out) if do_dealias else out


def advect_scalar(s: SpectralField, w: SpectralField, dt: float,
                  do_dealias: bool = True) -> SpectralField:
    """One RK4 transport step of s with the velocity frozen over the step."""
    def rhs(f):
        return advection_rhs(f, w, do_dealias)

    k1 = rhs(s)
    k2 = rhs(s + (dt / 2) * k1)
    k3 = rhs(s + (dt / 2) * k2)
    k4 = rhs(s + dt * k3)
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _full_rhs(state_coeffs, grid, params, do_dealias, nonlinear):
    """RHS for the 4-component stack: (-(N tilde), -(w.grad) w3)."""
    if not nonlinear:
        return np.zeros_like(state_coeffs)
    W = SpectralField(grid, state_coeffs[:3])
    rw = nonlinear_rhs_2d(W, params, do_dealias)
    s = SpectralField(grid, state_coeffs[3:4])
    wh = SpectralField(grid, state_coeffs[1:3])
    r3 = advection_rhs(s, wh, do_dealias)
    return np.concatenate([rw.coeffs, r3.coeffs])


@lru_cache(maxsize=64)
def _cached_propagator(grid: BoxGrid, params: PhysicalParams, t: float):
    return propagator_matrix(grid, params, t, components=4)


def step_if_rk4_2d(state: State2D, dt: float, params: PhysicalParams,
                   do_dealias: bool = True, nonlinear: bool = True) -> State2D:
    """One integrating-factor RK4 step of the full 2D system.

    The linear sub-flow is applied exactly via the cached eigen-propagator,
    so only the advective terms see dt.
    """
    grid = state.grid
    e_half = _cached_propagator(grid, params, dt / 2.0)
    e_full = _cached_propagator(grid, params, dt)

    def rhs(coeffs):
        return _full_rhs(coeffs, grid, params, do_dealias, nonlinear)

    def prop(mat, coeffs):
        return apply_matrix(mat, SpectralField(grid, coeffs)).coeffs

    c0 = state.field.coeffs
    n1 = rhs(c0)
    wa = prop(e_half, c0 + (dt / 2.0) * n1)
    n2 = rhs(wa)
    wb = prop(e_half, c0) + (dt / 2.0) * n2
    n3 = rhs(wb)
    wc = prop(e_full, c0) + dt * prop(e_half, n3)
    n4 = rhs(wc)
    c1 = prop(e_full, c0) + (dt / 6.0) * (
        prop(e_full, n1) + 2.0 * prop(e_half, n2 + n3) + n4
    )
    if not np.isfinite(c1).all():
        raise SolverBlowupError(
            f"non-finite coefficients after step at t={state.time:.6g}", state=state
        )
    return State2D(SpectralField(grid, c1), state.time + dt)


def solve_intermediate(state0: State2D, config: SolverConfig2D,
                       params: PhysicalParams, diagnostics=None) -> Trajectory2D:
    """March the 2D system to t_final, collecting snapshots and diagnostics.

    diagnostics maps names to callables evaluated on the state after every
    step (and at t=0).  The advective CFL bound cfl*dx/max|w| is enforced
    adaptively: the step halves whenever the current speed violates it.
    """
    grid = state0.grid
    state = State2D(dealias(state0.field), state0.time)
    dx = min(grid.dx)
    diagnostics = diagnostics or {}

    def cfl_dt(s):
        speed = s.max_speed()
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
        state = step_if_rk4_2d(state, dt_step, params,
                               do_dealias=config.dealias,
                               nonlinear=config.nonlinear)
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


def material_pv(state: State2D, params: PhysicalParams) -> np.ndarray:
    """Materially conserved potential vorticity on the physical lattice.

    (curl w + gb*nu/delta) / (1 + delta a)^(1/gb); its pointwise range is an
    invariant of the flow, which makes the drift of max|PV| a conservation
    diagnostic.  Requires 1 + delta a > 0.
    """
    k1, k2 = state.grid.wavenumbers()
    c = state.field.coeffs
    zeta = _phys((1j * k1 * c[2] - 1j * k2 * c[1])[None])[0]
    a = _phys(c[0:1])[0]
    h = 1.0 + params.delta * a
    if np.any(h <= 0):
        raise ValueError("material PV undefined: 1 + delta*a reaches zero")
    f0 = params.gamma_bar * params.nu / params.delta
    return (zeta + f0) / h ** (1.0 / params.gamma_bar)
