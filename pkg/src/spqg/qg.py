"""Potential-vorticity formulation of the limit dynamics.

The prognostic variable is q = curl_h u_h - nu * b; (b, u_h) are recovered
diagnostically through the strictly invertible Fourier multiplier
bhat = -nu qhat / (nu^2 + |eta|^2), u_h = perp-grad(b)/nu, so geostrophic
balance holds to machine precision at all times.  The passive scalar u3 is
advected by the same stage velocities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import SpectralField, curl_2d, dealias
from .norms import l2_norm
from .solver2d import (
    SolverBlowupError,
    SolverConfig2D,
    Trajectory2D,
    advection_rhs,
)

__all__ = ["QGState", "init_from_data", "invert_pv", "step_qg", "solve_qg"]


@dataclass
class QGState:
    """PV and passive scalar as one 2-component spectral field."""

    field: SpectralField
    time: float = 0.0

    def __post_init__(self):
        if self.field.grid.dim != 2 or self.field.components != 2:
            raise ValueError("QGState wants a 2-component 2D field (q, u3)")

    @property
    def grid(self):
        return self.field.grid

    @property
    def q(self) -> SpectralField:
        return self.field.component(0)

    @property
    def u3(self) -> SpectralField:
        return self.field.component(1)


def init_from_data(b0: SpectralField, uh0: SpectralField, u30: SpectralField,
                   nu: float) -> QGState:
    """Limit-system initial state from raw (b, u_h, u3) data.

    q(0) is the raw potential vorticity curl(u_h0) - nu*b0; this matches the
    stream-function form of the limit initialisation because the elliptic
    inversion and the PV operator are mutually inverse.
    """
    q0 = curl_2d(uh0) - nu * b0
    coeffs = np.concatenate([q0.coeffs, u30.coeffs])
    return QGState(SpectralField(b0.grid, coeffs))


def invert_pv(q: SpectralField, nu: float):
    """Diagnostic (b, u_h) from PV.

    bhat = -nu qhat / (nu^2 + |eta|^2); u_h = perp-grad(b) / nu.  The symbol
    is bounded for every eta (including 0) since nu > 0.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    grid = q.grid
    k1, k2 = grid.wavenumbers()
    denom = nu * nu + k1 * k1 + k2 * k2
    bhat = -nu * q.coeffs[0] / denom
    uhat = np.stack([-1j * k2 * bhat, 1j * k1 * bhat]) / nu
    return SpectralField(grid, bhat[None]), SpectralField(grid, uhat)


def _rhs(coeffs, grid, nu, do_dealias):
    q = SpectralField(grid, coeffs[0:1])
    u3 = SpectralField(grid, coeffs[1:2])
    _, uh = invert_pv(q, nu)
    dq = advection_rhs(q, uh, do_dealias)
    du3 = advection_rhs(u3, uh, do_dealias)
    return np.concatenate([dq.coeffs, du3.coeffs])


def step_qg(state: QGState, dt: float, nu: float,
            do_dealias: bool = True) -> QGState:
    """One RK4 step of PV transport, velocity refreshed at every stage."""
    grid = state.grid
    c0 = state.field.coeffs

    k1 = _rhs(c0, grid, nu, do_dealias)
    k2 = _rhs(c0 + (dt / 2.0) * k1, grid, nu, do_dealias)
    k3 = _rhs(c0 + (dt / 2.0) * k2, grid, nu, do_dealias)
    k4 = _rhs(c0 + dt * k3, grid, nu, do_dealias)
    c1 = c0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(c1).all():
        raise SolverBlowupError(
            f"non-finite PV after step at t={state.time:.6g}", state=state
        )
    return QGState(SpectralField(grid, c1), state.time + dt)


def max_speed(state: QGState, nu: float) -> float:
    _, uh = invert_pv(state.q, nu)
    u = np.fft.ifftn(uh.coeffs, axes=(1, 2)).real
    return float(np.sqrt(u[0] ** 2 + u[1] ** 2).max())


def solve_qg(state0: QGState, config: SolverConfig2D, nu: float,
             diagnostics=None) -> Trajectory2D:
    """March the limit system to t_final; mirrors solve_intermediate."""
    state = QGState(dealias(state0.field), state0.time)
    dx = min(state.grid.dx)
    diagnostics = diagnostics or {}

    def cfl_dt(s):
        speed = max_speed(s, nu)
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
        state = step_qg(state, dt_step, nu, do_dealias=config.dealias)
        step += 1
        norm = l2_norm(state.field)
        if n0 > 0 and norm > config.max_growth * n0:
            raise SolverBlowupError(
                f"PV norm grew {norm / n0:.3g}x initial by t={state.time:.6g}",
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
