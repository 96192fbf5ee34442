"""Experiment orchestration: delta sweeps, convergence diagnostics, outputs.

Each experiment kind consumes an ExperimentConfig (flat dotted-key text
file), runs the relevant solvers over a descending delta list, computes the
limit-convergence norms, fits power laws in delta, and emits a CSV plus
plot-ready data files and rendered figures.  Identical config and seed give
byte-identical CSV output.  If a solver aborts mid-sweep, the records from
completed deltas are flushed to disk before the error propagates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dispersion import DispersionProbe, fit_scaling, mk, probe_grid_for_k, strichartz_ratio
from .grids import BoxGrid, SpectralField, curl_2d
from .initial_data import (
    ill_prepared_state_2d,
    packet_ill_prepared_2d,
    packet_state_3d,
    random_state_3d,
)
from .norms import l2_norm, lp_norm, sobolev_norm, time_lebesgue_norm_nonuniform
from .qg import QGState, init_from_data, invert_pv, solve_qg
from .snapshots import write_sidecar, write_snapshot
from .solver2d import SolverBlowupError, SolverConfig2D, State2D, solve_intermediate
from .solver3d import ForcingContext, State3D, solve_perturbed
from .waves import PhysicalParams, slow_fast_split

__all__ = [
    "ExperimentConfig",
    "SweepRecord",
    "PvErrorDiag",
    "pv_error_diag",
    "run_qg_convergence",
    "run_fastwave_decay",
    "run_dispersion3d",
    "run_single",
    "run_strichartz_probe",
    "emit_outputs",
    "run_experiment",
]

KINDS = ("qg2d_convergence", "fastwave_decay", "dispersion3d",
         "strichartz_probe", "single_run")


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; see from_file for the key names."""

    kind: str
    grid_n: int = 256
    box_length: float = 64.0 * math.pi
    grid_n3: int = 48
    gamma: float = 2.0
    nu: float = 1.0
    delta_list: tuple = (0.2, 0.1, 0.05)
    t_final: float = 1.0
    cfl: float = 0.5
    dt: float | None = None
    n_out: int = 50
    q: float = 4.0
    m_index: int = 2
    band: tuple = (0.25, 2.2)
    band3: tuple = (1.2, 3.0)
    slow_amp: float = 1.0
    fast_amp: float = 1.0
    w3_amp: float = 0.5
    amp3d: float = 0.5
    fast_kind: str = "packet"
    packet_band: tuple = (0.3, 2.5)
    packet_band3: tuple = (1.5, 3.5)
    k_list: tuple = (0, 1, 2, 3, 4)
    probe_points: int = 256
    probe_base_length: float = 64.0 * math.pi
    exponent_lo: float | None = None
    exponent_hi: float | None = None
    out_dir: str = "out"
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        ds = tuple(float(d) for d in self.delta_list)
        if any(d <= 0 for d in ds):
            raise ValueError("deltas must be positive")
        if list(ds) != sorted(ds, reverse=True) or len(set(ds)) != len(ds):
            raise ValueError("sweep.delta_list must be strictly decreasing")
        object.__setattr__(self, "delta_list", ds)
        if self.t_final <= 0:
            raise ValueError("time.t_final must be positive")
        if self.fast_kind not in ("packet", "random"):
            raise ValueError("data.fast_kind must be 'packet' or 'random'")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        entries: dict[str, str] = {}
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise ValueError(f"bad config line (need key = value): {raw!r}")
            entries[key.strip()] = value.strip()
        return cls.from_dict(entries)

    @classmethod
    def from_dict(cls, entries: dict) -> "ExperimentConfig":
        def split_floats(s):
            return tuple(float(v) for v in str(s).split(","))

        conv = {
            "experiment.kind": ("kind", str),
            "grid.n": ("grid_n", int),
            "grid.box_length": ("box_length", float),
            "grid.n3": ("grid_n3", int),
            "params.gamma": ("gamma", float),
            "params.nu": ("nu", float),
            "sweep.delta_list": ("delta_list", split_floats),
            "time.t_final": ("t_final", float),
            "time.cfl": ("cfl", float),
            "time.dt": ("dt", float),
            "time.n_out": ("n_out", int),
            "experiment.q": ("q", float),
            "experiment.m_index": ("m_index", int),
            "experiment.exponent_lo": ("exponent_lo", float),
            "experiment.exponent_hi": ("exponent_hi", float),
            "data.band": ("band", split_floats),
            "data.band3": ("band3", split_floats),
            "data.slow_amp": ("slow_amp", float),
            "data.fast_amp": ("fast_amp", float),
            "data.w3_amp": ("w3_amp", float),
            "data.amp3d": ("amp3d", float),
            "data.fast_kind": ("fast_kind", str),
            "data.packet_band": ("packet_band", split_floats),
            "data.packet_band3": ("packet_band3", split_floats),
            "probe.k_list": ("k_list", lambda s: tuple(int(v) for v in str(s).split(","))),
            "probe.points": ("probe_points", int),
            "probe.base_length": ("probe_base_length", float),
            "output.dir": ("out_dir", str),
            "seed": ("seed", int),
            "threads": ("threads", int),
        }
        kwargs = {}
        for key, value in entries.items():
            if key not in conv:
                raise ValueError(f"unknown config key {key!r}")
            name, fn = conv[key]
            kwargs[name] = fn(value)
        if "kind" not in kwargs:
            raise ValueError("config must set experiment.kind")
        return cls(**kwargs)

    def to_flat(self) -> dict:
        return {
            "experiment.kind": self.kind,
            "grid.n": self.grid_n,
            "grid.box_length": self.box_length,
            "grid.n3": self.grid_n3,
            "params.gamma": self.gamma,
            "params.nu": self.nu,
            "sweep.delta_list": list(self.delta_list),
            "time.t_final": self.t_final,
            "time.cfl": self.cfl,
            "time.dt": "" if self.dt is None else self.dt,
            "time.n_out": self.n_out,
            "experiment.q": self.q,
            "experiment.m_index": self.m_index,
            "experiment.exponent_lo": "" if self.exponent_lo is None else self.exponent_lo,
            "experiment.exponent_hi": "" if self.exponent_hi is None else self.exponent_hi,
            "data.band": list(self.band),
            "data.band3": list(self.band3),
            "data.slow_amp": self.slow_amp,
            "data.fast_amp": self.fast_amp,
            "data.w3_amp": self.w3_amp,
            "data.amp3d": self.amp3d,
            "data.fast_kind": self.fast_kind,
            "data.packet_band": list(self.packet_band),
            "data.packet_band3": list(self.packet_band3),
            "probe.k_list": list(self.k_list),
            "probe.points": self.probe_points,
            "probe.base_length": self.probe_base_length,
            "output.dir": self.out_dir,
            "seed": self.seed,
            "threads": self.threads,
        }


@dataclass
class SweepRecord:
    """One (experiment, delta, norm) measurement, plus its sweep fit."""

    experiment: str
    delta: float
    norm_name: str
    value: float
    exponent: float | None = None
    residual: float | None = None
    grid_n: int = 0
    box_l: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("sweep record values are nonnegative")


def _attach_fits(records, norm_names):
    """Fit value ~ delta^e per norm series and stamp the rows in place."""
    for name in norm_names:
        series = [r for r in records if r.norm_name == name]
        pts = [(r.delta, r.value) for r in series]
        if len(pts) < 3 or any(v <= 0 for _, v in pts):
            continue
        fit = fit_scaling(pts)
        for r in series:
            r.exponent = fit.exponent
            r.residual = fit.residual


def _quantize_dt(target: float, t_out: float):
    n_sub = max(1, math.ceil(t_out / target - 1e-9))
    return t_out / n_sub, n_sub


def _fast_sup(params):
    def diag(state):
        _, fast = slow_fast_split(state.W, params)
        return lp_norm(fast, math.inf)

    return diag


def _raw_pv(state: State2D, nu: float) -> SpectralField:
    return curl_2d(state.wh) - nu * state.a


def nu_params(nu: float) -> PhysicalParams:
    """Parameter bundle for operations that only read nu (projections)."""
    return PhysicalParams(gamma=2.0, delta=1.0, nu=nu)


@dataclass
class PvErrorDiag:
    """Master error functional and its reconstruction-bound check."""

    pv_error_norm: float
    measured_ratio: float
    multiplier_bound: float


def pv_error_diag(two_d: State2D, qg: QGState, nu: float,
                  m_index: int = 2) -> PvErrorDiag:
    """H^(m-2) norm of the PV mismatch plus the velocity-recovery ratio.

    The mismatch pv(W) - q drives the slow-part error; the velocity error
    norm over the mismatch norm is bounded by the lattice supremum of
    |eta| (nu^2+|eta|^2)^-1 (1+|eta|^2)^(1/2).
    """
    if two_d.grid != qg.grid:
        raise ValueError("2D state and QG state live on different grids")
    if abs(two_d.time - qg.time) > 1e-9 * max(1.0, abs(qg.time)):
        raise ValueError(f"state times differ: {two_d.time} vs {qg.time}")
    varpi = _raw_pv(two_d, nu) - qg.q
    err = sobolev_norm(varpi, m_index - 2)
    slow, _ = slow_fast_split(two_d.W, nu_params(nu))
    _, uh = invert_pv(qg.q, nu)
    wdiff = SpectralField(two_d.grid, slow.coeffs[1:3]) - uh
    ratio = sobolev_norm(wdiff, m_index - 1) / err if err > 0 else 0.0
    mag2 = two_d.grid.wavenumber_magnitude() ** 2
    bound = float(np.max(np.sqrt(mag2) / (nu * nu + mag2) * np.sqrt(1.0 + mag2)))
    return PvErrorDiag(err, ratio, bound)


def _make_data_2d(cfg: ExperimentConfig, grid, params0):
    if cfg.fast_kind == "packet":
        return packet_ill_prepared_2d(
            grid, params0, cfg.seed, cfg.band, cfg.packet_band,
            cfg.slow_amp, cfg.fast_amp, cfg.w3_amp, m=cfg.m_index)
    return ill_prepared_state_2d(grid, params0, cfg.seed, cfg.band,
                                 cfg.slow_amp, cfg.fast_amp, cfg.w3_amp,
                                 m=cfg.m_index)


def _make_data_3d(cfg: ExperimentConfig, grid3):
    if cfg.amp3d == 0.0:
        return SpectralField.zeros(grid3, 4)
    if cfg.fast_kind == "packet":
        return packet_state_3d(grid3, cfg.seed + 17, cfg.packet_band3,
                               cfg.amp3d)
    return random_state_3d(grid3, cfg.seed + 17, cfg.band3, cfg.amp3d,
                           m=cfg.m_index)


def _solve_one_delta(cfg: ExperimentConfig, grid, data, delta, progress=None):
    params = PhysicalParams(cfg.gamma, delta, cfg.nu)
    t_out = cfg.t_final / cfg.n_out
    target = min(cfg.dt or math.inf, delta / 12.0, t_out)
    speed0 = State2D(data).max_speed()
    if speed0 > 0:
        target = min(target, cfg.cfl * min(grid.dx) / (2.0 * speed0))
    dt, n_sub = _quantize_dt(target, t_out)
    sc = SolverConfig2D(dt=dt, t_final=cfg.t_final, snapshot_stride=n_sub,
                        cfl=cfg.cfl)
    traj = solve_intermediate(State2D(data), sc, params,
                              diagnostics={"fast_sup": _fast_sup(params)})
    if progress:
        progress(f"delta={delta:g}: 2D run done ({len(traj.times)} snapshots)")
    return params, traj


def _slow_errors(cfg, traj, qg_traj, params):
    """Sup-in-time errors of the slow part against the limit run."""
    n = min(len(traj.snapshots), len(qg_traj.snapshots))
    a_err = w_err = pv_err = 0.0
    for i in range(n):
        st = traj.snapshots[i]
        qs = qg_traj.snapshots[i]
        if abs(st.time - qs.time) > 1e-6 * max(1.0, cfg.t_final):
            raise RuntimeError(
                f"snapshot times desynchronised: {st.time} vs {qs.time}"
            )
        slow, _ = slow_fast_split(st.W, params)
        bl, ul = invert_pv(qs.q, cfg.nu)
        a_err = max(a_err, sobolev_norm(
            SpectralField(st.grid, slow.coeffs[0:1]) - bl, cfg.m_index))
        wdiff = np.concatenate([
            (SpectralField(st.grid, slow.coeffs[1:3]) - ul).coeffs,
            (st.w3 - qs.u3).coeffs,
        ])
        w_err = max(w_err, sobolev_norm(
            SpectralField(st.grid, wdiff), cfg.m_index - 1))
        varpi = _raw_pv(st, cfg.nu) - qs.q
        pv_err = max(pv_err, sobolev_norm(varpi, cfg.m_index - 2))
    return a_err, w_err, pv_err


def _record_maker(cfg: ExperimentConfig, experiment: str):
    def make(delta, name, value):
        return SweepRecord(experiment, delta, name, float(value),
                           grid_n=cfg.grid_n, box_l=cfg.box_length,
                           seed=cfg.seed)

    return make


def _sweep(one_delta, cfg: ExperimentConfig):
    """Run a per-delta record builder over the sweep, results in delta order.

    On a solver abort the records from completed deltas are attached to the
    exception (trajectory attribute unused) so run_experiment can flush them.
    """
    records: list[SweepRecord] = []
    if cfg.threads <= 1:
        for d in cfg.delta_list:
            try:
                records.extend(one_delta(d))
            except SolverBlowupError as exc:
                exc.partial_records = records
                raise
        return records
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        futures = [pool.submit(one_delta, d) for d in cfg.delta_list]
        for f in futures:
            try:
                records.extend(f.result())
            except SolverBlowupError as exc:
                exc.partial_records = records
                raise
    return records


def run_qg_convergence(cfg: ExperimentConfig, progress=None):
    """Full limit experiment: intermediate sweep against one limit run.

    The limit system does not depend on delta, so it is solved once and its
    snapshots are shared by every sweep entry.
    """
    grid = BoxGrid(2, cfg.grid_n, cfg.box_length)
    params0 = PhysicalParams(cfg.gamma, cfg.delta_list[0], cfg.nu)
    data = _make_data_2d(cfg, grid, params0)
    qg0 = init_from_data(
        SpectralField(grid, data.coeffs[0:1]),
        SpectralField(grid, data.coeffs[1:3]),
        SpectralField(grid, data.coeffs[3:4]),
        cfg.nu,
    )
    t_out = cfg.t_final / cfg.n_out
    dtq, n_sub_q = _quantize_dt(min(cfg.dt or math.inf, t_out), t_out)
    qg_traj = solve_qg(
        qg0,
        SolverConfig2D(dt=dtq, t_final=cfg.t_final, snapshot_stride=n_sub_q,
                       cfl=cfg.cfl),
        cfg.nu,
    )
    if progress:
        progress(f"limit run done ({len(qg_traj.times)} snapshots)")
    mk_rec = _record_maker(cfg, "qg2d_convergence")

    def one(delta):
        params, traj = _solve_one_delta(cfg, grid, data, delta, progress)
        fast = time_lebesgue_norm_nonuniform(
            traj.diagnostics["fast_sup"], traj.diag_times, cfg.q)
        a_err, w_err, pv_err = _slow_errors(cfg, traj, qg_traj, params)
        fast_int = float(np.trapezoid(traj.diagnostics["fast_sup"],
                                      x=traj.diag_times))
        pv0 = sobolev_norm(
            _raw_pv(traj.snapshots[0], cfg.nu) - qg_traj.snapshots[0].q,
            cfg.m_index - 2)
        base = pv0 + fast_int
        gc = math.log(pv_err / base) / cfg.t_final if base > 0 and pv_err > base else 0.0
        return [
            mk_rec(delta, f"fast_l{cfg.q:g}_sup", fast),
            mk_rec(delta, f"slow_a_err_h{cfg.m_index}", a_err),
            mk_rec(delta, f"slow_w_err_h{cfg.m_index - 1}", w_err),
            mk_rec(delta, f"pv_err_h{cfg.m_index - 2}", pv_err),
            mk_rec(delta, "pv_gronwall_c", max(gc, 0.0)),
        ]

    records = _sweep(one, cfg)
    _attach_fits(records, [
        f"fast_l{cfg.q:g}_sup",
        f"slow_a_err_h{cfg.m_index}",
        f"slow_w_err_h{cfg.m_index - 1}",
        f"pv_err_h{cfg.m_index - 2}",
    ])
    return records


def run_fastwave_decay(cfg: ExperimentConfig, progress=None):
    """Fast-wave L^q(0,T;Linf) sweep without the limit comparison."""
    grid = BoxGrid(2, cfg.grid_n, cfg.box_length)
    params0 = PhysicalParams(cfg.gamma, cfg.delta_list[0], cfg.nu)
    data = _make_data_2d(cfg, grid, params0)
    mk_rec = _record_maker(cfg, "fastwave_decay")

    def one(delta):
        _, traj = _solve_one_delta(cfg, grid, data, delta, progress)
        fast = time_lebesgue_norm_nonuniform(
            traj.diagnostics["fast_sup"], traj.diag_times, cfg.q)
        return [mk_rec(delta, f"fast_l{cfg.q:g}_sup", fast)]

    records = _sweep(one, cfg)
    _attach_fits(records, [f"fast_l{cfg.q:g}_sup"])
    return records


def run_dispersion3d(cfg: ExperimentConfig, progress=None):
    """3D perturbation sweep: L^q(0,T;Linf) of (theta, v) against delta.

    The 2D forcing run uses half the 3D step so every RK4 stage time hits a
    stored forcing snapshot exactly.
    """
    grid2 = BoxGrid(2, cfg.grid_n, cfg.box_length)
    grid3 = BoxGrid(3, cfg.grid_n3, cfg.box_length)
    params0 = PhysicalParams(cfg.gamma, cfg.delta_list[0], cfg.nu)
    data2 = _make_data_2d(cfg, grid2, params0)
    data3 = _make_data_3d(cfg, grid3)
    mk_rec = _record_maker(cfg, "dispersion3d")

    def one(delta):
        params = PhysicalParams(cfg.gamma, delta, cfg.nu)
        t_out = cfg.t_final / cfg.n_out
        target = min(cfg.dt or math.inf, delta / 10.0, t_out)
        speed0 = State2D(data2).max_speed() + State3D(data3).max_speed()
        if speed0 > 0:
            target = min(target, cfg.cfl * min(grid3.dx) / (2.0 * speed0))
        dt3, n_sub = _quantize_dt(target, t_out)
        sc2 = SolverConfig2D(dt=dt3 / 2.0, t_final=cfg.t_final,
                             snapshot_stride=1, cfl=cfg.cfl)
        traj2 = solve_intermediate(State2D(data2), sc2, params)
        ctx = ForcingContext.from_trajectory(traj2, grid3)
        sc3 = SolverConfig2D(dt=dt3, t_final=cfg.t_final,
                             snapshot_stride=n_sub, cfl=cfg.cfl)
        traj3 = solve_perturbed(
            State3D(data3), ctx, sc3, params,
            diagnostics={"v_sup": lambda s: lp_norm(s.field, math.inf)},
        )
        if progress:
            progress(f"delta={delta:g}: 3D run done")
        vnorm = time_lebesgue_norm_nonuniform(
            traj3.diagnostics["v_sup"], traj3.diag_times, cfg.q)
        return [
            mk_rec(delta, f"v_l{cfg.q:g}_sup", vnorm),
            mk_rec(delta, f"v_sup_h{cfg.m_index}", traj3.sup_sobolev(cfg.m_index)),
        ]

    records = _sweep(one, cfg)
    _attach_fits(records, [f"v_l{cfg.q:g}_sup"])
    return records


def run_single(cfg: ExperimentConfig, progress=None):
    """One intermediate-system run; dumps snapshots and basic norms."""
    grid = BoxGrid(2, cfg.grid_n, cfg.box_length)
    delta = cfg.delta_list[0]
    params = PhysicalParams(cfg.gamma, delta, cfg.nu)
    data = _make_data_2d(cfg, grid, params)
    _, traj = _solve_one_delta(cfg, grid, data, delta, progress)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_snapshot(out / "initial.spqg", traj.snapshots[0].field)
    write_snapshot(out / "final.spqg", traj.final.field)
    write_sidecar(out / "run_meta.txt", {
        **cfg.to_flat(),
        "run.delta": delta,
        "run.final_time": traj.final.time,
        "run.steps": len(traj.diag_times) - 1,
    })
    mk_rec = _record_maker(cfg, "single_run")
    fast = time_lebesgue_norm_nonuniform(
        traj.diagnostics["fast_sup"], traj.diag_times, cfg.q)
    return [
        mk_rec(delta, f"state_sup_h{cfg.m_index}", traj.sup_sobolev(cfg.m_index)),
        mk_rec(delta, f"fast_l{cfg.q:g}_sup", fast),
    ]


def run_strichartz_probe(cfg: ExperimentConfig, progress=None):
    """Probe rows (k, nu, delta, q, r, t_max, lhs, rhs, ratio, fit)."""
    rows = []
    r = math.inf
    for k in cfg.k_list:
        grid = probe_grid_for_k(k, cfg.probe_base_length, cfg.probe_points)
        lhs_series = []
        for delta in cfg.delta_list:
            params = PhysicalParams(cfg.gamma, delta, cfg.nu)
            probe = DispersionProbe.build(k, params, grid)
            ratio = strichartz_ratio(probe, cfg.q, r)
            rhs = (2.0 ** (2 * k * 0.5)
                   * (mk(k, cfg.nu) * delta) ** (1.0 / cfg.q)
                   * l2_norm(probe.profile))
            rows.append({
                "k": k, "nu": cfg.nu, "delta": delta, "q": cfg.q, "r": "inf",
                "t_max": probe.t_max, "lhs": ratio * rhs, "rhs": rhs,
                "ratio": ratio, "fitted_exponent": None, "residual": None,
            })
            lhs_series.append((delta, ratio * rhs))
        if len(lhs_series) >= 3 and all(v > 0 for _, v in lhs_series):
            fit = fit_scaling(lhs_series)
            for row in rows[-len(lhs_series):]:
                row["fitted_exponent"] = fit.exponent
                row["residual"] = fit.residual
        if progress:
            progress(f"k={k}: probes done")
    return rows


def emit_outputs(records, cfg: ExperimentConfig):
    """Write results.csv, per-fitted-series .dat files and figures.

    Returns a dict of emitted paths.  Output is deterministic: records are
    emitted in construction order and floats use shortest round-trip repr.
    """
    from . import report

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / "results.csv"}
    report.write_csv(records, paths["csv"])
    write_sidecar(out / "config.txt", cfg.to_flat())
    paths["config"] = out / "config.txt"

    fitted = {}
    for r in records:
        if r.exponent is not None:
            fitted.setdefault((r.experiment, r.norm_name), []).append(r)
    for (experiment, name), series in fitted.items():
        series = sorted(series, key=lambda r: -r.delta)
        stem = f"{experiment}__{name}".replace("/", "_")
        dat = out / f"{stem}.dat"
        report.write_series_dat(series, dat)
        png = out / f"{stem}.png"
        report.render_series_figure(series, png)
        paths[stem + ".dat"] = dat
        paths[stem + ".png"] = png
    return paths


def run_experiment(cfg: ExperimentConfig, progress=None):
    """Dispatch on cfg.kind; returns (records_or_rows, emitted_paths)."""
    if cfg.kind == "strichartz_probe":
        from . import report

        rows = run_strichartz_probe(cfg, progress)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "probe.csv"
        report.write_probe_csv(rows, path)
        write_sidecar(out / "config.txt", cfg.to_flat())
        fig = out / "probe_ratios.png"
        report.render_probe_figure(rows, fig)
        return rows, {"csv": path, "figure": fig}
    runners = {
        "qg2d_convergence": run_qg_convergence,
        "fastwave_decay": run_fastwave_decay,
        "dispersion3d": run_dispersion3d,
        "single_run": run_single,
    }
    try:
        records = runners[cfg.kind](cfg, progress)
    except SolverBlowupError as exc:
        partial = getattr(exc, "partial_records", None)
        if partial:
            emit_outputs(partial, cfg)
        raise
    return records, emit_outputs(records, cfg)
