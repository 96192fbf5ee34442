"""Command-line entry points.

Subcommands:
    run <config>      execute the experiment described by a flat config file
    probe <config>    dispersion/Strichartz probe passthrough (probe CSV)
    inspect <file>    print the header and norms of a binary snapshot

Thread count comes only from the environment variable SPQG_THREADS; every
other knob lives in the config file.
"""

from __future__ import annotations

import argparse
import os
import queue
import sys
import threading

from .experiments import ExperimentConfig, run_experiment
from .norms import l2_norm, sobolev_norm
from .snapshots import read_snapshot


class ProgressReporter:
    """Single-consumer print loop fed by per-run producers."""

    def __init__(self, stream=None):
        self._q: queue.Queue = queue.Queue()
        self._stream = stream or sys.stderr
        self._thread = threading.Thread(target=self._drain, daemon=True)
        self._thread.start()

    def __call__(self, message: str) -> None:
        self._q.put(message)

    def _drain(self):
        while True:
            msg = self._q.get()
            if msg is None:
                break
            print(msg, file=self._stream, flush=True)

    def close(self):
        self._q.put(None)
        self._thread.join(timeout=5)


def _load_config(path, kind_override=None, threads=None) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(path)
    updates = {}
    if kind_override and cfg.kind != kind_override:
        updates["kind"] = kind_override
    if threads is not None and threads != cfg.threads:
        updates["threads"] = threads
    if updates:
        from dataclasses import replace

        cfg = replace(cfg, **updates)
    return cfg


def _env_threads() -> int:
    try:
        return max(1, int(os.environ.get("SPQG_THREADS", "1")))
    except ValueError:
        return 1


def cmd_run(args) -> int:
    cfg = _load_config(args.config, threads=_env_threads())
    reporter = ProgressReporter()
    try:
        records, paths = run_experiment(cfg, progress=reporter)
    finally:
        reporter.close()
    print(f"experiment: {cfg.kind}")
    for key, p in sorted(paths.items()):
        print(f"  wrote {p}")
    if cfg.kind != "strichartz_probe":
        seen = set()
        for r in records:
            if r.exponent is not None and r.norm_name not in seen:
                seen.add(r.norm_name)
                print(f"  {r.norm_name}: fitted exponent {r.exponent:.4f} "
                      f"(residual {r.residual:.2e})")
    return 0


def cmd_probe(args) -> int:
    cfg = _load_config(args.config, kind_override="strichartz_probe",
                       threads=_env_threads())
    reporter = ProgressReporter()
    try:
        rows, paths = run_experiment(cfg, progress=reporter)
    finally:
        reporter.close()
    for key, p in sorted(paths.items()):
        print(f"wrote {p}")
    for row in rows:
        print(f"  k={row['k']} delta={row['delta']:g} ratio={row['ratio']:.4g}")
    return 0


def cmd_inspect(args) -> int:
    f = read_snapshot(args.snapshot)
    g = f.grid
    print(f"SPQG snapshot: dim={g.dim} n={g.n} lengths={tuple(round(L, 6) for L in g.lengths)}")
    print(f"components: {f.components}")
    print(f"L2 norm (all components): {l2_norm(f):.12g}")
    print(f"H^1 norm (all components): {sobolev_norm(f, 1.0):.12g}")
    for c in range(f.components):
        print(f"  component {c}: L2 = {l2_norm(f.component(c)):.12g}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spqg",
        description="Pseudo-spectral rotating-flow limit laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config")
    p_run.set_defaults(fn=cmd_run)

    p_probe = sub.add_parser("probe", help="dispersion probe passthrough")
    p_probe.add_argument("config")
    p_probe.set_defaults(fn=cmd_probe)

    p_ins = sub.add_parser("inspect", help="describe a binary snapshot")
    p_ins.add_argument("snapshot")
    p_ins.set_defaults(fn=cmd_inspect)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
