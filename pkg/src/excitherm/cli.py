"""Command-line front end: run ensembles and validate configurations.

Outputs are plain CSV (header row, LF line endings, 17 significant
digits so values round-trip exactly) plus a manifest that contains the
fully resolved configuration; re-running from the manifest reproduces
every CSV byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import numpy as np

from . import __version__
from .config import ConfigError, ResolvedConfig, apply_overrides, load, resolve
from .ensemble import EnsembleError, run_ensemble
from .model import diagonalize
from .observables import (bath_temperature, exciton_populations,
                          phase_space_mean, windowed_kinetic_energy)

THREADS_ENV_VAR = "EXCITHERM_THREADS"
TEMPERATURE_WINDOW_PS = 0.05  # 50 fs smoothing window for bath temperatures


def _format(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path: str, header: list[str], columns: list[np.ndarray]) -> None:
    rows = len(columns[0])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(rows):
            fh.write(",".join(_format(float(col[i])) for col in columns) + "\n")


def read_csv(path: str) -> tuple[list[str], np.ndarray]:
    """Parse a CSV written by this tool; returns (header, columns array)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        data = np.array(
            [[float(x) for x in line.rstrip("\n").split(",")]
             for line in fh if line.strip()])
    return header, data


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(
            f"environment variable {THREADS_ENV_VAR}={raw!r} is not an integer")
    if value < 1:
        raise ConfigError(f"{THREADS_ENV_VAR} must be >= 1")
    return value


def _emit_outputs(resolved: ResolvedConfig, result, out_dir: str,
                  n_workers: int) -> None:
    cfg = resolved.run_config
    os.makedirs(out_dir, exist_ok=True)

    basis = diagonalize(cfg.model)
    bath = cfg.bath()
    t = result.times
    n = cfg.model.n_sites

    pops = exciton_populations(result.coherence_series(), basis)
    _write_csv(os.path.join(out_dir, "populations.csv"),
               ["t_ps"] + [f"rho_exc_{e + 1}" for e in range(n)],
               [t] + [pops.values[:, e] for e in range(n)])

    # Widen the smoothing window to the snapshot stride if snapshots are
    # coarser than the 50 fs default.
    stride_ps = float(t[1] - t[0]) if t.size > 1 else TEMPERATURE_WINDOW_PS
    window = max(TEMPERATURE_WINDOW_PS, stride_ps)
    kinetic = windowed_kinetic_energy(result.im2_series(), bath,
                                      window, cfg.units)
    temps = bath_temperature(kinetic, bath, window, cfg.units)
    _write_csv(os.path.join(out_dir, "temperature.csv"),
               ["t_ps"] + [f"T_site_{m + 1}_K" for m in range(n)],
               [t] + [temps.temperature[:, m] for m in range(n)])

    x_mean, p_mean = phase_space_mean(result.re_series(), result.im_series(),
                                      resolved.phase_space_site,
                                      resolved.phase_space_mode)
    _write_csv(os.path.join(out_dir, "phasespace.csv"),
               ["t_ps", "x_mean", "p_mean"], [t, x_mean, p_mean])

    _write_csv(os.path.join(out_dir, "energy.csv"),
               ["t_ps", "E_total_cm"], [t, result.energy_mean])

    mode_cm = float(cfg.units.to_wavenumber(
        bath.omega[resolved.phase_space_site, resolved.phase_space_mode]))
    manifest = {
        "version": __version__,
        "config": resolved.document,
        "master_seed": cfg.master_seed,
        "n_workers": n_workers,
        "trajectories_completed": result.n_trajectories,
        "trajectories_failed": len(result.failures),
        "failures": [
            {"index": f.index, "seed": f.seed, "t_ps": f.t}
            for f in result.failures],
        "scattering_events": result.n_events,
        "snapshots": int(t.size),
        "phase_space_mode_cm": mode_cm,
        "temperature_window_ps": window,
        "columns": {
            "populations.csv": "exciton populations, ascending eigenenergy",
            "temperature.csv": "per-site transient bath temperature (K)",
            "phasespace.csv": "sqrt(2)<Re lambda>, sqrt(2)<Im lambda> of the "
                              f"selected mode ({mode_cm:.6g} cm^-1)",
            "energy.csv": "ensemble-mean total energy (cm^-1)",
        },
    }
    with open(os.path.join(out_dir, "run_manifest.json"), "w",
              encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _dump_trajectories(resolved: ResolvedConfig, out_dir: str) -> None:
    """Debug dump of raw per-trajectory snapshots (memory heavy)."""
    from .ensemble import run_trajectory
    cfg = resolved.run_config
    records = [run_trajectory(cfg, i) for i in range(cfg.n_trajectories)]
    np.savez_compressed(
        os.path.join(out_dir, "trajectories.npz"),
        times=records[0].times,
        alpha=np.stack([r.alpha for r in records]),
        lam=np.stack([r.lam for r in records]),
        energy=np.stack([r.energy for r in records]),
        norm=np.stack([r.norm for r in records]),
        seeds=np.array([r.seed for r in records], dtype=np.uint64),
    )


def cmd_run(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: {args.config}: invalid JSON: {exc}", file=sys.stderr)
        return 2
    try:
        doc = apply_overrides(doc, args.override)
        resolved = resolve(doc)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for message in resolved.warnings:
        print(f"warning: {message}", file=sys.stderr)

    n_workers = args.threads if args.threads is not None else _default_threads()
    try:
        result = run_ensemble(resolved.run_config, n_workers=n_workers)
    except EnsembleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit_outputs(resolved, result, args.out, n_workers)
    if args.dump_trajectories:
        _dump_trajectories(resolved, args.out)
    print(f"wrote {args.out}: {result.times.size} snapshots, "
          f"{result.n_trajectories} trajectories, "
          f"{result.n_events} scattering events")
    return 0


def cmd_validate(args) -> int:
    try:
        resolved = load(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for message in resolved.warnings:
        print(f"warning: {message}", file=sys.stderr)
    cfg = resolved.run_config
    print(f"{args.config}: valid "
          f"(N={cfg.model.n_sites}, Q={cfg.bath_spec.Q}, "
          f"{cfg.n_trajectories} trajectories, "
          f"{cfg.integrator.n_steps} steps)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="excitherm",
        description="Exciton-bath ensemble dynamics with stochastic "
                    "bath thermostatting.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a configuration")
    run.add_argument("--config", required=True, help="JSON configuration file")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--override", action="append", default=[],
                     metavar="SECTION.KEY=VALUE",
                     help="override a config entry (repeatable)")
    run.add_argument("--threads", type=int, default=None,
                     help=f"worker processes (default: ${THREADS_ENV_VAR} or 1)")
    run.add_argument("--dump-trajectories", action="store_true",
                     help="also write raw per-trajectory snapshots (debug; "
                          "memory scales with trajectories x snapshots)")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a configuration without running")
    val.add_argument("--config", required=True, help="JSON configuration file")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
