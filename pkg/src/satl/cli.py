"""Command-line entry point: satl <steady|spectrum|trajectory|sweep>.

Each invocation runs one job from a config file and leaves a run directory
holding a manifest (full config echo, seeds, tool version) plus the job's
CSV artifacts, so any run can be reproduced bit-for-bit.  Failures exit
nonzero with a machine-readable error.json: 1 config, 2 numerical,
3 truncation, 4 fit/doublet.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__, io as satl_io
from .config import JOBS, RunConfig, parse_config
from .errors import (
    ConfigurationError,
    FitError,
    NumericalError,
    SatlError,
    TruncationFailureError,
)
from .liouvillian import solve_with_adaptive_truncation
from .models import build_model
from .observables import beta_for_scheme, photon_stats
from .spectrum import classify_peaks, fit_lorentzian, output_spectrum, schawlow_townes
from .sweep import SweepPlan, run_sweep
from .trajectory import RngStream, run_trajectory

_EXIT_CODES = (
    (ConfigurationError, 1),
    (TruncationFailureError, 3),
    (FitError, 4),
    (NumericalError, 2),
)


def _exit_code_for(exc: Exception) -> int:
    for etype, code in _EXIT_CODES:
        if isinstance(exc, etype):
            return code
    return 2 if isinstance(exc, SatlError) else 70


def _base_manifest(cfg: RunConfig, seed=None) -> dict:
    payload = {
        "tool": "satl",
        "version": __version__,
        "job": cfg.job,
        "scheme": cfg.scheme,
        "config": cfg.echo(),
    }
    if seed is not None:
        payload["seed"] = seed
    return payload


def _solve(cfg: RunConfig, section: str):
    opts = getattr(cfg, section)
    return solve_with_adaptive_truncation(
        lambda n: build_model(cfg.scheme, cfg.params, n),
        start_n_max=opts["start_n_max"], ceiling=opts["ceiling"])


def _run_steady(cfg: RunConfig, out: Path, threads: int, seed) -> str:
    ss, _ = _solve(cfg, "steady")
    stats = photon_stats(ss)
    with open(out / "photon_distribution.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "p_n"])
        for n, p in enumerate(ss.photon_distribution()):
            writer.writerow([n, satl_io.fmt(p)])
    manifest = _base_manifest(cfg)
    manifest.update({
        "n_max": ss.n_max,
        "mean_n": stats.mean_n,
        "fano": stats.fano,
        "beta": beta_for_scheme(cfg.scheme, cfg.params),
        "residual": ss.residual,
        "top_sector_population": ss.top_population,
        "artifacts": ["photon_distribution.csv"],
    })
    satl_io.write_manifest(out / "manifest.json", manifest)
    return f"steady: mean_n={stats.mean_n:.6g} n_max={ss.n_max}"


def _run_spectrum(cfg: RunConfig, out: Path, threads: int, seed) -> str:
    ss, gen = _solve(cfg, "spectrum")
    spec = output_spectrum(ss, gen, points=cfg.spectrum["points"],
                           half_span=cfg.spectrum["half_span"])
    satl_io.write_spectrum_csv(out / "spectrum.csv", spec)
    peaks = classify_peaks(spec)
    manifest = _base_manifest(cfg)
    manifest.update({
        "n_max": ss.n_max,
        "mean_n": photon_stats(ss).mean_n,
        "n_peaks": len(peaks),
        "peaks": [{"omega": p.omega, "height": p.height} for p in peaks],
        "artifacts": ["spectrum.csv"],
    })
    if len(peaks) == 1:
        try:
            fit = fit_lorentzian(spec)
            manifest["linewidth_fwhm"] = fit.fwhm
            manifest["fit_residual"] = fit.residual
            manifest["st_width"] = schawlow_townes(
                cfg.params.kappa, photon_stats(ss).mean_n)
        except FitError:
            manifest["linewidth_fwhm"] = None
    satl_io.write_manifest(out / "manifest.json", manifest)
    return f"spectrum: {len(peaks)} peak(s) over [{spec.omega[0]:g}, {spec.omega[-1]:g}]"


def _trajectory_n_max(cfg: RunConfig) -> int:
    if cfg.trajectory["n_max"] is not None:
        return cfg.trajectory["n_max"]
    ss, _ = solve_with_adaptive_truncation(
        lambda n: build_model(cfg.scheme, cfg.params, n), start_n_max=4, ceiling=60)
    return ss.n_max + 2  # headroom: conditioned states roam above the mean


def _run_trajectory(cfg: RunConfig, out: Path, threads: int, seed) -> str:
    opts = cfg.trajectory
    use_seed = seed if seed is not None else opts["seed"]
    n_max = _trajectory_n_max(cfg)
    model = build_model(cfg.scheme, cfg.params, n_max)
    record = run_trajectory(
        model, t_final=opts["t_final"],
        rng=RngStream(seed=use_seed, substream=opts["substream"]),
        dt=opts["dt"], record_stride=opts["record_stride"])
    satl_io.write_trajectory_csv(out / "trajectory.csv", record)
    satl_io.write_events_json(out / "events.json", record)
    manifest = _base_manifest(cfg, seed=use_seed)
    manifest.update({
        "substream": opts["substream"],
        "n_max": n_max,
        "dt": record.dt,
        "n_events": len(record.events),
        "artifacts": ["trajectory.csv", "events.json"],
    })
    satl_io.write_manifest(out / "manifest.json", manifest)
    return (f"trajectory: {record.times.size} samples, "
            f"{len(record.events)} collapse events")


def _run_sweep_job(cfg: RunConfig, out: Path, threads: int, seed) -> str:
    opts = cfg.sweep
    grid = (SweepPlan.log_grid if opts["scale"] == "log" else SweepPlan.linear_grid)
    plan = grid(cfg.scheme, cfg.params, opts["param"], opts["start"], opts["stop"],
                opts["points"], outputs=tuple(opts["outputs"]),
                start_n_max=opts["start_n_max"], ceiling=opts["ceiling"],
                grid_points=opts["grid_points"])
    rows = run_sweep(plan, out_dir=out, threads=threads)
    # fold the config echo into the sweep manifest
    manifest = satl_io.read_manifest(out / "manifest.json")
    manifest["config"] = cfg.echo()
    satl_io.write_manifest(out / "manifest.json", manifest)
    n_ok = sum(1 for r in rows if r.status == "ok")
    return f"sweep: {n_ok}/{len(rows)} points ok"


_RUNNERS = {
    "steady": _run_steady,
    "spectrum": _run_spectrum,
    "trajectory": _run_trajectory,
    "sweep": _run_sweep_job,
}


def dispatch(cfg: RunConfig, out_dir, threads: int = 1, seed=None) -> str:
    """Run one validated job, writing artifacts into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[cfg.job](cfg, out, threads, seed)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="satl",
        description="single-atom laser toolkit: steady states, spectra, "
                    "trajectories and pump sweeps")
    parser.add_argument("job", choices=JOBS)
    parser.add_argument("--config", required=True, help="run configuration file")
    parser.add_argument("--out", default="satl-out", help="output directory")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="parallel workers for sweep points")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the trajectory seed")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"satl: cannot read config: {exc}", file=sys.stderr)
        return 1

    try:
        cfg = parse_config(text, job=args.job)
        summary = dispatch(cfg, args.out, threads=args.threads, seed=args.seed)
    except Exception as exc:  # noqa: BLE001 - single reporting point
        code = _exit_code_for(exc)
        payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        try:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(json.dumps(payload, indent=2) + "\n")
        except OSError:
            pass
        print(f"satl: error: {exc}", file=sys.stderr)
        return code

    print(f"satl {summary} -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
