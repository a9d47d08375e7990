"""CSV and manifest writers: the stable on-disk contract of the toolkit.

Column names are part of the external interface (figure tooling and golden
tests key on them); change them only with a deliberate contract bump.
Missing values (undefined Fano, absent linewidth) are written as empty
fields.  All floats use 12 significant digits so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

SPECTRUM_HEADER = ["omega_over_gamma", "s_normalized"]
TRAJECTORY_HEADER = ["t_gamma", "pop_upper", "dipole_mag"]
SWEEP_HEADER = ["pump_over_gamma", "mean_n", "fano", "beta",
                "linewidth_fwhm", "st_width", "n_peaks", "status"]


def fmt(value) -> str:
    if value is None:
        return ""
    return f"{value:.12g}"


def write_spectrum_csv(path, spec) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SPECTRUM_HEADER)
        for w, s in zip(spec.omega, spec.s_values):
            writer.writerow([fmt(w), fmt(s)])


def write_trajectory_csv(path, record) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_HEADER)
        for t, pop, dip in zip(record.times, record.pop_upper, record.dipole_mag):
            writer.writerow([fmt(t), fmt(pop), fmt(dip)])


def write_events_json(path, record) -> None:
    payload = [{"t_gamma": e.time, "channel": e.channel, "label": e.label}
               for e in record.events]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def write_sweep_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_HEADER)
        for row in rows:
            writer.writerow([
                fmt(row.value), fmt(row.mean_n), fmt(row.fano), fmt(row.beta),
                fmt(row.linewidth_fwhm), fmt(row.st_width),
                "" if row.n_peaks is None else str(row.n_peaks),
                row.status,
            ])


def write_manifest(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
