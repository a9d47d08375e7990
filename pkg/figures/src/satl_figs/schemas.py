"""Readers for the satl CSV/manifest contract, with strict header checks.

The renderer trusts nothing: headers must match the documented schemas
exactly, files must contain at least one data row, and every parse error
names the offending columns or file.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

SPECTRUM_HEADER = ["omega_over_gamma", "s_normalized"]
TRAJECTORY_HEADER = ["t_gamma", "pop_upper", "dipole_mag"]
SWEEP_HEADER = ["pump_over_gamma", "mean_n", "fano", "beta",
                "linewidth_fwhm", "st_width", "n_peaks", "status"]


class FigureError(Exception):
    """Anything that prevents rendering a figure."""


class SchemaError(FigureError):
    """A CSV file does not match its documented schema."""


def _read_rows(path, expected_header):
    path = Path(path)
    if not path.exists():
        raise FigureError(f"input file does not exist: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected header "
                              f"{','.join(expected_header)}") from None
        if header != expected_header:
            missing = [c for c in expected_header if c not in header]
            unexpected = [c for c in header if c not in expected_header]
            raise SchemaError(
                f"{path}: header mismatch; missing columns {missing or 'none'}, "
                f"unexpected columns {unexpected or 'none'}, "
                f"column order must be {','.join(expected_header)}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _column(rows, index, path):
    out = np.empty(len(rows))
    for i, row in enumerate(rows):
        cell = row[index] if index < len(row) else ""
        out[i] = float(cell) if cell != "" else np.nan
    return out


def read_spectrum(path):
    rows = _read_rows(path, SPECTRUM_HEADER)
    return {"omega": _column(rows, 0, path), "s": _column(rows, 1, path)}


def read_trajectory(path):
    rows = _read_rows(path, TRAJECTORY_HEADER)
    return {
        "t": _column(rows, 0, path),
        "pop_upper": _column(rows, 1, path),
        "dipole_mag": _column(rows, 2, path),
    }


def read_sweep(path):
    rows = _read_rows(path, SWEEP_HEADER)
    return {
        "pump": _column(rows, 0, path),
        "mean_n": _column(rows, 1, path),
        "fano": _column(rows, 2, path),
        "beta": _column(rows, 3, path),
        "linewidth_fwhm": _column(rows, 4, path),
        "st_width": _column(rows, 5, path),
        "status": [row[7] if len(row) > 7 else "" for row in rows],
    }


def read_manifest(run_dir):
    path = Path(run_dir) / "manifest.json"
    if not path.exists():
        raise FigureError(f"no manifest.json in {run_dir}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FigureError(f"{path}: invalid JSON ({exc})") from exc


def sweep_spectrum_paths(run_dir):
    """(pump value, spectrum CSV path) pairs recorded in a sweep manifest."""
    manifest = read_manifest(run_dir)
    if manifest.get("job") != "sweep":
        raise FigureError(f"{run_dir}: manifest describes a "
                          f"{manifest.get('job')!r} run, not a sweep")
    pairs = []
    for row in manifest.get("rows", []):
        ref = row.get("spectrum")
        if ref:
            pairs.append((float(row["value"]), Path(run_dir) / ref))
    if not pairs:
        raise FigureError(f"{run_dir}: sweep manifest lists no spectrum files")
    return pairs
