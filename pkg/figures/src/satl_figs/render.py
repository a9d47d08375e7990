"""Deterministic figure rendering from satl run artifacts.

Four figure kinds, one per canonical plot of the problem domain:

* spectrum-waterfall: per-pump spectra from a sweep run, vertically offset.
* linewidth-curve: fitted linewidth vs pump with the kappa/2<n> reference
  dashed underneath.
* photon-curve: mean photon number vs pump.
* trajectory-panel: conditioned upper-level population and dipole
  magnitude in two stacked panels.

Rendering is read-only over its inputs and reproducible: fixed figure
geometry, fixed fonts, no timestamps or hashed ids in the output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .schemas import (
    FigureError,
    read_spectrum,
    read_sweep,
    read_trajectory,
    sweep_spectrum_paths,
)

KINDS = ("spectrum-waterfall", "linewidth-curve", "photon-curve", "trajectory-panel")

_RC = {
    "figure.figsize": (6.4, 4.4),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "svg.hashsalt": "satl-figs",
    "axes.grid": True,
    "grid.alpha": 0.3,
}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: a kind, its input CSVs, labels, and the output path."""

    kind: str
    inputs: tuple  # CSV paths; waterfall pairs them with pump labels
    output: str
    xlabel: str = ""
    ylabel: str = ""
    labels: tuple = ()  # per-input labels (waterfall offsets)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FigureError(
                f"unknown figure kind {self.kind!r}; expected one of {', '.join(KINDS)}")


def for_run(run_dir, kind, output=None) -> FigureSpec:
    """Build a FigureSpec from a run directory produced by the satl CLI."""
    run = Path(run_dir)
    out = Path(output) if output else run / f"{kind}.png"
    if kind == "spectrum-waterfall":
        pairs = sweep_spectrum_paths(run)
        return FigureSpec(
            kind=kind,
            inputs=tuple(str(p) for _, p in pairs),
            labels=tuple(f"{v:g}" for v, _ in pairs),
            output=str(out),
            xlabel="omega / gamma", ylabel="S(omega), offset per pump")
    if kind in ("linewidth-curve", "photon-curve"):
        return FigureSpec(
            kind=kind, inputs=(str(run / "sweep.csv"),), output=str(out),
            xlabel="pump / gamma",
            ylabel="linewidth FWHM / gamma" if kind == "linewidth-curve"
            else "mean photon number")
    if kind == "trajectory-panel":
        return FigureSpec(
            kind=kind, inputs=(str(run / "trajectory.csv"),), output=str(out),
            xlabel="t * gamma", ylabel="conditioned observables")
    raise FigureError(f"unknown figure kind {kind!r}")


def _build_waterfall(spec, ax):
    offset = 0.0
    step = None
    for path, label in zip(spec.inputs, spec.labels or [""] * len(spec.inputs)):
        data = read_spectrum(path)
        if step is None:
            step = 1.1 * float(np.nanmax(data["s"])) or 1.0
        ax.plot(data["omega"], data["s"] + offset, lw=1.0, label=f"pump {label}")
        offset += step
    ax.legend(fontsize=7, loc="upper right")


def _finite(x, y):
    mask = np.isfinite(x) & np.isfinite(y)
    return x[mask], y[mask]


def _build_linewidth(spec, ax):
    data = read_sweep(spec.inputs[0])
    pump, width = _finite(data["pump"], data["linewidth_fwhm"])
    if pump.size == 0:
        raise FigureError(f"{spec.inputs[0]}: no fitted linewidths to plot")
    ax.loglog(pump, width, "o-", lw=1.2, ms=3.5, label="fitted FWHM")
    pump_st, st = _finite(data["pump"], data["st_width"])
    if pump_st.size:
        ax.loglog(pump_st, st, "k--", lw=1.0, label="kappa / 2<n>")
    ax.legend(fontsize=8)


def _build_photon(spec, ax):
    data = read_sweep(spec.inputs[0])
    pump, mean_n = _finite(data["pump"], data["mean_n"])
    if pump.size == 0:
        raise FigureError(f"{spec.inputs[0]}: no photon numbers to plot")
    ax.semilogx(pump, mean_n, "o-", lw=1.2, ms=3.5)


def _build_trajectory(spec, axes):
    data = read_trajectory(spec.inputs[0])
    top, bottom = axes
    top.plot(data["t"], data["pop_upper"], lw=0.8)
    top.set_ylabel("upper-level population")
    top.set_ylim(-0.05, 1.05)
    bottom.plot(data["t"], data["dipole_mag"], lw=0.8, color="C1")
    bottom.set_ylabel("|dipole|")


def build_figure(spec: FigureSpec):
    """Compose the matplotlib Figure for a spec (no file output)."""
    with plt.rc_context(_RC):
        if spec.kind == "trajectory-panel":
            fig, axes = plt.subplots(2, 1, sharex=True)
            _build_trajectory(spec, axes)
            axes[1].set_xlabel(spec.xlabel or "t * gamma")
        else:
            fig, ax = plt.subplots()
            if spec.kind == "spectrum-waterfall":
                _build_waterfall(spec, ax)
            elif spec.kind == "linewidth-curve":
                _build_linewidth(spec, ax)
            elif spec.kind == "photon-curve":
                _build_photon(spec, ax)
            ax.set_xlabel(spec.xlabel)
            ax.set_ylabel(spec.ylabel)
        fig.tight_layout()
        return fig


def render(spec: FigureSpec) -> str:
    """Render a spec to its output path; returns the path written.

    All inputs are validated before the output file is touched, so a
    schema error never leaves a truncated or empty image behind.
    """
    fig = build_figure(spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fmt = out.suffix.lstrip(".").lower() or "png"
    metadata = {"Software": None} if fmt == "png" else {"Date": None}
    try:
        fig.savefig(out, format=fmt, metadata=metadata)
    finally:
        plt.close(fig)
    return str(out)
