"""Figure rendering for satl run directories."""

__version__ = "0.1.0"

from .render import KINDS, FigureSpec, build_figure, for_run, render
from .schemas import (
    FigureError,
    SchemaError,
    read_manifest,
    read_spectrum,
    read_sweep,
    read_trajectory,
    sweep_spectrum_paths,
)
