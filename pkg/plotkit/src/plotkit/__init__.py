"""Figures for Gauss-curvature-flow runs, from the frozen CSV/snapshot files."""

__version__ = "0.1.0"

from .data import (DataFormatError, Snapshot, TrajectoryData, read_snapshot,
                   read_trajectory)
from .figures import KINDS, PlotSpec, fit_envelope, plot

__all__ = ["DataFormatError", "KINDS", "PlotSpec", "Snapshot", "TrajectoryData",
           "fit_envelope", "plot", "read_snapshot", "read_trajectory"]
