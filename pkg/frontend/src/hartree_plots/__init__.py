"""Figure rendering for the torus-simulator CSV outputs: growth traces on
linear axes, threshold sweeps on log-log axes with optional power-law fits."""

from .figures import PlotJob, fit_loglog_slope, render
from .io import SCHEMAS, SchemaError, load_table

__version__ = "0.1.0"
