"""Visibility-graph analysis of price time series."""

__version__ = "0.1.0"

from .exceptions import *  # noqa: F401,F403
from .metrics import (
    assortativity,
    average_shortest_path,
    clustering,
    degree_distribution,
    mixing_profile,
    small_world_scan,
)
from .powerlaw import (
    PowerLawFit,
    bootstrap_gof,
    fit_alpha,
    hurwitz_zeta,
    sample_discrete_power_law,
    select_kmin,
)
from .rolling import AnalysisOptions, analyze_series, analyze_window
from .series import (
    CsvSchema,
    PriceSeries,
    WindowSpec,
    describe,
    monthly_partition,
    parse_csv,
    serialize_csv,
    slice_series,
)
from .vg import VisibilityGraph, build_fast, build_naive, export_edgelist, import_edgelist, visible
from .estimators import DiscretePowerLaw, VisibilityGraphFeatures, VisibilityGraphTransformer
