"""Download-delay model and simulator for MDS-coded D2D content delivery."""

__version__ = "0.1.0"

from .delay import (
    DelaySummary,
    GammaTable,
    OutcomeDistribution,
    avg_download_delay,
    eta,
    gamma_table,
    outcome_distribution,
    p_fail_first,
    p_full,
    p_idle,
    p_partial,
    t_eta,
)
from .errors import (
    ConfigError,
    D2dDelayError,
    ModelInconsistencyError,
    NumericalInstabilityError,
)
from .kernels import (
    Method,
    availability_pmf,
    departures_pmf,
    requester_departure_window,
    requester_survival,
)
from .params import CodeParams, SystemParams
from .pmf import Pmf
from .simulate import (
    AttemptStats,
    EventKind,
    RequestModel,
    SimConfig,
    SimMode,
    SimReport,
    d2d_attempt_oracle,
    simulate,
)
from .sweep import (
    CompareReport,
    SweepRow,
    SweepSpec,
    compare_report,
    emit_csv,
    run_sweep,
)
from .charts import PlotKind, emit_svg

__all__ = [
    "AttemptStats",
    "CodeParams",
    "CompareReport",
    "ConfigError",
    "D2dDelayError",
    "DelaySummary",
    "EventKind",
    "GammaTable",
    "Method",
    "ModelInconsistencyError",
    "NumericalInstabilityError",
    "OutcomeDistribution",
    "PlotKind",
    "Pmf",
    "RequestModel",
    "SimConfig",
    "SimMode",
    "SimReport",
    "SweepRow",
    "SweepSpec",
    "SystemParams",
    "availability_pmf",
    "avg_download_delay",
    "compare_report",
    "d2d_attempt_oracle",
    "departures_pmf",
    "emit_csv",
    "emit_svg",
    "eta",
    "gamma_table",
    "outcome_distribution",
    "p_fail_first",
    "p_full",
    "p_idle",
    "p_partial",
    "requester_departure_window",
    "requester_survival",
    "run_sweep",
    "simulate",
    "t_eta",
]
