"""Intraday volatility measures, jump detection, jump-MEM estimation and
announcement-effect classification."""

from .ajm import (
    AjmParams,
    AjmState,
    filter_state,
    loglik,
    persistence,
    residuals,
    simulate,
)
from .classify import (
    ClassLabel,
    ClassificationTable,
    adjusted_rand_index,
    agreement_matrix,
    classify_announcements,
    classify_triple,
    jump_surprise,
)
from .diurnal import SeasonalProfile, apply_profile, bin_diagnostics, estimate_profile
from .fit import AjmFit, FitOptions, fit, ljung_box, robust_se
from .ingest import (
    AnnouncementEvent,
    PricePanel,
    ReturnPanel,
    SessionConfig,
    compute_returns,
    load_announcements,
    load_price_panel,
    map_announcement_to_bin,
)
from .measures import (
    BinMeasures,
    bipower_variation,
    build_bin_measures,
    decompose,
    jump_statistic,
    jump_threshold,
    realized_volatility,
    tripower_quarticity,
)
from .synth import SynthSpec, gen_paths

__version__ = "0.1.0"

__all__ = [
    "AjmParams", "AjmState", "filter_state", "loglik", "persistence",
    "residuals", "simulate",
    "ClassLabel", "ClassificationTable", "adjusted_rand_index",
    "agreement_matrix", "classify_announcements", "classify_triple",
    "jump_surprise",
    "SeasonalProfile", "apply_profile", "bin_diagnostics", "estimate_profile",
    "AjmFit", "FitOptions", "fit", "ljung_box", "robust_se",
    "AnnouncementEvent", "PricePanel", "ReturnPanel", "SessionConfig",
    "compute_returns", "load_announcements", "load_price_panel",
    "map_announcement_to_bin",
    "BinMeasures", "bipower_variation", "build_bin_measures", "decompose",
    "jump_statistic", "jump_threshold", "realized_volatility",
    "tripower_quarticity",
    "SynthSpec", "gen_paths",
    "__version__",
]
