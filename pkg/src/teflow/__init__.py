"""Copula-entropy based transfer entropy and windowed TE-flow root-cause analysis."""

from .entropy import KnnConfig, copula_entropy, knn_entropy, mutual_information, rank_transform
from .errors import (
    ConfigError,
    DataQualityError,
    DegenerateSeriesError,
    EmptyAnalysisError,
    InsufficientSamplesError,
    TeFlowError,
)
from .flow import (
    EfficiencySeries,
    FlowCell,
    LagSpec,
    TeFlowResult,
    WindowSpec,
    compute_indicator,
    max_over_lags,
    te_flow,
    window_partition,
)
from .transfer import LagEmbedding, TeEstimate, lag_embed, transfer_entropy

__version__ = "0.1.0"

__all__ = [
    "KnnConfig",
    "rank_transform",
    "knn_entropy",
    "copula_entropy",
    "mutual_information",
    "LagEmbedding",
    "TeEstimate",
    "lag_embed",
    "transfer_entropy",
    "WindowSpec",
    "LagSpec",
    "EfficiencySeries",
    "FlowCell",
    "TeFlowResult",
    "compute_indicator",
    "window_partition",
    "max_over_lags",
    "te_flow",
    "TeFlowError",
    "DataQualityError",
    "InsufficientSamplesError",
    "DegenerateSeriesError",
    "EmptyAnalysisError",
    "ConfigError",
]
