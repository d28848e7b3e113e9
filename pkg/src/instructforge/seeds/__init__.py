from .dedup import DedupParams, near_dedup
from .extract import extract_functions
from .filters import (ExternalCheckerConfig, decontaminate, filter_returns,
                      typecheck_filter)
from .imports import ImportResolver, predict_imports
from .pipeline import CurationConfig, CurationReport, curate_seeds

__all__ = [
    "CurationConfig", "CurationReport", "DedupParams",
    "ExternalCheckerConfig", "ImportResolver", "curate_seeds",
    "decontaminate", "extract_functions", "filter_returns", "near_dedup",
    "predict_imports", "typecheck_filter",
]
