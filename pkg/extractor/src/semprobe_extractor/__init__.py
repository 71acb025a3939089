"""Pools transformer hidden states into per-layer embedding stores."""

from .datasets import (
    DatasetError,
    PreparedSplit,
    build_labels,
    prepare_nli_pairs,
    prepare_nli_triplets,
    prepare_split,
    prepare_stsb,
    write_label_files,
)
from .extract import (
    ArchitectureError,
    ExtractionReport,
    SplitReport,
    check_architecture,
    extract,
    extract_split,
    run_extraction,
)
from .plan import (
    ARCHITECTURES,
    DATASETS,
    POOLING_BY_ARCHITECTURE,
    ExtractionPlan,
    PlanError,
)
from .pooling import PoolingError, last_token_pool, mean_pool

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURES",
    "ArchitectureError",
    "DATASETS",
    "DatasetError",
    "ExtractionPlan",
    "ExtractionReport",
    "POOLING_BY_ARCHITECTURE",
    "PlanError",
    "PoolingError",
    "PreparedSplit",
    "SplitReport",
    "build_labels",
    "check_architecture",
    "extract",
    "extract_split",
    "last_token_pool",
    "mean_pool",
    "prepare_nli_pairs",
    "prepare_nli_triplets",
    "prepare_split",
    "prepare_stsb",
    "run_extraction",
    "write_label_files",
]
