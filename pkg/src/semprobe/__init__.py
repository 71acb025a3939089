"""Linear projection probes over layer-wise sentence embeddings.

The package fits small k x d projections on top of frozen embeddings and
measures how much task structure (similarity ranks, entailment geometry)
each encoder layer exposes, sweeping projection width against depth.
"""

from .metrics import (
    ConstantInputError,
    MetricValue,
    average_ranks,
    cosine_accuracy,
    evaluator,
    metric_kind,
    permutation_null_band,
    spearman,
    sts_spearman,
    triplet_accuracy,
)
from .probe import (
    AdamWConfig,
    AdamWState,
    CosineBatch,
    CosineSplit,
    DegeneratePairError,
    DimensionMismatchError,
    FitResult,
    NonFiniteProbeError,
    ProbeMatrix,
    StsBatch,
    StsSplit,
    TrainConfig,
    TripletBatch,
    TripletSplit,
    adamw_step,
    batch_loss,
    cosine_pair_loss,
    fit,
    init_probe,
    loss_gradient,
    sts_loss,
    triplet_loss,
)
from .report import (
    emit_grid_csv,
    emit_grid_json,
    emit_layer_profiles,
    format_value,
    write_sweep_reports,
)
from .seeds import generator, mix_seed
from .store import (
    BadMagicError,
    ChecksumMismatchError,
    DatasetManifest,
    EmbeddingSet,
    EmbeddingStore,
    InvalidEmbeddingError,
    LabelError,
    LabeledPairSet,
    ManifestError,
    StoreError,
    TripletSet,
    TruncatedFileError,
    VersionMismatchError,
    fnv1a_64,
    load_labels,
    read_embedding_file,
    write_embedding_file,
    write_store_split,
)
from .sweep import (
    IDENTITY,
    CellResult,
    ResultGrid,
    RunRecord,
    SweepSpec,
    SweepSpecError,
    collapse_by_dim,
    collapse_by_layer,
    dim_label,
    load_layer_splits,
    run_sweep,
)
from .synth import SynthParams, generate_store

__version__ = "0.1.0"

__all__ = [
    "AdamWConfig",
    "AdamWState",
    "BadMagicError",
    "CellResult",
    "ChecksumMismatchError",
    "ConstantInputError",
    "CosineBatch",
    "CosineSplit",
    "DatasetManifest",
    "DegeneratePairError",
    "DimensionMismatchError",
    "EmbeddingSet",
    "EmbeddingStore",
    "FitResult",
    "IDENTITY",
    "InvalidEmbeddingError",
    "LabelError",
    "LabeledPairSet",
    "ManifestError",
    "MetricValue",
    "NonFiniteProbeError",
    "ProbeMatrix",
    "ResultGrid",
    "RunRecord",
    "StoreError",
    "StsBatch",
    "StsSplit",
    "SweepSpec",
    "SweepSpecError",
    "SynthParams",
    "TrainConfig",
    "TripletBatch",
    "TripletSet",
    "TripletSplit",
    "TruncatedFileError",
    "VersionMismatchError",
    "adamw_step",
    "average_ranks",
    "batch_loss",
    "collapse_by_dim",
    "collapse_by_layer",
    "cosine_accuracy",
    "cosine_pair_loss",
    "dim_label",
    "emit_grid_csv",
    "emit_grid_json",
    "emit_layer_profiles",
    "evaluator",
    "fit",
    "fnv1a_64",
    "format_value",
    "generate_store",
    "generator",
    "init_probe",
    "load_labels",
    "load_layer_splits",
    "loss_gradient",
    "metric_kind",
    "mix_seed",
    "permutation_null_band",
    "read_embedding_file",
    "run_sweep",
    "spearman",
    "sts_loss",
    "sts_spearman",
    "triplet_accuracy",
    "triplet_loss",
    "write_embedding_file",
    "write_sweep_reports",
    "write_store_split",
]
