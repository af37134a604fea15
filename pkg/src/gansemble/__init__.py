"""Subpopulation-aware ensemble modeling with per-subpopulation synthetic augmentation.

The package trains one conditional tabular generator per underrepresented
subpopulation, sweeps synthetic augmentation fractions, fits
subpopulation-specific gradient-boosting predictors, and compares the result
against resampling baselines under a leakage-audited evaluation protocol.
"""

__version__ = "0.1.0"

from .data import (
    ColumnSpec,
    Dataset,
    Schema,
    SplitPair,
    SubpopulationPartition,
    concat_datasets,
    encode_like,
    load_dataset,
    load_encoded_dataset,
    partition_by_pm,
    preprocess,
    save_code_tables,
    save_dataset,
    stratified_split,
)
from .errors import (
    ArtifactError,
    ConfigError,
    DataError,
    DivergenceError,
    EmptyDatasetError,
    GansembleError,
    MetricUndefinedError,
    ParseError,
    PipelineError,
    PipelineIntegrityError,
    ResampleError,
    SchemaError,
    SelectionError,
    SweepError,
    TrainingError,
)
from .gan import GanConfig, fit_generator, generate, load_generator, save_generator
from .metrics import (
    METRIC_NAMES,
    Curve,
    CurvePoint,
    MetricReport,
    average_precision,
    build_curves,
    curves_to_rows,
    metric_suite,
    roc_auc,
)
from .pipeline import (
    DEFAULT_FRACTIONS,
    CtganBackend,
    FittedGenerator,
    OracleBackend,
    ProtocolSplits,
    SweepConfig,
    augment_training_set,
    build_protocol_splits,
    identify_underperforming,
    run_baseline_comparison,
    run_sweep,
    select_best_fraction,
)
from .predict import (
    PredictorConfig,
    TrainedModel,
    load_model,
    predict_scores,
    save_model,
    train_classifier,
)
from .resample import ResampleReport, random_undersample, smote_oversample
from .results import (
    AuditEntry,
    ComparisonRow,
    ComparisonTable,
    IdentifyResult,
    LeakageReport,
    SweepPoint,
    SweepResult,
)
from .runner import RunConfig, run_end_to_end, verify_manifest
from .seeding import derive_seed
from .simulate import (
    CategoricalSpec,
    SimConfig,
    SubpopSpec,
    bayes_auc,
    oracle_sample,
    simulate_cohort,
)

__all__ = [
    "__version__",
    # errors
    "ArtifactError",
    "ConfigError",
    "DataError",
    "DivergenceError",
    "EmptyDatasetError",
    "GansembleError",
    "MetricUndefinedError",
    "ParseError",
    "PipelineError",
    "PipelineIntegrityError",
    "ResampleError",
    "SchemaError",
    "SelectionError",
    "SweepError",
    "TrainingError",
    # data
    "ColumnSpec",
    "Dataset",
    "Schema",
    "SplitPair",
    "SubpopulationPartition",
    "concat_datasets",
    "encode_like",
    "load_dataset",
    "load_encoded_dataset",
    "partition_by_pm",
    "preprocess",
    "save_code_tables",
    "save_dataset",
    "stratified_split",
    # metrics
    "METRIC_NAMES",
    "Curve",
    "CurvePoint",
    "MetricReport",
    "average_precision",
    "build_curves",
    "curves_to_rows",
    "metric_suite",
    "roc_auc",
    # simulator
    "CategoricalSpec",
    "SimConfig",
    "SubpopSpec",
    "bayes_auc",
    "oracle_sample",
    "simulate_cohort",
    # resamplers
    "ResampleReport",
    "random_undersample",
    "smote_oversample",
    # predictors
    "PredictorConfig",
    "TrainedModel",
    "load_model",
    "predict_scores",
    "save_model",
    "train_classifier",
    # generator
    "GanConfig",
    "fit_generator",
    "generate",
    "load_generator",
    "save_generator",
    # pipeline
    "DEFAULT_FRACTIONS",
    "CtganBackend",
    "FittedGenerator",
    "OracleBackend",
    "ProtocolSplits",
    "SweepConfig",
    "augment_training_set",
    "build_protocol_splits",
    "identify_underperforming",
    "run_baseline_comparison",
    "run_sweep",
    "select_best_fraction",
    # results
    "AuditEntry",
    "ComparisonRow",
    "ComparisonTable",
    "IdentifyResult",
    "LeakageReport",
    "SweepPoint",
    "SweepResult",
    # runner
    "RunConfig",
    "run_end_to_end",
    "verify_manifest",
    # seeding
    "derive_seed",
]
