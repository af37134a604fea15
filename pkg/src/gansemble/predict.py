"""Prediction models: gradient-boosted trees behind a small uniform interface.

One config is fixed for every subpopulation and sweep point in a run; what
varies is only the training data. A trained model remembers the feature
schema fingerprint it was fitted on and refuses data with a different one,
and it carries real/synthetic row counts for the leakage audit and the
manifest.

A logistic-regression predictor sits behind the same interface for fast
pipeline tests; the experiment default is gradient boosting.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.ensemble import GradientBoostingClassifier
from sklearn.linear_model import LogisticRegression

from .data import Dataset
from .errors import ArtifactError, ConfigError, SchemaError, TrainingError

MODEL_FORMAT_VERSION = 1

PREDICTOR_KINDS = ("gradient_boosting", "logistic")


@dataclass(frozen=True)
class PredictorConfig:
    n_trees: int = 200
    max_depth: int = 3
    learning_rate: float = 0.1
    seed: int = 0
    kind: str = "gradient_boosting"

    def __post_init__(self):
        if self.kind not in PREDICTOR_KINDS:
            raise ConfigError(f"unknown predictor kind {self.kind!r}")
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")

    def with_seed(self, seed: int) -> "PredictorConfig":
        return PredictorConfig(
            n_trees=self.n_trees,
            max_depth=self.max_depth,
            learning_rate=self.learning_rate,
            seed=seed,
            kind=self.kind,
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PredictorConfig":
        try:
            return cls(
                n_trees=int(doc.get("n_trees", 200)),
                max_depth=int(doc.get("max_depth", 3)),
                learning_rate=float(doc.get("learning_rate", 0.1)),
                seed=int(doc.get("seed", 0)),
                kind=str(doc.get("kind", "gradient_boosting")),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed predictor config: {exc}") from exc


@dataclass(frozen=True)
class TrainedModel:
    estimator: object
    config: PredictorConfig
    feature_columns: tuple[str, ...]
    feature_fingerprint: str
    positive_class_code: int
    n_real: int
    n_synthetic: int
    training_provenance: str

    @property
    def n_train(self) -> int:
        return self.n_real + self.n_synthetic


def _feature_matrix(d: Dataset) -> np.ndarray:
    cols = list(d.schema.feature_columns)
    return d.df[cols].to_numpy(dtype=np.float64)


def train_classifier(train: Dataset, cfg: PredictorConfig) -> TrainedModel:
    """Fit a classifier on every non-label column of an encoded dataset.

    Deterministic given (data, config). A training set holding a single
    label class cannot be fit and raises, naming the training set: the
    pipeline surfaces these rather than skipping them silently.
    """
    train.require_encoded("train_classifier")
    if train.n == 0:
        raise TrainingError(f"empty training set ({train.provenance})")
    label_col = train.schema.label_column
    y = train.df[label_col].to_numpy(dtype=np.int64)
    classes = np.unique(y)
    if len(classes) < 2:
        only = train.categories(label_col)[int(classes[0])]
        raise TrainingError(
            f"training set {train.provenance!r} holds a single label class ({only!r}); "
            f"cannot fit a classifier"
        )
    if len(train.categories(label_col)) != 2:
        raise TrainingError(
            f"binary classifier needs a 2-category label, got {train.categories(label_col)}"
        )

    x = _feature_matrix(train)
    # scikit-learn caps random_state at 2**32 - 1; derived seeds are 63-bit.
    sk_seed = cfg.seed % (2**32)
    if cfg.kind == "gradient_boosting":
        estimator = GradientBoostingClassifier(
            n_estimators=cfg.n_trees,
            max_depth=cfg.max_depth,
            learning_rate=cfg.learning_rate,
            random_state=sk_seed,
        )
    else:
        estimator = LogisticRegression(max_iter=2000, random_state=sk_seed)
    estimator.fit(x, y)

    return TrainedModel(
        estimator=estimator,
        config=cfg,
        feature_columns=train.schema.feature_columns,
        feature_fingerprint=train.fingerprint(train.schema.feature_columns),
        positive_class_code=1,
        n_real=train.n_real,
        n_synthetic=train.n_synthetic,
        training_provenance=train.provenance,
    )


def predict_scores(model: TrainedModel, data: Dataset) -> np.ndarray:
    """P(label = positive class) per row; label column values are ignored."""
    data.require_encoded("predict_scores")
    fp = data.fingerprint(model.feature_columns)
    if fp != model.feature_fingerprint:
        raise SchemaError(
            "feature schema mismatch: model was fitted on "
            f"{model.feature_fingerprint[:12]}..., data has {fp[:12]}..."
        )
    if data.n == 0:
        return np.empty(0, dtype=np.float64)
    x = data.df[list(model.feature_columns)].to_numpy(dtype=np.float64)
    proba = model.estimator.predict_proba(x)
    class_index = list(model.estimator.classes_).index(model.positive_class_code)
    return proba[:, class_index]


def save_model(model: TrainedModel, path) -> None:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "config": model.config.to_dict(),
        "feature_columns": list(model.feature_columns),
        "feature_fingerprint": model.feature_fingerprint,
        "positive_class_code": model.positive_class_code,
        "n_real": model.n_real,
        "n_synthetic": model.n_synthetic,
        "training_provenance": model.training_provenance,
        "estimator": model.estimator,
    }
    with open(path, "wb") as fh:
        pickle.dump(payload, fh)


def load_model(path) -> TrainedModel:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"model artifact not found: {path}")
    try:
        with open(path, "rb") as fh:
            payload = pickle.load(fh)
    except (OSError, pickle.UnpicklingError) as exc:
        raise ArtifactError(f"cannot read model artifact {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ArtifactError(
            f"model artifact {path} has unsupported format "
            f"{payload.get('format_version') if isinstance(payload, dict) else '?'}"
        )
    return TrainedModel(
        estimator=payload["estimator"],
        config=PredictorConfig.from_dict(payload["config"]),
        feature_columns=tuple(payload["feature_columns"]),
        feature_fingerprint=payload["feature_fingerprint"],
        positive_class_code=int(payload["positive_class_code"]),
        n_real=int(payload["n_real"]),
        n_synthetic=int(payload["n_synthetic"]),
        training_provenance=payload["training_provenance"],
    )
