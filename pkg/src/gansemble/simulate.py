"""Synthetic EHR-like cohorts with a known outcome concept.

Each subpopulation draws continuous features from its own Gaussian and
categorical features from its own multinomial; labels follow a logistic
concept on the continuous features, so the Bayes-optimal score is known in
closed form. That gives desk-scale ground truth: a "cheating" generator that
samples the true subpopulation distribution, and a Monte Carlo estimate of
the best reachable ROCAUC.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .data import ColumnSpec, Dataset, Schema
from .errors import ConfigError
from .metrics import roc_auc

LABEL_COLUMN = "outcome"
PM_COLUMN = "group"
LABEL_NEGATIVE = "neg"
LABEL_POSITIVE = "pos"

MIN_MC_SAMPLES = 10_000

_PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class CategoricalSpec:
    """One categorical feature: level count and per-subpopulation probabilities."""

    levels: int
    probs: dict[str, tuple[float, ...]]

    def __post_init__(self):
        if self.levels < 2:
            raise ConfigError(f"categorical feature needs >= 2 levels, got {self.levels}")
        for pm, p in self.probs.items():
            if len(p) != self.levels:
                raise ConfigError(
                    f"categorical probabilities for SP {pm!r} have length {len(p)}, expected {self.levels}"
                )
            if any(x < 0 for x in p):
                raise ConfigError(f"negative categorical probability for SP {pm!r}")
            if abs(sum(p) - 1.0) > _PROB_SUM_TOL:
                raise ConfigError(
                    f"categorical probabilities for SP {pm!r} sum to {sum(p)}, expected 1"
                )

    def level_names(self) -> tuple[str, ...]:
        return tuple(f"lv{i}" for i in range(self.levels))


@dataclass(frozen=True)
class SubpopSpec:
    """Size, feature distribution, and optional concept override for one subpopulation."""

    pm_value: str
    size: int
    feature_means: tuple[float, ...]
    feature_spreads: tuple[float, ...]
    concept_weights: tuple[float, ...] | None = None
    concept_bias: float | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ConfigError(f"subpopulation {self.pm_value!r} needs size >= 1, got {self.size}")
        if len(self.feature_means) != len(self.feature_spreads):
            raise ConfigError(
                f"subpopulation {self.pm_value!r}: means and spreads differ in length"
            )
        if any(s <= 0 for s in self.feature_spreads):
            raise ConfigError(f"subpopulation {self.pm_value!r}: spreads must be > 0")


@dataclass(frozen=True)
class SimConfig:
    """Cohort recipe: subpopulations, feature distributions, outcome concept.

    ``concept_weights``/``concept_bias`` define the shared logistic concept
    P(label=pos | x) = sigmoid(weights . x_continuous + bias); a subpopulation
    may override both to simulate concept shift. ``noise_scale`` adds Gaussian
    noise on the logit before the label draw, degrading attainable AUC without
    changing the optimal ranking.
    """

    n_continuous: int
    subpops: tuple[SubpopSpec, ...]
    concept_weights: tuple[float, ...]
    concept_bias: float = 0.0
    categorical_specs: tuple[CategoricalSpec, ...] = ()
    noise_scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.subpops:
            raise ConfigError("degenerate simulation config: zero subpopulations")
        if self.n_continuous < 1:
            raise ConfigError("n_continuous must be >= 1")
        if self.noise_scale < 0:
            raise ConfigError(f"noise_scale must be >= 0, got {self.noise_scale}")
        names = [s.pm_value for s in self.subpops]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate subpopulation pm_value in simulation config")
        if len(self.concept_weights) != self.n_continuous:
            raise ConfigError(
                f"concept_weights length {len(self.concept_weights)} != n_continuous {self.n_continuous}"
            )
        for sub in self.subpops:
            if len(sub.feature_means) != self.n_continuous:
                raise ConfigError(
                    f"subpopulation {sub.pm_value!r}: feature vectors have length "
                    f"{len(sub.feature_means)}, expected {self.n_continuous}"
                )
            if sub.concept_weights is not None and len(sub.concept_weights) != self.n_continuous:
                raise ConfigError(
                    f"subpopulation {sub.pm_value!r}: concept weight override has wrong length"
                )
        for spec in self.categorical_specs:
            for sub in self.subpops:
                if sub.pm_value not in spec.probs:
                    raise ConfigError(
                        f"categorical spec lacks probabilities for SP {sub.pm_value!r}"
                    )

    @property
    def pm_values(self) -> tuple[str, ...]:
        return tuple(s.pm_value for s in self.subpops)

    def subpop(self, pm_value: str) -> SubpopSpec:
        for sub in self.subpops:
            if sub.pm_value == pm_value:
                return sub
        raise ConfigError(f"unknown subpopulation {pm_value!r}")

    def effective_concept(self, sub: SubpopSpec) -> tuple[np.ndarray, float]:
        weights = sub.concept_weights if sub.concept_weights is not None else self.concept_weights
        bias = sub.concept_bias if sub.concept_bias is not None else self.concept_bias
        return np.asarray(weights, dtype=np.float64), float(bias)

    def schema(self) -> Schema:
        cols = [ColumnSpec(f"num_{i}", "continuous") for i in range(self.n_continuous)]
        cols += [ColumnSpec(f"cat_{i}", "categorical") for i in range(len(self.categorical_specs))]
        cols.append(ColumnSpec(LABEL_COLUMN, "categorical", "label"))
        cols.append(ColumnSpec(PM_COLUMN, "categorical", "population_marker"))
        return Schema(columns=tuple(cols))

    def to_dict(self) -> dict:
        return {
            "n_continuous": self.n_continuous,
            "concept_weights": list(self.concept_weights),
            "concept_bias": self.concept_bias,
            "noise_scale": self.noise_scale,
            "seed": self.seed,
            "subpops": [
                {
                    "pm_value": s.pm_value,
                    "size": s.size,
                    "feature_means": list(s.feature_means),
                    "feature_spreads": list(s.feature_spreads),
                    **(
                        {"concept_weights": list(s.concept_weights)}
                        if s.concept_weights is not None
                        else {}
                    ),
                    **({"concept_bias": s.concept_bias} if s.concept_bias is not None else {}),
                }
                for s in self.subpops
            ],
            "categorical_specs": [
                {"levels": c.levels, "probs": {pm: list(p) for pm, p in sorted(c.probs.items())}}
                for c in self.categorical_specs
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SimConfig":
        try:
            subpops = tuple(
                SubpopSpec(
                    pm_value=str(s["pm_value"]),
                    size=int(s["size"]),
                    feature_means=tuple(float(x) for x in s["feature_means"]),
                    feature_spreads=tuple(float(x) for x in s["feature_spreads"]),
                    concept_weights=(
                        tuple(float(x) for x in s["concept_weights"])
                        if s.get("concept_weights") is not None
                        else None
                    ),
                    concept_bias=(
                        float(s["concept_bias"]) if s.get("concept_bias") is not None else None
                    ),
                )
                for s in doc["subpops"]
            )
            categorical_specs = tuple(
                CategoricalSpec(
                    levels=int(c["levels"]),
                    probs={str(pm): tuple(float(x) for x in p) for pm, p in c["probs"].items()},
                )
                for c in doc.get("categorical_specs", [])
            )
            return cls(
                n_continuous=int(doc["n_continuous"]),
                subpops=subpops,
                concept_weights=tuple(float(x) for x in doc["concept_weights"]),
                concept_bias=float(doc.get("concept_bias", 0.0)),
                categorical_specs=categorical_specs,
                noise_scale=float(doc.get("noise_scale", 0.0)),
                seed=int(doc.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed simulation config: {exc}") from exc

    @classmethod
    def from_json_file(cls, path) -> "SimConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read simulation config {path}: {exc}") from exc
        return cls.from_dict(doc)


def _sample_sp(
    cfg: SimConfig, sub: SubpopSpec, n: int, rng: np.random.Generator
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Draw n rows of (features, labels) from one subpopulation's distribution."""
    columns: dict[str, np.ndarray] = {}
    x = np.empty((n, cfg.n_continuous), dtype=np.float64)
    for j in range(cfg.n_continuous):
        x[:, j] = rng.normal(sub.feature_means[j], sub.feature_spreads[j], size=n)
        columns[f"num_{j}"] = x[:, j]
    for i, spec in enumerate(cfg.categorical_specs):
        levels = np.asarray(spec.level_names(), dtype=object)
        draws = rng.choice(spec.levels, size=n, p=np.asarray(spec.probs[sub.pm_value]))
        columns[f"cat_{i}"] = levels[draws]

    weights, bias = cfg.effective_concept(sub)
    logits = x @ weights + bias
    if cfg.noise_scale > 0:
        logits = logits + cfg.noise_scale * rng.standard_normal(n)
    labels = (rng.random(n) < expit(logits)).astype(np.int64)
    return columns, labels


def _assemble(cfg: SimConfig, columns: dict[str, np.ndarray], labels: np.ndarray,
              pm: np.ndarray, row_ids: np.ndarray, provenance: str) -> Dataset:
    import pandas as pd

    schema = cfg.schema()
    label_names = np.asarray([LABEL_NEGATIVE, LABEL_POSITIVE], dtype=object)
    data = {}
    for spec in schema.columns:
        if spec.name == LABEL_COLUMN:
            data[spec.name] = pd.Series(label_names[labels], dtype="object")
        elif spec.name == PM_COLUMN:
            data[spec.name] = pd.Series(pm, dtype="object")
        elif spec.kind == "continuous":
            data[spec.name] = pd.Series(columns[spec.name], dtype="float64")
        else:
            data[spec.name] = pd.Series(columns[spec.name], dtype="object")
    df = pd.DataFrame(data, columns=list(schema.names))
    return Dataset(schema=schema, df=df, provenance=provenance, row_ids=row_ids)


def simulate_cohort(cfg: SimConfig) -> Dataset:
    """Sample the full cohort: one block of rows per subpopulation, in config order."""
    rng = np.random.default_rng(cfg.seed)
    blocks_cols: list[dict[str, np.ndarray]] = []
    blocks_labels: list[np.ndarray] = []
    blocks_pm: list[np.ndarray] = []
    blocks_ids: list[np.ndarray] = []
    for sub in cfg.subpops:
        columns, labels = _sample_sp(cfg, sub, sub.size, rng)
        blocks_cols.append(columns)
        blocks_labels.append(labels)
        blocks_pm.append(np.full(sub.size, sub.pm_value, dtype=object))
        blocks_ids.append(
            np.array([f"sim:{sub.pm_value}:{i}" for i in range(sub.size)], dtype=object)
        )
    merged = {
        name: np.concatenate([b[name] for b in blocks_cols]) for name in blocks_cols[0]
    } if blocks_cols[0] else {}
    return _assemble(
        cfg,
        merged,
        np.concatenate(blocks_labels),
        np.concatenate(blocks_pm),
        np.concatenate(blocks_ids),
        provenance=f"simulate:seed={cfg.seed}",
    )


def oracle_sample(cfg: SimConfig, pm_value: str, n: int, seed: int) -> Dataset:
    """Fresh rows from the true distribution of one subpopulation.

    This is the cheating generator: it exposes pipeline behavior with a
    generator of known-perfect fidelity. Row ids carry the synthetic prefix.
    """
    if n < 0:
        raise ConfigError(f"sample size must be >= 0, got {n}")
    sub = cfg.subpop(pm_value)
    rng = np.random.default_rng(seed)
    columns, labels = _sample_sp(cfg, sub, n, rng)
    row_ids = np.array(
        [f"synthetic:oracle:{pm_value}:{seed}:{i}" for i in range(n)], dtype=object
    )
    return _assemble(
        cfg,
        columns,
        labels,
        np.full(n, pm_value, dtype=object),
        row_ids,
        provenance=f"oracle:{pm_value}:seed={seed}",
    )


def bayes_auc(cfg: SimConfig, pm_value: str, n_mc: int, seed: int) -> float:
    """Monte Carlo ROCAUC of the true conditional score on one subpopulation.

    Upper bound (in expectation) for any predictor evaluated on this
    subpopulation's distribution.
    """
    if n_mc < MIN_MC_SAMPLES:
        raise ConfigError(f"n_mc must be >= {MIN_MC_SAMPLES}, got {n_mc}")
    sub = cfg.subpop(pm_value)
    rng = np.random.default_rng(seed)
    weights, bias = cfg.effective_concept(sub)
    x = np.empty((n_mc, cfg.n_continuous), dtype=np.float64)
    for j in range(cfg.n_continuous):
        x[:, j] = rng.normal(sub.feature_means[j], sub.feature_spreads[j], size=n_mc)
    logits = x @ weights + bias
    noisy = logits
    if cfg.noise_scale > 0:
        noisy = logits + cfg.noise_scale * rng.standard_normal(n_mc)
    labels = (rng.random(n_mc) < expit(noisy)).astype(np.int64)
    return roc_auc(labels, expit(logits))
