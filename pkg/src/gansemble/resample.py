"""Rebalancing baselines: SMOTE oversampling and random under-sampling.

Both operate on a preprocessed dataset with an arbitrary categorical column
acting as the class (the baseline protocols use the population marker).
SMOTE interpolates continuous features between a parent row and one of its
k nearest same-class neighbors and copies every categorical cell from the
parent; RUS keeps a uniform subset of each class. Both are deterministic
given their seed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from sklearn.neighbors import NearestNeighbors

from .data import Dataset, SYNTHETIC_ID_PREFIX
from .errors import ConfigError, ResampleError

logger = logging.getLogger(__name__)

DEFAULT_K_NEIGHBORS = 5


@dataclass(frozen=True)
class ResampleReport:
    before: dict[str, int]
    after: dict[str, int]
    method: str
    seed: int
    k_neighbors: int | None = None

    def to_dict(self) -> dict:
        doc = {
            "method": self.method,
            "before": {k: self.before[k] for k in sorted(self.before)},
            "after": {k: self.after[k] for k in sorted(self.after)},
            "seed": self.seed,
        }
        if self.k_neighbors is not None:
            doc["k_neighbors"] = self.k_neighbors
        return doc


def _class_counts(d: Dataset, class_column: str) -> dict[str, int]:
    decoded = d.decode_column(class_column)
    return {str(v): int((decoded == v).sum()) for v in sorted(set(decoded))}


def _standardized_continuous(d: Dataset) -> np.ndarray:
    cols = d.schema.continuous_columns
    x = d.df[list(cols)].to_numpy(dtype=np.float64)
    mu = x.mean(axis=0)
    sigma = x.std(axis=0)
    sigma[sigma == 0.0] = 1.0  # constant column: zero spread, zero distance either way
    return (x - mu) / sigma


def smote_oversample(
    train: Dataset,
    class_column: str,
    k: int = DEFAULT_K_NEIGHBORS,
    seed: int = 0,
) -> tuple[Dataset, ResampleReport]:
    """Oversample every class up to the majority count by segment interpolation.

    Each synthetic row is parent + lambda * (neighbor - parent) on the
    continuous features, lambda uniform in [0, 1], the neighbor drawn from
    the parent's k nearest same-class rows (Euclidean distance on
    standardized continuous features). Categorical cells, label and
    population marker included, come from the parent. Original rows are all
    preserved.
    """
    train.require_encoded("smote_oversample")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if not train.schema.continuous_columns:
        raise ResampleError("SMOTE needs at least one continuous feature to interpolate")
    spec = train.schema.column(class_column)
    if spec.kind != "categorical":
        raise ConfigError(f"class column {class_column!r} must be categorical")

    before = _class_counts(train, class_column)
    tiny = {c: n for c, n in before.items() if n < 2}
    if tiny:
        raise ResampleError(
            f"SMOTE needs >= 2 rows per class; too small: {sorted(tiny.items())}"
        )
    majority = max(before.values())

    decoded = train.decode_column(class_column)
    cont_cols = list(train.schema.continuous_columns)
    z = _standardized_continuous(train)
    raw = train.df[cont_cols].to_numpy(dtype=np.float64)

    rng = np.random.default_rng(seed)
    synth_frames: list[pd.DataFrame] = []
    synth_ids: list[str] = []
    for cls in sorted(before):
        deficit = majority - before[cls]
        if deficit == 0:
            continue
        positions = np.flatnonzero(decoded == cls)
        n_c = len(positions)
        k_eff = min(k, n_c - 1)
        if k_eff < k:
            logger.warning(
                "SMOTE class %r has %d rows; using k=%d instead of %d",
                cls, n_c, k_eff, k,
            )
        nn = NearestNeighbors(n_neighbors=k_eff + 1).fit(z[positions])
        # column 0 is the point itself
        neighbor_idx = nn.kneighbors(z[positions], return_distance=False)[:, 1:]

        parents = rng.integers(0, n_c, size=deficit)
        picks = rng.integers(0, k_eff, size=deficit)
        lams = rng.random(deficit)

        parent_pos = positions[parents]
        neighbor_pos = positions[neighbor_idx[parents, picks]]
        new_cont = raw[parent_pos] + lams[:, None] * (raw[neighbor_pos] - raw[parent_pos])

        block = train.df.iloc[parent_pos].copy().reset_index(drop=True)
        for j, col in enumerate(cont_cols):
            block[col] = new_cont[:, j]
        synth_frames.append(block)
        synth_ids.extend(
            f"{SYNTHETIC_ID_PREFIX}smote:{cls}:{seed}:{i}" for i in range(deficit)
        )

    if not synth_frames:
        report = ResampleReport(
            before=before, after=dict(before), method="smote", seed=seed, k_neighbors=k
        )
        return train, report
    report = ResampleReport(
        before=before,
        after={c: majority for c in before},
        method="smote",
        seed=seed,
        k_neighbors=k,
    )
    df = pd.concat([train.df] + synth_frames, ignore_index=True)
    row_ids = np.concatenate([train.row_ids, np.asarray(synth_ids, dtype=object)])
    out = Dataset(
        schema=train.schema,
        df=df,
        provenance=f"{train.provenance}|smote",
        row_ids=row_ids,
        encodings=train.encodings,
    )
    return out, report


def random_undersample(
    d: Dataset,
    class_column: str,
    strategy: str = "all",
    seed: int = 0,
) -> tuple[Dataset, ResampleReport]:
    """Sample every class down to the smallest class count, without replacement.

    ``strategy="all"`` is the only supported mode: all classes, including the
    minority itself, end at the minimum count. Output rows keep input order.
    """
    d.require_encoded("random_undersample")
    if strategy != "all":
        raise ConfigError(f"unsupported undersampling strategy {strategy!r}")
    spec = d.schema.column(class_column)
    if spec.kind != "categorical":
        raise ConfigError(f"class column {class_column!r} must be categorical")

    before = _class_counts(d, class_column)
    if len(before) < 2:
        raise ResampleError(
            f"random_undersample needs >= 2 classes in {class_column!r}, found {len(before)}"
        )
    minimum = min(before.values())

    decoded = d.decode_column(class_column)
    rng = np.random.default_rng(seed)
    keep: list[int] = []
    for cls in sorted(before):
        positions = np.flatnonzero(decoded == cls)
        chosen = rng.choice(len(positions), size=minimum, replace=False)
        keep.extend(positions[chosen].tolist())
    keep.sort()

    out = d.subset(keep, provenance=f"{d.provenance}|rus")
    report = ResampleReport(
        before=before,
        after={c: minimum for c in before},
        method="rus",
        seed=seed,
    )
    return out, report
