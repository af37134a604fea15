"""Column-wise encoding between tabular data and GAN training space.

Continuous columns get mode-specific normalization: a Bayesian Gaussian
mixture is fitted per column, components with negligible weight are dropped,
and each value becomes (scalar alpha in [-1, 1], one-hot mode indicator)
where alpha = (x - mu_k) / (4 sigma_k) for the sampled mode k. Categorical
columns become one-hot vectors over the dataset's code table.

The inverse maps generator activations back to an encoded DataFrame: alpha
de-normalized through the argmax mode, one-hots collapsed by argmax.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd
from sklearn.exceptions import ConvergenceWarning
from sklearn.mixture import BayesianGaussianMixture

from ..data import Dataset
from ..errors import TrainingError

MODE_WEIGHT_THRESHOLD = 5e-3


@dataclass(frozen=True)
class SpanInfo:
    dim: int
    activation: str  # "tanh" | "softmax"


@dataclass(frozen=True)
class ContinuousTransform:
    column: str
    means: np.ndarray      # (n_modes,)
    stds: np.ndarray       # (n_modes,)
    weights: np.ndarray    # (n_modes,), renormalized over kept modes

    @property
    def n_modes(self) -> int:
        return len(self.means)

    @property
    def output_dim(self) -> int:
        return 1 + self.n_modes

    @property
    def spans(self) -> tuple[SpanInfo, ...]:
        return (SpanInfo(1, "tanh"), SpanInfo(self.n_modes, "softmax"))


@dataclass(frozen=True)
class CategoricalTransform:
    column: str
    n_categories: int

    @property
    def output_dim(self) -> int:
        return self.n_categories

    @property
    def spans(self) -> tuple[SpanInfo, ...]:
        return (SpanInfo(self.n_categories, "softmax"),)


class TableTransform:
    """Fitted bidirectional mapping between an encoded Dataset and GAN space."""

    def __init__(self, transforms: list, column_order: tuple[str, ...]):
        self.transforms = transforms
        self.column_order = column_order

    @property
    def output_dim(self) -> int:
        return sum(t.output_dim for t in self.transforms)

    def spans(self) -> list[SpanInfo]:
        out = []
        for t in self.transforms:
            out.extend(t.spans)
        return out

    def categorical_layout(self) -> list[tuple[str, int, int]]:
        """(column, offset, n_categories) for each categorical column, in output order."""
        layout = []
        offset = 0
        for t in self.transforms:
            if isinstance(t, CategoricalTransform):
                layout.append((t.column, offset, t.n_categories))
            offset += t.output_dim
        return layout

    def to_state(self) -> dict:
        items = []
        for t in self.transforms:
            if isinstance(t, ContinuousTransform):
                items.append({
                    "kind": "continuous",
                    "column": t.column,
                    "means": t.means.tolist(),
                    "stds": t.stds.tolist(),
                    "weights": t.weights.tolist(),
                })
            else:
                items.append({
                    "kind": "categorical",
                    "column": t.column,
                    "n_categories": t.n_categories,
                })
        return {"transforms": items, "column_order": list(self.column_order)}

    @classmethod
    def from_state(cls, state: dict) -> "TableTransform":
        transforms = []
        for item in state["transforms"]:
            if item["kind"] == "continuous":
                transforms.append(ContinuousTransform(
                    column=item["column"],
                    means=np.asarray(item["means"], dtype=np.float64),
                    stds=np.asarray(item["stds"], dtype=np.float64),
                    weights=np.asarray(item["weights"], dtype=np.float64),
                ))
            else:
                transforms.append(CategoricalTransform(
                    column=item["column"], n_categories=int(item["n_categories"])
                ))
        return cls(transforms, tuple(state["column_order"]))


def fit_table_transform(d: Dataset, mixture_modes: int, seed: int) -> TableTransform:
    """Fit per-column transforms on an encoded dataset, deterministic given seed."""
    d.require_encoded("fit_table_transform")
    if d.n == 0:
        raise TrainingError("cannot fit column transforms on an empty dataset")
    transforms = []
    for idx, spec in enumerate(d.schema.columns):
        values = d.df[spec.name].to_numpy()
        if spec.kind == "continuous":
            x = values.astype(np.float64).reshape(-1, 1)
            n_distinct = len(np.unique(x))
            n_components = max(1, min(mixture_modes, n_distinct))
            gm = BayesianGaussianMixture(
                n_components=n_components,
                weight_concentration_prior_type="dirichlet_process",
                weight_concentration_prior=1e-3,
                max_iter=200,
                n_init=1,
                random_state=(seed + idx) % (2**32),
            )
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                gm.fit(x)
            keep = gm.weights_ > MODE_WEIGHT_THRESHOLD
            if not keep.any():
                keep[np.argmax(gm.weights_)] = True
            means = gm.means_.reshape(-1)[keep]
            stds = np.sqrt(gm.covariances_.reshape(-1)[keep])
            stds = np.maximum(stds, 1e-9)
            weights = gm.weights_[keep]
            weights = weights / weights.sum()
            order = np.argsort(means)
            transforms.append(ContinuousTransform(
                column=spec.name, means=means[order], stds=stds[order], weights=weights[order]
            ))
        else:
            transforms.append(CategoricalTransform(
                column=spec.name, n_categories=len(d.encodings[spec.name])
            ))
    return TableTransform(transforms, d.schema.names)


def encode_table(tf: TableTransform, d: Dataset, rng: np.random.Generator) -> np.ndarray:
    """Map an encoded dataset into GAN space; mode choice is the only sampling."""
    blocks = []
    for t in tf.transforms:
        values = d.df[t.column].to_numpy()
        if isinstance(t, ContinuousTransform):
            x = values.astype(np.float64)
            n, m = len(x), t.n_modes
            if m == 1:
                modes = np.zeros(n, dtype=np.int64)
            else:
                # posterior responsibility of each kept mode, renormalized
                diffs = x[:, None] - t.means[None, :]
                log_p = (
                    -0.5 * (diffs / t.stds[None, :]) ** 2
                    - np.log(t.stds[None, :])
                    + np.log(t.weights[None, :])
                )
                log_p -= log_p.max(axis=1, keepdims=True)
                p = np.exp(log_p)
                p /= p.sum(axis=1, keepdims=True)
                cdf = np.cumsum(p, axis=1)
                u = rng.random(n)
                modes = (u[:, None] > cdf).sum(axis=1).clip(0, m - 1)
            alpha = (x - t.means[modes]) / (4.0 * t.stds[modes])
            alpha = np.clip(alpha, -1.0, 1.0)
            onehot = np.zeros((n, m), dtype=np.float64)
            onehot[np.arange(n), modes] = 1.0
            blocks.append(alpha.reshape(-1, 1))
            blocks.append(onehot)
        else:
            codes = values.astype(np.int64)
            onehot = np.zeros((len(codes), t.n_categories), dtype=np.float64)
            onehot[np.arange(len(codes)), codes] = 1.0
            blocks.append(onehot)
    return np.concatenate(blocks, axis=1)


def decode_table(tf: TableTransform, activations: np.ndarray) -> pd.DataFrame:
    """Map generator activations back to an encoded DataFrame (codes for categoricals)."""
    out = {}
    offset = 0
    for t in tf.transforms:
        if isinstance(t, ContinuousTransform):
            alpha = np.clip(activations[:, offset], -1.0, 1.0)
            mode_block = activations[:, offset + 1: offset + 1 + t.n_modes]
            modes = np.argmax(mode_block, axis=1)
            out[t.column] = alpha * 4.0 * t.stds[modes] + t.means[modes]
        else:
            block = activations[:, offset: offset + t.n_categories]
            out[t.column] = np.argmax(block, axis=1).astype(np.int64)
        offset += t.output_dim
    df = pd.DataFrame(out)
    return df[list(tf.column_order)]
