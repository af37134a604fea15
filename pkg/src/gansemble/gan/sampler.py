"""Training-by-sampling for the conditional vector.

During training, a batch condition is drawn by picking a conditioned
categorical column uniformly, then a category by log-frequency (flattening
imbalance so rare categories still appear), then a real row matching the
category. At generation time categories follow their raw training
frequencies instead, so the synthetic table reproduces the training
marginals.
"""

from __future__ import annotations

import numpy as np

from ..data import Dataset
from .transform import TableTransform


class ConditionSampler:
    def __init__(self, d: Dataset, tf: TableTransform, condition_columns: tuple[str, ...]):
        layout = {col: (offset, size) for col, offset, size in tf.categorical_layout()}
        self.columns: list[str] = [c for c in condition_columns if c in layout]
        self.cond_dim = sum(layout[c][1] for c in self.columns)

        self._spans: list[tuple[int, int]] = []     # (cond offset, size) per column
        self._log_probs: list[np.ndarray] = []      # train-time category weights
        self._raw_probs: list[np.ndarray] = []      # generation-time category weights
        self._rows_by_cat: list[list[np.ndarray]] = []

        offset = 0
        for col in self.columns:
            _, size = layout[col]
            codes = d.df[col].to_numpy().astype(np.int64)
            counts = np.bincount(codes, minlength=size).astype(np.float64)
            log_w = np.log1p(counts)
            log_w_sum = log_w.sum()
            raw_sum = counts.sum()
            self._spans.append((offset, size))
            self._log_probs.append(log_w / log_w_sum if log_w_sum > 0 else None)
            self._raw_probs.append(counts / raw_sum if raw_sum > 0 else None)
            self._rows_by_cat.append([np.flatnonzero(codes == k) for k in range(size)])
            offset += size

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    def cond_span(self, j: int) -> tuple[int, int]:
        """(offset, size) of conditioned column j inside the condition vector."""
        return self._spans[j]

    def _condvec(self, col_ids: np.ndarray, cat_ids: np.ndarray, batch: int):
        cond = np.zeros((batch, self.cond_dim), dtype=np.float64)
        mask = np.zeros((batch, self.n_columns), dtype=np.float64)
        for i in range(batch):
            offset, _ = self._spans[col_ids[i]]
            cond[i, offset + cat_ids[i]] = 1.0
            mask[i, col_ids[i]] = 1.0
        return cond, mask

    def sample_train(self, batch: int, rng: np.random.Generator):
        """(cond, mask, col_ids, cat_ids) with categories by log-frequency."""
        if self.n_columns == 0:
            return None
        col_ids = rng.integers(0, self.n_columns, size=batch)
        cat_ids = np.empty(batch, dtype=np.int64)
        for i in range(batch):
            p = self._log_probs[col_ids[i]]
            cat_ids[i] = rng.choice(len(p), p=p)
        cond, mask = self._condvec(col_ids, cat_ids, batch)
        return cond, mask, col_ids, cat_ids

    def sample_generate(self, batch: int, rng: np.random.Generator):
        """Condition vector with categories by raw training frequency."""
        if self.n_columns == 0:
            return None
        col_ids = rng.integers(0, self.n_columns, size=batch)
        cat_ids = np.empty(batch, dtype=np.int64)
        for i in range(batch):
            p = self._raw_probs[col_ids[i]]
            cat_ids[i] = rng.choice(len(p), p=p)
        cond, _ = self._condvec(col_ids, cat_ids, batch)
        return cond

    def sample_rows(self, col_ids: np.ndarray, cat_ids: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """A real row index matching each (column, category) condition."""
        out = np.empty(len(col_ids), dtype=np.int64)
        for i in range(len(col_ids)):
            rows = self._rows_by_cat[col_ids[i]][cat_ids[i]]
            out[i] = rows[rng.integers(0, len(rows))]
        return out

    def to_state(self) -> dict:
        return {
            "columns": list(self.columns),
            "cond_dim": self.cond_dim,
            "spans": [list(s) for s in self._spans],
            "raw_probs": [p.tolist() if p is not None else None for p in self._raw_probs],
        }

    @classmethod
    def from_state(cls, state: dict) -> "ConditionSampler":
        sampler = cls.__new__(cls)
        sampler.columns = list(state["columns"])
        sampler.cond_dim = int(state["cond_dim"])
        sampler._spans = [tuple(s) for s in state["spans"]]
        sampler._raw_probs = [
            np.asarray(p, dtype=np.float64) if p is not None else None
            for p in state["raw_probs"]
        ]
        # train-only tables are not persisted; a restored sampler only generates
        sampler._log_probs = []
        sampler._rows_by_cat = []
        return sampler
