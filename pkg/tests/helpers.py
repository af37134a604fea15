"""Shared dataset builders for the test suite."""

from __future__ import annotations

import numpy as np
import pandas as pd
from gansemble.data import ColumnSpec, Dataset, Schema, preprocess
from gansemble.simulate import CategoricalSpec, SimConfig, SubpopSpec


def make_schema(
    continuous: tuple[str, ...] = ("num_0", "num_1"),
    categoricals: tuple[str, ...] = (),
    label: str = "outcome",
    pm: str = "group",
) -> Schema:
    cols = [ColumnSpec(c, "continuous", "feature") for c in continuous]
    cols += [ColumnSpec(c, "categorical", "feature") for c in categoricals]
    cols.append(ColumnSpec(label, "categorical", "label"))
    cols.append(ColumnSpec(pm, "categorical", "population_marker"))
    return Schema(columns=tuple(cols))


def raw_dataset(
    schema: Schema,
    columns: dict[str, list],
    provenance: str = "test",
    row_ids: list[str] | None = None,
) -> Dataset:
    """Build an unencoded dataset from per-column value lists."""
    df = pd.DataFrame({name: columns[name] for name in schema.names})
    n = len(df)
    if row_ids is None:
        row_ids = [f"{provenance}:{i}" for i in range(n)]
    return Dataset(
        schema=schema,
        df=df,
        provenance=provenance,
        row_ids=np.asarray(row_ids, dtype=object),
    )


def encoded_dataset(schema: Schema, columns: dict[str, list], provenance: str = "test") -> Dataset:
    return preprocess(raw_dataset(schema, columns, provenance))


def toy_binary_dataset(
    n: int = 60,
    seed: int = 0,
    pm_values: tuple[str, ...] = ("a", "b"),
    separable: bool = False,
) -> Dataset:
    """Small two-feature binary dataset with a PM column, encoded."""
    rng = np.random.default_rng(seed)
    schema = make_schema()
    x0 = rng.normal(size=n)
    x1 = rng.normal(size=n)
    if separable:
        y = (x0 > 0).astype(int)
        x0 = np.where(y == 1, x0 + 3.0, x0 - 3.0)
    else:
        logits = 1.5 * x0 - 1.0 * x1 + rng.normal(scale=0.8, size=n)
        y = (logits > 0).astype(int)
    pm = rng.choice(list(pm_values), size=n)
    return encoded_dataset(
        schema,
        {
            "num_0": list(x0),
            "num_1": list(x1),
            "outcome": ["pos" if v else "neg" for v in y],
            "group": list(pm),
        },
    )


def small_sim_config(seed: int = 7, sizes: tuple[int, int] = (300, 60)) -> SimConfig:
    return SimConfig(
        n_continuous=2,
        subpops=(
            SubpopSpec("big", sizes[0], (0.0, 0.0), (1.0, 1.0)),
            SubpopSpec("small", sizes[1], (0.8, -0.5), (1.2, 0.8)),
        ),
        concept_weights=(1.2, -0.8),
        concept_bias=0.1,
        categorical_specs=(
            CategoricalSpec(3, {"big": (0.5, 0.3, 0.2), "small": (0.2, 0.3, 0.5)}),
        ),
        noise_scale=1.0,
        seed=seed,
    )
