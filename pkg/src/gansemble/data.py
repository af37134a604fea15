"""Typed tabular datasets: schema, ingestion, preprocessing, partitioning, splitting.

A :class:`Dataset` wraps a pandas DataFrame together with a :class:`Schema`
(column name / kind / role triples), a provenance string, and per-row
identity strings. Row ids survive subsetting and splitting, which is what
makes the train/test leakage audit possible; synthetic rows are recognizable
by their ``synthetic:`` id prefix.

Datasets are treated as immutable after construction: no function in this
package mutates a DataFrame it did not just create.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np
import pandas as pd

from .errors import (
    ConfigError,
    DataError,
    EmptyDatasetError,
    ParseError,
    SchemaError,
)

logger = logging.getLogger(__name__)

Kind = Literal["continuous", "categorical"]
Role = Literal["feature", "label", "population_marker"]

SYNTHETIC_ID_PREFIX = "synthetic:"

#: Cell values treated as missing in delimited-text input.
DEFAULT_MISSING_VALUES = ("", "NA", "NaN", "nan")


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: Kind
    role: Role = "feature"

    def __post_init__(self):
        if self.kind not in ("continuous", "categorical"):
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in ("feature", "label", "population_marker"):
            raise SchemaError(f"column {self.name!r}: unknown role {self.role!r}")


@dataclass(frozen=True)
class Schema:
    """Ordered column specs with exactly one label and one population marker."""

    columns: tuple[ColumnSpec, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        labels = [c for c in self.columns if c.role == "label"]
        markers = [c for c in self.columns if c.role == "population_marker"]
        if len(labels) != 1:
            raise SchemaError(f"schema must have exactly one label column, found {len(labels)}")
        if len(markers) != 1:
            raise SchemaError(
                f"schema must have exactly one population_marker column, found {len(markers)}"
            )
        if labels[0].kind != "categorical":
            raise SchemaError("label column must be categorical")
        if markers[0].kind != "categorical":
            raise SchemaError("population_marker column must be categorical")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    @property
    def label_column(self) -> str:
        return next(c.name for c in self.columns if c.role == "label")

    @property
    def pm_column(self) -> str:
        return next(c.name for c in self.columns if c.role == "population_marker")

    @property
    def continuous_columns(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns if c.kind == "continuous")

    @property
    def categorical_columns(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns if c.kind == "categorical")

    @property
    def feature_columns(self) -> tuple[str, ...]:
        """Columns usable as model inputs: everything except the label.

        The population marker stays in (it is an ordinary feature of the
        full-population model; within one subpopulation it is constant and
        harmless).
        """
        return tuple(c.name for c in self.columns if c.role != "label")

    def column(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise SchemaError(f"no column named {name!r} in schema")

    def to_dict(self) -> dict:
        return {
            "columns": [
                {"name": c.name, "kind": c.kind, "role": c.role} for c in self.columns
            ]
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Schema":
        try:
            cols = tuple(
                ColumnSpec(name=c["name"], kind=c["kind"], role=c.get("role", "feature"))
                for c in doc["columns"]
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema document: {exc}") from exc
        return cls(columns=cols)

    @classmethod
    def from_json_file(cls, path) -> "Schema":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read schema file {path}: {exc}") from exc
        return cls.from_dict(doc)

    def fingerprint(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class Dataset:
    """Immutable typed table with row identity and (after preprocess) code tables.

    ``encodings`` is None for raw data; after :func:`preprocess` it maps each
    categorical column to its ordered category tuple (index = integer code).
    """

    schema: Schema
    df: pd.DataFrame
    provenance: str
    row_ids: np.ndarray
    encodings: dict[str, tuple[str, ...]] | None = None

    def __post_init__(self):
        if tuple(self.df.columns) != self.schema.names:
            raise SchemaError(
                f"dataframe columns {tuple(self.df.columns)} do not match schema {self.schema.names}"
            )
        if len(self.row_ids) != len(self.df):
            raise DataError(
                f"row_ids length {len(self.row_ids)} != row count {len(self.df)}"
            )
        if self.encodings is not None:
            missing = set(self.schema.categorical_columns) - set(self.encodings)
            if missing:
                raise SchemaError(f"encodings missing for categorical columns: {sorted(missing)}")

    @property
    def n(self) -> int:
        return len(self.df)

    @property
    def is_encoded(self) -> bool:
        return self.encodings is not None

    @property
    def n_synthetic(self) -> int:
        return int(sum(1 for rid in self.row_ids if str(rid).startswith(SYNTHETIC_ID_PREFIX)))

    @property
    def n_real(self) -> int:
        return self.n - self.n_synthetic

    def real_row_ids(self) -> frozenset[str]:
        return frozenset(
            str(rid) for rid in self.row_ids if not str(rid).startswith(SYNTHETIC_ID_PREFIX)
        )

    def all_row_ids(self) -> frozenset[str]:
        return frozenset(str(rid) for rid in self.row_ids)

    def require_encoded(self, operation: str) -> None:
        if not self.is_encoded:
            raise DataError(f"{operation} requires a preprocessed (label-encoded) dataset")

    def subset(self, positions: Sequence[int], provenance: str | None = None) -> "Dataset":
        positions = np.asarray(positions, dtype=int)
        return Dataset(
            schema=self.schema,
            df=self.df.iloc[positions].reset_index(drop=True),
            provenance=provenance if provenance is not None else self.provenance,
            row_ids=self.row_ids[positions].copy(),
            encodings=self.encodings,
        )

    def categories(self, column: str) -> tuple[str, ...]:
        self.require_encoded("categories()")
        return self.encodings[column]

    def decode_column(self, column: str) -> np.ndarray:
        """Map a categorical column's integer codes back to category strings."""
        self.require_encoded("decode_column()")
        table = np.asarray(self.encodings[column], dtype=object)
        codes = self.df[column].to_numpy()
        return table[codes]

    def code_of(self, column: str, value: str) -> int:
        self.require_encoded("code_of()")
        try:
            return self.encodings[column].index(value)
        except ValueError:
            raise DataError(
                f"value {value!r} is not a known category of column {column!r}"
            ) from None

    def decode(self) -> "Dataset":
        """Return a raw dataset with category strings restored from the code tables."""
        self.require_encoded("decode()")
        df = self.df.copy()
        for col in self.schema.categorical_columns:
            table = np.asarray(self.encodings[col], dtype=object)
            df[col] = table[df[col].to_numpy()]
        return Dataset(
            schema=self.schema,
            df=df,
            provenance=self.provenance,
            row_ids=self.row_ids.copy(),
            encodings=None,
        )

    def fingerprint(self, columns: Iterable[str] | None = None) -> str:
        """Hash of the schema (and code tables) for the given columns.

        Used to guard persisted models and generators against being applied
        to data with a different schema or different category coding.
        """
        names = tuple(columns) if columns is not None else self.schema.names
        payload = {
            "columns": [
                {"name": c.name, "kind": c.kind, "role": c.role}
                for c in self.schema.columns
                if c.name in names
            ],
            "encodings": {
                col: list(self.encodings[col])
                for col in sorted(names)
                if self.encodings is not None and col in self.encodings
            },
        }
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def content_hash(self) -> str:
        """Hash of schema, encodings, row ids, and cell values."""
        h = hashlib.sha256()
        h.update(self.fingerprint().encode("utf-8"))
        h.update(b"\x00")
        for rid in self.row_ids:
            h.update(str(rid).encode("utf-8"))
            h.update(b"\x1f")
        h.update(self.df.to_csv(index=False, lineterminator="\n").encode("utf-8"))
        return h.hexdigest()


def concat_datasets(datasets: Sequence[Dataset], provenance: str | None = None) -> Dataset:
    """Concatenate datasets sharing one schema and one set of code tables."""
    if not datasets:
        raise DataError("concat_datasets needs at least one dataset")
    first = datasets[0]
    for d in datasets[1:]:
        if d.schema != first.schema:
            raise SchemaError("cannot concatenate datasets with different schemas")
        if d.encodings != first.encodings:
            raise SchemaError("cannot concatenate datasets with different code tables")
    if len(datasets) == 1:
        return first if provenance is None else replace(first, provenance=provenance)
    df = pd.concat([d.df for d in datasets], ignore_index=True)
    row_ids = np.concatenate([d.row_ids for d in datasets])
    if len(set(row_ids)) != len(row_ids):
        raise DataError("concatenation would duplicate row identities")
    return Dataset(
        schema=first.schema,
        df=df,
        provenance=provenance if provenance is not None else first.provenance,
        row_ids=row_ids,
        encodings=first.encodings,
    )


@dataclass(frozen=True)
class SubpopulationPartition:
    """Disjoint subpopulations keyed by decoded population-marker value."""

    subsets: dict[str, Dataset]
    excluded: frozenset[str]
    excluded_rows: Dataset | None = None

    @property
    def sizes(self) -> dict[str, int]:
        return {pm: d.n for pm, d in self.subsets.items()}


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset
    train_fraction: float
    stratify_column: str


# ---------------------------------------------------------------------------
# ingestion / emission
# ---------------------------------------------------------------------------

def load_dataset(
    path,
    schema: Schema,
    delimiter: str = ",",
    missing_values: Sequence[str] = DEFAULT_MISSING_VALUES,
) -> Dataset:
    """Read a delimited-text table with a header row into a raw Dataset.

    Continuous cells are parsed as floats (missing -> NaN); categorical cells
    are kept as strings (missing -> None). Columns not named in the schema
    are ignored. A missing schema column or an unparseable continuous cell
    raises.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    missing = set(missing_values)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path} is empty") from None
        col_pos = {}
        for col in schema.names:
            if col not in header:
                raise SchemaError(f"schema column {col!r} missing from header of {path}")
            col_pos[col] = header.index(col)

        columns: dict[str, list] = {name: [] for name in schema.names}
        for rownum, row in enumerate(reader, start=2):  # 1-based, after header
            if not row:
                continue
            for spec in schema.columns:
                pos = col_pos[spec.name]
                cell = row[pos] if pos < len(row) else ""
                if cell in missing:
                    columns[spec.name].append(np.nan if spec.kind == "continuous" else None)
                    continue
                if spec.kind == "continuous":
                    try:
                        columns[spec.name].append(float(cell))
                    except ValueError:
                        raise ParseError(
                            f"{path}: row {rownum}, column {spec.name!r}: "
                            f"cannot parse {cell!r} as a number"
                        ) from None
                else:
                    columns[spec.name].append(cell)

    data = {}
    for spec in schema.columns:
        if spec.kind == "continuous":
            data[spec.name] = pd.Series(columns[spec.name], dtype="float64")
        else:
            data[spec.name] = pd.Series(columns[spec.name], dtype="object")
    df = pd.DataFrame(data, columns=list(schema.names))
    row_ids = np.array([f"{path.name}:{i}" for i in range(len(df))], dtype=object)
    return Dataset(schema=schema, df=df, provenance=str(path), row_ids=row_ids)


def load_encoded_dataset(path, schema: Schema, codes_path, delimiter: str = ",") -> Dataset:
    """Read back a preprocessed dataset emitted by :func:`save_dataset` plus its code sidecar."""
    try:
        codes_doc = json.loads(Path(codes_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read code table sidecar {codes_path}: {exc}") from exc
    encodings = {col: tuple(cats) for col, cats in codes_doc.items()}
    raw = load_dataset(path, schema, delimiter=delimiter)
    df = raw.df.copy()
    for col in schema.categorical_columns:
        if col not in encodings:
            raise SchemaError(f"code table sidecar lacks column {col!r}")
        try:
            df[col] = raw.df[col].astype(str).astype(int).astype("int64")
        except ValueError as exc:
            raise ParseError(f"{path}: column {col!r} holds non-integer codes") from exc
        k = len(encodings[col])
        bad = df[col][(df[col] < 0) | (df[col] >= k)]
        if len(bad):
            raise DataError(f"{path}: column {col!r} holds codes outside the code table")
    return Dataset(
        schema=schema,
        df=df,
        provenance=raw.provenance,
        row_ids=raw.row_ids,
        encodings=encodings,
    )


def save_dataset(d: Dataset, path, delimiter: str = ",") -> None:
    """Emit a dataset as delimited text (header + one line per row).

    Encoded categorical cells are written as their integer codes; emit the
    code tables alongside with :func:`save_code_tables`.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(d.schema.names)
        for _, row in d.df.iterrows():
            out = []
            for spec in d.schema.columns:
                val = row[spec.name]
                if spec.kind == "continuous":
                    out.append("" if pd.isna(val) else repr(float(val)))
                elif d.is_encoded:
                    out.append(str(int(val)))
                else:
                    out.append("" if val is None or (isinstance(val, float) and np.isnan(val)) else str(val))
            writer.writerow(out)


def save_code_tables(d: Dataset, path) -> None:
    d.require_encoded("save_code_tables()")
    doc = {col: list(cats) for col, cats in sorted(d.encodings.items())}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def encode_like(raw: Dataset, reference: Dataset) -> Dataset:
    """Encode a raw dataset with another dataset's code tables.

    Used to bring externally generated rows (for example oracle samples) into
    the coded space of an already-preprocessed dataset. A category string
    absent from the reference code table is an error, not a new code.
    """
    reference.require_encoded("encode_like")
    if raw.is_encoded:
        raise DataError("encode_like expects raw (string-coded) input")
    if raw.schema != reference.schema:
        raise SchemaError("encode_like: schemas differ")
    out = {}
    for spec in raw.schema.columns:
        col = raw.df[spec.name]
        if spec.kind == "continuous":
            values = col.astype("float64")
            if values.isna().any():
                raise DataError(f"encode_like: missing values in column {spec.name!r}")
            out[spec.name] = values
        else:
            table = {c: i for i, c in enumerate(reference.encodings[spec.name])}
            codes = []
            for v in col:
                key = str(v)
                if v is None or key not in table:
                    raise DataError(
                        f"encode_like: value {v!r} in column {spec.name!r} "
                        f"is not in the reference code table"
                    )
                codes.append(table[key])
            out[spec.name] = pd.Series(codes, dtype="int64")
    return Dataset(
        schema=raw.schema,
        df=pd.DataFrame(out, columns=list(raw.schema.names)),
        provenance=raw.provenance,
        row_ids=raw.row_ids.copy(),
        encodings=dict(reference.encodings),
    )


# ---------------------------------------------------------------------------
# preprocessing
# ---------------------------------------------------------------------------

def preprocess(d: Dataset) -> Dataset:
    """Drop rows with missing cells and label-encode categorical columns.

    Categories are sorted lexicographically before coding so the codes do not
    depend on row order. Idempotent: an already-encoded dataset is returned
    unchanged.
    """
    if d.is_encoded:
        return d

    keep = np.ones(d.n, dtype=bool)
    for spec in d.schema.columns:
        col = d.df[spec.name]
        if spec.kind == "continuous":
            keep &= col.notna().to_numpy()
        else:
            # an empty categorical cell counts as missing whether the data came
            # from a delimited file or was built in memory
            keep &= np.array([
                v is not None
                and not (isinstance(v, float) and np.isnan(v))
                and str(v) != ""
                for v in col
            ])
    n_dropped = int((~keep).sum())
    if n_dropped:
        logger.info("preprocess: dropping %d row(s) with missing values", n_dropped)
    if not keep.any():
        raise EmptyDatasetError("preprocessing dropped every row")

    df = d.df.loc[keep].reset_index(drop=True)
    row_ids = d.row_ids[keep].copy()

    encodings: dict[str, tuple[str, ...]] = {}
    out = {}
    for spec in d.schema.columns:
        if spec.kind == "continuous":
            out[spec.name] = df[spec.name].astype("float64")
        else:
            values = df[spec.name].astype(str)
            cats = tuple(sorted(values.unique()))
            mapping = {c: i for i, c in enumerate(cats)}
            out[spec.name] = values.map(mapping).astype("int64")
            encodings[spec.name] = cats
    return Dataset(
        schema=d.schema,
        df=pd.DataFrame(out, columns=list(d.schema.names)),
        provenance=d.provenance,
        row_ids=row_ids,
        encodings=encodings,
    )


# ---------------------------------------------------------------------------
# partitioning and splitting
# ---------------------------------------------------------------------------

def partition_by_pm(d: Dataset, excluded: Iterable[str] = ()) -> SubpopulationPartition:
    """Partition a preprocessed dataset into subpopulations by population-marker value.

    ``excluded`` names PM categories (original strings) that get no
    subpopulation of their own; their rows are kept apart in
    ``excluded_rows`` for full-population use.
    """
    d.require_encoded("partition_by_pm")
    pm_col = d.schema.pm_column
    excluded = frozenset(excluded)
    known = set(d.encodings[pm_col])
    for value in excluded - known:
        logger.warning("excluded PM value %r does not occur in the data", value)

    decoded = d.decode_column(pm_col)
    subsets = {}
    excluded_positions = []
    for value in sorted(set(decoded)):
        positions = np.flatnonzero(decoded == value)
        if value in excluded:
            excluded_positions.extend(positions.tolist())
        else:
            subsets[value] = d.subset(positions, provenance=f"{d.provenance}|pm={value}")
    excluded_rows = None
    if excluded_positions:
        excluded_rows = d.subset(
            sorted(excluded_positions), provenance=f"{d.provenance}|pm-excluded"
        )
    return SubpopulationPartition(
        subsets=subsets, excluded=excluded, excluded_rows=excluded_rows
    )


def round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def _allocate_train_counts(
    strata: list[tuple[str, int]], train_fraction: float
) -> dict[str, int]:
    """Largest-remainder allocation of per-stratum train counts.

    Each stratum gets floor(fraction * size); the remaining deficit up to
    round(fraction * total) goes to the strata with the largest fractional
    remainders (ties broken by stratum key for determinism).
    """
    total = sum(size for _, size in strata)
    target = round_half_up(train_fraction * total)
    floors = {key: int(np.floor(train_fraction * size)) for key, size in strata}
    remainders = {key: train_fraction * size - floors[key] for key, size in strata}
    deficit = target - sum(floors.values())
    order = sorted(strata, key=lambda kv: (-remainders[kv[0]], kv[0]))
    counts = dict(floors)
    for key, _ in order[:deficit]:
        counts[key] += 1
    return counts


def stratified_split(
    d: Dataset, train_fraction: float, stratify_column: str, seed: int
) -> SplitPair:
    """Split into train/test with per-stratum proportions within 1 of exact.

    A stratum with a single row is assigned to train with a warning, since it
    cannot supply both sides. Deterministic given (dataset, seed).
    """
    if not (0.0 < train_fraction < 1.0):
        raise ConfigError(f"train_fraction must be in (0, 1), got {train_fraction}")
    spec = d.schema.column(stratify_column)
    if spec.kind != "categorical":
        raise ConfigError(f"stratify column {stratify_column!r} must be categorical")
    if d.n == 0:
        raise EmptyDatasetError("cannot split an empty dataset")

    values = d.df[stratify_column].to_numpy()
    stratum_positions: dict[str, np.ndarray] = {}
    for value in sorted(set(values.tolist())):
        stratum_positions[str(value)] = np.flatnonzero(values == value)

    singletons = [k for k, pos in stratum_positions.items() if len(pos) == 1]
    for k in singletons:
        logger.warning(
            "stratum %s=%s has a single row; assigning it to the training side",
            stratify_column,
            k,
        )
    multi = [(k, len(pos)) for k, pos in stratum_positions.items() if len(pos) >= 2]
    counts = _allocate_train_counts(multi, train_fraction) if multi else {}
    for k in singletons:
        counts[k] = 1

    rng = np.random.default_rng(seed)
    train_positions: list[int] = []
    test_positions: list[int] = []
    for key in sorted(stratum_positions):
        positions = stratum_positions[key]
        perm = rng.permutation(len(positions))
        n_train = counts[key]
        train_positions.extend(positions[perm[:n_train]].tolist())
        test_positions.extend(positions[perm[n_train:]].tolist())

    train = d.subset(sorted(train_positions), provenance=f"{d.provenance}|train")
    test = d.subset(sorted(test_positions), provenance=f"{d.provenance}|test")
    return SplitPair(
        train=train, test=test, train_fraction=train_fraction, stratify_column=stratify_column
    )
