"""Binary-classification metrics and per-subpopulation sweep curves.

ROCAUC is the primary metric; accuracy, precision, recall, and PRAUC round
out the suite. Ties in ROCAUC earn 0.5 credit per tied pair (Mann-Whitney
convention). PRAUC is average precision under step interpolation. A
single-class label vector raises, never silently scores 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigError, DataError, MetricUndefinedError, PipelineIntegrityError

if TYPE_CHECKING:
    from .results import SweepResult

METRIC_NAMES = ("rocauc", "accuracy", "precision", "recall", "prauc")

DEFAULT_THRESHOLD = 0.5


def _as_binary_labels(labels) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim != 1:
        raise DataError(f"labels must be one-dimensional, got shape {y.shape}")
    if y.size == 0:
        raise MetricUndefinedError("empty label vector")
    values = set(np.unique(y).tolist())
    if not values <= {0, 1, False, True}:
        raise DataError(f"labels must be binary 0/1, found values {sorted(values)!r}")
    return y.astype(np.int64)


def _as_scores(scores, n: int) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1:
        raise DataError(f"scores must be one-dimensional, got shape {s.shape}")
    if len(s) != n:
        raise DataError(f"labels and scores differ in length: {n} vs {len(s)}")
    if not np.isfinite(s).all():
        raise DataError("scores must be finite")
    return s


def roc_auc(labels, scores) -> float:
    """Probability that a random positive outscores a random negative (ties 0.5).

    Computed from average ranks, so the result matches the pairwise
    definition exactly.
    """
    y = _as_binary_labels(labels)
    s = _as_scores(scores, len(y))
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefinedError(
            f"ROCAUC undefined: labels contain a single class ({n_pos} positives, {n_neg} negatives)"
        )
    ranks = rankdata(s, method="average")
    pos_rank_sum = float(ranks[y == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def average_precision(labels, scores) -> float:
    """Area under the precision-recall curve by step interpolation.

    Equals sum over descending distinct thresholds of
    (recall_k - recall_{k-1}) * precision_k, with tied scores entering the
    positive side together.
    """
    y = _as_binary_labels(labels)
    s = _as_scores(scores, len(y))
    n_pos = int(y.sum())
    if n_pos == 0:
        raise MetricUndefinedError("PRAUC undefined: no positive labels")

    order = np.argsort(-s, kind="stable")
    y_sorted = y[order]
    s_sorted = s[order]
    tp = np.cumsum(y_sorted)
    k = np.arange(1, len(y) + 1)
    # positions where the next score differs: the only valid cut points
    boundary = np.ones(len(y), dtype=bool)
    boundary[:-1] = s_sorted[:-1] != s_sorted[1:]
    precision = tp[boundary] / k[boundary]
    recall = tp[boundary] / n_pos
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * precision))


@dataclass(frozen=True)
class MetricReport:
    """Named metric values on one evaluation set.

    ``values["precision"]`` is None when the threshold yields no predicted
    positives (undefined, deliberately not 0).
    """

    values: dict[str, float | None]
    n_test: int
    positives_in_test: int

    def __post_init__(self):
        if self.n_test < 1:
            raise DataError(f"MetricReport needs n_test >= 1, got {self.n_test}")
        if not (0 <= self.positives_in_test <= self.n_test):
            raise DataError("positives_in_test out of range")
        for name, value in self.values.items():
            if value is None:
                continue
            if not (0.0 <= value <= 1.0):
                raise DataError(f"metric {name!r} out of [0, 1]: {value}")

    def __getitem__(self, name: str) -> float | None:
        return self.values[name]

    def to_dict(self) -> dict:
        return {
            "values": {k: self.values[k] for k in sorted(self.values)},
            "n_test": self.n_test,
            "positives_in_test": self.positives_in_test,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricReport":
        return cls(
            values=dict(doc["values"]),
            n_test=int(doc["n_test"]),
            positives_in_test=int(doc["positives_in_test"]),
        )


def metric_suite(labels, scores, threshold: float = DEFAULT_THRESHOLD) -> MetricReport:
    """All five metrics on one labeled score vector.

    Thresholded metrics predict positive where score >= threshold.
    """
    if not (0.0 <= threshold <= 1.0):
        raise ConfigError(f"threshold must be in [0, 1], got {threshold}")
    y = _as_binary_labels(labels)
    s = _as_scores(scores, len(y))

    auc = roc_auc(y, s)  # raises on single-class labels
    prauc = average_precision(y, s)

    predicted = (s >= threshold).astype(np.int64)
    tp = int(((predicted == 1) & (y == 1)).sum())
    fp = int(((predicted == 1) & (y == 0)).sum())
    fn = int(((predicted == 0) & (y == 1)).sum())
    tn = int(((predicted == 0) & (y == 0)).sum())

    accuracy = (tp + tn) / len(y)
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    recall = tp / (tp + fn)  # denominator > 0: both classes present

    return MetricReport(
        values={
            "rocauc": auc,
            "accuracy": accuracy,
            "precision": precision,
            "recall": recall,
            "prauc": prauc,
        },
        n_test=len(y),
        positives_in_test=int(y.sum()),
    )


@dataclass(frozen=True)
class CurvePoint:
    fraction: float
    sp_model: MetricReport
    fullpop_model: MetricReport
    fullpop_model_sp_test: MetricReport | None = None


@dataclass(frozen=True)
class Curve:
    """Per-subpopulation metric trajectory over augmentation fractions."""

    sp: str
    points: tuple[CurvePoint, ...]

    def __post_init__(self):
        fractions = [p.fraction for p in self.points]
        if any(b <= a for a, b in zip(fractions, fractions[1:])):
            raise PipelineIntegrityError(
                f"curve for SP {self.sp!r}: fractions must be strictly increasing, got {fractions}"
            )
        if not fractions or fractions[0] != 0.0:
            raise PipelineIntegrityError(
                f"curve for SP {self.sp!r} lacks the 0-fraction baseline point"
            )

    @property
    def fractions(self) -> tuple[float, ...]:
        return tuple(p.fraction for p in self.points)


def build_curves(sweep: "SweepResult") -> list[Curve]:
    """One Curve per swept SP, points in fraction order, failures skipped.

    The 0-fraction point doubles as the vanilla-ensemble baseline; a sweep
    whose 0-fraction point failed cannot be charted.
    """
    if not sweep.sps:
        raise PipelineIntegrityError("sweep result contains no subpopulations")
    curves = []
    for sp in sweep.sps:
        ok_points = sorted(
            (p for p in sweep.points if p.sp == sp and p.status == "ok"),
            key=lambda p: p.fraction,
        )
        if not ok_points:
            raise PipelineIntegrityError(f"no usable sweep points for SP {sp!r}")
        curves.append(
            Curve(
                sp=sp,
                points=tuple(
                    CurvePoint(
                        fraction=p.fraction,
                        sp_model=p.sp_model,
                        fullpop_model=p.fullpop_model,
                        fullpop_model_sp_test=p.fullpop_model_sp_test,
                    )
                    for p in ok_points
                ),
            )
        )
    return curves


def curves_to_rows(curves: Sequence[Curve]) -> list[tuple[str, float, str, str, float]]:
    """Flatten curves to (sp, fraction, model_scope, metric, value) rows.

    Undefined metric values (precision with no predicted positives) are
    omitted rather than written as a fake number.
    """
    rows = []
    for curve in curves:
        for point in curve.points:
            scoped = [("sp", point.sp_model), ("fullpop", point.fullpop_model)]
            if point.fullpop_model_sp_test is not None:
                scoped.append(("fullpop_on_sp_test", point.fullpop_model_sp_test))
            for scope, report in scoped:
                for metric in sorted(report.values):
                    value = report.values[metric]
                    if value is None:
                        continue
                    rows.append((curve.sp, point.fraction, scope, metric, value))
    return rows
