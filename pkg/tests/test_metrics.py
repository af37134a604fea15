"""Metric correctness against brute-force oracles, plus curve assembly."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import average_precision_score, roc_auc_score

from gansemble.errors import (
    ConfigError,
    DataError,
    MetricUndefinedError,
    PipelineIntegrityError,
)
from gansemble.metrics import (
    Curve,
    CurvePoint,
    MetricReport,
    average_precision,
    build_curves,
    curves_to_rows,
    metric_suite,
    roc_auc,
)
from gansemble.results import SweepPoint, SweepResult


# ---------------------------------------------------------------------------
# Oracles (written before the assertions that use them)
# ---------------------------------------------------------------------------


def pairwise_auc_oracle(labels, scores) -> float:
    """O(n^2) literal reading of ROCAUC: fraction of (positive, negative)
    pairs where the positive outscores the negative, half credit for ties."""
    pos = [s for y, s in zip(labels, scores) if y == 1]
    neg = [s for y, s in zip(labels, scores) if y == 0]
    credit = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                credit += 1.0
            elif p == q:
                credit += 0.5
    return credit / (len(pos) * len(neg))


def per_positive_ap_oracle(labels, scores) -> float:
    """PRAUC as the mean, over positive examples, of the precision of the
    'predict positive at score >= this example's score' rule.

    Algebraically equal to summing (recall step) x (precision) rectangles
    over descending distinct thresholds, but computed without sorting or
    cumulative sums, so it cannot share a bug with the implementation.
    """
    n_pos = sum(1 for y in labels if y == 1)
    total = 0.0
    for y_i, s_i in zip(labels, scores):
        if y_i != 1:
            continue
        kept = [(y, s) for y, s in zip(labels, scores) if s >= s_i]
        total += sum(y for y, _ in kept) / len(kept)
    return total / n_pos


def random_instance(rng, n, with_ties):
    """A random binary-labeled score vector guaranteed to hold both classes."""
    labels = rng.integers(0, 2, size=n)
    labels[0], labels[1] = 0, 1
    if with_ties:
        scores = rng.integers(0, max(2, n // 3), size=n) / max(2, n // 3)
    else:
        scores = rng.permutation(n) / n
    return labels.tolist(), scores.tolist()


class TestOracleSelfChecks:
    def test_pairwise_oracle_on_worked_example(self):
        assert pairwise_auc_oracle([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8]) == 0.75

    def test_ap_oracle_on_worked_example(self):
        got = per_positive_ap_oracle([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8])
        assert math.isclose(got, 0.5 + 1.0 / 3.0, abs_tol=1e-12)

    def test_oracles_match_sklearn_on_random_instances(self):
        rng = np.random.default_rng(7)
        for trial in range(50):
            labels, scores = random_instance(rng, 30, with_ties=trial % 2 == 0)
            assert math.isclose(
                pairwise_auc_oracle(labels, scores),
                roc_auc_score(labels, scores),
                abs_tol=1e-12,
            )
            assert math.isclose(
                per_positive_ap_oracle(labels, scores),
                average_precision_score(labels, scores),
                abs_tol=1e-12,
            )


class TestRocAuc:
    def test_worked_example(self):
        assert roc_auc([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8]) == 0.75

    def test_all_tied_scores_give_half(self):
        assert roc_auc([0, 1, 0, 1], [0.3, 0.3, 0.3, 0.3]) == 0.5

    def test_perfect_and_inverted_ranking(self):
        assert roc_auc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0
        assert roc_auc([0, 0, 1, 1], [0.9, 0.8, 0.2, 0.1]) == 0.0

    def test_matches_pairwise_oracle_with_and_without_ties(self):
        rng = np.random.default_rng(11)
        for trial in range(300):
            n = int(rng.integers(2, 60))
            labels, scores = random_instance(rng, n, with_ties=trial % 2 == 0)
            assert math.isclose(
                roc_auc(labels, scores),
                pairwise_auc_oracle(labels, scores),
                abs_tol=1e-12,
            )

    def test_invariant_under_monotone_score_transforms(self):
        rng = np.random.default_rng(3)
        labels, scores = random_instance(rng, 40, with_ties=True)
        base = roc_auc(labels, scores)
        s = np.array(scores)
        for transformed in (np.exp(s), 3.0 * s + 11.0, s**3):
            assert math.isclose(roc_auc(labels, transformed), base, abs_tol=1e-12)

    def test_negating_scores_complements_auc(self):
        rng = np.random.default_rng(5)
        for trial in range(50):
            labels, scores = random_instance(rng, 25, with_ties=trial % 2 == 0)
            a = roc_auc(labels, scores)
            b = roc_auc(labels, [-s for s in scores])
            assert math.isclose(a + b, 1.0, abs_tol=1e-12)

    def test_swapping_labels_complements_auc(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            labels, scores = random_instance(rng, 25, with_ties=True)
            a = roc_auc(labels, scores)
            b = roc_auc([1 - y for y in labels], scores)
            assert math.isclose(a + b, 1.0, abs_tol=1e-12)

    def test_single_class_raises(self):
        with pytest.raises(MetricUndefinedError):
            roc_auc([1, 1, 1], [0.2, 0.5, 0.9])
        with pytest.raises(MetricUndefinedError):
            roc_auc([0, 0], [0.2, 0.5])

    def test_empty_raises(self):
        with pytest.raises(MetricUndefinedError):
            roc_auc([], [])

    def test_bad_inputs_raise_data_error(self):
        with pytest.raises(DataError):
            roc_auc([0, 1, 2], [0.1, 0.2, 0.3])
        with pytest.raises(DataError):
            roc_auc([0, 1], [0.1, 0.2, 0.3])
        with pytest.raises(DataError):
            roc_auc([0, 1], [0.1, float("nan")])

    @settings(max_examples=150, deadline=None)
    @given(
        labels=st.lists(st.integers(0, 1), min_size=2, max_size=40),
        raw=st.data(),
    )
    def test_property_matches_pairwise_oracle(self, labels, raw):
        if len(set(labels)) < 2:
            labels = labels[:-2] + [0, 1]
        scores = raw.draw(
            st.lists(
                st.floats(-100, 100, allow_nan=False),
                min_size=len(labels),
                max_size=len(labels),
            )
        )
        assert math.isclose(
            roc_auc(labels, scores),
            pairwise_auc_oracle(labels, scores),
            abs_tol=1e-12,
        )


class TestAveragePrecision:
    def test_worked_example(self):
        got = average_precision([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8])
        assert math.isclose(got, 0.5 + 1.0 / 3.0, abs_tol=1e-12)

    def test_perfect_ranking_gives_one(self):
        assert average_precision([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0

    def test_matches_per_positive_oracle_on_200_instances(self):
        rng = np.random.default_rng(17)
        for trial in range(200):
            n = int(rng.integers(2, 50))
            labels, scores = random_instance(rng, n, with_ties=trial % 2 == 0)
            assert math.isclose(
                average_precision(labels, scores),
                per_positive_ap_oracle(labels, scores),
                abs_tol=1e-12,
            )

    def test_no_positives_raises(self):
        with pytest.raises(MetricUndefinedError):
            average_precision([0, 0, 0], [0.1, 0.2, 0.3])

    def test_all_positives_allowed_and_equal_one(self):
        # every prefix has precision 1, so AP is exactly 1
        assert average_precision([1, 1, 1], [0.3, 0.2, 0.9]) == 1.0

    def test_invariant_under_monotone_score_transforms(self):
        rng = np.random.default_rng(23)
        labels, scores = random_instance(rng, 40, with_ties=True)
        base = average_precision(labels, scores)
        s = np.array(scores)
        for transformed in (np.exp(s), 3.0 * s + 11.0, s**3):
            assert math.isclose(
                average_precision(labels, transformed), base, abs_tol=1e-12
            )


class TestMetricSuite:
    def test_worked_example_values(self):
        report = metric_suite([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8])
        # threshold 0.5 predicts positive only for 0.8: tp=1 fp=0 fn=1 tn=2
        assert report["rocauc"] == 0.75
        assert report["accuracy"] == 0.75
        assert report["precision"] == 1.0
        assert report["recall"] == 0.5
        assert math.isclose(report["prauc"], 0.5 + 1.0 / 3.0, abs_tol=1e-12)
        assert report.n_test == 4
        assert report.positives_in_test == 2

    def test_precision_is_none_when_nothing_predicted_positive(self):
        report = metric_suite([0, 1], [0.1, 0.2], threshold=0.9)
        assert report["precision"] is None
        assert report["recall"] == 0.0
        assert report["accuracy"] == 0.5

    def test_threshold_is_inclusive(self):
        report = metric_suite([0, 1], [0.1, 0.5], threshold=0.5)
        assert report["recall"] == 1.0

    def test_bad_threshold_rejected(self):
        for threshold in (-0.1, 1.5):
            with pytest.raises(ConfigError):
                metric_suite([0, 1], [0.1, 0.9], threshold=threshold)

    def test_single_class_raises(self):
        with pytest.raises(MetricUndefinedError):
            metric_suite([1, 1], [0.1, 0.9])

    def test_roundtrip_through_dict(self):
        report = metric_suite([0, 1, 0, 1], [0.2, 0.9, 0.6, 0.4])
        again = MetricReport.from_dict(report.to_dict())
        assert again == report


class TestMetricReportValidation:
    def _values(self, **overrides):
        base = {
            "rocauc": 0.8,
            "accuracy": 0.7,
            "precision": 0.6,
            "recall": 0.5,
            "prauc": 0.4,
        }
        base.update(overrides)
        return base

    def test_accepts_none_precision(self):
        MetricReport(values=self._values(precision=None), n_test=5, positives_in_test=2)

    def test_rejects_out_of_range_metric(self):
        with pytest.raises(DataError):
            MetricReport(values=self._values(rocauc=1.2), n_test=5, positives_in_test=2)
        with pytest.raises(DataError):
            MetricReport(values=self._values(recall=-0.1), n_test=5, positives_in_test=2)

    def test_rejects_bad_counts(self):
        with pytest.raises(DataError):
            MetricReport(values=self._values(), n_test=0, positives_in_test=0)
        with pytest.raises(DataError):
            MetricReport(values=self._values(), n_test=3, positives_in_test=4)


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------


def _report(auc: float) -> MetricReport:
    return MetricReport(
        values={
            "rocauc": auc,
            "accuracy": auc,
            "precision": auc,
            "recall": auc,
            "prauc": auc,
        },
        n_test=10,
        positives_in_test=5,
    )


def _ok_point(sp, fraction, auc=0.7, with_sp_test=True):
    return SweepPoint(
        sp=sp,
        fraction=fraction,
        n_synthetic=int(round(fraction * 100)),
        n_real_train=100,
        seeds={"generate": 1, "fit_sp": 2, "fit_full": 3},
        status="ok",
        sp_model=_report(auc),
        fullpop_model=_report(auc),
        fullpop_model_sp_test=_report(auc) if with_sp_test else None,
    )


def _failed_point(sp, fraction):
    return SweepPoint(
        sp=sp,
        fraction=fraction,
        n_synthetic=int(round(fraction * 100)),
        n_real_train=100,
        seeds={"generate": 1, "fit_sp": 2, "fit_full": 3},
        status="failed",
        error="generator unavailable",
    )


def _sweep(points, sps=("a",), fractions=(0.0, 0.5, 1.0)):
    return SweepResult(
        sps=tuple(sps),
        fractions=tuple(fractions),
        master_seed=0,
        generator_backend="oracle",
        points=tuple(points),
    )


class TestCurves:
    def test_curve_requires_zero_fraction_first(self):
        with pytest.raises(PipelineIntegrityError):
            Curve(sp="a", points=(CurvePoint(0.5, _report(0.7), _report(0.7)),))

    def test_curve_requires_strictly_increasing_fractions(self):
        points = (
            CurvePoint(0.0, _report(0.7), _report(0.7)),
            CurvePoint(0.5, _report(0.7), _report(0.7)),
            CurvePoint(0.5, _report(0.7), _report(0.7)),
        )
        with pytest.raises(PipelineIntegrityError):
            Curve(sp="a", points=points)

    def test_build_curves_orders_points_and_skips_failures(self):
        points = [
            _ok_point("a", 1.0, auc=0.8),
            _failed_point("a", 0.5),
            _ok_point("a", 0.0, auc=0.6),
        ]
        (curve,) = build_curves(_sweep(points))
        assert curve.sp == "a"
        assert curve.fractions == (0.0, 1.0)
        assert curve.points[0].sp_model["rocauc"] == 0.6
        assert curve.points[1].sp_model["rocauc"] == 0.8

    def test_build_curves_one_curve_per_sp(self):
        points = [
            _ok_point("a", 0.0),
            _ok_point("a", 0.5),
            _ok_point("b", 0.0),
            _ok_point("b", 0.5),
        ]
        curves = build_curves(_sweep(points, sps=("a", "b"), fractions=(0.0, 0.5)))
        assert [c.sp for c in curves] == ["a", "b"]
        assert all(c.fractions == (0.0, 0.5) for c in curves)

    def test_build_curves_missing_zero_point_rejected(self):
        points = [_failed_point("a", 0.0), _ok_point("a", 0.5)]
        with pytest.raises(PipelineIntegrityError):
            build_curves(_sweep(points))

    def test_build_curves_empty_sweep_rejected(self):
        with pytest.raises(PipelineIntegrityError):
            build_curves(_sweep([], sps=()))

    def test_build_curves_all_failed_sp_rejected(self):
        points = [_failed_point("a", 0.0), _failed_point("a", 0.5)]
        with pytest.raises(PipelineIntegrityError):
            build_curves(_sweep(points))

    def test_curves_to_rows_shape_and_scopes(self):
        points = [_ok_point("a", 0.0), _ok_point("a", 0.5)]
        (curve,) = build_curves(_sweep(points))
        rows = curves_to_rows([curve])
        # 2 points x 3 model scopes x 5 metrics
        assert len(rows) == 2 * 3 * 5
        assert {r[2] for r in rows} == {"sp", "fullpop", "fullpop_on_sp_test"}
        assert {r[3] for r in rows} == {
            "rocauc",
            "accuracy",
            "precision",
            "recall",
            "prauc",
        }
        assert all(r[0] == "a" for r in rows)

    def test_curves_to_rows_omits_undefined_values(self):
        report = MetricReport(
            values={
                "rocauc": 0.7,
                "accuracy": 0.7,
                "precision": None,
                "recall": 0.7,
                "prauc": 0.7,
            },
            n_test=10,
            positives_in_test=5,
        )
        curve = Curve(sp="a", points=(CurvePoint(0.0, report, report),))
        rows = curves_to_rows([curve])
        assert len(rows) == 2 * 4
        assert all(r[3] != "precision" for r in rows)
