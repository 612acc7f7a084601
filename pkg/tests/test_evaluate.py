import json
import random

import numpy as np
import pytest

from triagetext.classify import Prediction
from triagetext.corpus import LABELS, TriageLabel
from triagetext.errors import EvaluationError
from triagetext.evaluate import (
    OFFICIAL_METRICS,
    ablation_run,
    confusion_matrix,
    crisis_f1,
    evaluate_predictions,
    flagged_f1,
    format_ablation_table,
    format_report,
    macro_f1_non_green,
    official_metrics,
    per_class_prf,
    urgent_f1,
)

from conftest import make_post

G, A, R, C = TriageLabel.GREEN, TriageLabel.AMBER, TriageLabel.RED, TriageLabel.CRISIS


class TestFrozenFixture:
    def test_official_metrics_hand_computed(self, five_posts):
        truth, predicted = five_posts
        metrics = official_metrics(truth, predicted)
        assert metrics["macro_f1_non_green"] == pytest.approx(5 / 9, abs=1e-9)
        assert metrics["flagged_f1"] == pytest.approx(1.0, abs=1e-9)
        assert metrics["urgent_f1"] == pytest.approx(16 / 21, abs=1e-9)
        assert metrics["crisis_f1"] == pytest.approx(1.0, abs=1e-9)

    def test_confusion_matrix(self, five_posts):
        truth, predicted = five_posts
        matrix = confusion_matrix(truth, predicted)
        expected = np.array(
            [
                [2, 0, 0, 0],
                [0, 1, 0, 0],
                [0, 1, 0, 0],
                [0, 0, 0, 1],
            ]
        )
        assert np.array_equal(matrix, expected)

    def test_full_report(self, five_posts):
        truth, predicted = five_posts
        report = evaluate_predictions(truth, predicted)
        assert report.n == 5
        assert report.accuracy == pytest.approx(0.8)
        assert report.macro_f1_all == pytest.approx(2 / 3, abs=1e-9)
        assert report.macro_f1_non_green == pytest.approx(5 / 9, abs=1e-9)
        assert report.per_class[A]["precision"] == pytest.approx(0.5)
        assert report.per_class[A]["recall"] == pytest.approx(1.0)
        assert report.per_class[R]["f1"] == 0.0
        assert report.per_class[R]["support"] == 1


class TestMetricEdges:
    def test_perfect_predictions(self):
        labels = [G, A, R, C, G, A]
        metrics = official_metrics(labels, list(labels))
        assert all(value == pytest.approx(1.0) for value in metrics.values())

    def test_all_green_predictions(self, five_posts):
        truth, _ = five_posts
        predicted = [G] * 5
        metrics = official_metrics(truth, predicted)
        assert metrics["macro_f1_non_green"] == 0.0
        assert metrics["flagged_f1"] == 0.0
        assert metrics["crisis_f1"] == 0.0
        # the non-urgent side of the urgent pair still scores
        assert metrics["urgent_f1"] == pytest.approx(0.375)

    def test_per_class_crisis_counts(self):
        truth = [C, C, C, C, G, G, A]
        predicted = [C, C, C, R, C, C, A]
        stats = per_class_prf(truth, predicted)[C]
        assert stats["precision"] == pytest.approx(0.6)
        assert stats["recall"] == pytest.approx(0.75)
        assert stats["f1"] == pytest.approx(2 * 0.6 * 0.75 / 1.35)
        assert stats["support"] == 4

    def test_permutation_invariance(self):
        rng = random.Random(5)
        truth = [LABELS[rng.randrange(4)] for _ in range(40)]
        predicted = [LABELS[rng.randrange(4)] for _ in range(40)]
        before = official_metrics(truth, predicted)
        order = list(range(40))
        rng.shuffle(order)
        after = official_metrics([truth[i] for i in order], [predicted[i] for i in order])
        assert before == after

    def test_absent_class_scores_zero_not_nan(self):
        truth = [G, A, G, A]
        predicted = [G, A, G, G]
        metrics = official_metrics(truth, predicted)
        assert metrics["crisis_f1"] == 0.0
        assert all(np.isfinite(v) for v in metrics.values())

    def test_metrics_stay_in_unit_interval(self):
        rng = random.Random(11)
        for _ in range(100):
            n = rng.randrange(1, 25)
            truth = [LABELS[rng.randrange(4)] for _ in range(n)]
            predicted = [LABELS[rng.randrange(4)] for _ in range(n)]
            for value in official_metrics(truth, predicted).values():
                assert 0.0 <= value <= 1.0

    def test_adding_correct_greens_leaves_non_green_metrics_alone(self):
        truth = [C, R, A, G]
        predicted = [C, A, A, G]
        base = (
            macro_f1_non_green(truth, predicted),
            flagged_f1(truth, predicted),
            crisis_f1(truth, predicted),
        )
        padded_truth = truth + [G] * 10
        padded_pred = predicted + [G] * 10
        grown = (
            macro_f1_non_green(padded_truth, padded_pred),
            flagged_f1(padded_truth, padded_pred),
            crisis_f1(padded_truth, padded_pred),
        )
        assert base == grown

    def test_accepts_posts_and_prediction_objects(self, five_posts):
        truth, predicted = five_posts
        wrapped = [
            Prediction(post_id=f"p{i}", label=label, scores={}) for i, label in enumerate(predicted)
        ]
        assert official_metrics(truth, wrapped) == official_metrics(truth, predicted)

    def test_official_metric_names(self):
        assert OFFICIAL_METRICS == ("macro_f1_non_green", "flagged_f1", "urgent_f1", "crisis_f1")

    def test_urgent_f1_is_mean_of_both_classes(self):
        truth = [R, C, G, G]
        predicted = [R, G, G, G]
        # urgent: tp=1 fn=1 fp=0 -> 2/3; non-urgent: tp=2 fp=1 fn=0 -> 4/5
        assert urgent_f1(truth, predicted) == pytest.approx((2 / 3 + 4 / 5) / 2, abs=1e-12)


class TestValidation:
    def test_empty_inputs_rejected(self):
        with pytest.raises(EvaluationError, match="no examples"):
            official_metrics([], [])

    def test_length_mismatch_rejected(self):
        with pytest.raises(EvaluationError, match="2 true labels"):
            macro_f1_non_green([G, A], [G])

    def test_unlabeled_post_rejected(self):
        posts = [make_post("p1", "body", "green"), make_post("p2", "body", None)]
        with pytest.raises(EvaluationError, match="unlabeled"):
            flagged_f1(posts, [G, G])

    def test_garbage_labels_rejected(self):
        with pytest.raises(EvaluationError, match="triage label"):
            crisis_f1(["green"], [G])


class TestReportSerialization:
    def test_to_dict_is_json_ready(self, five_posts):
        truth, predicted = five_posts
        report = evaluate_predictions(truth, predicted)
        data = report.to_dict()
        text = json.dumps(data)
        assert json.loads(text)["n"] == 5
        assert data["label_order"] == ["green", "amber", "red", "crisis"]
        assert data["confusion"][0][0] == 2
        assert set(data["per_class"]) == {"green", "amber", "red", "crisis"}

    def test_format_report_sections(self, five_posts):
        truth, predicted = five_posts
        text = format_report(evaluate_predictions(truth, predicted))
        assert "confusion matrix" in text
        assert "accuracy" in text
        for name in OFFICIAL_METRICS:
            assert name in text
        for label in ("green", "amber", "red", "crisis"):
            assert label in text


class TestAblation:
    def test_rows_have_expected_shape(self, bundle, small_split):
        train, test = small_split
        rows = ablation_run(train, test, bundle, rows=("only-lexicons", "tfidf-lexicons"))
        assert [row["preset"] for row in rows] == ["only-lexicons", "tfidf-lexicons"]
        for row in rows:
            assert row["dim"] > 0
            for name in OFFICIAL_METRICS + ("accuracy", "macro_f1_all"):
                assert 0.0 <= row[name] <= 1.0
            confusion = np.array(row["confusion"])
            assert confusion.shape == (4, 4)
            assert confusion.sum() == len(test)

    def test_single_row_request(self, bundle, small_split):
        train, test = small_split
        rows = ablation_run(train, test, bundle, rows=("only-lexicons",))
        assert len(rows) == 1

    def test_empty_corpus_rejected(self, bundle, small_split):
        train, test = small_split
        with pytest.raises(EvaluationError, match="non-empty"):
            ablation_run([], test, bundle)
        with pytest.raises(EvaluationError, match="non-empty"):
            ablation_run(train, [], bundle)

    def test_table_formatting(self, bundle, small_split):
        train, test = small_split
        rows = ablation_run(train, test, bundle, rows=("only-lexicons",))
        text = format_ablation_table(rows)
        lines = text.splitlines()
        assert len(lines) == 2
        assert lines[0].startswith("preset")
        assert "only-lexicons" in lines[1]
        for name in OFFICIAL_METRICS:
            assert name in lines[0]
