"""Evaluation metrics and reports for the four-label triage task.

Green dominates real forums, so plain accuracy rewards predicting green
everywhere. The headline metrics therefore focus on the labels that matter
for escalation, all derived from the same 4x4 confusion matrix:

* macro_f1_non_green: mean of the one-vs-rest F1 scores for crisis, red, and
  amber (green excluded).
* flagged_f1: collapse to flagged (amber or worse) vs green; F1 of the
  flagged class.
* urgent_f1: collapse to urgent (red or worse) vs not; mean of the F1 scores
  of both binary classes.
* crisis_f1: collapse to crisis vs rest; F1 of the crisis class.

Any ratio with a zero denominator is defined as 0 (precision, recall, F1
alike), so a never-predicted class scores 0 rather than raising.
"""

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .classify import Prediction, TrainConfig, predict_batch, train_svm
from .corpus import LABELS, Post, TriageLabel
from .errors import EvaluationError
from .features import ABLATION_PRESETS, FeaturePipeline, preset_config


def _as_labels(values: Sequence) -> list[TriageLabel]:
    labels = []
    for value in values:
        if isinstance(value, Prediction):
            value = value.label
        elif isinstance(value, Post):
            value = value.label
        if value is None:
            raise EvaluationError("cannot evaluate unlabeled posts")
        if not isinstance(value, TriageLabel):
            raise EvaluationError(f"expected a triage label, got {value!r}")
        labels.append(value)
    return labels


def _validate_pair(y_true: Sequence, y_pred: Sequence) -> tuple[list[TriageLabel], list[TriageLabel]]:
    true_labels = _as_labels(y_true)
    pred_labels = _as_labels(y_pred)
    if not true_labels:
        raise EvaluationError("no examples to evaluate")
    if len(true_labels) != len(pred_labels):
        raise EvaluationError(
            f"got {len(true_labels)} true labels but {len(pred_labels)} predictions"
        )
    return true_labels, pred_labels


def confusion_matrix(y_true: Sequence, y_pred: Sequence) -> np.ndarray:
    """4x4 count matrix, rows = true label, columns = predicted label,
    both in severity order (green, amber, red, crisis)."""
    true_labels, pred_labels = _validate_pair(y_true, y_pred)
    matrix = np.zeros((len(LABELS), len(LABELS)), dtype=np.int64)
    for t, p in zip(true_labels, pred_labels):
        matrix[int(t), int(p)] += 1
    return matrix


def _f1(tp: int, fp: int, fn: int) -> float:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


def _binary_counts(
    true_labels: Sequence[TriageLabel],
    pred_labels: Sequence[TriageLabel],
    positive: Callable[[TriageLabel], bool],
) -> tuple[int, int, int]:
    tp = fp = fn = 0
    for t, p in zip(true_labels, pred_labels):
        if positive(p):
            if positive(t):
                tp += 1
            else:
                fp += 1
        elif positive(t):
            fn += 1
    return tp, fp, fn


def per_class_prf(y_true: Sequence, y_pred: Sequence) -> dict[TriageLabel, dict[str, float]]:
    """One-vs-rest precision, recall, F1, and support for each label."""
    matrix = confusion_matrix(y_true, y_pred)
    out = {}
    for label in LABELS:
        i = int(label)
        tp = int(matrix[i, i])
        fp = int(matrix[:, i].sum() - tp)
        fn = int(matrix[i, :].sum() - tp)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        out[label] = {
            "precision": precision,
            "recall": recall,
            "f1": _f1(tp, fp, fn),
            "support": int(matrix[i, :].sum()),
        }
    return out


def macro_f1_non_green(y_true: Sequence, y_pred: Sequence) -> float:
    """Mean one-vs-rest F1 over the amber, red, and crisis labels."""
    per_class = per_class_prf(y_true, y_pred)
    scores = [per_class[label]["f1"] for label in LABELS if label is not TriageLabel.GREEN]
    return float(np.mean(scores))


def flagged_f1(y_true: Sequence, y_pred: Sequence) -> float:
    """F1 of the flagged class after collapsing to flagged vs green."""
    true_labels, pred_labels = _validate_pair(y_true, y_pred)
    tp, fp, fn = _binary_counts(true_labels, pred_labels, lambda label: label.flagged)
    return _f1(tp, fp, fn)


def urgent_f1(y_true: Sequence, y_pred: Sequence) -> float:
    """Mean of the two class F1 scores after collapsing to urgent (red or
    crisis) vs not urgent."""
    true_labels, pred_labels = _validate_pair(y_true, y_pred)
    tp, fp, fn = _binary_counts(true_labels, pred_labels, lambda label: label.urgent)
    tn_tp, tn_fp, tn_fn = _binary_counts(true_labels, pred_labels, lambda label: not label.urgent)
    return (_f1(tp, fp, fn) + _f1(tn_tp, tn_fp, tn_fn)) / 2


def crisis_f1(y_true: Sequence, y_pred: Sequence) -> float:
    """F1 of the crisis class after collapsing to crisis vs rest."""
    true_labels, pred_labels = _validate_pair(y_true, y_pred)
    tp, fp, fn = _binary_counts(true_labels, pred_labels, lambda label: label is TriageLabel.CRISIS)
    return _f1(tp, fp, fn)


OFFICIAL_METRICS = ("macro_f1_non_green", "flagged_f1", "urgent_f1", "crisis_f1")


def official_metrics(y_true: Sequence, y_pred: Sequence) -> dict[str, float]:
    """The four headline metrics, keyed by name in reporting order."""
    return {
        "macro_f1_non_green": macro_f1_non_green(y_true, y_pred),
        "flagged_f1": flagged_f1(y_true, y_pred),
        "urgent_f1": urgent_f1(y_true, y_pred),
        "crisis_f1": crisis_f1(y_true, y_pred),
    }


@dataclass
class EvalReport:
    n: int
    confusion: np.ndarray
    per_class: dict[TriageLabel, dict[str, float]]
    accuracy: float
    macro_f1_all: float
    macro_f1_non_green: float
    flagged_f1: float
    urgent_f1: float
    crisis_f1: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "label_order": [str(label) for label in LABELS],
            "confusion": self.confusion.tolist(),
            "per_class": {str(label): stats for label, stats in self.per_class.items()},
            "accuracy": self.accuracy,
            "macro_f1_all": self.macro_f1_all,
            "macro_f1_non_green": self.macro_f1_non_green,
            "flagged_f1": self.flagged_f1,
            "urgent_f1": self.urgent_f1,
            "crisis_f1": self.crisis_f1,
        }


def evaluate_predictions(y_true: Sequence, predictions: Sequence) -> EvalReport:
    """Full report from true labels (or labeled posts) and predictions
    (Prediction objects or labels)."""
    true_labels, pred_labels = _validate_pair(y_true, predictions)
    matrix = confusion_matrix(true_labels, pred_labels)
    per_class = per_class_prf(true_labels, pred_labels)
    n = len(true_labels)
    return EvalReport(
        n=n,
        confusion=matrix,
        per_class=per_class,
        accuracy=float(np.trace(matrix)) / n,
        macro_f1_all=float(np.mean([per_class[label]["f1"] for label in LABELS])),
        macro_f1_non_green=macro_f1_non_green(true_labels, pred_labels),
        flagged_f1=flagged_f1(true_labels, pred_labels),
        urgent_f1=urgent_f1(true_labels, pred_labels),
        crisis_f1=crisis_f1(true_labels, pred_labels),
    )


def ablation_run(
    train_posts: Sequence[Post],
    test_posts: Sequence[Post],
    lexicons,
    rows: Sequence[str] = ABLATION_PRESETS,
    embeddings=None,
    train_config: TrainConfig | None = None,
) -> list[dict]:
    """Train and evaluate one SVM per feature preset; returns one row dict
    per preset with the vector dimension and the four headline metrics.

    Presets that can take embeddings only include them when an embedding
    table is supplied.
    """
    train_posts = list(train_posts)
    test_posts = list(test_posts)
    if not train_posts or not test_posts:
        raise EvaluationError("ablation needs non-empty train and test corpora")
    y_train = _as_labels(train_posts)
    y_test = _as_labels(test_posts)
    out = []
    for name in rows:
        config = preset_config(name, with_embeddings=embeddings is not None)
        pipeline = FeaturePipeline(config, lexicons=lexicons, embeddings=embeddings)
        X_train = pipeline.fit_transform(train_posts)
        model = train_svm(X_train, y_train, train_config)
        predicted = predict_batch(model, pipeline.matrix(test_posts))
        report = evaluate_predictions(y_test, predicted)
        out.append(
            {
                "preset": name,
                "dim": pipeline.dim,
                "macro_f1_non_green": report.macro_f1_non_green,
                "flagged_f1": report.flagged_f1,
                "urgent_f1": report.urgent_f1,
                "crisis_f1": report.crisis_f1,
                "accuracy": report.accuracy,
                "macro_f1_all": report.macro_f1_all,
                "confusion": report.confusion.tolist(),
            }
        )
    return out


def format_ablation_table(rows: Sequence[Mapping]) -> str:
    """Fixed-width text table of ablation rows."""
    name_width = max([len("preset")] + [len(str(row["preset"])) for row in rows])
    headers = ["preset".ljust(name_width), "dim".rjust(6)]
    headers += [name.rjust(len(name)) for name in OFFICIAL_METRICS]
    lines = ["  ".join(headers)]
    for row in rows:
        cells = [str(row["preset"]).ljust(name_width), str(row["dim"]).rjust(6)]
        cells += [f"{row[name]:.4f}".rjust(len(name)) for name in OFFICIAL_METRICS]
        lines.append("  ".join(cells))
    return "\n".join(lines)


def format_report(report: EvalReport) -> str:
    """Readable multi-line rendering of an EvalReport."""
    lines = [f"examples: {report.n}", ""]
    lines.append("confusion matrix (rows = true, columns = predicted)")
    names = [str(label) for label in LABELS]
    cell = max(6, max(len(n) for n in names) + 1)
    lines.append(" " * 8 + "".join(n.rjust(cell) for n in names))
    for label in LABELS:
        row = report.confusion[int(label)]
        lines.append(str(label).ljust(8) + "".join(str(int(v)).rjust(cell) for v in row))
    lines.append("")
    lines.append("label     precision  recall      f1  support")
    for label in LABELS:
        stats = report.per_class[label]
        lines.append(
            f"{str(label):<8}  {stats['precision']:>9.4f}  {stats['recall']:>6.4f}"
            f"  {stats['f1']:>6.4f}  {stats['support']:>7d}"
        )
    lines.append("")
    lines.append(f"accuracy            {report.accuracy:.4f}")
    lines.append(f"macro_f1_all        {report.macro_f1_all:.4f}")
    lines.append(f"macro_f1_non_green  {report.macro_f1_non_green:.4f}")
    lines.append(f"flagged_f1          {report.flagged_f1:.4f}")
    lines.append(f"urgent_f1           {report.urgent_f1:.4f}")
    lines.append(f"crisis_f1           {report.crisis_f1:.4f}")
    return "\n".join(lines)
