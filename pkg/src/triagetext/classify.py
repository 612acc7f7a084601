"""Classifiers: a one-vs-rest linear SVM trained by deterministic subgradient
descent, plus multinomial Naive Bayes and k-nearest-neighbours baselines, and
stratified-CV grid search over hyperparameters.

The SVM minimizes, independently per label with signs s in {-1, +1},

    (1/n) * sum_i cw_i * max(0, 1 - s_i * (w . x_i + b)) + (1/C) * R(w)

where R is the L1 norm for penalty "l1" and 0.5 * ||w||^2 for "l2", and cw_i
is 1 under uniform class weighting or n / (k * n_label(i)) under "balanced"
(k = number of distinct labels present). The optimizer is full-batch
normalized subgradient descent with a geometrically decaying step length
(from ``learning_rate`` down to ``step_floor`` across ``max_iterations``)
and best-iterate tracking. Nothing is sampled, so a given (X, y, config)
always yields bit-identical weights; TrainConfig.seed exists for fold
shuffling in grid search.

Multiclass prediction takes the label with the highest raw margin; exact
score ties go to the more severe label.
"""

import itertools
from collections import Counter
from dataclasses import dataclass, field, fields, replace
from typing import Mapping, Sequence

import numpy as np
from scipy import sparse

from .corpus import LABELS, TriageLabel, stratified_fold_indices
from .errors import ClassifyError, FingerprintError
from .features import FeatureVector

Matrix = "np.ndarray | sparse.csr_matrix"


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    penalty: str = "l1"
    loss: str = "hinge"
    class_weight: str = "uniform"
    max_iterations: int = 2000
    learning_rate: float = 1.0
    step_floor: float = 1e-10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.penalty not in ("l1", "l2"):
            raise ClassifyError(f"penalty must be 'l1' or 'l2', got {self.penalty!r}")
        if self.loss != "hinge":
            raise ClassifyError(f"only hinge loss is supported, got {self.loss!r}")
        if self.class_weight not in ("uniform", "balanced"):
            raise ClassifyError(
                f"class_weight must be 'uniform' or 'balanced', got {self.class_weight!r}"
            )
        if self.C <= 0:
            raise ClassifyError(f"C must be positive, got {self.C}")
        if self.max_iterations < 1:
            raise ClassifyError(f"max_iterations must be at least 1, got {self.max_iterations}")
        if self.learning_rate <= 0:
            raise ClassifyError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 < self.step_floor <= self.learning_rate:
            raise ClassifyError(
                f"step_floor must lie in (0, learning_rate], got {self.step_floor}"
            )

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ClassifyError(f"unknown training config keys: {sorted(unknown)}")
        return cls(**data)


def severity_argmax(scores: Mapping[TriageLabel, float]) -> TriageLabel:
    """Label with the highest score; exact ties go to the more severe label."""
    return max(scores, key=lambda label: (scores[label], int(label)))


@dataclass
class Prediction:
    post_id: str | None
    label: TriageLabel
    scores: dict[TriageLabel, float]


def _as_matrix(X) -> tuple["Matrix", str]:
    """Accept a CSR/ndarray matrix or a list of FeatureVector; return the
    matrix plus the vectors' shared pipeline fingerprint ("" for raw input)."""
    if sparse.issparse(X):
        return X.tocsr(), ""
    if isinstance(X, np.ndarray):
        if X.ndim != 2:
            raise ClassifyError(f"expected a 2-d feature matrix, got shape {X.shape}")
        return X, ""
    vectors = list(X)
    if not vectors:
        raise ClassifyError("empty feature list")
    first = vectors[0]
    if not isinstance(first, FeatureVector):
        raise ClassifyError(f"cannot interpret {type(first).__name__} as features")
    dim = first.dim
    fingerprint = first.fingerprint
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for vec in vectors:
        if vec.dim != dim or vec.fingerprint != fingerprint:
            raise ClassifyError("feature vectors come from different pipelines")
        for col in sorted(vec.tfidf):
            indices.append(col)
            data.append(vec.tfidf[col])
        for offset, value in enumerate(vec.dense.values()):
            indices.append(vec.tfidf_dim + offset)
            data.append(value)
        indptr.append(len(indices))
    matrix = sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr)),
        shape=(len(vectors), dim),
    )
    return matrix, fingerprint


def _check_labels(y: Sequence[TriageLabel | str], n: int) -> list[TriageLabel]:
    labels = list(y)
    if len(labels) != n:
        raise ClassifyError(f"X has {n} rows but y has {len(labels)} labels")
    if any(label is None for label in labels):
        raise ClassifyError("training labels contain unlabeled posts")
    return [
        label if isinstance(label, TriageLabel) else TriageLabel.parse(label)
        for label in labels
    ]


def _example_weights(y: Sequence[TriageLabel], scheme: str) -> np.ndarray:
    n = len(y)
    if scheme == "uniform":
        return np.ones(n, dtype=np.float64)
    counts = Counter(y)
    k = len(counts)
    return np.array([n / (k * counts[label]) for label in y], dtype=np.float64)


# ---------------------------------------------------------------------------
# Hinge objective and subgradient (single source of truth, shared with tests)


def _penalty_value(w: np.ndarray, penalty: str) -> float:
    if penalty == "l1":
        return float(np.abs(w).sum())
    return 0.5 * float(w @ w)


def _penalty_subgradient(w: np.ndarray, penalty: str) -> np.ndarray:
    if penalty == "l1":
        return np.sign(w)
    return w


def _objective_from_margins(margins, signs, sample_weight, w, config) -> float:
    hinge = np.maximum(0.0, 1.0 - signs * margins)
    loss = float(np.mean(sample_weight * hinge))
    return loss + _penalty_value(w, config.penalty) / config.C


def _subgradient_from_margins(X, margins, signs, sample_weight, w, config):
    active = (signs * margins) < 1.0
    coef = np.where(active, sample_weight * signs, 0.0)
    n = X.shape[0]
    grad_w = -(X.T @ coef) / n + _penalty_subgradient(w, config.penalty) / config.C
    grad_b = -float(coef.sum()) / n
    return np.asarray(grad_w).ravel(), grad_b


def hinge_objective(X, signs, w, b, config: TrainConfig, sample_weight=None) -> float:
    """Regularized mean hinge loss for a binary subproblem (signs in {-1,+1})."""
    sw = np.ones(X.shape[0]) if sample_weight is None else np.asarray(sample_weight)
    margins = X @ w + b
    return _objective_from_margins(np.asarray(margins).ravel(), signs, sw, w, config)


def hinge_subgradient(X, signs, w, b, config: TrainConfig, sample_weight=None):
    """Subgradient of hinge_objective at (w, b): at hinge kinks the zero
    branch is taken, and sign(0) = 0 for the L1 term."""
    sw = np.ones(X.shape[0]) if sample_weight is None else np.asarray(sample_weight)
    margins = np.asarray(X @ w + b).ravel()
    return _subgradient_from_margins(X, margins, signs, sw, w, config)


def _optimize(X, signs, sample_weight, config: TrainConfig):
    """Full-batch normalized subgradient descent with a geometric step decay.

    Each step moves a fixed distance eta_t along the unit subgradient of the
    joint (w, b) vector, with eta_t shrinking from learning_rate to step_floor
    over max_iterations. The nondifferentiable objective is not monotone along
    this path, so the best iterate seen is returned; on exact objective ties
    the newest point wins, so drift along exactly-flat directions (hinge slope
    canceling the L1 slope) is kept rather than thrown away.
    """
    n, dim = X.shape
    w = np.zeros(dim, dtype=np.float64)
    b = 0.0
    best_w = w.copy()
    best_b = b
    best_f = np.inf
    eta = config.learning_rate
    decay = (config.step_floor / config.learning_rate) ** (1.0 / config.max_iterations)
    steps = 0
    for steps in range(1, config.max_iterations + 1):
        margins = np.asarray(X @ w + b).ravel()
        f = _objective_from_margins(margins, signs, sample_weight, w, config)
        if f < best_f - 1e-12:
            best_f = f
            best_w = w.copy()
            best_b = b
        elif f <= best_f + 1e-12:
            best_f = min(best_f, f)
            best_w = w.copy()
            best_b = b
        grad_w, grad_b = _subgradient_from_margins(X, margins, signs, sample_weight, w, config)
        norm = float(np.sqrt(grad_w @ grad_w + grad_b * grad_b))
        if norm == 0.0:
            break
        w = w - eta * grad_w / norm
        b = b - eta * grad_b / norm
        eta *= decay
    return best_w, best_b, best_f, steps


@dataclass
class LinearSvmModel:
    weights: np.ndarray  # (len(LABELS), dim)
    biases: np.ndarray  # (len(LABELS),)
    config: TrainConfig
    fingerprint: str = ""
    label_order: tuple[TriageLabel, ...] = LABELS
    objectives: tuple[float, ...] = ()
    steps_run: tuple[int, ...] = ()

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def decision_scores(self, X) -> np.ndarray:
        """Raw per-label margins, one row per input row."""
        scores = X @ self.weights.T + self.biases
        return np.asarray(scores)

    def to_dict(self) -> dict:
        return {
            "kind": "linear-svm",
            "label_order": [str(label) for label in self.label_order],
            "weights": self.weights.tolist(),
            "biases": self.biases.tolist(),
            "config": self.config.to_dict(),
            "objectives": list(self.objectives),
            "steps_run": list(self.steps_run),
            "fingerprint": self.fingerprint,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "LinearSvmModel":
        if data.get("kind") != "linear-svm":
            raise ClassifyError(f"unsupported classifier kind {data.get('kind')!r}")
        return cls(
            weights=np.array(data["weights"], dtype=np.float64),
            biases=np.array(data["biases"], dtype=np.float64),
            config=TrainConfig.from_dict(data["config"]),
            fingerprint=data.get("fingerprint", ""),
            label_order=tuple(TriageLabel.parse(name) for name in data["label_order"]),
            objectives=tuple(data.get("objectives", ())),
            steps_run=tuple(data.get("steps_run", ())),
        )


def train_svm(X, y: Sequence[TriageLabel], config: TrainConfig | None = None) -> LinearSvmModel:
    """Train one-vs-rest linear SVMs, one binary subproblem per label.

    Labels never seen in ``y`` still get a column; with every example
    negative their scores end up strongly negative and they cannot win the
    argmax. At least two distinct labels are required.
    """
    config = config or TrainConfig()
    matrix, fingerprint = _as_matrix(X)
    labels = _check_labels(y, matrix.shape[0])
    if len(set(labels)) < 2:
        raise ClassifyError("training labels contain a single class")
    sample_weight = _example_weights(labels, config.class_weight)
    label_array = np.array([int(label) for label in labels])
    weights = np.zeros((len(LABELS), matrix.shape[1]), dtype=np.float64)
    biases = np.zeros(len(LABELS), dtype=np.float64)
    objectives = []
    steps_run = []
    for row, label in enumerate(LABELS):
        signs = np.where(label_array == int(label), 1.0, -1.0)
        w, b, best_f, steps = _optimize(matrix, signs, sample_weight, config)
        weights[row] = w
        biases[row] = b
        objectives.append(best_f)
        steps_run.append(steps)
    return LinearSvmModel(
        weights=weights,
        biases=biases,
        config=config,
        fingerprint=fingerprint,
        objectives=tuple(objectives),
        steps_run=tuple(steps_run),
    )


def _check_vector(model_fingerprint: str, model_dim: int, x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        if model_fingerprint and x.fingerprint and model_fingerprint != x.fingerprint:
            raise FingerprintError(
                "feature vector was built by a different pipeline than the model"
            )
        arr = x.to_array()
    else:
        arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.shape[0] != model_dim:
        raise ClassifyError(
            f"feature dimension mismatch: model expects {model_dim}, got {arr.shape[0]}"
        )
    return arr


def predict(model: LinearSvmModel, x, post_id: str | None = None) -> Prediction:
    """Classify one feature vector; scores are the raw per-label margins."""
    arr = _check_vector(model.fingerprint, model.dim, x)
    raw = model.weights @ arr + model.biases
    scores = {label: float(raw[i]) for i, label in enumerate(model.label_order)}
    return Prediction(post_id=post_id, label=severity_argmax(scores), scores=scores)


def predict_batch(model: LinearSvmModel, X, post_ids: Sequence[str] | None = None) -> list[Prediction]:
    matrix, fingerprint = _as_matrix(X)
    if model.fingerprint and fingerprint and model.fingerprint != fingerprint:
        raise FingerprintError("feature vectors were built by a different pipeline than the model")
    if matrix.shape[1] != model.dim:
        raise ClassifyError(
            f"feature dimension mismatch: model expects {model.dim}, got {matrix.shape[1]}"
        )
    raw = model.decision_scores(matrix)
    out = []
    for i in range(matrix.shape[0]):
        scores = {label: float(raw[i, j]) for j, label in enumerate(model.label_order)}
        out.append(
            Prediction(
                post_id=post_ids[i] if post_ids is not None else None,
                label=severity_argmax(scores),
                scores=scores,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Multinomial Naive Bayes baseline


@dataclass
class NaiveBayesModel:
    class_log_prior: np.ndarray  # (len(LABELS),)
    feature_log_prob: np.ndarray  # (len(LABELS), dim)
    shift: np.ndarray  # per-feature shift applied to make values non-negative
    alpha: float
    fingerprint: str = ""
    label_order: tuple[TriageLabel, ...] = LABELS

    @property
    def dim(self) -> int:
        return self.feature_log_prob.shape[1]


def train_nb(X, y: Sequence[TriageLabel], alpha: float = 1.0) -> NaiveBayesModel:
    """Multinomial NB with additive smoothing.

    Features are shifted per column by min(0, training minimum) so that
    z-scored (negative) values become valid multinomial counts; the shift is
    stored on the model and re-applied, with clamping at zero, at prediction.
    Labels absent from the training data get a -inf log prior.
    """
    if alpha <= 0:
        raise ClassifyError(f"smoothing alpha must be positive, got {alpha}")
    matrix, fingerprint = _as_matrix(X)
    labels = _check_labels(y, matrix.shape[0])
    dense = matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix, dtype=np.float64)
    shift = np.minimum(dense.min(axis=0), 0.0)
    shifted = dense - shift
    n, dim = shifted.shape
    label_array = np.array([int(label) for label in labels])
    prior = np.zeros(len(LABELS))
    log_prob = np.zeros((len(LABELS), dim))
    for row, label in enumerate(LABELS):
        mask = label_array == int(label)
        prior[row] = mask.sum() / n
        counts = shifted[mask].sum(axis=0) if mask.any() else np.zeros(dim)
        theta = (counts + alpha) / (counts.sum() + alpha * dim)
        log_prob[row] = np.log(theta)
    with np.errstate(divide="ignore"):
        log_prior = np.log(prior)
    return NaiveBayesModel(
        class_log_prior=log_prior,
        feature_log_prob=log_prob,
        shift=shift,
        alpha=alpha,
        fingerprint=fingerprint,
    )


def nb_log_likelihood(model: NaiveBayesModel, x) -> np.ndarray:
    """Per-label joint log probability (up to the shared multinomial term)."""
    arr = _check_vector(model.fingerprint, model.dim, x)
    shifted = np.maximum(arr - model.shift, 0.0)
    return model.class_log_prior + model.feature_log_prob @ shifted


def nb_predict(model: NaiveBayesModel, x, post_id: str | None = None) -> Prediction:
    raw = nb_log_likelihood(model, x)
    scores = {label: float(raw[i]) for i, label in enumerate(model.label_order)}
    return Prediction(post_id=post_id, label=severity_argmax(scores), scores=scores)


# ---------------------------------------------------------------------------
# k-nearest-neighbours baseline


@dataclass
class KnnModel:
    points: np.ndarray  # (n, dim) dense training matrix
    labels: tuple[TriageLabel, ...]
    k: int
    fingerprint: str = ""


def train_knn(X, y: Sequence[TriageLabel], k: int) -> KnnModel:
    matrix, fingerprint = _as_matrix(X)
    labels = _check_labels(y, matrix.shape[0])
    if not 1 <= k <= matrix.shape[0]:
        raise ClassifyError(f"k must be between 1 and {matrix.shape[0]}, got {k}")
    dense = matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix, dtype=np.float64)
    return KnnModel(points=dense, labels=tuple(labels), k=k, fingerprint=fingerprint)


def knn_predict(model: KnnModel, x, post_id: str | None = None) -> Prediction:
    """Majority vote among the k nearest points by Euclidean distance.

    Equidistant points are taken in training order; vote ties go to the more
    severe label. Scores are vote fractions.
    """
    arr = _check_vector(model.fingerprint, model.points.shape[1], x)
    deltas = model.points - arr
    dist_sq = np.einsum("ij,ij->i", deltas, deltas)
    nearest = np.argsort(dist_sq, kind="stable")[: model.k]
    votes = Counter(model.labels[i] for i in nearest)
    scores = {label: votes.get(label, 0) / model.k for label in LABELS}
    return Prediction(post_id=post_id, label=severity_argmax(scores), scores=scores)


# ---------------------------------------------------------------------------
# Grid search


@dataclass
class GridCell:
    params: dict
    fold_scores: list[float]
    mean_score: float

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "fold_scores": self.fold_scores,
            "mean_score": self.mean_score,
        }


@dataclass
class GridSearchResult:
    model_kind: str
    cells: list[GridCell]
    best_params: dict
    best_score: float

    def to_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "best_params": self.best_params,
            "best_score": self.best_score,
            "cells": [cell.to_dict() for cell in self.cells],
        }


def _fit_cell(model_kind: str, X, y, params: dict, base: TrainConfig):
    if model_kind == "svm":
        return train_svm(X, y, replace(base, **params))
    if model_kind == "nb":
        return train_nb(X, y, **params)
    if model_kind == "knn":
        if "k" not in params:
            raise ClassifyError("KNN grid needs a 'k' parameter")
        return train_knn(X, y, params["k"])
    raise ClassifyError(f"unknown model kind {model_kind!r}")


def _cell_predictions(model, X) -> list[TriageLabel]:
    if isinstance(model, LinearSvmModel):
        return [p.label for p in predict_batch(model, X)]
    dense = X.toarray() if sparse.issparse(X) else np.asarray(X)
    if isinstance(model, NaiveBayesModel):
        return [nb_predict(model, row).label for row in dense]
    return [knn_predict(model, row).label for row in dense]


def _param_sort_key(value):
    if isinstance(value, (int, float)):
        return (0, float(value))
    return (1, str(value))


def grid_search(
    X,
    y: Sequence[TriageLabel],
    grid: Mapping[str, Sequence],
    model_kind: str = "svm",
    k_folds: int = 5,
    seed: int = 0,
    base_config: TrainConfig | None = None,
) -> GridSearchResult:
    """Exhaustive search over the parameter grid with stratified k-fold CV.

    Each cell is scored by the mean over folds of macro F1 excluding green on
    the held-out fold. Score ties are broken toward smaller parameter values
    (parameters compared in sorted name order), so e.g. the smaller C or the
    smaller k wins.
    """
    from .evaluate import macro_f1_non_green

    if not grid or any(len(values) == 0 for values in grid.values()):
        raise ClassifyError("grid must map each parameter to a non-empty list of values")
    matrix, _ = _as_matrix(X)
    labels = _check_labels(y, matrix.shape[0])
    base = base_config or TrainConfig(seed=seed)
    folds = np.array(stratified_fold_indices(labels, k_folds, seed))
    names = sorted(grid)
    cells = []
    for combo in itertools.product(*(grid[name] for name in names)):
        params = dict(zip(names, combo))
        fold_scores = []
        for fold in range(k_folds):
            train_mask = folds != fold
            test_idx = np.where(~train_mask)[0]
            train_idx = np.where(train_mask)[0]
            X_train = matrix[train_idx]
            X_test = matrix[test_idx]
            y_train = [labels[i] for i in train_idx]
            y_test = [labels[i] for i in test_idx]
            model = _fit_cell(model_kind, X_train, y_train, params, base)
            predicted = _cell_predictions(model, X_test)
            fold_scores.append(macro_f1_non_green(y_test, predicted))
        cells.append(
            GridCell(params=params, fold_scores=fold_scores, mean_score=float(np.mean(fold_scores)))
        )
    best = min(
        cells,
        key=lambda cell: (
            -cell.mean_score,
            tuple(_param_sort_key(cell.params[name]) for name in names),
        ),
    )
    return GridSearchResult(
        model_kind=model_kind,
        cells=cells,
        best_params=best.params,
        best_score=best.mean_score,
    )
