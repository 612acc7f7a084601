"""Severity triage for support-forum posts.

Classifies posts into green, amber, red, or crisis from text alone: TF-IDF
token features plus lexicon, surface, phrase-pattern, embedding, sentiment,
author-rank, and heuristic feature blocks feed a one-vs-rest linear SVM
(Naive Bayes and k-NN baselines included). See the README for the CLI.
"""

from .classify import (
    GridSearchResult,
    KnnModel,
    LinearSvmModel,
    NaiveBayesModel,
    Prediction,
    TrainConfig,
    grid_search,
    hinge_objective,
    hinge_subgradient,
    knn_predict,
    nb_predict,
    predict,
    predict_batch,
    severity_argmax,
    train_knn,
    train_nb,
    train_svm,
)
from .corpus import (
    LABELS,
    CorpusStats,
    Post,
    TriageLabel,
    corpus_stats,
    load_posts,
    save_posts,
    stratified_fold_indices,
    stratified_folds,
)
from .errors import (
    ClassifyError,
    CorpusError,
    EmbeddingError,
    EvaluationError,
    FeatureError,
    FingerprintError,
    LexiconError,
    ModelFileError,
    TriageError,
)
from .evaluate import (
    EvalReport,
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
from .features import (
    ABLATION_PRESETS,
    PRESET_NAMES,
    EmbeddingTable,
    FeatureConfig,
    FeaturePipeline,
    FeatureVector,
    load_embeddings,
    preset_config,
    register_sentiment_scorer,
)
from .lexicons import (
    NEGATION_TERMS,
    Lexicon,
    MatchEvent,
    bundled_lexicon_manifest,
    load_lexicon,
    load_lexicon_bundle,
    match_counts,
    scan_matches,
    weighted_sum,
)
from .model_io import MODEL_FORMAT_VERSION, load_model, save_model
from .synth import generate_corpus, generate_split
from .textproc import split_sentences, tokenize

__version__ = "0.1.0"

__all__ = [
    "ABLATION_PRESETS",
    "ClassifyError",
    "CorpusError",
    "CorpusStats",
    "EmbeddingError",
    "EmbeddingTable",
    "EvalReport",
    "EvaluationError",
    "FeatureConfig",
    "FeatureError",
    "FeaturePipeline",
    "FeatureVector",
    "FingerprintError",
    "GridSearchResult",
    "KnnModel",
    "LABELS",
    "Lexicon",
    "LexiconError",
    "LinearSvmModel",
    "MODEL_FORMAT_VERSION",
    "MatchEvent",
    "ModelFileError",
    "NEGATION_TERMS",
    "NaiveBayesModel",
    "PRESET_NAMES",
    "Post",
    "Prediction",
    "TrainConfig",
    "TriageError",
    "TriageLabel",
    "ablation_run",
    "bundled_lexicon_manifest",
    "confusion_matrix",
    "corpus_stats",
    "crisis_f1",
    "evaluate_predictions",
    "flagged_f1",
    "format_ablation_table",
    "format_report",
    "generate_corpus",
    "generate_split",
    "grid_search",
    "hinge_objective",
    "hinge_subgradient",
    "knn_predict",
    "load_embeddings",
    "load_lexicon",
    "load_lexicon_bundle",
    "load_model",
    "load_posts",
    "macro_f1_non_green",
    "match_counts",
    "nb_predict",
    "official_metrics",
    "per_class_prf",
    "predict",
    "predict_batch",
    "preset_config",
    "register_sentiment_scorer",
    "save_model",
    "save_posts",
    "scan_matches",
    "severity_argmax",
    "split_sentences",
    "stratified_fold_indices",
    "stratified_folds",
    "tokenize",
    "train_knn",
    "train_nb",
    "train_svm",
    "urgent_f1",
    "weighted_sum",
]
