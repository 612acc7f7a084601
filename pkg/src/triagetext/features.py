"""Feature extraction: TF-IDF, lexicon counts, surface statistics, phrase
patterns, embeddings, sentiment, rank one-hots, and optional crisis
heuristics, assembled into one fixed-layout vector per post.

Vector layout
-------------
Column 0 .. V-1 is the TF-IDF block (V = vocabulary size, L2-normalized per
post, absent when the block is disabled). The dense block follows, z-scored
feature-wise with statistics fitted on the training corpus, in this order:

1. per lexicon (bundle order): one match count per category (sorted), then,
   for lexicons with explicit weights, one weighted sum per category;
2. surface: twelve pronoun counts, mean word length, web link count;
3. phrase patterns: helpline, self-harm, advisor mention counts;
4. embeddings: post mean vector, then last-sentence mean vector;
5. sentiment: one score;
6. author rank: one-hot over the training rank vocabulary plus OTHER;
7. crisis heuristics (off by default): keyword counters and flags.

Disabled blocks contribute nothing, so the dimension follows the config, but
enabling an extra block never changes the values of the blocks before it.
``FeaturePipeline.dense_feature_names`` lists the dense columns by name.
"""

import hashlib
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Collection, Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix

from .corpus import Post
from .errors import EmbeddingError, FeatureError, FingerprintError
from .lexicons import NEGATION_TERMS, NO_NEGATION, Lexicon, scan_matches
from .textproc import (
    Sentence,
    is_punctuation_token,
    is_url_token,
    ngrams,
    split_sentences,
    tokenize,
)

_DATA_DIR = Path(__file__).parent / "data"


# ---------------------------------------------------------------------------
# TF-IDF


@dataclass
class TfidfModel:
    """Fitted vocabulary and idf weights.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1 over N training posts. Vocabulary
    holds the ``max_features`` most frequent n-grams by raw corpus term
    frequency (ties broken lexicographically); column indices are assigned in
    lexicographic term order, contiguous from 0.
    """

    vocabulary: dict[str, int]
    idf: np.ndarray
    ngram_range: tuple[int, int] = (1, 2)
    max_features: int = 5000


def _terms(tokens: Sequence[str], ngram_range: tuple[int, int]) -> list[str]:
    lo, hi = ngram_range
    out: list[str] = []
    for n in range(lo, hi + 1):
        out.extend(" ".join(gram) for gram in ngrams(tokens, n))
    return out


def fit_tfidf(
    token_lists: Sequence[Sequence[str]],
    max_features: int = 5000,
    ngram_range: tuple[int, int] = (1, 2),
) -> TfidfModel:
    if not token_lists:
        raise FeatureError("cannot fit TF-IDF on an empty corpus")
    if max_features < 1:
        raise FeatureError(f"max_features must be positive, got {max_features}")
    lo, hi = ngram_range
    if not (1 <= lo <= hi):
        raise FeatureError(f"bad ngram range {ngram_range!r}")
    tf: Counter[str] = Counter()
    df: Counter[str] = Counter()
    for tokens in token_lists:
        terms = _terms(tokens, ngram_range)
        tf.update(terms)
        df.update(set(terms))
    ranked = sorted(tf.items(), key=lambda item: (-item[1], item[0]))[:max_features]
    vocabulary = {term: idx for idx, term in enumerate(sorted(term for term, _ in ranked))}
    total = len(token_lists)
    idf = np.zeros(len(vocabulary), dtype=np.float64)
    for term, idx in vocabulary.items():
        idf[idx] = math.log((1 + total) / (1 + df[term])) + 1.0
    return TfidfModel(
        vocabulary=vocabulary, idf=idf, ngram_range=(lo, hi), max_features=max_features
    )


def tfidf_vector(tokens: Sequence[str], model: TfidfModel) -> dict[int, float]:
    """Sparse L2-normalized tf*idf values, column index -> value.

    Out-of-vocabulary terms are ignored; a post with no in-vocabulary terms
    yields an empty (all-zero) block.
    """
    counts = Counter(term for term in _terms(tokens, model.ngram_range) if term in model.vocabulary)
    vec = {
        model.vocabulary[term]: count * model.idf[model.vocabulary[term]]
        for term, count in counts.items()
    }
    norm = math.sqrt(sum(v * v for v in vec.values()))
    if norm > 0.0:
        vec = {col: v / norm for col, v in vec.items()}
    return vec


# ---------------------------------------------------------------------------
# Surface statistics

PRONOUNS = ("i", "me", "you", "he", "him", "she", "her", "it", "we", "us", "they", "them")


@dataclass
class SurfaceStats:
    pronoun_counts: dict[str, int]
    mean_word_length: float
    web_links: int


def surface_stats(tokens: Sequence[str]) -> SurfaceStats:
    """Pronoun counts, mean word length, and URL token count.

    Mean word length runs over word tokens only (URL and pure-punctuation
    tokens excluded) and is 0.0 when there are none.
    """
    pronoun_counts = {p: 0 for p in PRONOUNS}
    web_links = 0
    word_chars = 0
    words = 0
    for token in tokens:
        if token in pronoun_counts:
            pronoun_counts[token] += 1
        if is_url_token(token):
            web_links += 1
            continue
        if is_punctuation_token(token):
            continue
        words += 1
        word_chars += len(token)
    mean_len = word_chars / words if words else 0.0
    return SurfaceStats(pronoun_counts=pronoun_counts, mean_word_length=mean_len, web_links=web_links)


# ---------------------------------------------------------------------------
# Phrase pattern counters

#: Support-service and helpline mentions, including Australian phone numbers
#: and self-help site URLs.
HELPLINE_PHRASES = (
    "mental health",
    "australia",
    "general practitioner",
    "doctor",
    "psychologist",
    "counsellor",
    "gp",
    "emergency",
    "000",
    "lifeline",
    "131114",
    "13 11 14",
    "kids help line",
    "1800 55 1800",
    "1800551800",
    "salvation army care line",
    "1300 36 36 22",
    "1300363622",
    "e-couch",
    "moodgym",
    "bluepages",
    "black dog institute",
    "reachout",
    "beyondblue",
    "www.moodgym.anu.edu.au",
    "www.ecouch.anu.edu.au",
    "www.bluepages.anu.edu.au",
    "www.researchout.org.au",
    "www.blackdoginstitute.org.au",
)

#: Self-harm and suicidal-ideation phrases.
SELF_HARM_PHRASES = (
    "suicide",
    "kill myself",
    "kill my self",
    "cut myself",
    "cut my self",
    "hurt myself",
    "hurt my self",
    "harm myself",
    "harm my self",
    "i want to die",
    "don't want to live",
    "end my life",
    "kill",
    "hurt",
    "cut",
    "want to die",
    "i don't want to live",
)

#: People in advisory or supervisory roles.
ADVISOR_PHRASES = (
    "supervisor",
    "supervisors",
    "mentor",
    "manager",
    "managers",
    "tutor",
    "case-manager",
    "psych",
    "psychiatrist",
    "gp",
    "gps",
    "counsellor",
    "counselor",
)


class PatternSet:
    """Counts phrase occurrences in lowercased raw text.

    The scan runs left to right; at each position the longest phrase wins and
    its span is consumed, so nested shorter phrases are not re-counted.
    Matches require a non-alphanumeric character (or the text edge) on both
    sides, which keeps "gp" from firing inside "upgrade". Implemented as a
    single alternation regex with phrases sorted longest-first.
    """

    def __init__(self, name: str, phrases: Iterable[str]):
        self.name = name
        self.phrases = tuple(dict.fromkeys(p.lower() for p in phrases))
        if not self.phrases:
            raise FeatureError(f"pattern set {name!r} has no phrases")
        ordered = sorted(self.phrases, key=lambda p: (-len(p), p))
        alternation = "|".join(re.escape(p) for p in ordered)
        self._regex = re.compile(rf"(?<![a-z0-9])(?:{alternation})(?![a-z0-9])")

    def count(self, text: str) -> int:
        return sum(1 for _ in self._regex.finditer(text.lower()))

    def findall(self, text: str) -> list[str]:
        return [m.group(0) for m in self._regex.finditer(text.lower())]


PATTERN_SETS: dict[str, PatternSet] = {
    "helplines": PatternSet("helplines", HELPLINE_PHRASES),
    "self_harm": PatternSet("self_harm", SELF_HARM_PHRASES),
    "advisors": PatternSet("advisors", ADVISOR_PHRASES),
}

PATTERN_SET_ORDER = ("helplines", "self_harm", "advisors")


def pattern_counts(text: str, pattern_set: str | PatternSet) -> int:
    """Occurrence count of one pattern set in raw text (see PatternSet)."""
    if isinstance(pattern_set, str):
        try:
            pattern_set = PATTERN_SETS[pattern_set]
        except KeyError:
            raise FeatureError(
                f"unknown pattern set {pattern_set!r} "
                f"(expected one of {', '.join(PATTERN_SET_ORDER)})"
            ) from None
    return pattern_set.count(text)


# ---------------------------------------------------------------------------
# Word embeddings


@dataclass
class EmbeddingTable:
    vectors: dict[str, np.ndarray]
    dim: int
    digest: str

    def mean_vector(self, tokens: Sequence[str]) -> np.ndarray:
        hits = [self.vectors[t] for t in tokens if t in self.vectors]
        if not hits:
            return np.zeros(self.dim, dtype=np.float64)
        return np.mean(hits, axis=0)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read a text embedding table: header ``count dim``, then one word and
    ``dim`` space-separated floats per line. Words are lowercased; the first
    occurrence of a word wins."""
    path = Path(path)
    if not path.exists():
        raise EmbeddingError(f"embedding file not found: {path}")
    raw = path.read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    lines = raw.decode("utf-8").splitlines()
    if not lines:
        raise EmbeddingError(f"{path}: empty file")
    header = lines[0].split()
    if len(header) != 2:
        raise EmbeddingError(f"{path}: header must be '<count> <dim>'")
    try:
        count, dim = int(header[0]), int(header[1])
    except ValueError:
        raise EmbeddingError(f"{path}: header must be '<count> <dim>'") from None
    if dim < 1:
        raise EmbeddingError(f"{path}: dimension must be positive, got {dim}")
    vectors: dict[str, np.ndarray] = {}
    rows = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != dim + 1:
            raise EmbeddingError(
                f"{path}: line {lineno}: expected {dim} values, got {len(parts) - 1}"
            )
        word = parts[0].lower()
        rows += 1
        if word in vectors:
            continue
        try:
            vectors[word] = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError:
            raise EmbeddingError(f"{path}: line {lineno}: bad vector value") from None
    if rows != count:
        raise EmbeddingError(f"{path}: header declares {count} words, file has {rows}")
    if not vectors:
        raise EmbeddingError(f"{path}: empty embedding table")
    return EmbeddingTable(vectors=vectors, dim=dim, digest=digest)


def embed_post(text: str, table: EmbeddingTable) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector of the whole post and of its last sentence.

    Tokens missing from the table are ignored; a post or sentence with no
    in-table token maps to the zero vector.
    """
    tokens = tokenize(text)
    sentences = split_sentences(text)
    last_tokens = sentences[-1].tokens if sentences else []
    return table.mean_vector(tokens), table.mean_vector(last_tokens)


# ---------------------------------------------------------------------------
# Sentiment

SentimentScorer = Callable[[Sequence[str]], float]


def lexicon_ratio_scorer(
    lexicon: Lexicon, negation: Collection[str] = NEGATION_TERMS
) -> SentimentScorer:
    """(pos - neg) / (pos + neg) over negation-aware polarity counts; 0.0
    when the post matches neither polarity."""
    if "positive" not in lexicon.categories or "negative" not in lexicon.categories:
        raise FeatureError(
            f"lexicon {lexicon.name!r} lacks positive/negative categories; "
            "cannot build the ratio sentiment scorer"
        )

    def score(tokens: Sequence[str]) -> float:
        pos = neg = 0
        for event in scan_matches(tokens, lexicon, negation):
            if event.category == "positive":
                pos += 1
            elif event.category == "negative":
                neg += 1
        if pos + neg == 0:
            return 0.0
        return (pos - neg) / (pos + neg)

    return score


def _ratio_factory(lexicons: Mapping[str, Lexicon], lexicon_name: str, negation) -> SentimentScorer:
    if lexicon_name not in lexicons:
        raise FeatureError(
            f"sentiment scorer needs lexicon {lexicon_name!r}, which is not loaded"
        )
    return lexicon_ratio_scorer(lexicons[lexicon_name], negation)


#: name -> factory(lexicons_by_name, lexicon_name, negation_terms) -> scorer
SENTIMENT_SCORERS: dict[str, Callable[..., SentimentScorer]] = {
    "lexicon-ratio": _ratio_factory,
}


def register_sentiment_scorer(name: str, factory: Callable[..., SentimentScorer]) -> None:
    """Register a scorer factory; see SENTIMENT_SCORERS for the signature."""
    SENTIMENT_SCORERS[name] = factory


def sentiment_score(tokens: Sequence[str], scorer: SentimentScorer) -> float:
    """Apply a scorer and validate its output is a finite value in [-1, 1]."""
    value = float(scorer(tokens))
    if not math.isfinite(value):
        raise FeatureError("sentiment scorer returned a non-finite value")
    if not -1.0 <= value <= 1.0:
        raise FeatureError(f"sentiment scorer returned {value!r}, outside [-1, 1]")
    return value


# ---------------------------------------------------------------------------
# Crisis heuristics (optional feature group, off by default)

SECOND_PERSON = frozenset({"you", "your", "yours", "yourself"})

ADVICE_PAIRS = (("any", "tips"), ("has", "anyone"), ("what", "should"))

TEMPORAL_MARKERS = frozenset({"today", "yesterday", "tomorrow"})

SHORT_POST_TOKENS = 50
SHORT_POST_SENTENCES = 2


@dataclass
class HeuristicBundle:
    hopelessness: PatternSet
    coping: PatternSet
    scorer: SentimentScorer
    temporal: frozenset[str] = TEMPORAL_MARKERS
    #: optional hook: callable(body) -> int, emits one extra counter when set
    misspelling_counter: Callable[[str], int] | None = None

    @property
    def feature_keys(self) -> tuple[str, ...]:
        keys = (
            "hopeless_terms",
            "coping_terms",
            "is_short",
            "is_long",
            "neg_pos_neg",
            "service_dissatisfaction",
            "temporal_terms",
            "advice_seeking",
        )
        if self.misspelling_counter is not None:
            keys = keys + ("misspellings",)
        return keys


def _load_phrase_file(path: Path) -> tuple[str, ...]:
    phrases = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            phrases.append(line.lower())
    return tuple(phrases)


def default_heuristic_bundle(
    scorer: SentimentScorer,
    misspelling_counter: Callable[[str], int] | None = None,
) -> HeuristicBundle:
    hdir = _DATA_DIR / "heuristics"
    return HeuristicBundle(
        hopelessness=PatternSet("hopelessness", _load_phrase_file(hdir / "hopelessness.txt")),
        coping=PatternSet("coping", _load_phrase_file(hdir / "coping.txt")),
        scorer=scorer,
        misspelling_counter=misspelling_counter,
    )


def _sign(value: float) -> int:
    if value > 0:
        return 1
    if value < 0:
        return -1
    return 0


def _has_subsequence(signs: Sequence[int], target: Sequence[int]) -> bool:
    pos = 0
    for s in signs:
        if s == target[pos]:
            pos += 1
            if pos == len(target):
                return True
    return False


def _pair_in_order(tokens: Sequence[str], first: str, second: str) -> bool:
    try:
        start = tokens.index(first)
    except ValueError:
        return False
    return second in tokens[start + 1 :]


def crisis_heuristics(body: str, bundle: HeuristicBundle) -> dict[str, float]:
    """Exploratory crisis indicators; see HeuristicBundle.feature_keys.

    is_short fires for posts under 50 tokens or with at most two sentences;
    is_long for posts of 50+ tokens. neg_pos_neg fires when the sentence-wise
    sentiment signs contain (-,+,-) as a subsequence. service_dissatisfaction
    fires when an advisor or helpline is mentioned and the whole post scores
    negative. advice_seeking needs a question mark plus either a
    second-person pronoun or an advice keyword pair ("any ... tips",
    "has ... anyone", "what ... should") in token order.
    """
    tokens = tokenize(body)
    sentences = split_sentences(body)
    feats: dict[str, float] = {}
    feats["hopeless_terms"] = float(bundle.hopelessness.count(body))
    feats["coping_terms"] = float(bundle.coping.count(body))
    feats["is_short"] = float(
        len(tokens) < SHORT_POST_TOKENS or len(sentences) <= SHORT_POST_SENTENCES
    )
    feats["is_long"] = float(len(tokens) >= SHORT_POST_TOKENS)
    signs = [_sign(bundle.scorer(s.tokens)) for s in sentences]
    feats["neg_pos_neg"] = float(_has_subsequence(signs, (-1, 1, -1)))
    mentions = PATTERN_SETS["advisors"].count(body) + PATTERN_SETS["helplines"].count(body)
    feats["service_dissatisfaction"] = float(mentions >= 1 and bundle.scorer(tokens) < 0)
    feats["temporal_terms"] = float(sum(1 for t in tokens if t in bundle.temporal))
    asks = "?" in body
    addressed = any(t in SECOND_PERSON for t in tokens)
    keyword_pair = any(_pair_in_order(tokens, a, b) for a, b in ADVICE_PAIRS)
    feats["advice_seeking"] = float(asks and (addressed or keyword_pair))
    if bundle.misspelling_counter is not None:
        feats["misspellings"] = float(bundle.misspelling_counter(body))
    return feats


# ---------------------------------------------------------------------------
# Dense-feature scaler


@dataclass
class ScalerModel:
    mean: np.ndarray
    std: np.ndarray  # floored at 1e-8 so constant features stay finite

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std


def fit_scaler(matrix: np.ndarray) -> ScalerModel:
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise FeatureError("scaler needs a non-empty 2-d matrix")
    mean = matrix.mean(axis=0)
    std = np.maximum(matrix.std(axis=0), 1e-8)
    return ScalerModel(mean=mean, std=std)


# ---------------------------------------------------------------------------
# Feature configuration and presets


@dataclass(frozen=True)
class FeatureConfig:
    tfidf: bool = True
    max_features: int = 5000
    ngram_max: int = 2
    lexicons: bool = True
    negation: bool = True
    surface: bool = True
    patterns: bool = True
    embeddings: bool = False
    sentiment: bool = True
    sentiment_scorer: str = "lexicon-ratio"
    sentiment_lexicon: str = "mpqa"
    user_rank: bool = True
    heuristics: bool = False

    def __post_init__(self) -> None:
        if self.tfidf and self.max_features < 1:
            raise FeatureError(f"max_features must be positive, got {self.max_features}")
        if self.tfidf and self.ngram_max < 1:
            raise FeatureError(f"ngram_max must be positive, got {self.ngram_max}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "FeatureConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise FeatureError(f"unknown feature config keys: {sorted(unknown)}")
        return cls(**data)


_ALL_OFF = dict(
    tfidf=False,
    lexicons=False,
    negation=False,
    surface=False,
    patterns=False,
    embeddings=False,
    sentiment=False,
    user_rank=False,
    heuristics=False,
)

_PRESETS: dict[str, dict] = {
    "only-lexicons": dict(lexicons=True),
    "lexicons-negation": dict(lexicons=True, negation=True),
    "tfidf-lexicons": dict(tfidf=True, lexicons=True),
    "tfidf-lexicons-negation": dict(tfidf=True, lexicons=True, negation=True),
    "full": dict(
        tfidf=True,
        lexicons=True,
        negation=True,
        surface=True,
        patterns=True,
        sentiment=True,
        user_rank=True,
    ),
    "full-heuristics": dict(
        tfidf=True,
        lexicons=True,
        negation=True,
        surface=True,
        patterns=True,
        sentiment=True,
        user_rank=True,
        heuristics=True,
    ),
}

#: The five standard rows of the feature-set comparison table.
ABLATION_PRESETS = (
    "only-lexicons",
    "lexicons-negation",
    "tfidf-lexicons",
    "tfidf-lexicons-negation",
    "full",
)

PRESET_NAMES = tuple(_PRESETS)


def preset_config(name: str, with_embeddings: bool = False, **overrides) -> FeatureConfig:
    """Named feature configuration.

    The ``full`` presets include the embedding block only when a table is
    actually supplied (``with_embeddings=True``); the slimmer presets never
    include it. Extra keyword arguments override individual fields.
    """
    if name not in _PRESETS:
        raise FeatureError(f"unknown preset {name!r} (expected one of {', '.join(_PRESETS)})")
    settings = {**_ALL_OFF, **_PRESETS[name]}
    if name.startswith("full"):
        settings["embeddings"] = with_embeddings
    settings.update(overrides)
    return FeatureConfig(**settings)


# ---------------------------------------------------------------------------
# Assembled vectors and the fitted pipeline


@dataclass
class FeatureVector:
    dim: int
    tfidf_dim: int
    #: TF-IDF block, column -> value, columns in [0, tfidf_dim)
    tfidf: dict[int, float]
    #: scaled dense block, name -> value, in layout order from tfidf_dim up
    dense: dict[str, float]
    fingerprint: str

    def to_array(self) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for col, value in self.tfidf.items():
            vec[col] = value
        for offset, value in enumerate(self.dense.values()):
            vec[self.tfidf_dim + offset] = value
        return vec


class FeaturePipeline:
    """Fits block state on a training corpus and turns posts into vectors.

    The pipeline owns the feature config, the lexicon bundle (in manifest
    order), an optional embedding table, and the negation list. ``fit`` (or
    ``fit_transform``) freezes the TF-IDF vocabulary, the rank vocabulary,
    and the dense scaler, and computes a fingerprint over the config plus all
    fitted state; models trained on its vectors carry that fingerprint and
    refuse vectors from any other pipeline.
    """

    def __init__(
        self,
        config: FeatureConfig,
        lexicons: Sequence[Lexicon] = (),
        embeddings: EmbeddingTable | None = None,
        negation_terms: Collection[str] = NEGATION_TERMS,
        misspelling_counter: Callable[[str], int] | None = None,
    ):
        self.config = config
        self.lexicons = list(lexicons)
        self.lexicon_by_name = {lex.name: lex for lex in self.lexicons}
        if len(self.lexicon_by_name) != len(self.lexicons):
            raise FeatureError("duplicate lexicon names in the bundle")
        self.embeddings = embeddings
        self.negation_terms = frozenset(negation_terms)
        self.misspelling_counter = misspelling_counter

        if config.lexicons and not self.lexicons:
            raise FeatureError("lexicon block enabled but no lexicons supplied")
        if config.embeddings and embeddings is None:
            raise FeatureError("embedding block enabled but no embedding table supplied")

        self._scorer: SentimentScorer | None = None
        if config.sentiment or config.heuristics:
            factory = SENTIMENT_SCORERS.get(config.sentiment_scorer)
            if factory is None:
                raise FeatureError(f"unknown sentiment scorer {config.sentiment_scorer!r}")
            # the scorer is negation-aware by definition, independent of the
            # lexicon block's negation toggle
            self._scorer = factory(
                self.lexicon_by_name, config.sentiment_lexicon, self.negation_terms
            )
        self._bundle: HeuristicBundle | None = None
        if config.heuristics:
            self._bundle = default_heuristic_bundle(self._scorer, misspelling_counter)

        self.tfidf_model: TfidfModel | None = None
        self.scaler: ScalerModel | None = None
        self.rank_vocab: tuple[str, ...] = ()
        self._dense_names: tuple[str, ...] | None = None
        self._fingerprint: str | None = None

    # -- fitting ------------------------------------------------------------

    def fit(self, posts: Sequence[Post]) -> "FeaturePipeline":
        self.fit_transform(posts)
        return self

    def fit_transform(self, posts: Sequence[Post]) -> csr_matrix:
        posts = list(posts)
        if not posts:
            raise FeatureError("cannot fit the feature pipeline on an empty corpus")
        token_lists = [tokenize(post.body) for post in posts]
        if self.config.tfidf:
            self.tfidf_model = fit_tfidf(
                token_lists, self.config.max_features, (1, self.config.ngram_max)
            )
        if self.config.user_rank:
            self.rank_vocab = tuple(sorted({post.author_rank for post in posts}))
        self._dense_names = tuple(self._build_dense_names())
        raw = self._raw_dense_matrix(posts, token_lists)
        self.scaler = fit_scaler(raw)
        # the rank one-hot block stays raw 0/1: its OTHER column is all zero
        # during training, and an unseen rank at predict time must read as
        # exactly 1 there, not as 1/std of a constant column
        for col, name in enumerate(self._dense_names):
            if name.startswith("rank:"):
                self.scaler.mean[col] = 0.0
                self.scaler.std[col] = 1.0
        self._fingerprint = self._compute_fingerprint()
        return self._stack(token_lists, raw)

    @property
    def fitted(self) -> bool:
        return self.scaler is not None

    def _require_fitted(self) -> None:
        if not self.fitted:
            raise FeatureError("feature pipeline is not fitted")

    @property
    def fingerprint(self) -> str:
        self._require_fitted()
        return self._fingerprint

    @property
    def dense_feature_names(self) -> tuple[str, ...]:
        self._require_fitted()
        return self._dense_names

    @property
    def tfidf_dim(self) -> int:
        return len(self.tfidf_model.vocabulary) if self.tfidf_model is not None else 0

    @property
    def dim(self) -> int:
        self._require_fitted()
        return self.tfidf_dim + len(self._dense_names)

    # -- transforming -------------------------------------------------------

    def transform(self, post: Post) -> FeatureVector:
        self._require_fitted()
        tokens = tokenize(post.body)
        tf = tfidf_vector(tokens, self.tfidf_model) if self.config.tfidf else {}
        scaled = self.scaler.transform(self._raw_dense(post, tokens))
        dense = {name: float(v) for name, v in zip(self._dense_names, scaled)}
        return FeatureVector(
            dim=self.tfidf_dim + len(self._dense_names),
            tfidf_dim=self.tfidf_dim,
            tfidf=tf,
            dense=dense,
            fingerprint=self._fingerprint,
        )

    def matrix(self, posts: Sequence[Post]) -> csr_matrix:
        """Vectors for many posts as one CSR matrix (row order preserved)."""
        self._require_fitted()
        posts = list(posts)
        token_lists = [tokenize(post.body) for post in posts]
        raw = self._raw_dense_matrix(posts, token_lists)
        return self._stack(token_lists, raw)

    def _stack(self, token_lists, raw: np.ndarray) -> csr_matrix:
        scaled = self.scaler.transform(raw)
        tfidf_dim = self.tfidf_dim
        dense_dim = scaled.shape[1]
        dim = tfidf_dim + dense_dim
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for i, tokens in enumerate(token_lists):
            if self.config.tfidf:
                vec = tfidf_vector(tokens, self.tfidf_model)
                for col in sorted(vec):
                    indices.append(col)
                    data.append(vec[col])
            for j in range(dense_dim):
                indices.append(tfidf_dim + j)
                data.append(scaled[i, j])
            indptr.append(len(indices))
        return csr_matrix(
            (np.array(data, dtype=np.float64), np.array(indices, dtype=np.int32), np.array(indptr)),
            shape=(len(token_lists), dim),
        )

    # -- dense block --------------------------------------------------------

    def _build_dense_names(self) -> list[str]:
        cfg = self.config
        names: list[str] = []
        if cfg.lexicons:
            for lex in self.lexicons:
                names.extend(f"lex:{lex.name}:{cat}" for cat in lex.categories)
                if lex.has_weights:
                    names.extend(f"lexw:{lex.name}:{cat}" for cat in lex.categories)
        if cfg.surface:
            names.extend(f"surf:pronoun:{p}" for p in PRONOUNS)
            names.append("surf:mean_word_len")
            names.append("surf:web_links")
        if cfg.patterns:
            names.extend(f"pat:{name}" for name in PATTERN_SET_ORDER)
        if cfg.embeddings:
            names.extend(f"emb:post:{i}" for i in range(self.embeddings.dim))
            names.extend(f"emb:last:{i}" for i in range(self.embeddings.dim))
        if cfg.sentiment:
            names.append("senti:score")
        if cfg.user_rank:
            names.extend(f"rank:{rank}" for rank in self.rank_vocab)
            names.append("rank:OTHER")
        if cfg.heuristics:
            names.extend(f"heur:{key}" for key in self._bundle.feature_keys)
        return names

    def _raw_dense_matrix(self, posts, token_lists) -> np.ndarray:
        rows = [self._raw_dense(post, tokens) for post, tokens in zip(posts, token_lists)]
        if not rows or rows[0].size == 0:
            return np.zeros((len(posts), 0), dtype=np.float64)
        return np.vstack(rows)

    def _raw_dense(self, post: Post, tokens: Sequence[str]) -> np.ndarray:
        cfg = self.config
        values: list[float] = []
        if cfg.lexicons:
            negation = self.negation_terms if cfg.negation else NO_NEGATION
            for lex in self.lexicons:
                counts = {cat: 0 for cat in lex.categories}
                sums = {cat: 0.0 for cat in lex.categories}
                for event in scan_matches(tokens, lex, negation):
                    if event.category is not None:
                        counts[event.category] += 1
                        sums[event.category] += event.weight
                values.extend(float(counts[cat]) for cat in lex.categories)
                if lex.has_weights:
                    values.extend(sums[cat] for cat in lex.categories)
        if cfg.surface:
            stats = surface_stats(tokens)
            values.extend(float(stats.pronoun_counts[p]) for p in PRONOUNS)
            values.append(stats.mean_word_length)
            values.append(float(stats.web_links))
        if cfg.patterns:
            values.extend(
                float(PATTERN_SETS[name].count(post.body)) for name in PATTERN_SET_ORDER
            )
        if cfg.embeddings:
            sentences = split_sentences(post.body)
            last_tokens = sentences[-1].tokens if sentences else []
            values.extend(self.embeddings.mean_vector(tokens))
            values.extend(self.embeddings.mean_vector(last_tokens))
        if cfg.sentiment:
            values.append(sentiment_score(tokens, self._scorer))
        if cfg.user_rank:
            onehot = [0.0] * (len(self.rank_vocab) + 1)
            try:
                onehot[self.rank_vocab.index(post.author_rank)] = 1.0
            except ValueError:
                onehot[-1] = 1.0
            values.extend(onehot)
        if cfg.heuristics:
            feats = crisis_heuristics(post.body, self._bundle)
            values.extend(feats[key] for key in self._bundle.feature_keys)
        return np.array(values, dtype=np.float64)

    # -- serialization ------------------------------------------------------

    def state_dict(self) -> dict:
        """Everything needed to rebuild the pipeline, minus lexicon entries
        and embedding vectors, which are re-supplied at load time and checked
        by digest."""
        self._require_fitted()
        tfidf = None
        if self.tfidf_model is not None:
            tfidf = {
                "vocabulary": self.tfidf_model.vocabulary,
                "idf": self.tfidf_model.idf.tolist(),
                "ngram_range": list(self.tfidf_model.ngram_range),
                "max_features": self.tfidf_model.max_features,
            }
        embeddings = None
        if self.embeddings is not None:
            embeddings = {"dim": self.embeddings.dim, "digest": self.embeddings.digest}
        return {
            "config": self.config.to_dict(),
            "negation_terms": sorted(self.negation_terms),
            "tfidf": tfidf,
            "scaler": {"mean": self.scaler.mean.tolist(), "std": self.scaler.std.tolist()},
            "dense_names": list(self._dense_names),
            "rank_vocab": list(self.rank_vocab),
            "lexicons": [
                {
                    "name": lex.name,
                    "digest": lex.digest,
                    "polarity_aware": lex.polarity_aware,
                    "polarity_map": dict(sorted(lex.polarity_map.items())),
                    "has_weights": lex.has_weights,
                }
                for lex in self.lexicons
            ],
            "embeddings": embeddings,
        }

    def _compute_fingerprint(self) -> str:
        payload = json.dumps(self.state_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    @classmethod
    def from_state(
        cls,
        state: Mapping,
        lexicons: Sequence[Lexicon] = (),
        embeddings: EmbeddingTable | None = None,
        misspelling_counter: Callable[[str], int] | None = None,
    ) -> "FeaturePipeline":
        config = FeatureConfig.from_dict(state["config"])
        pipeline = cls(
            config,
            lexicons=lexicons,
            embeddings=embeddings,
            negation_terms=frozenset(state["negation_terms"]),
            misspelling_counter=misspelling_counter,
        )
        saved = state["lexicons"]
        if [lex.name for lex in pipeline.lexicons] != [item["name"] for item in saved]:
            raise FingerprintError(
                "supplied lexicon bundle does not list the same lexicons, in the "
                f"same order, as the one used at training "
                f"(got {[lex.name for lex in pipeline.lexicons]}, "
                f"expected {[item['name'] for item in saved]})"
            )
        for lex, item in zip(pipeline.lexicons, saved):
            if lex.digest != item["digest"]:
                raise FingerprintError(
                    f"lexicon {lex.name!r} differs from the one used at training"
                )
        saved_emb = state["embeddings"]
        if saved_emb is not None:
            if embeddings is None:
                raise FeatureError("model was trained with embeddings; none supplied")
            if embeddings.digest != saved_emb["digest"] or embeddings.dim != saved_emb["dim"]:
                raise FingerprintError(
                    "embedding table differs from the one used at training"
                )
        if state["tfidf"] is not None:
            tf = state["tfidf"]
            pipeline.tfidf_model = TfidfModel(
                vocabulary=dict(tf["vocabulary"]),
                idf=np.array(tf["idf"], dtype=np.float64),
                ngram_range=tuple(tf["ngram_range"]),
                max_features=tf["max_features"],
            )
        pipeline.rank_vocab = tuple(state["rank_vocab"])
        pipeline.scaler = ScalerModel(
            mean=np.array(state["scaler"]["mean"], dtype=np.float64),
            std=np.array(state["scaler"]["std"], dtype=np.float64),
        )
        pipeline._dense_names = tuple(state["dense_names"])
        rebuilt = tuple(pipeline._build_dense_names())
        if rebuilt != pipeline._dense_names:
            raise FingerprintError(
                "dense feature layout does not match the saved pipeline state"
            )
        pipeline._fingerprint = pipeline._compute_fingerprint()
        return pipeline
