"""Lexicon loading and negation-aware matching.

A lexicon maps n-grams (up to trigrams) to a category and a weight. Matching
walks the token list left to right, longest n-gram first; tokens consumed by
a match are not re-scanned. When the token immediately before a match is a
negation term, a polarity-aware lexicon credits the opposite category (via
its polarity map) and any other lexicon credits nothing for that match. The
inspection window is exactly one token, so an intervening punctuation token
blocks the shift.

Lexicon files are UTF-8 TSV: ``term<TAB>category<TAB>weight`` with the weight
column optional (default 1.0) and ``#`` starting a comment line. Terms are
run through the shared tokenizer at load time so they align with post tokens.
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Collection, Iterable, Mapping, Sequence

from .errors import LexiconError
from .textproc import tokenize

#: Stock negation cues. Inspection window is one token; the list is passed
#: explicitly to the matching functions so callers can substitute their own.
NEGATION_TERMS = frozenset(
    {
        "no",
        "nobody",
        "nothing",
        "none",
        "never",
        "neither",
        "nor",
        "nowhere",
        "hardly",
        "scarcely",
        "barely",
        "don't",
        "isn't",
        "wasn't",
        "doesn't",
        "ain't",
        "can't",
        "won't",
        "wouldn't",
        "shouldn't",
        "couldn't",
        "hasn't",
        "haven't",
        "didn't",
    }
)

#: Empty negation list, for matching with negation handling switched off.
NO_NEGATION: frozenset[str] = frozenset()

MAX_NGRAM = 3


@dataclass
class Lexicon:
    name: str
    #: token n-gram -> (category, weight); one category per term, last row wins
    entries: dict[tuple[str, ...], tuple[str, float]]
    polarity_aware: bool = False
    polarity_map: dict[str, str] = field(default_factory=dict)
    #: whether any row carried an explicit weight column
    has_weights: bool = False
    max_n: int = field(init=False, default=1)
    categories: tuple[str, ...] = field(init=False, default=())

    def __post_init__(self) -> None:
        for a, b in self.polarity_map.items():
            if self.polarity_map.get(b) != a:
                raise LexiconError(
                    f"lexicon {self.name!r}: polarity map is not an involution "
                    f"({a!r} -> {b!r} has no matching reverse entry)"
                )
        if self.polarity_map and not self.polarity_aware:
            raise LexiconError(
                f"lexicon {self.name!r}: polarity map given but polarity_aware is false"
            )
        if self.polarity_aware and not self.polarity_map:
            raise LexiconError(
                f"lexicon {self.name!r}: polarity_aware without a polarity map "
                "could never flip a match"
            )
        self.max_n = max((len(term) for term in self.entries), default=1)
        cats = {category for category, _ in self.entries.values()}
        cats.update(self.polarity_map.keys())
        cats.update(self.polarity_map.values())
        self.categories = tuple(sorted(cats))

    @property
    def digest(self) -> str:
        """Content hash used for model fingerprinting."""
        lines = sorted(
            f"{' '.join(term)}\t{category}\t{weight!r}"
            for term, (category, weight) in self.entries.items()
        )
        meta = json.dumps(
            {
                "name": self.name,
                "polarity_aware": self.polarity_aware,
                "polarity_map": dict(sorted(self.polarity_map.items())),
            },
            sort_keys=True,
        )
        payload = meta + "\n" + "\n".join(lines)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def load_lexicon(
    path: str | Path,
    name: str,
    polarity_aware: bool = False,
    polarity_map: Mapping[str, str] | None = None,
) -> Lexicon:
    path = Path(path)
    if not path.exists():
        raise LexiconError(f"lexicon file not found: {path}")
    entries: dict[tuple[str, ...], tuple[str, float]] = {}
    has_weights = False
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) not in (2, 3):
                raise LexiconError(
                    f"{path}: line {lineno}: expected term<TAB>category[<TAB>weight]"
                )
            term_tokens = tuple(tokenize(fields[0]))
            if not term_tokens:
                raise LexiconError(f"{path}: line {lineno}: empty term")
            if len(term_tokens) > MAX_NGRAM:
                raise LexiconError(
                    f"{path}: line {lineno}: term {fields[0]!r} is longer than "
                    f"{MAX_NGRAM} tokens"
                )
            category = fields[1].strip()
            if not category:
                raise LexiconError(f"{path}: line {lineno}: empty category")
            weight = 1.0
            if len(fields) == 3:
                try:
                    weight = float(fields[2])
                except ValueError:
                    raise LexiconError(
                        f"{path}: line {lineno}: bad weight {fields[2]!r}"
                    ) from None
                has_weights = True
            entries[term_tokens] = (category, weight)
    return Lexicon(
        name=name,
        entries=entries,
        polarity_aware=polarity_aware,
        polarity_map=dict(polarity_map or {}),
        has_weights=has_weights,
    )


def load_lexicon_bundle(manifest_path: str | Path) -> list[Lexicon]:
    """Load every lexicon named in a JSON manifest, preserving order.

    The manifest is a JSON array of objects with ``name``, ``path`` (relative
    to the manifest file), and optional ``polarity_aware`` / ``polarity_map``.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise LexiconError(f"lexicon manifest not found: {manifest_path}")
    try:
        spec = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise LexiconError(f"{manifest_path}: invalid JSON ({exc.msg})") from None
    if not isinstance(spec, list) or not spec:
        raise LexiconError(f"{manifest_path}: manifest must be a non-empty array")
    lexicons = []
    seen_names = set()
    for item in spec:
        if not isinstance(item, dict) or "name" not in item or "path" not in item:
            raise LexiconError(f"{manifest_path}: each entry needs 'name' and 'path'")
        if item["name"] in seen_names:
            raise LexiconError(f"{manifest_path}: duplicate lexicon name {item['name']!r}")
        seen_names.add(item["name"])
        try:
            lexicons.append(
                load_lexicon(
                    manifest_path.parent / item["path"],
                    name=item["name"],
                    polarity_aware=bool(item.get("polarity_aware", False)),
                    polarity_map=item.get("polarity_map") or {},
                )
            )
        except LexiconError as exc:
            message = exc.args[0] if exc.args else str(exc)
            raise LexiconError(f"manifest entry {item['name']!r}: {message}") from None
    return lexicons


def bundled_lexicon_manifest() -> Path:
    """Path of the stand-in lexicon bundle shipped with the package."""
    return Path(__file__).parent / "data" / "lexicons" / "manifest.json"


@dataclass
class MatchEvent:
    position: int
    length: int
    #: category credited after negation handling; None for a skipped match
    category: str | None
    weight: float
    negated: bool


def scan_matches(
    tokens: Sequence[str],
    lexicon: Lexicon,
    negation: Collection[str] = NEGATION_TERMS,
) -> list[MatchEvent]:
    """All lexicon matches in ``tokens``, with negation handling applied.

    Greedy: at each position the longest matching entry wins and its span is
    consumed. Pass an empty collection as ``negation`` to switch negation
    handling off.
    """
    events: list[MatchEvent] = []
    entries = lexicon.entries
    max_n = lexicon.max_n
    i = 0
    total = len(tokens)
    while i < total:
        hit = None
        hit_n = 0
        for n in range(min(max_n, total - i), 0, -1):
            hit = entries.get(tuple(tokens[i : i + n]))
            if hit is not None:
                hit_n = n
                break
        if hit is None:
            i += 1
            continue
        category, weight = hit
        negated = i > 0 and tokens[i - 1] in negation
        credited: str | None = category
        if negated:
            if lexicon.polarity_aware and category in lexicon.polarity_map:
                credited = lexicon.polarity_map[category]
            else:
                credited = None
        events.append(
            MatchEvent(position=i, length=hit_n, category=credited, weight=weight, negated=negated)
        )
        i += hit_n
    return events


def match_counts(
    tokens: Sequence[str],
    lexicon: Lexicon,
    negation: Collection[str] = NEGATION_TERMS,
) -> dict[str, int]:
    """Per-category match counts; every known category appears, zero-filled."""
    counts = {category: 0 for category in lexicon.categories}
    for event in scan_matches(tokens, lexicon, negation):
        if event.category is not None:
            counts[event.category] += 1
    return counts


def weighted_sum(
    tokens: Sequence[str],
    lexicon: Lexicon,
    negation: Collection[str] = NEGATION_TERMS,
) -> dict[str, float]:
    """Per-category sums of matched entry weights, zero-filled like match_counts."""
    sums = {category: 0.0 for category in lexicon.categories}
    for event in scan_matches(tokens, lexicon, negation):
        if event.category is not None:
            sums[event.category] += event.weight
    return sums
