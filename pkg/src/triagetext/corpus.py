"""Corpus I/O, label handling, summary statistics, and stratified folds.

Posts travel as JSONL (one object per line with ``post_id``, ``author_rank``,
``body``, ``label``) or as RFC-4180 CSV with the exact header
``post_id,author_rank,body,label``. Labels are optional on disk so that
prediction inputs can be unlabeled; training and evaluation reject unlabeled
posts at the point of use.
"""

import csv
import json
import random
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CorpusError


class TriageLabel(IntEnum):
    """Severity classes, ordered from least to most severe."""

    GREEN = 0
    AMBER = 1
    RED = 2
    CRISIS = 3

    @classmethod
    def parse(cls, value: str) -> "TriageLabel":
        try:
            return cls[value.strip().upper()]
        except (KeyError, AttributeError):
            raise CorpusError(
                f"unknown label {value!r} (expected one of green, amber, red, crisis)"
            ) from None

    def __str__(self) -> str:
        return self.name.lower()

    @property
    def flagged(self) -> bool:
        """Anything that needs a moderator's attention, i.e. not green."""
        return self is not TriageLabel.GREEN

    @property
    def urgent(self) -> bool:
        return self >= TriageLabel.RED


#: All labels in ascending severity; fixed ordering for vectors and reports.
LABELS: tuple[TriageLabel, ...] = (
    TriageLabel.GREEN,
    TriageLabel.AMBER,
    TriageLabel.RED,
    TriageLabel.CRISIS,
)


@dataclass
class Post:
    post_id: str
    author_rank: str
    body: str
    label: TriageLabel | None = None


def _post_from_record(record: dict, where: str) -> Post:
    if not isinstance(record, dict):
        raise CorpusError(f"{where}: record is not an object")
    post_id = record.get("post_id")
    if not isinstance(post_id, str) or not post_id:
        raise CorpusError(f"{where}: missing or empty post_id")
    body = record.get("body")
    if not isinstance(body, str):
        raise CorpusError(f"{where}: missing body")
    rank = record.get("author_rank", "")
    if rank is None:
        rank = ""
    if not isinstance(rank, str):
        raise CorpusError(f"{where}: author_rank must be a string")
    raw_label = record.get("label")
    label = None
    if raw_label is not None and raw_label != "":
        try:
            label = TriageLabel.parse(raw_label)
        except CorpusError as exc:
            raise CorpusError(f"{where}: {exc.args[0]}") from None
    return Post(post_id=post_id, author_rank=rank, body=body, label=label)


CSV_HEADER = ["post_id", "author_rank", "body", "label"]


def _detect_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("jsonl", "csv"):
            raise CorpusError(f"unknown corpus format {fmt!r} (expected jsonl or csv)")
        return fmt
    return "csv" if path.suffix.lower() == ".csv" else "jsonl"


def load_posts(path: str | Path, fmt: str | None = None) -> list[Post]:
    """Load posts from ``path``; ``fmt`` overrides the extension-based guess.

    Duplicate post_ids are rejected for the whole file, naming the id and
    both offending lines.
    """
    path = Path(path)
    fmt = _detect_format(path, fmt)
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")
    posts: list[Post] = []
    seen: dict[str, int] = {}

    def check_duplicate(post: Post, lineno: int) -> None:
        if post.post_id in seen:
            raise CorpusError(
                f"{path}: duplicate post_id {post.post_id!r} "
                f"(lines {seen[post.post_id]} and {lineno})"
            )
        seen[post.post_id] = lineno

    if fmt == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from None
                post = _post_from_record(record, f"{path}: line {lineno}")
                check_duplicate(post, lineno)
                posts.append(post)
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise CorpusError(f"{path}: empty CSV file") from None
            if header != CSV_HEADER:
                raise CorpusError(
                    f"{path}: bad CSV header {header!r}, expected {','.join(CSV_HEADER)}"
                )
            for rowno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(CSV_HEADER):
                    raise CorpusError(f"{path}: row {rowno}: expected {len(CSV_HEADER)} fields")
                record = dict(zip(CSV_HEADER, row))
                post = _post_from_record(record, f"{path}: row {rowno}")
                check_duplicate(post, rowno)
                posts.append(post)
    return posts


def save_posts(path: str | Path, posts: Iterable[Post], fmt: str | None = None) -> None:
    path = Path(path)
    fmt = _detect_format(path, fmt)
    posts = list(posts)
    if fmt == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for post in posts:
                record = {
                    "post_id": post.post_id,
                    "author_rank": post.author_rank,
                    "body": post.body,
                    "label": str(post.label) if post.label is not None else None,
                }
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for post in posts:
                writer.writerow(
                    [
                        post.post_id,
                        post.author_rank,
                        post.body,
                        str(post.label) if post.label is not None else "",
                    ]
                )


@dataclass
class CorpusStats:
    total: int
    counts: dict[TriageLabel, int]
    percentages: dict[TriageLabel, float] = field(init=False)

    def __post_init__(self) -> None:
        self.percentages = {
            label: 100.0 * self.counts.get(label, 0) / self.total for label in LABELS
        }

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "counts": {str(label): self.counts.get(label, 0) for label in LABELS},
            "percentages": {str(label): self.percentages[label] for label in LABELS},
        }


def corpus_stats(posts: Sequence[Post]) -> CorpusStats:
    """Label counts and percentages; requires a non-empty, fully labeled corpus."""
    if not posts:
        raise CorpusError("cannot compute statistics of an empty corpus")
    counts = {label: 0 for label in LABELS}
    for post in posts:
        if post.label is None:
            raise CorpusError(f"post {post.post_id!r} is unlabeled")
        counts[post.label] += 1
    return CorpusStats(total=len(posts), counts=counts)


def stratified_fold_indices(labels: Sequence[TriageLabel], k: int, seed: int) -> list[int]:
    """Fold index per position, stratified by label.

    Per label (ascending severity) the positions are shuffled with the seed
    and dealt round-robin; the dealing cursor runs on across labels so the
    fold totals stay even. Each fold ends up with that label's count divided
    by k, give or take one.
    """
    if k < 2:
        raise CorpusError(f"need at least 2 folds, got {k}")
    if k > len(labels):
        raise CorpusError(f"cannot split {len(labels)} posts into {k} folds")
    rng = random.Random(seed)
    folds = [0] * len(labels)
    cursor = 0
    for label in sorted(set(labels)):
        positions = [i for i, lab in enumerate(labels) if lab == label]
        rng.shuffle(positions)
        for pos in positions:
            folds[pos] = cursor % k
            cursor += 1
    return folds


def stratified_folds(posts: Sequence[Post], k: int, seed: int) -> dict[str, int]:
    """Map post_id -> fold index; every post must be labeled."""
    for post in posts:
        if post.label is None:
            raise CorpusError(f"post {post.post_id!r} is unlabeled; cannot stratify")
    labels = [post.label for post in posts]
    folds = stratified_fold_indices(labels, k, seed)
    return {post.post_id: fold for post, fold in zip(posts, folds)}
