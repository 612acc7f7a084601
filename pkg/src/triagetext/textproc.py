"""Tokenization and sentence splitting shared by every feature extractor.

The rules are small and deterministic:

* text is lowercased and split on whitespace;
* a whitespace chunk starting with ``http://``, ``https://`` or ``www.`` is
  kept whole as a single URL token;
* any other chunk is split so that punctuation characters become
  single-character tokens, while an apostrophe flanked by alphanumerics stays
  inside its word ("can't" survives as one token).

Joining tokens with single spaces loses only case and the original
whitespace; no characters are invented, so tokenize() is idempotent under
re-tokenization of its own joined output.
"""

from dataclasses import dataclass
from typing import Sequence

URL_PREFIXES = ("http://", "https://", "www.")

_TERMINATORS = frozenset(".!?")


def is_url_token(token: str) -> bool:
    return token.startswith(URL_PREFIXES)


def is_punctuation_token(token: str) -> bool:
    """True when no character of the token is alphanumeric."""
    return not any(ch.isalnum() for ch in token)


def tokenize(text: str) -> list[str]:
    """Lowercase and split ``text`` into word, punctuation, and URL tokens."""
    tokens: list[str] = []
    for chunk in text.lower().split():
        if chunk.startswith(URL_PREFIXES):
            tokens.append(chunk)
            continue
        n = len(chunk)
        start = 0
        i = 0
        while i < n:
            ch = chunk[i]
            keep = ch.isalnum() or (
                ch == "'"
                and 0 < i < n - 1
                and chunk[i - 1].isalnum()
                and chunk[i + 1].isalnum()
            )
            if keep:
                i += 1
                continue
            if start < i:
                tokens.append(chunk[start:i])
            tokens.append(ch)
            i += 1
            start = i
        if start < n:
            tokens.append(chunk[start:])
    return tokens


@dataclass
class Sentence:
    text: str
    tokens: list[str]


def split_sentences(text: str) -> list[Sentence]:
    """Split on runs of ``.``, ``!``, ``?`` and on newlines.

    Greedy and abbreviation-free: a run of terminators stays attached to the
    sentence it closes, and no special cases are made for abbreviations or
    decimals. Whitespace-only segments are dropped; text without any
    terminator is a single sentence. Concatenating the sentence texts
    reproduces the input up to whitespace.
    """
    pieces: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in _TERMINATORS:
            while i + 1 < n and text[i + 1] in _TERMINATORS:
                i += 1
            piece = text[start : i + 1].strip()
            if piece:
                pieces.append(piece)
            start = i + 1
        elif ch == "\n":
            piece = text[start:i].strip()
            if piece:
                pieces.append(piece)
            start = i + 1
        i += 1
    tail = text[start:].strip()
    if tail:
        pieces.append(tail)
    return [Sentence(text=piece, tokens=tokenize(piece)) for piece in pieces]


def ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    """All contiguous n-grams, in order; empty when the text is too short."""
    if n <= 0:
        raise ValueError(f"n-gram order must be positive, got {n}")
    count = len(tokens) - n + 1
    if count <= 0:
        return []
    return [tuple(tokens[i : i + n]) for i in range(count)]
