"""Synthetic labeled corpora for tests, demos, and benchmarks.

Posts are assembled from per-label topic vocabularies, a shared pool of
neutral filler sentences, and emotion words drawn from one shared list whose
count scales loosely with severity. The overlap is deliberate: lexicon
counts alone give only a noisy severity signal, while the per-label topic
words (which appear in no lexicon) let token features separate the labels
cleanly. Green posts sometimes carry helpline mentions and negated negative
emotions ("never sad once"); amber posts carry negated positives ("hardly
hopeful about next month"); crisis posts always contain an explicit
self-harm phrase. Generation is driven entirely by one seeded RNG, so a
given (n, seed, split) always yields the same posts.
"""

import random
from typing import Sequence

from .corpus import Post, TriageLabel
from .errors import CorpusError

LABEL_PROPORTIONS = {
    TriageLabel.GREEN: 0.60,
    TriageLabel.AMBER: 0.25,
    TriageLabel.RED: 0.115,
    TriageLabel.CRISIS: 0.035,
}

_GREEN_TOPICS = (
    "garden", "sunshine", "walking", "recipes", "footy", "weekend",
    "playlist", "puppy", "beach", "markets", "volunteering", "barbecue",
)
_AMBER_TOPICS = (
    "deadlines", "overtime", "rent", "flatmate", "exams", "assignments",
    "headaches", "arguments", "budget", "paperwork", "commute", "rosters",
)
_RED_TOPICS = (
    "relapse", "panic", "flashbacks", "nightmares", "shaking", "dread",
    "breakdown", "spiral", "numbness", "isolation", "tremors", "blackouts",
)
_CRISIS_TOPICS = (
    "note", "letters", "pills", "tablets", "bridge", "rooftop",
    "railway", "farewell", "goodbyes", "arrangements", "belongings", "stockpile",
)

_NEGATIVE_EMOTIONS = (
    "sad", "hopeless", "worthless", "anxious", "afraid", "miserable",
    "empty", "exhausted", "angry", "ashamed", "lonely", "awful",
)
_POSITIVE_EMOTIONS = (
    "happy", "grateful", "proud", "calm", "hopeful", "cheerful",
    "content", "relaxed", "glad", "bright",
)

_FILLERS = (
    "been reading the forum most evenings this week.",
    "the weather turned cold again down here.",
    "my sister rang on sunday for a chat.",
    "work has been the usual routine otherwise.",
    "the neighbours are renovating so the street is noisy.",
    "dinner was just leftovers again tonight.",
    "the bus ran late twice this week.",
    "watched some television after tea.",
    "the dog next door barks at the postman every day.",
    "might do the shopping tomorrow morning.",
    "the house needs a proper clean at some point.",
    "school holidays start here next week.",
)

_HELPLINE_LINES = (
    "if it ever gets heavy you can call lifeline on 13 11 14.",
    "the kids help line on 1800 55 1800 was good to my nephew.",
    "have a look at www.moodgym.anu.edu.au for the exercises.",
    "beyondblue has decent fact sheets too.",
)

_SELF_HARM_LINES = (
    "i want to die",
    "i want to end my life",
    "i want to kill myself",
    "i don't want to live like this",
)


def _fillers(rng: random.Random, count: int) -> list[str]:
    return list(rng.sample(_FILLERS, count))


def _green_sentences(rng: random.Random) -> list[str]:
    topics = rng.sample(_GREEN_TOPICS, 2)
    out = [f"spent most of the week around the {topics[0]} and it kept me busy."]
    out.append(f"the {topics[1]} with friends on saturday was a highlight.")
    roll = rng.random()
    if roll < 0.45:
        out.append(f"feeling really {rng.choice(_POSITIVE_EMOTIONS)} about how things are going.")
    elif roll < 0.70:
        # negator directly before the emotion word so the flip window sees it
        out.append(f"never {rng.choice(_NEGATIVE_EMOTIONS)} once all week.")
    else:
        pos = rng.sample(_POSITIVE_EMOTIONS, 2)
        out.append(f"pretty {pos[0]} and {pos[1]} most days.")
    if rng.random() < 0.25:
        out.append(rng.choice(_HELPLINE_LINES))
    out.extend(_fillers(rng, rng.randint(1, 2)))
    return out


def _amber_sentences(rng: random.Random) -> list[str]:
    topics = rng.sample(_AMBER_TOPICS, 2)
    out = [f"the {topics[0]} have been piling up for weeks now."]
    out.append(f"between that and the {topics[1]} i barely get a quiet evening.")
    negs = rng.sample(_NEGATIVE_EMOTIONS, rng.randint(1, 2))
    if len(negs) == 1:
        out.append(f"been feeling {negs[0]} about it.")
    else:
        out.append(f"been feeling {negs[0]} and {negs[1]} about it.")
    if rng.random() < 0.40:
        out.append(f"hardly {rng.choice(_POSITIVE_EMOTIONS)} about next month either.")
    if rng.random() < 0.35:
        out.append(rng.choice((
            "any tips for getting through it?",
            "what should i try next?",
            "has anyone dealt with this before?",
        )))
    if rng.random() < 0.30:
        out.append(f"my {rng.choice(('manager', 'supervisor'))} has not made it easier.")
    out.extend(_fillers(rng, rng.randint(1, 2)))
    return out


def _red_sentences(rng: random.Random) -> list[str]:
    topics = rng.sample(_RED_TOPICS, 2)
    out = [f"the {topics[0]} came back worse than before."]
    out.append(f"most nights the {topics[1]} keeps me up until morning.")
    negs = rng.sample(_NEGATIVE_EMOTIONS, rng.randint(2, 3))
    out.append(f"everything feels {negs[0]} and {negs[1]} lately.")
    if len(negs) > 2:
        out.append(f"mostly just {negs[2]} underneath it all.")
    if rng.random() < 0.50:
        out.append("can't switch my head off anymore.")
    if rng.random() < 0.35:
        out.append(f"my {rng.choice(('gp', 'psych', 'counsellor'))} moved the appointment again.")
    if rng.random() < 0.10:
        out.append("scared i might hurt myself if this keeps up.")
    out.extend(_fillers(rng, 1))
    return out


def _crisis_sentences(rng: random.Random) -> list[str]:
    topics = rng.sample(_CRISIS_TOPICS, 2)
    out = [f"{rng.choice(_SELF_HARM_LINES)} and i mean it this time."]
    out.append(f"i wrote the {topics[0]} last night and sorted the {topics[1]}.")
    negs = rng.sample(_NEGATIVE_EMOTIONS, rng.randint(2, 3))
    out.append(f"all i feel is {' and '.join(negs)}.")
    out.append(rng.choice((
        "nobody can help me now.",
        "there is no point left in any of it.",
        "no one would even notice.",
    )))
    if rng.random() < 0.70:
        out.extend(_fillers(rng, 1))
    return out


_BUILDERS = {
    TriageLabel.GREEN: _green_sentences,
    TriageLabel.AMBER: _amber_sentences,
    TriageLabel.RED: _red_sentences,
    TriageLabel.CRISIS: _crisis_sentences,
}


def _rank(rng: random.Random, label: TriageLabel) -> str:
    if label is TriageLabel.GREEN and rng.random() < 0.30:
        return rng.choice(("moderator", "staff"))
    return rng.choice(("member", "casual", "frequent"))


def label_counts(n: int) -> dict[TriageLabel, int]:
    """Per-label post counts for a corpus of size n (green takes the slack)."""
    if n < 20:
        raise CorpusError(f"synthetic corpus needs at least 20 posts, got {n}")
    counts = {
        label: max(1, round(n * LABEL_PROPORTIONS[label]))
        for label in (TriageLabel.AMBER, TriageLabel.RED, TriageLabel.CRISIS)
    }
    counts[TriageLabel.GREEN] = n - sum(counts.values())
    if counts[TriageLabel.GREEN] < 1:
        raise CorpusError(f"synthetic corpus of {n} posts leaves no room for green posts")
    return counts


def generate_corpus(n: int, seed: int = 0, split: str = "train") -> list[Post]:
    """n labeled posts; the same (n, seed, split) always gives the same list."""
    rng = random.Random(f"{seed}:{split}")
    counts = label_counts(n)
    records = []
    for label in sorted(counts):
        for _ in range(counts[label]):
            body = " ".join(_BUILDERS[label](rng))
            records.append((_rank(rng, label), body, label))
    rng.shuffle(records)
    return [
        Post(post_id=f"syn-{split}-{i + 1:05d}", author_rank=rank, body=body, label=label)
        for i, (rank, body, label) in enumerate(records)
    ]


def generate_split(
    n_train: int = 1200, n_test: int = 400, seed: int = 0
) -> tuple[list[Post], list[Post]]:
    """Disjoint train and test corpora drawn from independent RNG streams."""
    train = generate_corpus(n_train, seed, split="train")
    test = generate_corpus(n_test, seed, split="test")
    return train, test


def corpus_labels(posts: Sequence[Post]) -> list[TriageLabel]:
    return [post.label for post in posts]
