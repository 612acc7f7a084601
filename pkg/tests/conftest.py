import pathlib

import pytest

from triagetext.corpus import Post, TriageLabel
from triagetext.features import load_embeddings
from triagetext.lexicons import bundled_lexicon_manifest, load_lexicon_bundle
from triagetext.synth import generate_split

DATA_DIR = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def bundle():
    return load_lexicon_bundle(bundled_lexicon_manifest())


@pytest.fixture(scope="session")
def lexicons_by_name(bundle):
    return {lex.name: lex for lex in bundle}


@pytest.fixture(scope="session")
def tiny_embeddings():
    return load_embeddings(DATA_DIR / "tiny_embeddings.txt")


@pytest.fixture(scope="session")
def small_split():
    # 120 train / 60 test keeps feature and classifier tests fast
    return generate_split(120, 60, seed=7)


@pytest.fixture(scope="session")
def small_train(small_split):
    return small_split[0]


@pytest.fixture(scope="session")
def small_test(small_split):
    return small_split[1]


def make_post(post_id: str, body: str, label=None, rank: str = "member") -> Post:
    parsed = TriageLabel.parse(label) if isinstance(label, str) else label
    return Post(post_id=post_id, author_rank=rank, body=body, label=parsed)


@pytest.fixture()
def five_posts():
    # frozen truth/prediction pair exercising every severity band
    truth = [
        make_post("p1", "body", "crisis"),
        make_post("p2", "body", "red"),
        make_post("p3", "body", "amber"),
        make_post("p4", "body", "green"),
        make_post("p5", "body", "green"),
    ]
    predicted = ["crisis", "amber", "amber", "green", "green"]
    return truth, [TriageLabel.parse(p) for p in predicted]
