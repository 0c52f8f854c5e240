import random
from pathlib import Path

import numpy as np
import pytest

from mira.corpus import Document, Example, Summary

FIXTURES = Path(__file__).parent / "fixtures"

NOUNS = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
    "india", "juliet", "kilo", "lima", "mike", "november", "oscar", "papa",
    "quebec", "romeo", "sierra", "tango", "uniform", "victor", "whiskey",
    "xray", "yankee", "zulu",
]
# all present in the shipped verb lexicon, so the heuristic finds predicates
VERBS = ["said", "ran", "made", "took", "found", "called", "told", "left", "kept", "held"]


def synth_sentence(rng: random.Random, novel_prob: float = 0.0) -> str:
    words = []
    for _ in range(rng.randint(3, 7)):
        if rng.random() < novel_prob:
            words.append(f"uniq{rng.randrange(10_000)}")
        else:
            words.append(rng.choice(NOUNS))
    if rng.random() < 0.85:
        words.insert(min(1, len(words)), rng.choice(VERBS))
    return " ".join(words).capitalize() + "."


def synth_text(rng: random.Random, n_sents: int, novel_prob: float = 0.0) -> str:
    return " ".join(synth_sentence(rng, novel_prob) for _ in range(n_sents))


def synth_example(rng: random.Random, i: int, split: str = "train") -> Example:
    main = Document.from_text(f"doc-m{i}", f"http://m/{i}", synth_text(rng, rng.randint(3, 8)))
    n_assist = rng.randint(1, 4)
    assisting = [
        Document.from_text(
            f"doc-a{i}-{j}", f"http://a/{i}/{j}", synth_text(rng, rng.randint(2, 6)), "assisting"
        )
        for j in range(n_assist)
    ]
    # summary: mix of sentences lifted from the sources and novel material
    parts = []
    for _ in range(rng.randint(1, 3)):
        roll = rng.random()
        if roll < 0.45 and main.sentences:
            parts.append(rng.choice(main.sentences).text)
        elif roll < 0.75:
            doc = rng.choice(assisting)
            parts.append(rng.choice(doc.sentences).text)
        else:
            parts.append(synth_sentence(rng, novel_prob=0.5))
    summary = Summary.from_text(" ".join(parts))
    return Example(f"ex{i}", main, summary, assisting, split)


def synth_corpus(seed: int, n: int, split: str = "train") -> list[Example]:
    rng = random.Random(seed)
    return [synth_example(rng, i, split) for i in range(n)]


class FakeProvider:
    """Maps exact texts to hand-constructed vectors; unknown text is a test bug."""

    def __init__(self, mapping: dict[str, np.ndarray]):
        self.mapping = {k: np.asarray(v, dtype=float) for k, v in mapping.items()}
        self.dim = len(next(iter(self.mapping.values())))
        self.provider_id = "fake"

    def embed_many(self, texts):
        return np.stack([self.mapping[t] for t in texts])


class ScaledProvider:
    """Wraps a provider, multiplying every vector by a constant factor."""

    def __init__(self, inner, factor: float):
        self.inner = inner
        self.factor = factor
        self.provider_id = f"{inner.provider_id}*{factor}"

    def embed_many(self, texts):
        return self.inner.embed_many(texts) * self.factor


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def small_corpus():
    return synth_corpus(seed=7, n=12)
