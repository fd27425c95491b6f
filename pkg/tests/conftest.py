import json
import random
from pathlib import Path

import pytest

from intentlayer.corpus import Corpus, SlotTag, Token, Utterance

FIXTURES = Path(__file__).parent / "fixtures"


def utt(
    uid,
    words,
    tags=None,
    intents=None,
    dialogue="d0",
    provenance="manual",
    scoring="relax",
):
    """Compact utterance builder for tests."""
    tokens = tuple(Token(w) for w in words.split())
    slots = None
    if tags is not None:
        slots = tuple(SlotTag.from_string(t, scoring) for t in tags.split())
    return Utterance(
        id=uid,
        dialogue_id=dialogue,
        tokens=tokens,
        slots=slots,
        intents=None if intents is None else frozenset(intents),
        provenance=provenance,
    )


def expand_distribution(path) -> Corpus:
    """Build a corpus realizing a per-label per-split count table, one
    single-intent utterance per count."""
    spec = json.loads(Path(path).read_text())
    splits = {"train": [], "dev": [], "test": []}
    for label, counts in spec["labels"].items():
        for split, count in counts.items():
            for i in range(count):
                splits[split].append(
                    utt(
                        f"{label}-{split}-{i:04d}",
                        "oui merci bien",
                        "O O O",
                        [label],
                        dialogue=f"dlg-{i % 50}",
                    )
                )
    return Corpus(spec["name"], "relax", splits)


@pytest.fixture(scope="session")
def seed_subset_corpus():
    return expand_distribution(FIXTURES / "seed_subset_distribution.json")


@pytest.fixture(scope="session")
def final_annotation_corpus():
    return expand_distribution(FIXTURES / "final_annotation_distribution.json")


def random_intent_sets(rng: random.Random, n: int, labels=("booking", "greeting", "thanking", "information")):
    out = []
    for _ in range(n):
        k = rng.randint(0, len(labels))
        out.append(frozenset(rng.sample(labels, k)))
    return out


def random_tag_sequence(rng: random.Random, length: int, concepts=("city", "date", "price")):
    tags = []
    for _ in range(length):
        r = rng.random()
        if r < 0.5:
            tags.append("O")
        elif r < 0.8:
            tags.append(f"B-{rng.choice(concepts)}")
        else:
            tags.append(f"I-{rng.choice(concepts)}")
    return tags
