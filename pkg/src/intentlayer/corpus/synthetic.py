"""Synthetic fixture corpora with learnable token-to-slot and
cue-word-to-intent mappings, plus configurable label noise.

Every utterance carries one cue word per intent and zero or more concept
spans drawn from per-concept filler vocabularies, interleaved with carrier
words tagged O. A bag-of-words model can therefore learn the task, which
is what the reference trainer's sanity checks rely on.
"""
from __future__ import annotations

import random
import string
from dataclasses import dataclass
from typing import Mapping

from .types import (
    EXCLUSIVE_INTENT,
    INTENT_LABELS,
    Corpus,
    CorpusError,
    SlotTag,
    Token,
    Utterance,
)

_DEFAULT_CARRIERS = ("alors", "euh", "donc", "ben", "voila", "bon", "puis", "enfin")


@dataclass(frozen=True)
class SyntheticConfig:
    intent_cues: Mapping[str, tuple[str, ...]]
    concept_fillers: Mapping[str, tuple[str, ...]]
    carrier_words: tuple[str, ...] = _DEFAULT_CARRIERS
    combination_prob: float = 0.25
    concept_count_weights: tuple[float, ...] = (0.2, 0.5, 0.3)
    label_noise: float = 0.0
    slot_noise: float = 0.0
    dev_size: int = 0
    test_size: int = 0
    name: str = "synthetic"

    def __post_init__(self) -> None:
        if len(self.intent_cues) < 2:
            raise CorpusError("synthetic config needs at least 2 intents")
        if len(self.concept_fillers) < 2:
            raise CorpusError("synthetic config needs at least 2 concepts")
        for label, cues in self.intent_cues.items():
            if label not in INTENT_LABELS:
                raise CorpusError(f"unknown intent name {label!r}")
            if not cues:
                raise CorpusError(f"intent {label!r} has an empty cue vocabulary")
        for attr, fillers in self.concept_fillers.items():
            if not fillers:
                raise CorpusError(f"concept {attr!r} has an empty filler vocabulary")
        if not self.carrier_words:
            raise CorpusError("carrier word vocabulary is empty")
        if not (0.0 <= self.label_noise < 1.0 and 0.0 <= self.slot_noise < 1.0):
            raise CorpusError("noise rates must lie in [0, 1)")


def generate_synthetic(config: SyntheticConfig, n: int, seed: int) -> Corpus:
    """Generate a corpus with ``n`` train utterances plus the dev/test sizes
    configured in ``config``. Reproducible per seed."""
    if n < 0:
        raise CorpusError("n must be >= 0")
    rng = random.Random(seed)
    splits = {}
    for split, size in (("train", n), ("dev", config.dev_size), ("test", config.test_size)):
        splits[split] = [
            _generate_utterance(config, rng, f"syn-{split}-{i:05d}", f"dlg-{split}-{i // 4}")
            for i in range(size)
        ]
    return Corpus(config.name, "relax", splits)


def _pick_intents(config: SyntheticConfig, rng: random.Random) -> list[str]:
    labels = sorted(config.intent_cues)
    k = 2 if (len(labels) >= 2 and rng.random() < config.combination_prob) else 1
    chosen = rng.sample(labels, k)
    if EXCLUSIVE_INTENT in chosen:
        return [EXCLUSIVE_INTENT]
    return chosen


def _generate_utterance(
    config: SyntheticConfig, rng: random.Random, utt_id: str, dialogue_id: str
) -> Utterance:
    intents = _pick_intents(config, rng)
    segments: list[list[tuple[str, str]]] = []
    for label in intents:
        segments.append([(rng.choice(config.intent_cues[label]), "O")])

    r = rng.random()
    acc = 0.0
    n_concepts = len(config.concept_count_weights) - 1
    for count, w in enumerate(config.concept_count_weights):
        acc += w
        if r < acc:
            n_concepts = count
            break
    attrs = sorted(config.concept_fillers)
    for _ in range(n_concepts):
        attr = rng.choice(attrs)
        fillers = config.concept_fillers[attr]
        # Multiword values use the tail of the vocabulary for continuation
        # tokens, like real-world compounds, so word identity stays
        # predictive of the B/I distinction.
        half = max(1, (len(fillers) + 1) // 2)
        starters, continuations = fillers[:half], fillers[half:]
        words = [rng.choice(starters)]
        if continuations and rng.random() < 0.4:
            words.append(rng.choice(continuations))
        segments.append(
            [(words[0], f"B-{attr}")] + [(w, f"I-{attr}") for w in words[1:]]
        )

    for _ in range(rng.randint(1, 3)):
        segments.append([(rng.choice(config.carrier_words), "O")])

    rng.shuffle(segments)
    tokens = [Token(w) for seg in segments for w, _ in seg]
    tags = [SlotTag.from_string(t, "relax") for seg in segments for _, t in seg]

    final = set(intents)
    if rng.random() < config.label_noise:
        candidates = sorted(set(config.intent_cues) - final)
        if len(final) > 1 and rng.random() < 0.5:
            final.discard(rng.choice(sorted(final)))
        elif candidates:
            final.add(rng.choice(candidates))
            if EXCLUSIVE_INTENT in final and len(final) > 1:
                final = {EXCLUSIVE_INTENT}
    if rng.random() < config.slot_noise and tags:
        tags[rng.randrange(len(tags))] = SlotTag("O")

    return Utterance(
        id=utt_id,
        dialogue_id=dialogue_id,
        tokens=tuple(tokens),
        slots=tuple(tags),
        intents=frozenset(final),
        provenance="manual",
    )


def make_template(
    num_intents: int = 4,
    cues_per_intent: int = 3,
    num_concepts: int = 3,
    fillers_per_concept: int = 4,
    opaque_vocab: bool = False,
    vocab_seed: int = 0,
    **overrides,
) -> SyntheticConfig:
    """Build a ready-to-use config over the canonical label set.

    With ``opaque_vocab`` the cue and filler words are random letter strings
    that share no substrings across variants of the same label, which makes
    unseen-synonym generalization impossible for character features.
    """
    usable = [l for l in INTENT_LABELS if l != EXCLUSIVE_INTENT]
    if num_intents > len(usable):
        raise CorpusError(f"at most {len(usable)} combinable intents available")
    vrng = random.Random(vocab_seed)
    seen: set[str] = set()

    def word(stem: str, i: int) -> str:
        if not opaque_vocab:
            return f"{stem}{i:02d}"
        while True:
            w = "".join(vrng.choice(string.ascii_lowercase) for _ in range(6))
            if w not in seen:
                seen.add(w)
                return w

    intents = {
        label: tuple(word(label, i) for i in range(cues_per_intent))
        for label in usable[:num_intents]
    }
    concepts = {
        f"concept{c}": tuple(word(f"val{c}x", i) for i in range(fillers_per_concept))
        for c in range(num_concepts)
    }
    return SyntheticConfig(intent_cues=intents, concept_fillers=concepts, **overrides)


def strip_intents(
    corpus: Corpus,
    splits: tuple[str, ...] = ("train",),
    keep_slots: bool = True,
) -> Corpus:
    """Return a copy with intents removed (provenance ``unlabeled``) on the
    given splits. Slot annotations are kept unless ``keep_slots`` is false.
    Used to build unlabeled pools."""
    from dataclasses import replace

    new_splits = {}
    for split, utts in corpus.splits.items():
        if split in splits:
            new_splits[split] = [
                replace(
                    u,
                    intents=None,
                    provenance="unlabeled",
                    slots=u.slots if keep_slots else None,
                )
                for u in utts
            ]
        else:
            new_splits[split] = list(utts)
    return corpus.with_splits(new_splits)
