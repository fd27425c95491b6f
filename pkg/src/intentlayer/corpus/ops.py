"""Corpus-level operations: scoring projection, statistics, subset
sampling, and cross-version intent transfer by textual matching."""
from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Mapping, Optional

from .types import (
    INTENT_LABELS,
    SPLIT_NAMES,
    Corpus,
    CorpusError,
    SlotTag,
    Utterance,
    format_intents,
)


def project_relax(corpus: Corpus) -> Corpus:
    """Strip every concept specifier, turning a full-scoring corpus into relax.

    Token content, intents, and sequence lengths are unchanged. Rejects
    corpora that are already in relax scoring.
    """
    if corpus.scoring == "relax":
        raise CorpusError("corpus is already in relax scoring")
    new_splits = {}
    for split, utts in corpus.splits.items():
        projected = []
        for utt in utts:
            slots = utt.slots
            if slots is not None:
                slots = tuple(
                    tag if tag.concept is None else SlotTag(tag.kind, tag.concept.without_specifier())
                    for tag in slots
                )
            projected.append(replace(utt, slots=slots))
        new_splits[split] = projected
    return Corpus(corpus.name, "relax", new_splits)


@dataclass(frozen=True)
class CorpusStats:
    """Distribution tables: utterances, per-label intent counts (one count
    per label an utterance carries, so combinations contribute to every
    member label), combination counts, and concept lexicon sizes."""

    utterance_counts: Mapping[str, int]
    intent_counts: Mapping[str, Mapping[str, int]]  # label -> split -> count
    combination_counts: Mapping[str, Mapping[str, int]]  # 'a#b' -> split -> count
    concept_lexicon_sizes: Mapping[str, int]
    unlabeled_counts: Mapping[str, int]

    def total_utterances(self) -> int:
        return sum(self.utterance_counts.values())

    def intent_total(self, label: str) -> int:
        return sum(self.intent_counts.get(label, {}).values())

    def combination_total(self, combo: str) -> int:
        return sum(self.combination_counts.get(combo, {}).values())


def compute_stats(corpus: Corpus) -> CorpusStats:
    utterance_counts = {s: len(corpus.splits[s]) for s in SPLIT_NAMES}
    intent_counts: dict[str, dict[str, int]] = {
        label: {s: 0 for s in SPLIT_NAMES} for label in INTENT_LABELS
    }
    combination_counts: dict[str, dict[str, int]] = {}
    unlabeled_counts = {s: 0 for s in SPLIT_NAMES}
    for split in SPLIT_NAMES:
        for utt in corpus.splits[split]:
            if utt.intents is None:
                unlabeled_counts[split] += 1
                continue
            for label in utt.intents:
                intent_counts[label][split] += 1
            if len(utt.intents) >= 2:
                key = format_intents(utt.intents)
                combination_counts.setdefault(key, {s: 0 for s in SPLIT_NAMES})
                combination_counts[key][split] += 1
    lexicon_sizes = {s: len(corpus.concept_lexicon(s)) for s in SPLIT_NAMES}
    return CorpusStats(
        utterance_counts=utterance_counts,
        intent_counts=intent_counts,
        combination_counts=dict(sorted(combination_counts.items())),
        concept_lexicon_sizes=lexicon_sizes,
        unlabeled_counts=unlabeled_counts,
    )


def sample_annotation_subset(
    corpus: Corpus,
    sizes: tuple[int, int, int] = (1240, 124, 187),
    seed: int = 0,
) -> tuple[list[Utterance], list[Utterance], list[Utterance]]:
    """Draw three disjoint uniform samples from the train split.

    Deterministic per seed; sizes default to the manual-annotation budget
    (train/dev/test of the seed subset).
    """
    population = list(corpus.splits["train"])
    total = sum(sizes)
    if any(n < 0 for n in sizes):
        raise CorpusError(f"negative sample size in {sizes}")
    if total > len(population):
        raise CorpusError(
            f"requested {total} utterances but train split has {len(population)}"
        )
    rng = random.Random(seed)
    drawn = rng.sample(population, total)
    a, b = sizes[0], sizes[0] + sizes[1]
    return drawn[:a], drawn[a:b], drawn[b:]


@dataclass(frozen=True)
class Unmatched:
    utterance: Utterance
    reason: str  # "truncated" | "ambiguous" | "no_match"


def transfer_intents(
    labeled: Corpus, target: Corpus
) -> tuple[int, Corpus, list[Unmatched]]:
    """Copy intent sets onto target utterances whose normalized text exactly
    matches a labeled utterance.

    Matched utterances get provenance ``pseudo``. Utterances containing
    truncated tokens, with no exact match, or whose text maps to conflicting
    gold label sets are returned unmatched for manual handling.
    """
    by_text: dict[str, Optional[frozenset[str]]] = {}
    for utt in labeled.utterances():
        if utt.intents is None:
            continue
        key = utt.normalized_text()
        if key in by_text and by_text[key] != utt.intents:
            by_text[key] = None  # conflicting gold sets: ambiguous
        else:
            by_text.setdefault(key, utt.intents)

    matched = 0
    unmatched: list[Unmatched] = []
    new_splits: dict[str, list[Utterance]] = {}
    missing = object()
    for split, utts in target.splits.items():
        out = []
        for utt in utts:
            if utt.has_truncated_token():
                unmatched.append(Unmatched(utt, "truncated"))
                out.append(utt)
                continue
            found = by_text.get(utt.normalized_text(), missing)
            if found is missing:
                unmatched.append(Unmatched(utt, "no_match"))
                out.append(utt)
            elif found is None:
                unmatched.append(Unmatched(utt, "ambiguous"))
                out.append(utt)
            else:
                matched += 1
                out.append(replace(utt, intents=found, provenance="pseudo"))
        new_splits[split] = out
    return matched, target.with_splits(new_splits), unmatched
