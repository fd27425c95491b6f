"""Semantic corpus validation. Violations are data, not exceptions."""
from __future__ import annotations

from dataclasses import dataclass

from .spans import orphan_positions
from .types import EXCLUSIVE_INTENT, INTENT_LABELS, Corpus


@dataclass(frozen=True)
class Violation:
    utterance_id: str
    rule: str
    message: str


def validate_corpus(corpus: Corpus) -> list[Violation]:
    """Check rules that annotated data may violate without being unparseable.

    Structural invariants (alignment, id uniqueness, scoring coherence) are
    already enforced at construction and cannot appear here.
    """
    violations: list[Violation] = []
    for utt in corpus.utterances():
        if utt.intents:
            unknown = set(utt.intents) - set(INTENT_LABELS)
            if unknown:
                violations.append(
                    Violation(utt.id, "unknown_intent", f"unknown labels {sorted(unknown)}")
                )
            if EXCLUSIVE_INTENT in utt.intents and len(utt.intents) > 1:
                violations.append(
                    Violation(
                        utt.id,
                        "discourse_marker_exclusive",
                        f"{EXCLUSIVE_INTENT} combined with "
                        f"{sorted(utt.intents - {EXCLUSIVE_INTENT})}",
                    )
                )
        if utt.slots is not None:
            for pos in orphan_positions(utt.slots):
                violations.append(
                    Violation(
                        utt.id,
                        "orphan_I",
                        f"I tag at position {pos} does not continue a span",
                    )
                )
    return violations
