"""Core data model: tokens, BIO slot tags, intent sets, utterances, corpora.

Values are immutable after construction; structural invariants (token/slot
alignment, id uniqueness, scoring coherence) are enforced here, while
semantic rules that annotated data may legitimately violate (intent
exclusivity, BIO well-formedness) are reported by ``validate_corpus``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional

#: Canonical closed set of intent labels, lexicographic order.
INTENT_LABELS: tuple[str, ...] = (
    "affirmative_answer",
    "booking",
    "cancellation",
    "discourse_marker",
    "greeting",
    "incomprehension",
    "indecisive_answer",
    "information",
    "modification",
    "negative_answer",
    "thanking",
)

#: The one label that must never be combined with another.
EXCLUSIVE_INTENT = "discourse_marker"

#: Serialized form of "no intent annotation yet" (distinct from an empty set).
UNLABELED_SENTINEL = "__unlabeled__"

SPLIT_NAMES: tuple[str, ...] = ("train", "dev", "test", "test2")
PROVENANCES: tuple[str, ...] = ("manual", "pseudo", "validated", "unlabeled")
SCORING_MODES: tuple[str, ...] = ("relax", "full")

INTENT_SEPARATOR = "#"


class CorpusError(ValueError):
    """Invalid corpus data (construction or parse time)."""


def check_intent_names(labels: Iterable[str]) -> frozenset[str]:
    """Return the labels as a frozenset, rejecting names outside the canon."""
    out = frozenset(labels)
    unknown = out - set(INTENT_LABELS)
    if unknown:
        raise CorpusError(f"unknown intent name(s): {sorted(unknown)}")
    return out


def format_intents(labels: Optional[frozenset[str]]) -> str:
    """Canonical serialization: lexicographic '#'-join; sentinel when absent."""
    if labels is None:
        return UNLABELED_SENTINEL
    return INTENT_SEPARATOR.join(sorted(labels))


def parse_intents(text: str) -> Optional[frozenset[str]]:
    """Inverse of :func:`format_intents`. Accepts labels in any order."""
    text = text.strip()
    if text == UNLABELED_SENTINEL:
        return None
    if not text:
        return frozenset()
    return check_intent_names(part.strip() for part in text.split(INTENT_SEPARATOR))


def _check_identifier(name: str, what: str) -> None:
    if not name:
        raise CorpusError(f"empty {what}")
    if any(c.isspace() for c in name) or "#" in name or "-" in name:
        raise CorpusError(f"{what} {name!r} contains whitespace, '#' or '-'")


@dataclass(frozen=True)
class ConceptLabel:
    """A slot concept: attribute plus optional specifier (full scoring only)."""

    attribute: str
    specifier: Optional[str] = None

    def __post_init__(self) -> None:
        _check_identifier(self.attribute, "concept attribute")
        if self.specifier is not None:
            _check_identifier(self.specifier, "concept specifier")

    @property
    def identifier(self) -> str:
        if self.specifier is None:
            return self.attribute
        return f"{self.attribute}-{self.specifier}"

    def without_specifier(self) -> "ConceptLabel":
        if self.specifier is None:
            return self
        return ConceptLabel(self.attribute)


@dataclass(frozen=True)
class SlotTag:
    """One BIO tag: O, or B/I carrying a concept."""

    kind: str  # "O" | "B" | "I"
    concept: Optional[ConceptLabel] = None

    def __post_init__(self) -> None:
        if self.kind not in ("O", "B", "I"):
            raise CorpusError(f"invalid tag kind {self.kind!r}")
        if self.kind == "O" and self.concept is not None:
            raise CorpusError("O tag must not carry a concept")
        if self.kind != "O" and self.concept is None:
            raise CorpusError(f"{self.kind} tag requires a concept")

    @classmethod
    def from_string(cls, text: str, scoring: str) -> "SlotTag":
        """Parse ``O``, ``B-attr`` or ``B-attr-spec`` (the latter full-only)."""
        if scoring not in SCORING_MODES:
            raise CorpusError(f"unknown scoring mode {scoring!r}")
        if text == "O":
            return cls("O")
        if "-" not in text:
            raise CorpusError(f"malformed slot tag {text!r}")
        kind, rest = text.split("-", 1)
        if kind not in ("B", "I"):
            raise CorpusError(f"malformed slot tag {text!r}")
        parts = rest.split("-")
        if len(parts) == 1:
            concept = ConceptLabel(parts[0])
        elif len(parts) == 2:
            if scoring == "relax":
                raise CorpusError(
                    f"specifier present under relax mode in tag {text!r}"
                )
            concept = ConceptLabel(parts[0], parts[1])
        else:
            raise CorpusError(f"malformed slot tag {text!r}")
        return cls(kind, concept)

    def __str__(self) -> str:
        if self.kind == "O":
            return "O"
        assert self.concept is not None
        return f"{self.kind}-{self.concept.identifier}"


@dataclass(frozen=True)
class Token:
    """A surface token; trailing '*' marks a truncated (partially audible) word."""

    surface: str

    def __post_init__(self) -> None:
        if not self.surface:
            raise CorpusError("empty token surface")
        if any(c.isspace() for c in self.surface):
            raise CorpusError(f"token surface {self.surface!r} contains whitespace")

    @property
    def truncated(self) -> bool:
        return self.surface.endswith("*")


@dataclass(frozen=True)
class Utterance:
    id: str
    dialogue_id: str
    tokens: tuple[Token, ...]
    slots: Optional[tuple[SlotTag, ...]] = None
    intents: Optional[frozenset[str]] = None
    provenance: str = "manual"

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("utterance id must be non-empty")
        if not self.tokens:
            raise CorpusError(f"utterance {self.id}: tokens must be non-empty")
        if self.slots is not None and len(self.slots) != len(self.tokens):
            raise CorpusError(
                f"utterance {self.id}: {len(self.tokens)} tokens but "
                f"{len(self.slots)} slot tags"
            )
        if self.intents is not None:
            object.__setattr__(self, "intents", check_intent_names(self.intents))
        if self.provenance not in PROVENANCES:
            raise CorpusError(
                f"utterance {self.id}: unknown provenance {self.provenance!r}"
            )

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    def text(self) -> str:
        return " ".join(self.surfaces)

    def normalized_text(self) -> str:
        """Lowercased, single-space-joined surfaces (text-matching key)."""
        return " ".join(s.lower() for s in self.surfaces)

    def has_truncated_token(self) -> bool:
        return any(t.truncated for t in self.tokens)

    def tag_strings(self) -> Optional[tuple[str, ...]]:
        if self.slots is None:
            return None
        return tuple(str(t) for t in self.slots)


def _normalize_splits(
    splits: Mapping[str, Iterable[Utterance]],
) -> dict[str, tuple[Utterance, ...]]:
    unknown = set(splits) - set(SPLIT_NAMES)
    if unknown:
        raise CorpusError(f"unknown split name(s): {sorted(unknown)}")
    return {name: tuple(splits.get(name, ())) for name in SPLIT_NAMES}


@dataclass(frozen=True)
class Corpus:
    name: str
    scoring: str
    splits: Mapping[str, tuple[Utterance, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.scoring not in SCORING_MODES:
            raise CorpusError(f"unknown scoring mode {self.scoring!r}")
        object.__setattr__(self, "splits", _normalize_splits(self.splits))
        seen: set[str] = set()
        for utt in self.utterances():
            if utt.id in seen:
                raise CorpusError(f"duplicate utterance id {utt.id!r}")
            seen.add(utt.id)
        if self.scoring == "relax":
            for utt in self.utterances():
                for tag in utt.slots or ():
                    if tag.concept is not None and tag.concept.specifier is not None:
                        raise CorpusError(
                            f"utterance {utt.id}: specifier "
                            f"{tag.concept.identifier!r} present under relax scoring"
                        )

    def utterances(self, split: Optional[str] = None) -> Iterator[Utterance]:
        if split is not None:
            yield from self.splits[split]
            return
        for name in SPLIT_NAMES:
            yield from self.splits[name]

    def size(self, split: Optional[str] = None) -> int:
        if split is not None:
            return len(self.splits[split])
        return sum(len(self.splits[s]) for s in SPLIT_NAMES)

    def concept_lexicon(self, split: Optional[str] = None) -> tuple[str, ...]:
        """Distinct concept identifiers, sorted."""
        found: set[str] = set()
        for utt in self.utterances(split):
            for tag in utt.slots or ():
                if tag.concept is not None:
                    found.add(tag.concept.identifier)
        return tuple(sorted(found))

    def with_splits(self, splits: Mapping[str, Iterable[Utterance]]) -> "Corpus":
        return Corpus(self.name, self.scoring, splits)
