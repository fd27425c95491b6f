"""BIO span extraction with the conlleval repair convention.

An I tag that does not continue an open span of the same concept (I at
sequence start, I after O, or I with a different concept) starts a new
span. Extraction never fails on such input; the validator reports the
positions separately.
"""
from __future__ import annotations

from typing import Sequence, Union

from .types import SlotTag

Tag = Union[SlotTag, str]
Span = tuple[int, int, str]  # (start, end_exclusive, concept identifier)


def _split_tag(tag: Tag) -> tuple[str, str]:
    """Return (kind, concept identifier); identifier is '' for O."""
    if isinstance(tag, SlotTag):
        if tag.kind == "O":
            return "O", ""
        assert tag.concept is not None
        return tag.kind, tag.concept.identifier
    if tag == "O":
        return "O", ""
    kind, _, rest = tag.partition("-")
    if kind not in ("B", "I") or not rest:
        raise ValueError(f"malformed BIO tag {tag!r}")
    return kind, rest


def extract_spans(tags: Sequence[Tag]) -> tuple[Span, ...]:
    spans: list[Span] = []
    start = -1
    concept = ""
    for i, tag in enumerate(tags):
        kind, ident = _split_tag(tag)
        if kind == "O":
            if start >= 0:
                spans.append((start, i, concept))
                start = -1
            continue
        if kind == "B" or start < 0 or ident != concept:
            if start >= 0:
                spans.append((start, i, concept))
            start, concept = i, ident
    if start >= 0:
        spans.append((start, len(tags), concept))
    return tuple(spans)


def concept_sequence(tags: Sequence[Tag]) -> tuple[str, ...]:
    """Ordered concept identifiers, one per extracted span."""
    return tuple(concept for _, _, concept in extract_spans(tags))


def orphan_positions(tags: Sequence[Tag]) -> tuple[int, ...]:
    """Indices of I tags that had to be repaired into span starts."""
    orphans: list[int] = []
    open_concept: str | None = None
    for i, tag in enumerate(tags):
        kind, ident = _split_tag(tag)
        if kind == "O":
            open_concept = None
        elif kind == "B":
            open_concept = ident
        else:
            if open_concept != ident:
                orphans.append(i)
            open_concept = ident
    return tuple(orphans)
