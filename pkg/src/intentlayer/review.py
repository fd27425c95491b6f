"""Human validation of pseudo-labeled intents.

A session groups pseudo-labeled utterances by their label combination and
queues unlabeled ones for fresh annotation. Annotators confirm or
invalidate individual labels, optionally supplying a replacement set; the
resulting set must be non-empty and respect label exclusivity. Every
decision is appended to a JSONL log; session state is always derivable by
replaying the log over the input corpus, which is what crash recovery and
the export do.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from .corpus.types import (
    EXCLUSIVE_INTENT,
    INTENT_LABELS,
    Corpus,
    Utterance,
    format_intents,
)

VERDICTS = ("confirm", "invalidate")


class ReviewError(ValueError):
    """Invalid decision or session operation; carries a machine-readable code."""

    def __init__(self, code: str, message: str, detail: Optional[dict] = None):
        self.code = code
        self.detail = detail or {}
        super().__init__(message)


@dataclass(frozen=True)
class Decision:
    utterance_id: str
    verdicts: Mapping[str, str] = field(default_factory=dict)
    replacement: Optional[frozenset[str]] = None
    annotator: str = "anonymous"
    timestamp: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {
                "utterance_id": self.utterance_id,
                "verdicts": dict(sorted(self.verdicts.items())),
                "replacement": None
                if self.replacement is None
                else sorted(self.replacement),
                "annotator": self.annotator,
                "timestamp": self.timestamp,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "Decision":
        obj = json.loads(line)
        replacement = obj.get("replacement")
        return cls(
            utterance_id=obj["utterance_id"],
            verdicts=dict(obj.get("verdicts", {})),
            replacement=None if replacement is None else frozenset(replacement),
            annotator=obj.get("annotator", "anonymous"),
            timestamp=obj.get("timestamp", ""),
        )


@dataclass(frozen=True)
class ReviewGroup:
    id: str
    intents: frozenset[str]
    utterance_ids: tuple[str, ...]

    @property
    def label(self) -> str:
        return format_intents(self.intents)

    @property
    def size(self) -> int:
        return len(self.utterance_ids)


@dataclass(frozen=True)
class ProgressReport:
    total_pseudo: int
    decided_pseudo: int
    erroneous: int
    erroneous_percent: float  # of total_pseudo, rounded to 2 decimals
    non_pseudo: int
    decided_queue: int
    remaining: int

    def as_dict(self) -> dict:
        return {
            "total_pseudo": self.total_pseudo,
            "decided_pseudo": self.decided_pseudo,
            "erroneous": self.erroneous,
            "erroneous_percent": self.erroneous_percent,
            "non_pseudo": self.non_pseudo,
            "decided_queue": self.decided_queue,
            "remaining": self.remaining,
        }


class ReviewSession:
    """Mutable review state over one corpus. State is derived from the
    corpus plus the ordered decision history, never stored independently."""

    def __init__(self, corpus: Corpus):
        self.corpus = corpus
        self.pseudo: dict[str, frozenset[str]] = {}
        self.queue_ids: list[str] = []
        for utt in corpus.utterances():
            if utt.provenance == "pseudo" and utt.intents is not None:
                self.pseudo[utt.id] = utt.intents
            elif utt.intents is None:
                self.queue_ids.append(utt.id)
        if not self.pseudo:
            raise ReviewError("no_pseudo_labels", "corpus has no pseudo-labeled utterances")
        self.final: dict[str, frozenset[str]] = {}
        self.history: list[Decision] = []
        self.groups = self._build_groups()
        self._by_id = {u.id: u for u in corpus.utterances()}

    def _build_groups(self) -> tuple[ReviewGroup, ...]:
        buckets: dict[frozenset[str], list[str]] = {}
        for uid, intents in self.pseudo.items():
            buckets.setdefault(intents, []).append(uid)
        ordered = sorted(
            buckets.items(), key=lambda kv: (-len(kv[1]), format_intents(kv[0]))
        )
        return tuple(
            ReviewGroup(f"g{i:03d}", intents, tuple(ids))
            for i, (intents, ids) in enumerate(ordered)
        )

    def group(self, group_id: str) -> ReviewGroup:
        for g in self.groups:
            if g.id == group_id:
                return g
        raise ReviewError("unknown_group", f"no group {group_id!r}")

    def utterance(self, uid: str) -> Utterance:
        try:
            return self._by_id[uid]
        except KeyError:
            raise ReviewError("unknown_utterance", f"no utterance {uid!r}") from None


def resolve_decision(session: ReviewSession, decision: Decision) -> frozenset[str]:
    """Validate a decision against the session and return the final set."""
    uid = decision.utterance_id
    if uid in session.pseudo:
        pseudo = session.pseudo[uid]
    elif uid in session.queue_ids:
        pseudo = frozenset()
    else:
        raise ReviewError(
            "unknown_utterance", f"utterance {uid!r} is not under review"
        )
    for label, verdict in decision.verdicts.items():
        if verdict not in VERDICTS:
            raise ReviewError("invalid_verdict", f"verdict {verdict!r} on {label!r}")
        if label not in pseudo:
            raise ReviewError(
                "unknown_verdict_label",
                f"label {label!r} is not among the pseudo labels of {uid!r}",
            )
    replacement = decision.replacement or frozenset()
    unknown = replacement - set(INTENT_LABELS)
    if unknown:
        raise ReviewError("unknown_intent", f"unknown labels {sorted(unknown)}")
    confirmed = frozenset(
        l for l in pseudo if decision.verdicts.get(l, "confirm") == "confirm"
    )
    final = confirmed | replacement
    if not final:
        raise ReviewError(
            "empty_result", f"decision on {uid!r} leaves an empty intent set"
        )
    if EXCLUSIVE_INTENT in final and len(final) > 1:
        raise ReviewError(
            "discourse_marker_exclusive",
            f"{EXCLUSIVE_INTENT} cannot be combined with other labels",
        )
    return final


def apply_decision(session: ReviewSession, decision: Decision) -> frozenset[str]:
    """Apply one decision (last write wins, history retained) and return the
    final intent set."""
    final = resolve_decision(session, decision)
    session.final[decision.utterance_id] = final
    session.history.append(decision)
    return final


def progress(session: ReviewSession) -> ProgressReport:
    decided_pseudo = sum(1 for uid in session.final if uid in session.pseudo)
    erroneous = sum(
        1
        for uid, final in session.final.items()
        if uid in session.pseudo and final != session.pseudo[uid]
    )
    decided_queue = len(session.final) - decided_pseudo
    total = len(session.pseudo)
    remaining = (total - decided_pseudo) + (len(session.queue_ids) - decided_queue)
    return ProgressReport(
        total_pseudo=total,
        decided_pseudo=decided_pseudo,
        erroneous=erroneous,
        erroneous_percent=round(100.0 * erroneous / total, 2),
        non_pseudo=len(session.queue_ids),
        decided_queue=decided_queue,
        remaining=remaining,
    )


def export_final(session: ReviewSession) -> Corpus:
    """Corpus with every reviewed utterance finalized (provenance
    ``validated``); errors while any utterance is undecided."""
    undecided = [
        uid
        for uid in list(session.pseudo) + session.queue_ids
        if uid not in session.final
    ]
    if undecided:
        raise ReviewError(
            "undecided",
            f"{len(undecided)} utterance(s) still undecided",
            {"utterance_ids": sorted(undecided)},
        )
    new_splits = {}
    for split, utts in session.corpus.splits.items():
        out = []
        for utt in utts:
            if utt.id in session.final:
                out.append(
                    replace(
                        utt,
                        intents=session.final[utt.id],
                        provenance="validated",
                    )
                )
            else:
                out.append(utt)
        new_splits[split] = out
    return session.corpus.with_splits(new_splits)


# --------------------------------------------------------------------------
# Decision log persistence


def append_log(path: str, decision: Decision) -> None:
    """Durably append one decision (flushed before returning)."""
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(decision.to_json() + "\n")
        fh.flush()


def read_log(path: str) -> list[Decision]:
    decisions = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                decisions.append(Decision.from_json(line))
    return decisions


def replay_session(corpus: Corpus, decisions: Sequence[Decision]) -> ReviewSession:
    """Rebuild the exact session state from the corpus and decision history."""
    session = ReviewSession(corpus)
    for decision in decisions:
        apply_decision(session, decision)
    return session
