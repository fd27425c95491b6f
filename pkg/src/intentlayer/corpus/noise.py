"""Word-level corpus noising: a desk-scale stand-in for recognizer output.

Applies substitutions, deletions, and insertions to token sequences at a
target word error rate. Slot repair: a deleted token drops its tag, an
inserted token is tagged O, a substituted token keeps its tag.
"""
from __future__ import annotations

import random
from dataclasses import replace

from ..align import edit_distance
from .types import Corpus, CorpusError, SlotTag, Token, Utterance

_OPS = ("sub", "del", "ins")


def inject_word_errors(
    corpus: Corpus, target_wer: float, seed: int
) -> tuple[Corpus, float]:
    """Noise the corpus to roughly ``target_wer`` and return the achieved rate.

    Deterministic per seed. The achieved rate is the corpus-level edit
    distance between original and noised token sequences divided by the
    original token count; for corpora of >= 5000 tokens it lands within
    +-0.01 of the target.
    """
    if not (0.0 <= target_wer <= 0.9):
        raise CorpusError(f"target word error rate {target_wer} outside [0, 0.9]")
    all_utts = list(corpus.utterances())
    total_tokens = sum(len(u.tokens) for u in all_utts)
    if total_tokens == 0:
        raise CorpusError("cannot noise an empty corpus")
    k = round(target_wer * total_tokens)
    if k == 0:
        return corpus, 0.0

    vocab = sorted({t.surface for u in all_utts for t in u.tokens})
    rng = random.Random(seed)

    # Plan one operation per chosen original token position.
    chosen = sorted(rng.sample(range(total_tokens), k))
    plan: dict[int, tuple[str, str]] = {}
    for pos in chosen:
        op = _OPS[rng.randrange(3)] if len(vocab) >= 2 else _OPS[1 + rng.randrange(2)]
        word = vocab[rng.randrange(len(vocab))] if op != "del" else ""
        plan[pos] = (op, word)

    # Never delete every token of an utterance (utterances stay non-empty).
    offset = 0
    repair_rng = random.Random(seed + 1)
    for utt in all_utts:
        positions = range(offset, offset + len(utt.tokens))
        if all(plan.get(p, ("", ""))[0] == "del" for p in positions):
            first = positions[0]
            plan[first] = ("sub", vocab[repair_rng.randrange(len(vocab))])
        offset += len(utt.tokens)

    new_splits: dict[str, list[Utterance]] = {}
    offset = 0
    for split, utts in corpus.splits.items():
        out = []
        for utt in utts:
            out.append(_apply_plan(utt, plan, offset))
            offset += len(utt.tokens)
        new_splits[split] = out
    noised = corpus.with_splits(new_splits)

    distance = 0
    for before, after in zip(corpus.utterances(), noised.utterances()):
        distance += edit_distance(before.surfaces, after.surfaces)
    return noised, distance / total_tokens


def _substitute_surface(word: str, original: str) -> str:
    # A substitution must actually change the token.
    return word if word != original else original + "'"


def _apply_plan(
    utt: Utterance, plan: dict[int, tuple[str, str]], offset: int
) -> Utterance:
    if not any((offset + i) in plan for i in range(len(utt.tokens))):
        return utt
    tokens: list[Token] = []
    slots: list[SlotTag] | None = [] if utt.slots is not None else None
    for i, token in enumerate(utt.tokens):
        op, word = plan.get(offset + i, ("keep", ""))
        if op == "del":
            continue
        if op == "sub":
            tokens.append(Token(_substitute_surface(word, token.surface)))
        else:
            tokens.append(token)
        if slots is not None:
            slots.append(utt.slots[i])
        if op == "ins":
            tokens.append(Token(word))
            if slots is not None:
                slots.append(SlotTag("O"))
    return replace(
        utt,
        tokens=tuple(tokens),
        slots=None if slots is None else tuple(slots),
    )
