"""Minimal unit-cost edit distance (Levenshtein) over arbitrary sequences.

Tie-breaking between substitution, deletion, and insertion on equal cost
does not affect the total count, which is all the error-rate metrics use.
"""
from __future__ import annotations

from typing import Sequence


def edit_distance(ref: Sequence, hyp: Sequence) -> int:
    if not ref:
        return len(hyp)
    if not hyp:
        return len(ref)
    previous = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, 1):
        current = [i] + [0] * len(hyp)
        for j, h in enumerate(hyp, 1):
            sub = previous[j - 1] + (r != h)
            current[j] = min(sub, previous[j] + 1, current[j - 1] + 1)
        previous = current
    return previous[-1]
