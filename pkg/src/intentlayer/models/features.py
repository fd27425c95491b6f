"""Hashed sparse features for the linear reference back-end.

Utterance-level vectors aggregate word n-grams and character n-grams of
every token (character n-grams let truncated forms like "mer*" share
features with their full spelling). Token-level vectors use the token's
identity, a +-window of neighbor identities, and its character n-grams.
"""
from __future__ import annotations

import zlib
from typing import Sequence

import numpy as np
from scipy import sparse

from ..corpus.types import Utterance

PAD_LEFT = "<s>"
PAD_RIGHT = "</s>"


def _h(feature: str, dim: int) -> int:
    return zlib.crc32(feature.encode("utf-8")) & (dim - 1)


def _char_ngrams(token: str, orders: Sequence[int]) -> list[str]:
    bounded = f"^{token}$"
    grams = []
    for n in orders:
        if n <= 0:
            continue
        for i in range(max(0, len(bounded) - n + 1)):
            grams.append(bounded[i : i + n])
    return grams


def utterance_features(utt: Utterance, config) -> np.ndarray:
    """Hashed feature indices for the intent head (duplicates mean counts)."""
    if not utt.tokens:
        raise ValueError("cannot featurize an utterance without tokens")
    dim = config.feature_dim
    words = [t.surface.lower() for t in utt.tokens]
    feats = ["bias"]
    for order in config.ngram_orders:
        if order <= 0:
            continue
        for i in range(len(words) - order + 1):
            feats.append(f"w{order}={'|'.join(words[i : i + order])}")
    for w in words:
        for gram in _char_ngrams(w, config.char_ngram_orders):
            feats.append(f"c={gram}")
    return np.fromiter((_h(f, dim) for f in feats), dtype=np.int64, count=len(feats))


def token_features(utt: Utterance, config) -> list[np.ndarray]:
    """Per-token hashed feature indices for the slot head."""
    if not utt.tokens:
        raise ValueError("cannot featurize an utterance without tokens")
    dim = config.feature_dim
    words = [t.surface.lower() for t in utt.tokens]
    window = config.token_window
    padded = [PAD_LEFT] * window + words + [PAD_RIGHT] * window
    out = []
    for i in range(len(words)):
        feats = ["tbias"]
        for d in range(-window, window + 1):
            feats.append(f"t[{d}]={padded[i + window + d]}")
        for gram in _char_ngrams(words[i], config.char_ngram_orders):
            feats.append(f"tc={gram}")
        out.append(
            np.fromiter((_h(f, dim) for f in feats), dtype=np.int64, count=len(feats))
        )
    return out


def featurize(utt: Utterance, config) -> tuple[np.ndarray, list[np.ndarray]]:
    """Deterministic hashed sparse vectors for one utterance."""
    return utterance_features(utt, config), token_features(utt, config)


def _rows_to_csr(rows: list[np.ndarray], dim: int) -> sparse.csr_matrix:
    lengths = [len(r) for r in rows]
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    np.cumsum(lengths, out=indptr[1:])
    indices = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    data = np.ones(len(indices), dtype=np.float64)
    mat = sparse.csr_matrix((data, indices, indptr), shape=(len(rows), dim))
    mat.sum_duplicates()
    return mat


def utterance_matrix(utts: Sequence[Utterance], config) -> sparse.csr_matrix:
    return _rows_to_csr([utterance_features(u, config) for u in utts], config.feature_dim)


def token_matrix(
    utts: Sequence[Utterance], config
) -> tuple[sparse.csr_matrix, np.ndarray]:
    """Stacked per-token features and the row offset of each utterance."""
    rows: list[np.ndarray] = []
    offsets = np.zeros(len(utts) + 1, dtype=np.int64)
    for i, utt in enumerate(utts):
        rows.extend(token_features(utt, config))
        offsets[i + 1] = len(rows)
    return _rows_to_csr(rows, config.feature_dim), offsets
