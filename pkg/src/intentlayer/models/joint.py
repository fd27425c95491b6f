"""Joint intent + slot reference model: a linear model over hashed sparse
features with a sigmoid multi-label intent head and a per-token softmax
slot head, trained by mini-batch SGD with dev-EMR early stopping.

The batch objective is

    loss = iw * mean_samples( sum_labels BCE(score, y) )
         + sw * mean_tokens( CE(scores, tag) )
         + 0.5 * reg * (||W_intent||^2 + ||W_slot||^2)

with iw/sw the configured task weights. Utterances without slot
annotations contribute the intent term only. L2 decay is applied once per
epoch as the composition of the per-batch factors; biases are not decayed.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.special import expit

from ..corpus.types import SlotTag, Utterance
from ..metrics import MetricsReport, emr, full_report
from .features import featurize, token_matrix, utterance_matrix

#: Learning rate commonly used when the back-end is a fine-tuned
#: transformer; kept for reference, the linear model needs a larger step.
TRANSFORMER_REFERENCE_LR = 1e-5


class ModelError(ValueError):
    pass


class SchemaMismatch(ModelError):
    pass


@dataclass(frozen=True)
class JointModelConfig:
    feature_dim: int = 2**17
    ngram_orders: tuple[int, ...] = (1, 2)
    char_ngram_orders: tuple[int, ...] = (3, 4)
    intent_threshold: float = 0.5
    token_window: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.feature_dim < 2 or self.feature_dim & (self.feature_dim - 1):
            raise ModelError(f"feature_dim {self.feature_dim} is not a power of two")
        if not (0.0 < self.intent_threshold < 1.0):
            raise ModelError("intent_threshold must lie strictly inside (0, 1)")
        if self.token_window < 0:
            raise ModelError("token_window must be >= 0")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1  # linear-model scale; cf. TRANSFORMER_REFERENCE_LR
    batch_size: int = 16
    max_epochs: int = 1000
    patience: int = 20
    regularization: float = 1e-4  # L2, standing in for the dropout a neural back-end would use
    intent_loss_weight: float = 1.0
    slot_loss_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ModelError("learning_rate must be positive")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ModelError("batch_size, max_epochs and patience must be >= 1")
        if self.patience >= self.max_epochs:
            raise ModelError("patience must be smaller than max_epochs")
        if self.regularization < 0:
            raise ModelError("regularization must be >= 0")


@dataclass(frozen=True)
class LabelSchema:
    intent_labels: tuple[str, ...]
    slot_tags: tuple[str, ...]
    scoring: str

    @classmethod
    def from_utterances(
        cls, utts: Iterable[Utterance], scoring: str
    ) -> "LabelSchema":
        intents: set[str] = set()
        tags: set[str] = {"O"}
        for utt in utts:
            if utt.intents:
                intents.update(utt.intents)
            for tag in utt.slots or ():
                tags.add(str(tag))
        return cls(tuple(sorted(intents)), tuple(sorted(tags)), scoring)

    def fingerprint(self) -> str:
        blob = json.dumps(
            [list(self.intent_labels), list(self.slot_tags), self.scoring]
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class Weights:
    w_intent: np.ndarray  # (D, L)
    b_intent: np.ndarray  # (L,)
    w_slot: np.ndarray  # (D, T)
    b_slot: np.ndarray  # (T,)

    @classmethod
    def zeros(cls, dim: int, n_intents: int, n_tags: int) -> "Weights":
        return cls(
            np.zeros((dim, n_intents)),
            np.zeros(n_intents),
            np.zeros((dim, n_tags)),
            np.zeros(n_tags),
        )

    def copy(self) -> "Weights":
        return Weights(
            self.w_intent.copy(),
            self.b_intent.copy(),
            self.w_slot.copy(),
            self.b_slot.copy(),
        )


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    dev_emr: Optional[float]


@dataclass
class TrainedModel:
    model_config: JointModelConfig
    train_config: TrainConfig
    schema: LabelSchema
    weights: Weights
    training_log: tuple[EpochRecord, ...] = ()
    best_epoch: int = 0
    warnings: tuple[str, ...] = ()


def select_intents(
    probabilities: Sequence[float], labels: Sequence[str], threshold: float = 0.5
) -> frozenset[str]:
    """The intent decision layer: keep exactly {label : p > threshold}.

    The comparison is strict, so a probability equal to the threshold is
    excluded; an empty set is a legal outcome.
    """
    return frozenset(l for l, p in zip(labels, probabilities) if p > threshold)


# --------------------------------------------------------------------------
# Loss (reference implementation, also used by the gradient checks)


def _bce_from_logits(scores: np.ndarray, y: np.ndarray) -> np.ndarray:
    # max(s,0) - s*y + log(1 + exp(-|s|)), elementwise and stable
    return np.maximum(scores, 0.0) - scores * y + np.log1p(np.exp(-np.abs(scores)))


def _log_softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def loss_and_grads(
    weights: Weights,
    x_utt: sparse.spmatrix,
    y_intent: np.ndarray,
    x_tok: Optional[sparse.spmatrix],
    y_tok: Optional[np.ndarray],
    config: TrainConfig,
) -> tuple[float, Weights]:
    """Exact batch loss and dense gradients (gradient-check reference)."""
    n = x_utt.shape[0]
    scores = x_utt @ weights.w_intent + weights.b_intent
    probs = expit(scores)
    intent_loss = float(_bce_from_logits(scores, y_intent).sum()) / n
    d_scores = (probs - y_intent) * (config.intent_loss_weight / n)
    g_w_intent = (x_utt.T @ d_scores) + config.regularization * weights.w_intent
    g_b_intent = d_scores.sum(axis=0)

    slot_loss = 0.0
    g_w_slot = config.regularization * weights.w_slot
    g_b_slot = np.zeros_like(weights.b_slot)
    if x_tok is not None and x_tok.shape[0] > 0:
        m = x_tok.shape[0]
        tok_scores = x_tok @ weights.w_slot + weights.b_slot
        log_p = _log_softmax(tok_scores)
        slot_loss = float(-log_p[np.arange(m), y_tok].sum()) / m
        d_tok = np.exp(log_p)
        d_tok[np.arange(m), y_tok] -= 1.0
        d_tok *= config.slot_loss_weight / m
        g_w_slot = g_w_slot + (x_tok.T @ d_tok)
        g_b_slot = d_tok.sum(axis=0)

    reg_term = 0.5 * config.regularization * (
        float((weights.w_intent**2).sum()) + float((weights.w_slot**2).sum())
    )
    loss = (
        config.intent_loss_weight * intent_loss
        + config.slot_loss_weight * slot_loss
        + reg_term
    )
    grads = Weights(np.asarray(g_w_intent), g_b_intent, np.asarray(g_w_slot), g_b_slot)
    return loss, grads


# --------------------------------------------------------------------------
# Training


def _encode_intents(
    utts: Sequence[Utterance], labels: Sequence[str]
) -> tuple[np.ndarray, np.ndarray]:
    """Multi-hot matrix plus a per-row flag for labels outside the schema."""
    index = {l: i for i, l in enumerate(labels)}
    y = np.zeros((len(utts), len(labels)))
    outside = np.zeros(len(utts), dtype=bool)
    for i, utt in enumerate(utts):
        for label in utt.intents or ():
            j = index.get(label)
            if j is None:
                outside[i] = True
            else:
                y[i, j] = 1.0
    return y, outside


def _encode_tags(
    utts: Sequence[Utterance], tags: Sequence[str]
) -> np.ndarray:
    index = {t: i for i, t in enumerate(tags)}
    out = []
    for utt in utts:
        for tag in utt.slots or ():
            key = str(tag)
            if key not in index:
                raise SchemaMismatch(f"slot tag {key!r} outside the model schema")
            out.append(index[key])
    return np.asarray(out, dtype=np.int64)


def _sparse_update(
    w: np.ndarray, x_rows: sparse.csr_matrix, d_scores: np.ndarray, lr: float
) -> None:
    coo = x_rows.tocoo()
    if len(coo.data) == 0:
        return
    np.add.at(w, coo.col, (-lr) * (d_scores[coo.row] * coo.data[:, None]))


def train_joint(
    train: Sequence[Utterance],
    dev: Sequence[Utterance],
    mconfig: JointModelConfig,
    tconfig: TrainConfig,
    *,
    schema: Optional[LabelSchema] = None,
    init: Optional[Weights] = None,
    early_stop: bool = True,
    scoring: str = "relax",
) -> TrainedModel:
    """Train the joint model; returns the best-dev-EMR snapshot.

    Stops when ``max_epochs`` is reached or dev EMR has not strictly
    improved for ``patience`` epochs. With an empty dev set early stopping
    is disabled and a warning is recorded. Deterministic per
    (seed, data, config). Utterances must carry intent annotations; slot
    annotations are optional per utterance (intent-only loss then).
    """
    if not train:
        raise ModelError("training set is empty")
    for utt in train:
        if utt.intents is None:
            raise ModelError(f"training utterance {utt.id} has no intent annotation")
    warnings: list[str] = []
    if schema is None:
        schema = LabelSchema.from_utterances(list(train) + list(dev), scoring)

    labels, tags = schema.intent_labels, schema.slot_tags
    x_utt = utterance_matrix(train, mconfig)
    y_int, outside = _encode_intents(train, labels)
    if outside.any():
        raise SchemaMismatch("training intents outside the provided schema")
    slotted = [u.slots is not None for u in train]
    slotted_utts = [u for u in train if u.slots is not None]
    x_tok, tok_offsets = token_matrix(slotted_utts, mconfig) if slotted_utts else (None, None)
    y_tok = _encode_tags(slotted_utts, tags) if slotted_utts else None
    # map train index -> position in the slotted arrays
    slot_pos = np.cumsum(slotted) - 1

    dev_probs_x = utterance_matrix(dev, mconfig) if len(dev) else None
    dev_gold = [u.intents if u.intents is not None else frozenset() for u in dev]
    if early_stop and not len(dev):
        warnings.append("empty dev set: early stopping disabled")
        early_stop = False

    rng = np.random.default_rng(mconfig.seed)
    weights = init.copy() if init is not None else Weights.zeros(
        mconfig.feature_dim, len(labels), len(tags)
    )
    lr = tconfig.learning_rate
    n = len(train)
    n_batches = math.ceil(n / tconfig.batch_size)
    decay = (1.0 - lr * tconfig.regularization) ** n_batches if tconfig.regularization else 1.0

    log: list[EpochRecord] = []
    # Snapshot advances on ties so plateaus keep refining the slot head;
    # the patience counter resets only on strict dev-EMR improvement.
    best = (-1.0, 0, weights.copy())  # (dev EMR, epoch, snapshot)
    best_emr = -1.0
    stale = 0
    for epoch in range(1, tconfig.max_epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for b in range(n_batches):
            batch = order[b * tconfig.batch_size : (b + 1) * tconfig.batch_size]
            xb = x_utt[batch]
            scores = xb @ weights.w_intent + weights.b_intent
            yb = y_int[batch]
            epoch_loss += float(_bce_from_logits(scores, yb).sum()) / len(batch)
            d_scores = (expit(scores) - yb) * (tconfig.intent_loss_weight / len(batch))
            _sparse_update(weights.w_intent, xb, d_scores, lr)
            weights.b_intent -= lr * d_scores.sum(axis=0)

            if x_tok is not None:
                rows: list[np.ndarray] = []
                tok_targets: list[np.ndarray] = []
                for i in batch:
                    if slotted[i]:
                        s = slot_pos[i]
                        lo, hi = tok_offsets[s], tok_offsets[s + 1]
                        rows.append(np.arange(lo, hi))
                        tok_targets.append(y_tok[lo:hi])
                if rows:
                    row_idx = np.concatenate(rows)
                    xt = x_tok[row_idx]
                    yt = np.concatenate(tok_targets)
                    tok_scores = xt @ weights.w_slot + weights.b_slot
                    log_p = _log_softmax(tok_scores)
                    m = len(row_idx)
                    epoch_loss += float(-log_p[np.arange(m), yt].sum()) / m
                    d_tok = np.exp(log_p)
                    d_tok[np.arange(m), yt] -= 1.0
                    d_tok *= tconfig.slot_loss_weight / m
                    _sparse_update(weights.w_slot, xt, d_tok, lr)
                    weights.b_slot -= lr * d_tok.sum(axis=0)
        if decay != 1.0:
            weights.w_intent *= decay
            weights.w_slot *= decay

        dev_emr = None
        if dev_probs_x is not None:
            probs = expit(dev_probs_x @ weights.w_intent + weights.b_intent)
            preds = [
                select_intents(row, labels, mconfig.intent_threshold) for row in probs
            ]
            dev_emr = emr(dev_gold, preds)
        log.append(EpochRecord(epoch, epoch_loss / n_batches, dev_emr))

        if dev_emr is not None and dev_emr >= best[0]:
            best = (dev_emr, epoch, weights.copy())
        if dev_emr is not None and dev_emr > best_emr:
            best_emr = dev_emr
            stale = 0
        else:
            stale += 1
        if early_stop and stale >= tconfig.patience:
            break

    if dev_probs_x is not None and best[1] > 0:
        final_weights, best_epoch = best[2], best[1]
    else:
        final_weights, best_epoch = weights, len(log)
    return TrainedModel(
        model_config=mconfig,
        train_config=tconfig,
        schema=schema,
        weights=final_weights,
        training_log=tuple(log),
        best_epoch=best_epoch,
        warnings=tuple(warnings),
    )


# --------------------------------------------------------------------------
# Prediction and evaluation


def intent_probabilities(model: TrainedModel, x: sparse.spmatrix) -> np.ndarray:
    return expit(x @ model.weights.w_intent + model.weights.b_intent)


def predict_intents(
    model: TrainedModel,
    utts: Sequence[Utterance],
    x: Optional[sparse.spmatrix] = None,
) -> list[frozenset[str]]:
    """Batch intent prediction; pass a prebuilt feature matrix to avoid
    re-featurizing a pool that is scored repeatedly."""
    if x is None:
        x = utterance_matrix(utts, model.model_config)
    probs = intent_probabilities(model, x)
    thr = model.model_config.intent_threshold
    return [select_intents(row, model.schema.intent_labels, thr) for row in probs]


def predict_tags(
    model: TrainedModel, utts: Sequence[Utterance]
) -> list[tuple[str, ...]]:
    x_tok, offsets = token_matrix(utts, model.model_config)
    scores = x_tok @ model.weights.w_slot + model.weights.b_slot
    picks = np.asarray(scores).argmax(axis=1)
    tags = model.schema.slot_tags
    out = []
    for i in range(len(utts)):
        lo, hi = offsets[i], offsets[i + 1]
        out.append(tuple(tags[j] for j in picks[lo:hi]))
    return out


def predict(
    model: TrainedModel, utt: Utterance
) -> tuple[frozenset[str], tuple[str, ...]]:
    """Joint prediction for one utterance: (intent set, raw BIO tags).

    Tags are returned unrepaired; span extraction applies the repair
    convention downstream.
    """
    utt_idx, tok_idx = featurize(utt, model.model_config)
    w = model.weights
    scores = w.w_intent[utt_idx].sum(axis=0) + w.b_intent
    intents = select_intents(
        expit(scores), model.schema.intent_labels, model.model_config.intent_threshold
    )
    tags = []
    for idx in tok_idx:
        tok_scores = w.w_slot[idx].sum(axis=0) + w.b_slot
        tags.append(model.schema.slot_tags[int(tok_scores.argmax())])
    return intents, tuple(tags)


def check_schema(model: TrainedModel, utts: Sequence[Utterance]) -> None:
    """Raise SchemaMismatch when gold annotations use labels or tags the
    model cannot express."""
    labels = set(model.schema.intent_labels)
    tags = set(model.schema.slot_tags)
    for utt in utts:
        extra = (utt.intents or frozenset()) - labels
        if extra:
            raise SchemaMismatch(
                f"utterance {utt.id}: intents {sorted(extra)} outside model schema"
            )
        for tag in utt.tag_strings() or ():
            if tag not in tags:
                raise SchemaMismatch(
                    f"utterance {utt.id}: slot tag {tag!r} outside model schema"
                )


def predicted_corpus(
    model: TrainedModel, utts: Sequence[Utterance]
) -> list[Utterance]:
    intent_sets = predict_intents(model, utts)
    tag_seqs = predict_tags(model, utts)
    out = []
    for utt, intents, tags in zip(utts, intent_sets, tag_seqs):
        slots = tuple(SlotTag.from_string(t, model.schema.scoring) for t in tags)
        out.append(replace(utt, intents=intents, slots=slots, provenance="pseudo"))
    return out


def evaluate(
    model: TrainedModel,
    utts: Sequence[Utterance],
    schema_labels: Optional[Sequence[str]] = None,
) -> MetricsReport:
    """Predict the split and delegate to the metric suite."""
    if not utts:
        raise ModelError("cannot evaluate an empty split")
    check_schema(model, utts)
    preds = predicted_corpus(model, utts)
    labels = schema_labels if schema_labels is not None else model.schema.intent_labels
    return full_report(list(utts), preds, labels)
