"""Evaluation measures for multi-label intent classification and
BIO slot filling, as pure functions over gold/predicted annotations.

Conventions (fixed here, relied on by the acceptance oracles):

* Exact-match ratio (EMR): empty set == empty set counts as a match.
* Godbole accuracy: mean per-sample Jaccard overlap; 1.0 when both sets
  are empty, 0.0 when exactly one is.
* Sample-averaged P/R: an empty denominator scores 1.0 if the other set
  is empty too, else 0.0; F1 is 0.0 when P + R == 0.
* Macro averaging excludes labels absent from both gold and predictions;
  if no label remains the result is vacuously perfect (1.0).
* Span and multi-hot F1 are micro-averaged; with zero positives on both
  sides they are 1.0.
* CER and WER are corpus-level (S + D + I) / N over per-utterance minimal
  unit-cost alignments; both may exceed 1.0 through insertions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .align import edit_distance
from .corpus.spans import Tag, concept_sequence, extract_spans
from .corpus.types import Utterance

IntentSets = Sequence[frozenset]
TagSeqs = Sequence[Sequence[Tag]]


class MetricError(ValueError):
    """Inputs outside a metric's precondition."""


def _check_paired(gold: Sequence, pred: Sequence) -> None:
    if len(gold) != len(pred):
        raise MetricError(f"length mismatch: {len(gold)} gold vs {len(pred)} predicted")
    if len(gold) == 0:
        raise MetricError("empty input")


# --------------------------------------------------------------------------
# Intent-set metrics


def emr(gold: IntentSets, pred: IntentSets) -> float:
    """Exact match ratio: fraction of samples whose sets are equal."""
    _check_paired(gold, pred)
    return sum(g == p for g, p in zip(gold, pred)) / len(gold)


def godbole_accuracy(gold: IntentSets, pred: IntentSets) -> float:
    """Mean per-sample Jaccard overlap |gold n pred| / |gold u pred|."""
    _check_paired(gold, pred)
    total = 0.0
    for g, p in zip(gold, pred):
        union = g | p
        total += 1.0 if not union else len(g & p) / len(union)
    return total / len(gold)


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    def __iter__(self):
        return iter((self.precision, self.recall, self.f1))


def _safe_ratio(num: int, den: int, other_empty: bool) -> float:
    if den == 0:
        return 1.0 if other_empty else 0.0
    return num / den


def sample_prf(gold: IntentSets, pred: IntentSets) -> PRF:
    """Sample-averaged precision, recall, F1 over label sets."""
    _check_paired(gold, pred)
    p_total = r_total = f_total = 0.0
    for g, p in zip(gold, pred):
        inter = len(g & p)
        prec = _safe_ratio(inter, len(p), not g)
        rec = _safe_ratio(inter, len(g), not p)
        f1 = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
        p_total += prec
        r_total += rec
        f_total += f1
    n = len(gold)
    return PRF(p_total / n, r_total / n, f_total / n)


def macro_prf(gold: IntentSets, pred: IntentSets, schema: Sequence[str]) -> PRF:
    """Macro-averaged binary P/R/F1 with equal weight per schema label.

    Labels that occur in neither gold nor predictions are excluded from
    the mean so vacuous labels cannot inflate the score.
    """
    _check_paired(gold, pred)
    precisions, recalls, f1s = [], [], []
    for label in schema:
        tp = fp = fn = 0
        for g, p in zip(gold, pred):
            in_g, in_p = label in g, label in p
            tp += in_g and in_p
            fp += in_p and not in_g
            fn += in_g and not in_p
        if tp + fp + fn == 0:
            continue
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
        precisions.append(prec)
        recalls.append(rec)
        f1s.append(f1)
    if not precisions:
        return PRF(1.0, 1.0, 1.0)
    n = len(precisions)
    return PRF(sum(precisions) / n, sum(recalls) / n, sum(f1s) / n)


# --------------------------------------------------------------------------
# Tag-sequence metrics


def _check_tag_pairs(gold: TagSeqs, pred: TagSeqs) -> None:
    _check_paired(gold, pred)
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise MetricError(
                f"utterance {i}: {len(g)} gold tags vs {len(p)} predicted"
            )


def _micro_f1(tp: int, pred_total: int, gold_total: int) -> float:
    if pred_total == 0 and gold_total == 0:
        return 1.0
    prec = tp / pred_total if pred_total else 0.0
    rec = tp / gold_total if gold_total else 0.0
    return 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0


def slot_span_f1(gold: TagSeqs, pred: TagSeqs) -> float:
    """Micro F1 over exact-match spans (start, end, and concept all equal)."""
    _check_tag_pairs(gold, pred)
    tp = gold_total = pred_total = 0
    for g, p in zip(gold, pred):
        g_spans, p_spans = set(extract_spans(g)), set(extract_spans(p))
        tp += len(g_spans & p_spans)
        gold_total += len(g_spans)
        pred_total += len(p_spans)
    return _micro_f1(tp, pred_total, gold_total)


def multihot_f1(gold: TagSeqs, pred: TagSeqs, lexicon: Sequence[str]) -> float:
    """Micro F1 over per-utterance concept-presence vectors.

    Span multiplicity is ignored; each (utterance, concept) cell counts
    once. Concepts outside the lexicon are an error.
    """
    _check_tag_pairs(gold, pred)
    allowed = set(lexicon)
    tp = gold_total = pred_total = 0
    for g, p in zip(gold, pred):
        g_present = set(concept_sequence(g))
        p_present = set(concept_sequence(p))
        outside = (g_present | p_present) - allowed
        if outside:
            raise MetricError(f"concepts outside lexicon: {sorted(outside)}")
        tp += len(g_present & p_present)
        gold_total += len(g_present)
        pred_total += len(p_present)
    return _micro_f1(tp, pred_total, gold_total)


def cer(gold: TagSeqs, pred: TagSeqs) -> float:
    """Concept error rate: summed per-utterance minimal edit counts between
    concept sequences, divided by the total gold concept count."""
    _check_tag_pairs(gold, pred)
    edits = 0
    gold_total = 0
    for g, p in zip(gold, pred):
        g_seq, p_seq = concept_sequence(g), concept_sequence(p)
        edits += edit_distance(g_seq, p_seq)
        gold_total += len(g_seq)
    if gold_total == 0:
        raise MetricError("no gold concepts; concept error rate is undefined")
    return edits / gold_total


def wer(ref: Sequence[Sequence[str]], hyp: Sequence[Sequence[str]]) -> float:
    """Word error rate over aligned utterance pairs, unit costs."""
    _check_paired(ref, hyp)
    edits = 0
    ref_total = 0
    for r, h in zip(ref, hyp):
        edits += edit_distance(tuple(r), tuple(h))
        ref_total += len(r)
    if ref_total == 0:
        raise MetricError("empty reference")
    return edits / ref_total


# --------------------------------------------------------------------------
# Corpus-level metrics


def _intent_series(utts: Sequence[Utterance], side: str) -> list[frozenset]:
    out = []
    for utt in utts:
        if utt.intents is None:
            raise MetricError(f"{side} utterance {utt.id} has no intent annotation")
        out.append(utt.intents)
    return out


def _tag_series(utts: Sequence[Utterance], side: str) -> list[tuple[str, ...]]:
    out = []
    for utt in utts:
        tags = utt.tag_strings()
        if tags is None:
            raise MetricError(f"{side} utterance {utt.id} has no slot annotation")
        out.append(tags)
    return out


def sfa(gold: Sequence[Utterance], pred: Sequence[Utterance]) -> float:
    """Semantic frame accuracy: fraction of utterances with the intent set
    and every slot tag predicted exactly."""
    _check_paired(gold, pred)
    hits = 0
    for g, p in zip(gold, pred):
        if g.intents is None or p.intents is None:
            raise MetricError(f"utterance {g.id} lacks intent annotation")
        if len(g.tokens) != len(p.tokens):
            raise MetricError(f"utterance {g.id}: token counts differ")
        hits += g.intents == p.intents and g.tag_strings() == p.tag_strings()
    return hits / len(gold)


@dataclass(frozen=True)
class MetricsReport:
    emr: float
    accuracy_godbole: float
    intent_precision_sample: float
    intent_recall_sample: float
    intent_f1_sample: float
    intent_precision_macro: float
    intent_recall_macro: float
    intent_f1_macro: float
    slot_span_f1: float
    multihot_f1: float
    cer: float
    sfa: float
    wer: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "emr": self.emr,
            "accuracy_godbole": self.accuracy_godbole,
            "intent_precision_sample": self.intent_precision_sample,
            "intent_recall_sample": self.intent_recall_sample,
            "intent_f1_sample": self.intent_f1_sample,
            "intent_precision_macro": self.intent_precision_macro,
            "intent_recall_macro": self.intent_recall_macro,
            "intent_f1_macro": self.intent_f1_macro,
            "slot_span_f1": self.slot_span_f1,
            "multihot_f1": self.multihot_f1,
            "cer": self.cer,
            "sfa": self.sfa,
            "wer": self.wer,
        }

    def format_flat(self) -> str:
        lines = []
        for key, value in self.as_dict().items():
            if value is None:
                continue
            lines.append(f"{key}={value:.6f}")
        return "\n".join(lines)


def full_report(
    gold: Sequence[Utterance],
    pred: Sequence[Utterance],
    schema: Sequence[str],
) -> MetricsReport:
    """All metrics for one aligned (gold, predicted) utterance collection."""
    _check_paired(gold, pred)
    g_int = _intent_series(gold, "gold")
    p_int = _intent_series(pred, "predicted")
    g_tags = _tag_series(gold, "gold")
    p_tags = _tag_series(pred, "predicted")
    sample = sample_prf(g_int, p_int)
    macro = macro_prf(g_int, p_int, schema)
    lexicon = sorted(
        {c for tags in list(g_tags) + list(p_tags) for c in concept_sequence(tags)}
    )
    if any(concept_sequence(t) for t in g_tags):
        cer_value = cer(g_tags, p_tags)
    elif any(concept_sequence(t) for t in p_tags):
        raise MetricError("predicted concepts present but no gold concepts")
    else:
        cer_value = 0.0
    return MetricsReport(
        emr=emr(g_int, p_int),
        accuracy_godbole=godbole_accuracy(g_int, p_int),
        intent_precision_sample=sample.precision,
        intent_recall_sample=sample.recall,
        intent_f1_sample=sample.f1,
        intent_precision_macro=macro.precision,
        intent_recall_macro=macro.recall,
        intent_f1_macro=macro.f1,
        slot_span_f1=slot_span_f1(g_tags, p_tags),
        multihot_f1=multihot_f1(g_tags, p_tags, lexicon),
        cer=cer_value,
        sfa=sfa(gold, pred),
        wer=wer([u.surfaces for u in gold], [u.surfaces for u in pred]),
    )
