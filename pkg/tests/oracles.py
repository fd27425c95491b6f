"""Independent reference implementations used to cross-check the metric
suite. These deliberately take different computation paths: edit distance
by exhaustive enumeration of monotone alignments, set metrics by literal
per-definition recounting."""
from itertools import combinations

from intentlayer.corpus.spans import concept_sequence, extract_spans


def exhaustive_edit_distance(ref, hyp):
    """Minimum edit cost over every monotone alignment, by enumeration.

    An alignment picks k positions in ref and k in hyp (in order); matched
    pairs cost 1 when the symbols differ (substitution), unmatched ref
    positions are deletions, unmatched hyp positions insertions.
    """
    m, n = len(ref), len(hyp)
    best = m + n  # empty alignment: delete all, insert all
    for k in range(1, min(m, n) + 1):
        for ref_pos in combinations(range(m), k):
            for hyp_pos in combinations(range(n), k):
                subs = sum(ref[i] != hyp[j] for i, j in zip(ref_pos, hyp_pos))
                cost = subs + (m - k) + (n - k)
                if cost < best:
                    best = cost
    return best


def recount_emr(gold, pred):
    hits = 0
    for g, p in zip(gold, pred):
        if set(g) == set(p):
            hits += 1
    return hits / len(gold)


def recount_godbole(gold, pred):
    total = 0.0
    for g, p in zip(gold, pred):
        g, p = set(g), set(p)
        if not g and not p:
            total += 1.0
        else:
            total += len(g & p) / len(g | p)
    return total / len(gold)


def recount_sample_prf(gold, pred):
    ps, rs, fs = [], [], []
    for g, p in zip(gold, pred):
        g, p = set(g), set(p)
        inter = len(g & p)
        if len(p) == 0:
            prec = 1.0 if len(g) == 0 else 0.0
        else:
            prec = inter / len(p)
        if len(g) == 0:
            rec = 1.0 if len(p) == 0 else 0.0
        else:
            rec = inter / len(g)
        f1 = 0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec)
        ps.append(prec)
        rs.append(rec)
        fs.append(f1)
    n = len(gold)
    return sum(ps) / n, sum(rs) / n, sum(fs) / n


def recount_macro_prf(gold, pred, schema):
    ps, rs, fs = [], [], []
    for label in schema:
        tp = sum(1 for g, p in zip(gold, pred) if label in g and label in p)
        fp = sum(1 for g, p in zip(gold, pred) if label not in g and label in p)
        fn = sum(1 for g, p in zip(gold, pred) if label in g and label not in p)
        if tp == 0 and fp == 0 and fn == 0:
            continue
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec)
        ps.append(prec)
        rs.append(rec)
        fs.append(f1)
    if not ps:
        return 1.0, 1.0, 1.0
    return sum(ps) / len(ps), sum(rs) / len(rs), sum(fs) / len(fs)


def recount_span_f1(gold_tags, pred_tags):
    tp = fp = fn = 0
    for g, p in zip(gold_tags, pred_tags):
        g_spans = set(extract_spans(g))
        p_spans = set(extract_spans(p))
        tp += len(g_spans & p_spans)
        fp += len(p_spans - g_spans)
        fn += len(g_spans - p_spans)
    if tp + fp + fn == 0:
        return 1.0
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    return 0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec)


def recount_multihot_f1(gold_tags, pred_tags, lexicon):
    tp = fp = fn = 0
    for g, p in zip(gold_tags, pred_tags):
        g_set = set(concept_sequence(g))
        p_set = set(concept_sequence(p))
        for concept in lexicon:
            in_g, in_p = concept in g_set, concept in p_set
            tp += in_g and in_p
            fp += in_p and not in_g
            fn += in_g and not in_p
    if tp + fp + fn == 0:
        return 1.0
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    return 0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec)
