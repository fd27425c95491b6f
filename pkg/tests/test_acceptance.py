"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest -s tests/test_acceptance.py`` to see them
live). Tolerances are pinned here and nowhere else."""
import functools
import random
import time

import numpy as np
import pytest

from intentlayer.align import edit_distance
from intentlayer.corpus import (
    Corpus,
    compute_stats,
    concept_sequence,
    generate_synthetic,
    inject_word_errors,
    make_template,
    strip_intents,
)
from intentlayer.metrics import (
    emr,
    godbole_accuracy,
    macro_prf,
    multihot_f1,
    sample_prf,
    sfa,
    slot_span_f1,
    wer,
)
from intentlayer.models import (
    JointModelConfig,
    TrainConfig,
    Weights,
    evaluate,
    loss_and_grads,
    predict_tags,
    select_intents,
    train_joint,
)
from intentlayer.review import Decision, ReviewSession, apply_decision, export_final, progress, replay_session
from intentlayer.corpus import serialize_corpus
from intentlayer.tritrain import TriTrainConfig, baseline_compare, init_triad, run

from .conftest import random_intent_sets, random_tag_sequence, utt
from .oracles import (
    exhaustive_edit_distance,
    recount_emr,
    recount_godbole,
    recount_macro_prf,
    recount_multihot_f1,
    recount_sample_prf,
    recount_span_f1,
)


def criterion(name):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"\n[ACCEPTANCE] FAIL  {name}", flush=True)
                raise
            print(f"\n[ACCEPTANCE] PASS  {name}", flush=True)
            return result

        return wrapper

    return deco


# ---------------------------------------------------------------------------
# Metric oracle equivalence


@criterion("metric-oracle-equivalence (cer/wer vs exhaustive search, 1000 pairs)")
def test_edit_metrics_match_exhaustive_oracle():
    from intentlayer.metrics import cer

    rng = random.Random(20240501)
    alphabet = ("a", "b", "c")
    start = time.monotonic()
    for _ in range(1000):
        ref = [rng.choice(alphabet) for _ in range(rng.randint(0, 6))]
        hyp = [rng.choice(alphabet) for _ in range(rng.randint(0, 6))]
        oracle = exhaustive_edit_distance(ref, hyp)
        assert edit_distance(ref, hyp) == oracle
        # wer over a single utterance pair
        if ref:
            assert wer([ref], [hyp]) == oracle / len(ref)
        # cer over one aligned pair: realize the symbol sequences as
        # one-token spans padded with O to a common length
        if ref:
            width = max(len(ref), len(hyp))
            gold = [f"B-{s}" for s in ref] + ["O"] * (width - len(ref))
            pred = [f"B-{s}" for s in hyp] + ["O"] * (width - len(hyp))
            assert cer([gold], [pred]) == oracle / len(ref)
    assert time.monotonic() - start < 10.0


# ---------------------------------------------------------------------------
# Metric recount equivalence


@criterion("metric-recount-equivalence (6 metrics, 500 random corpora, 1e-12)")
def test_set_metrics_match_bruteforce_recounts():
    rng = random.Random(7_654_321)
    labels = ("booking", "greeting", "thanking", "information", "negative_answer")
    concepts = ("city", "date", "price")
    start = time.monotonic()
    for _ in range(500):
        n = rng.randint(1, 20)
        gold_sets = random_intent_sets(rng, n, labels)
        pred_sets = random_intent_sets(rng, n, labels)
        assert emr(gold_sets, pred_sets) == pytest.approx(
            recount_emr(gold_sets, pred_sets), abs=1e-12
        )
        assert godbole_accuracy(gold_sets, pred_sets) == pytest.approx(
            recount_godbole(gold_sets, pred_sets), abs=1e-12
        )
        assert tuple(sample_prf(gold_sets, pred_sets)) == pytest.approx(
            recount_sample_prf(gold_sets, pred_sets), abs=1e-12
        )
        assert tuple(macro_prf(gold_sets, pred_sets, labels)) == pytest.approx(
            recount_macro_prf(gold_sets, pred_sets, labels), abs=1e-12
        )
        gold_tags = [random_tag_sequence(rng, rng.randint(1, 7), concepts) for _ in range(n)]
        pred_tags = [random_tag_sequence(rng, len(g), concepts) for g in gold_tags]
        assert slot_span_f1(gold_tags, pred_tags) == pytest.approx(
            recount_span_f1(gold_tags, pred_tags), abs=1e-12
        )
        assert multihot_f1(gold_tags, pred_tags, concepts) == pytest.approx(
            recount_multihot_f1(gold_tags, pred_tags, concepts), abs=1e-12
        )
    assert time.monotonic() - start < 30.0


# ---------------------------------------------------------------------------
# Review arithmetic at annotation-campaign scale


@criterion("review-arithmetic (3122 of 16005 changed reports 19.51%)")
def test_campaign_scale_erroneous_ratio():
    utts = [
        utt(f"p{i:05d}", "oui merci", "O O", ["booking"], provenance="pseudo")
        for i in range(16005)
    ]
    session = ReviewSession(Corpus("campaign", "relax", {"train": utts}))
    for i in range(16005):
        if i < 3122:
            decision = Decision(
                f"p{i:05d}", {"booking": "invalidate"}, frozenset({"greeting"}), "ann", "t"
            )
        else:
            decision = Decision(f"p{i:05d}", {}, None, "ann", "t")
        apply_decision(session, decision)
    report = progress(session)
    assert report.total_pseudo == 16005
    assert report.erroneous == 3122
    assert report.erroneous_percent == 19.51


# ---------------------------------------------------------------------------
# Distribution table fixtures


SEED_TABLE = {
    "cancellation": (15, 1, 1, 17),
    "incomprehension": (6, 1, 4, 11),
    "discourse_marker": (38, 6, 5, 49),
    "modification": (7, 1, 1, 9),
    "thanking": (47, 5, 6, 58),
    "information": (114, 11, 19, 144),
    "affirmative_answer": (392, 42, 52, 486),
    "indecisive_answer": (9, 1, 3, 13),
    "negative_answer": (362, 35, 57, 454),
    "booking": (352, 30, 48, 430),
    "greeting": (43, 8, 6, 57),
}

FINAL_TABLE = {
    "cancellation": (32, 1, 15, 48),
    "incomprehension": (273, 30, 94, 397),
    "discourse_marker": (282, 40, 113, 435),
    "modification": (115, 10, 31, 156),
    "thanking": (713, 100, 200, 1013),
    "information": (1611, 159, 401, 2171),
    "affirmative_answer": (4325, 419, 1190, 5934),
    "indecisive_answer": (37, 5, 9, 51),
    "negative_answer": (1315, 88, 344, 1747),
    "booking": (5437, 522, 1410, 7369),
    "greeting": (717, 101, 206, 1024),
}


@criterion("distribution-fixtures (seed-subset and final tables row-for-row)")
def test_distribution_fixtures_reproduce_reference_tables(
    seed_subset_corpus, final_annotation_corpus
):
    for corpus, table in (
        (seed_subset_corpus, SEED_TABLE),
        (final_annotation_corpus, FINAL_TABLE),
    ):
        stats = compute_stats(corpus)
        for label, (train, dev, test, total) in table.items():
            counts = stats.intent_counts[label]
            assert (counts["train"], counts["dev"], counts["test"]) == (train, dev, test)
            assert stats.intent_total(label) == total
    assert FINAL_TABLE["booking"][3] == 7369
    assert SEED_TABLE["cancellation"] == (15, 1, 1, 17)


# ---------------------------------------------------------------------------
# Joint model sanity


@criterion("joint-model-sanity (EMR>=0.95, span F1>=0.90, <60s, 3/3 seeds)")
def test_joint_model_reaches_targets_on_synthetic_corpus():
    corpus = generate_synthetic(make_template(dev_size=200, test_size=200), 1000, seed=42)
    train = list(corpus.splits["train"])
    dev = list(corpus.splits["dev"])
    test = list(corpus.splits["test"])
    for seed in (1, 2, 3):
        start = time.monotonic()
        model = train_joint(
            train,
            dev,
            JointModelConfig(feature_dim=2**15, seed=seed),
            TrainConfig(max_epochs=200, patience=20),
        )
        report = evaluate(model, test)
        elapsed = time.monotonic() - start
        assert elapsed < 60.0, f"seed {seed} took {elapsed:.1f}s"
        assert report.emr >= 0.95, f"seed {seed}: EMR {report.emr:.3f}"
        assert report.slot_span_f1 >= 0.90, f"seed {seed}: span F1 {report.slot_span_f1:.3f}"


# ---------------------------------------------------------------------------
# Gradient check


@criterion("gradient-check (20 random small models, rel err < 1e-4)")
def test_gradients_match_central_differences():
    import scipy.sparse as sp

    config = TrainConfig(regularization=0.01, max_epochs=2, patience=1)
    rng = np.random.default_rng(12345)
    for _ in range(20):
        dim, n_labels, n_tags = 64, rng.integers(2, 5), rng.integers(2, 6)
        n, m = int(rng.integers(2, 7)), int(rng.integers(2, 10))
        x_utt = sp.random(n, dim, density=0.25, random_state=rng, format="csr")
        y = (rng.random((n, n_labels)) > 0.5).astype(float)
        x_tok = sp.random(m, dim, density=0.25, random_state=rng, format="csr")
        y_tok = rng.integers(0, n_tags, size=m)
        weights = Weights(
            rng.normal(size=(dim, n_labels)),
            rng.normal(size=n_labels),
            rng.normal(size=(dim, n_tags)),
            rng.normal(size=n_tags),
        )
        _, grads = loss_and_grads(weights, x_utt, y, x_tok, y_tok, config)
        eps = 1e-6
        for name in ("w_intent", "b_intent", "w_slot", "b_slot"):
            arr = getattr(weights, name)
            g = getattr(grads, name)
            for pos in rng.choice(arr.size, size=min(8, arr.size), replace=False):
                idx = np.unravel_index(pos, arr.shape)
                orig = arr[idx]
                arr[idx] = orig + eps
                up, _ = loss_and_grads(weights, x_utt, y, x_tok, y_tok, config)
                arr[idx] = orig - eps
                down, _ = loss_and_grads(weights, x_utt, y, x_tok, y_tok, config)
                arr[idx] = orig
                numeric = (up - down) / (2 * eps)
                denom = max(abs(numeric), abs(g[idx]), 1e-8)
                assert abs(numeric - g[idx]) / denom < 1e-4


# ---------------------------------------------------------------------------
# Tri-training directional claim


def _low_resource_setting(seed):
    cfg = make_template(
        num_intents=6,
        cues_per_intent=20,
        opaque_vocab=True,
        vocab_seed=99,
        combination_prob=0.2,
        dev_size=100,
        test_size=400,
    )
    corpus = generate_synthetic(cfg, 5200, seed=1000 + seed)
    train = list(corpus.splits["train"])
    labeled = train[:200]
    unlabeled = list(
        strip_intents(
            corpus.with_splits({"train": train[200:5200]}), keep_slots=False
        ).splits["train"]
    )
    return labeled, list(corpus.splits["dev"]), list(corpus.splits["test"]), unlabeled


def _low_resource_config(seed):
    return TriTrainConfig(
        base_model=JointModelConfig(
            feature_dim=2**13, ngram_orders=(1,), char_ngram_orders=(), seed=0
        ),
        base_train=TrainConfig(
            max_epochs=40, patience=10, batch_size=8, learning_rate=0.8
        ),
        bootstrap_size=150,
        max_episodes=6,
        seed=seed,
    )


@criterion("tri-training-gain (200 labeled / 5000 unlabeled, >=4 of 5 seeds, <10 min)")
def test_tritraining_beats_bootstrap_only_ensemble():
    start = time.monotonic()
    gains = []
    wins = 0
    for seed in (1, 2, 3, 4, 5):
        labeled, dev, test, unlabeled = _low_resource_setting(seed)
        assert len(labeled) == 200 and len(unlabeled) == 5000
        report = baseline_compare(labeled, dev, test, unlabeled, _low_resource_config(seed))
        gains.append(report.emr_gain)
        wins += report.tritrained_emr >= report.baseline_emr
    elapsed = time.monotonic() - start
    assert elapsed < 600.0, f"took {elapsed:.0f}s"
    assert wins >= 4, f"only {wins} of 5 seeds improved: {gains}"
    assert sum(gains) / len(gains) > 0.0, f"mean gain {sum(gains) / len(gains):.4f}"


# ---------------------------------------------------------------------------
# Tri-training protocol invariants


@criterion("tri-training-protocol (bootstrap 1000/1240, <=30 episodes, sound stop, determinism)")
def test_tritraining_protocol_invariants():
    cfg = make_template(num_intents=4, cues_per_intent=3, dev_size=40)
    corpus = generate_synthetic(cfg, 1300, seed=8)
    train = list(corpus.splits["train"])
    labeled = train[:1240]
    unlabeled = list(
        strip_intents(
            corpus.with_splits({"train": train[1240:1300]}), keep_slots=False
        ).splits["train"]
    )
    dev = list(corpus.splits["dev"])
    config = TriTrainConfig(
        base_model=JointModelConfig(
            feature_dim=2**12, ngram_orders=(1,), char_ngram_orders=(), seed=0
        ),
        base_train=TrainConfig(max_epochs=6, patience=2, batch_size=32, learning_rate=0.8),
        bootstrap_size=1000,
        max_episodes=30,
        seed=17,
    )
    state = init_triad(labeled, dev, config, unlabeled)
    assert all(len(pool) == 1000 for pool in state.bootstraps)
    assert all(len({u.id for u in pool}) == 1000 for pool in state.bootstraps)

    final, store = run(labeled, dev, unlabeled, config, initial_state=state)
    assert final.episode <= 30
    if final.episode < 30:
        # stopping soundness: the last two accepted sets are identical,
        # which run() records as an unchanged final episode
        assert final.episode >= 2
        assert not final.reports[-1].consensus_changed

    final2, store2 = run(labeled, dev, unlabeled, config)
    assert store.to_jsonl() == store2.to_jsonl()
    assert [r.as_dict() for r in final.reports] == [r.as_dict() for r in final2.reports]


# ---------------------------------------------------------------------------
# Threshold rule


@criterion("intent-threshold (strictly above 0.5, boundary excluded)")
def test_decision_layer_threshold_rule():
    labels = tuple(f"l{i}" for i in range(8))
    assert select_intents([0.5] * 8, labels) == frozenset()
    assert select_intents([0.5 + 1e-12] + [0.5] * 7, labels) == {"l0"}
    rng = random.Random(99)
    for _ in range(500):
        probs = [rng.choice([0.0, 0.25, 0.5, 0.5, 0.75, 1.0]) for _ in labels]
        expected = frozenset(l for l, p in zip(labels, probs) if p > 0.5)
        assert select_intents(probs, labels) == expected


# ---------------------------------------------------------------------------
# Noising calibration and cascade degradation


@criterion("noising-calibration (WER within +-0.01; downstream CER non-decreasing)")
def test_noise_targets_and_cascade_degradation():
    corpus = generate_synthetic(
        make_template(dev_size=150, test_size=300), 1800, seed=21
    )
    total_tokens = sum(len(u.tokens) for u in corpus.utterances())
    assert total_tokens >= 10_000

    originals = [u.surfaces for u in corpus.utterances()]
    for target in (0.05, 0.10, 0.20):
        noised, achieved = inject_word_errors(corpus, target, seed=31)
        measured = wer(originals, [u.surfaces for u in noised.utterances()])
        assert abs(measured - target) <= 0.01, f"target {target}: measured {measured:.4f}"
        assert achieved == pytest.approx(measured)

    model = train_joint(
        list(corpus.splits["train"]),
        list(corpus.splits["dev"]),
        JointModelConfig(feature_dim=2**15, seed=5),
        TrainConfig(max_epochs=120, patience=15),
    )
    gold_concepts = [concept_sequence(u.tag_strings()) for u in corpus.splits["test"]]
    total_gold = sum(len(g) for g in gold_concepts)
    cers = []
    for target in (0.05, 0.10, 0.20):
        noised, _ = inject_word_errors(corpus, target, seed=31)
        predicted = predict_tags(model, list(noised.splits["test"]))
        edits = sum(
            edit_distance(g, concept_sequence(p))
            for g, p in zip(gold_concepts, predicted)
        )
        cers.append(edits / total_gold)
    assert cers == sorted(cers), f"CER not non-decreasing: {cers}"


# ---------------------------------------------------------------------------
# SFA bound


@criterion("sfa-bound (sfa <= emr on 200 random corpora)")
def test_sfa_never_exceeds_emr():
    rng = random.Random(55)
    labels = ("booking", "greeting", "thanking")
    for _ in range(200):
        gold, pred = [], []
        for i in range(rng.randint(1, 12)):
            n = rng.randint(1, 6)
            words = " ".join(f"w{j}" for j in range(n))
            gold.append(
                utt(f"g{i}", words, " ".join(random_tag_sequence(rng, n)),
                    rng.sample(labels, rng.randint(1, 2)))
            )
            pred.append(
                utt(f"p{i}", words, " ".join(random_tag_sequence(rng, n)),
                    rng.sample(labels, rng.randint(1, 2)))
            )
        assert sfa(gold, pred) <= emr(
            [u.intents for u in gold], [u.intents for u in pred]
        ) + 1e-12


# ---------------------------------------------------------------------------
# Review replay


def _random_review_corpus(rng):
    labels = ("booking", "greeting", "information", "thanking", "negative_answer")
    utts = []
    for i in range(rng.randint(3, 12)):
        intents = rng.sample(labels, rng.randint(1, 2))
        utts.append(
            utt(f"p{i}", "oui merci bien", "O O O", intents, provenance="pseudo")
        )
    for i in range(rng.randint(0, 3)):
        utts.append(
            utt(f"q{i}", "sans etiquette", "O O", None, provenance="unlabeled")
        )
    return Corpus("rr", "relax", {"train": utts})


@criterion("review-replay (100 random decision logs rebuild state; export deterministic)")
def test_review_replay_and_deterministic_export():
    from intentlayer.review import ReviewError

    rng = random.Random(314)
    labels = ["booking", "greeting", "information", "thanking"]
    for _ in range(100):
        corpus = _random_review_corpus(rng)
        live = ReviewSession(corpus)
        applied = []
        for _ in range(rng.randint(1, 20)):
            uid = rng.choice(list(live.pseudo) + live.queue_ids)
            pseudo = live.pseudo.get(uid, frozenset())
            verdicts = {
                l: rng.choice(["confirm", "invalidate"])
                for l in pseudo
                if rng.random() < 0.8
            }
            replacement = (
                frozenset(rng.sample(labels, rng.randint(1, 2)))
                if (rng.random() < 0.6 or not pseudo)
                else None
            )
            decision = Decision(uid, verdicts, replacement, "ann", "t0")
            try:
                apply_decision(live, decision)
                applied.append(decision)
            except ReviewError:
                continue
        rebuilt = replay_session(corpus, applied)
        assert rebuilt.final == live.final
        assert rebuilt.history == live.history
        assert progress(rebuilt) == progress(live)
        # finish everything and compare exports byte for byte
        for uid in list(live.pseudo) + live.queue_ids:
            if uid not in live.final:
                decision = Decision(uid, {}, frozenset({"booking"}), "ann", "t1")
                apply_decision(live, decision)
                applied.append(decision)
        rebuilt = replay_session(corpus, applied)
        assert serialize_corpus(export_final(live), "jsonl") == serialize_corpus(
            export_final(rebuilt), "jsonl"
        )
