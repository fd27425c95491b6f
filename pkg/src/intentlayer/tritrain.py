"""Episodic tri-training for intent pseudo-labeling.

Three classifiers are bootstrapped on independent random samples of the
labeled seed set. Each episode, every unlabeled utterance on which two
classifiers agree with an identical non-empty intent set becomes a pseudo
label for the third; pools are rebuilt from bootstrap plus the current
episode's consensus (no accumulation unless configured), models retrained,
and the loop stops once every model's accepted set repeats the previous
episode's, or after the episode budget.

All pair-consensus events from all episodes are retained in an append-only
store; cross-episode conflicts are resolved afterwards by a seeded random
choice among the distinct consensus sets.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from .corpus.types import Corpus, Utterance, check_intent_names
from .metrics import emr, sample_prf
from .models.features import utterance_matrix
from .models.joint import (
    JointModelConfig,
    LabelSchema,
    TrainConfig,
    TrainedModel,
    predict_intents,
    train_joint,
)

PAIRS = ((1, 2), (0, 2), (0, 1))  # agreeing pair for receiving model 0, 1, 2


class TriTrainError(ValueError):
    pass


@dataclass(frozen=True)
class TriTrainConfig:
    base_model: JointModelConfig = field(default_factory=JointModelConfig)
    base_train: TrainConfig = field(default_factory=TrainConfig)
    bootstrap_size: float = 1000
    max_episodes: int = 30
    agreement: str = "exact"
    accumulate_pools: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_episodes < 1:
            raise TriTrainError("max_episodes must be >= 1")
        if self.agreement != "exact":
            raise TriTrainError("only exact-set agreement is supported")
        if self.bootstrap_size <= 0:
            raise TriTrainError("bootstrap_size must be positive")

    def resolve_bootstrap(self, n_labeled: int) -> int:
        if 0 < self.bootstrap_size < 1:
            return max(1, round(self.bootstrap_size * n_labeled))
        size = int(self.bootstrap_size)
        if size > n_labeled:
            raise TriTrainError(
                f"bootstrap_size {size} exceeds labeled pool of {n_labeled}"
            )
        return size


@dataclass(frozen=True)
class PseudoLabelRecord:
    utterance_id: str
    episode: int
    pair: tuple[int, int]
    intents: frozenset[str]

    def __post_init__(self) -> None:
        if self.pair not in PAIRS:
            raise TriTrainError(f"invalid model pair {self.pair}")
        object.__setattr__(self, "intents", check_intent_names(self.intents))
        if not self.intents:
            raise TriTrainError("a pseudo-label record needs a non-empty intent set")

    @property
    def receiver(self) -> int:
        return 3 - self.pair[0] - self.pair[1]


class PseudoLabelStore:
    """Append-only collection of pair-consensus events, JSONL-persistable."""

    def __init__(self, records: Sequence[PseudoLabelRecord] = ()):
        self._records: list[PseudoLabelRecord] = list(records)

    @property
    def records(self) -> tuple[PseudoLabelRecord, ...]:
        return tuple(self._records)

    def append(self, record: PseudoLabelRecord) -> None:
        self._records.append(record)

    def __len__(self) -> int:
        return len(self._records)

    def to_jsonl(self) -> str:
        lines = []
        for r in self._records:
            lines.append(
                json.dumps(
                    {
                        "utterance_id": r.utterance_id,
                        "episode": r.episode,
                        "pair": list(r.pair),
                        "intents": sorted(r.intents),
                    }
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str) -> "PseudoLabelStore":
        records = []
        for line in text.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            records.append(
                PseudoLabelRecord(
                    obj["utterance_id"],
                    obj["episode"],
                    tuple(obj["pair"]),
                    frozenset(obj["intents"]),
                )
            )
        return cls(records)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def load(cls, path: str) -> "PseudoLabelStore":
        with open(path, encoding="utf-8") as fh:
            return cls.from_jsonl(fh.read())


@dataclass(frozen=True)
class EpisodeReport:
    episode: int
    added: tuple[int, int, int]
    dev_emr: tuple[float, float, float]
    consensus_changed: bool

    def as_dict(self) -> dict:
        return {
            "episode": self.episode,
            "added": list(self.added),
            "dev_emr": list(self.dev_emr),
            "consensus_changed": self.consensus_changed,
        }


@dataclass
class TriadState:
    models: tuple[TrainedModel, TrainedModel, TrainedModel]
    bootstraps: tuple[tuple[Utterance, ...], ...]
    pools: tuple[tuple[Utterance, ...], ...]
    unlabeled: tuple[Utterance, ...]
    episode: int
    reports: tuple[EpisodeReport, ...]
    accepted: tuple[dict[str, frozenset], ...]  # per model: utterance id -> intents
    store: PseudoLabelStore
    schema: LabelSchema
    config: TriTrainConfig
    dev: tuple[Utterance, ...]


def _model_seed(config: TriTrainConfig, k: int) -> int:
    # stable per model, independent of the episode, so an unchanged pool
    # retrains to identical weights
    return config.seed * 31 + 7 * k + 1


def _train_member(
    k: int,
    pool: Sequence[Utterance],
    dev: Sequence[Utterance],
    schema: LabelSchema,
    config: TriTrainConfig,
) -> TrainedModel:
    mconfig = replace(config.base_model, seed=_model_seed(config, k))
    return train_joint(
        pool, dev, mconfig, config.base_train, schema=schema, scoring=schema.scoring
    )


def init_triad(
    labeled: Sequence[Utterance],
    dev: Sequence[Utterance],
    config: TriTrainConfig,
    unlabeled: Sequence[Utterance] = (),
    scoring: str = "relax",
) -> TriadState:
    """Draw three seeded bootstrap samples and train the initial triad."""
    labeled = list(labeled)
    for utt in labeled:
        if utt.intents is None:
            raise TriTrainError(f"labeled utterance {utt.id} has no intent set")
    size = config.resolve_bootstrap(len(labeled))
    rng = random.Random(config.seed)
    bootstraps = tuple(tuple(rng.sample(labeled, size)) for _ in range(3))
    schema = LabelSchema.from_utterances(
        list(labeled) + list(dev) + list(unlabeled), scoring
    )
    models = tuple(
        _train_member(k, bootstraps[k], dev, schema, config) for k in range(3)
    )
    return TriadState(
        models=models,  # type: ignore[arg-type]
        bootstraps=bootstraps,
        pools=bootstraps,
        unlabeled=tuple(unlabeled),
        episode=0,
        reports=(),
        accepted=({}, {}, {}),
        store=PseudoLabelStore(),
        schema=schema,
        config=config,
        dev=tuple(dev),
    )


def _dev_emr(model: TrainedModel, dev: Sequence[Utterance], x_dev) -> float:
    if not dev:
        return 0.0
    gold = [u.intents or frozenset() for u in dev]
    return emr(gold, predict_intents(model, dev, x_dev))


def run_episode(
    state: TriadState,
    unlabeled: Optional[Sequence[Utterance]] = None,
    _x_unlabeled=None,
) -> tuple[TriadState, EpisodeReport]:
    """One tri-training episode: consensus labeling, pool rebuild, retrain."""
    config = state.config
    pool_utts = tuple(unlabeled if unlabeled is not None else state.unlabeled)
    episode = state.episode + 1
    if _x_unlabeled is None and pool_utts:
        _x_unlabeled = utterance_matrix(pool_utts, config.base_model)

    preds = [
        predict_intents(m, pool_utts, _x_unlabeled) if pool_utts else []
        for m in state.models
    ]
    accepted: list[dict[str, frozenset]] = [{}, {}, {}]
    for k in range(3):
        i, j = PAIRS[k]
        for t, utt in enumerate(pool_utts):
            if preds[i][t] and preds[i][t] == preds[j][t]:
                accepted[k][utt.id] = preds[i][t]
                state.store.append(
                    PseudoLabelRecord(utt.id, episode, PAIRS[k], preds[i][t])
                )
    if config.accumulate_pools:
        accepted = [
            {**state.accepted[k], **accepted[k]} for k in range(3)
        ]

    by_id = {u.id: u for u in pool_utts}
    pools = []
    models = list(state.models)
    for k in range(3):
        pseudo = tuple(
            replace(by_id[uid], intents=intents, provenance="pseudo")
            for uid, intents in accepted[k].items()
        )
        pools.append(state.bootstraps[k] + pseudo)
        if accepted[k] != state.accepted[k]:
            models[k] = _train_member(k, pools[k], state.dev, state.schema, config)

    x_dev = utterance_matrix(state.dev, config.base_model) if state.dev else None
    report = EpisodeReport(
        episode=episode,
        added=tuple(len(accepted[k]) for k in range(3)),
        dev_emr=tuple(_dev_emr(models[k], state.dev, x_dev) for k in range(3)),
        consensus_changed=any(accepted[k] != state.accepted[k] for k in range(3)),
    )
    new_state = replace(
        state,
        models=tuple(models),
        pools=tuple(pools),
        episode=episode,
        reports=state.reports + (report,),
        accepted=tuple(accepted),
    )
    return new_state, report


def run(
    labeled: Sequence[Utterance],
    dev: Sequence[Utterance],
    unlabeled: Sequence[Utterance],
    config: TriTrainConfig,
    scoring: str = "relax",
    initial_state: Optional[TriadState] = None,
) -> tuple[TriadState, PseudoLabelStore]:
    """Run episodes until the accepted pseudo-label sets reach a fixed point
    (two consecutive identical episodes) or ``max_episodes`` is hit."""
    state = initial_state or init_triad(labeled, dev, config, unlabeled, scoring)
    unlabeled = tuple(unlabeled)
    x_unlabeled = (
        utterance_matrix(unlabeled, config.base_model) if unlabeled else None
    )
    for _ in range(config.max_episodes):
        previous = state.accepted
        state, _report = run_episode(state, unlabeled, x_unlabeled)
        if state.episode >= 2 and state.accepted == previous:
            break
    return state, state.store


def resolve_consensus(
    store: PseudoLabelStore, seed: int
) -> dict[str, frozenset[str]]:
    """Pick one intent set per utterance from its pair-consensus history.

    Candidates are the distinct sets in (episode, pair) order; a single
    candidate is taken as is, several are resolved by a seeded uniform
    choice. Utterances without any consensus are absent from the map.
    """
    ordered = sorted(
        store.records, key=lambda r: (r.utterance_id, r.episode, r.pair)
    )
    candidates: dict[str, list[frozenset]] = {}
    for record in ordered:
        found = candidates.setdefault(record.utterance_id, [])
        if record.intents not in found:
            found.append(record.intents)
    rng = random.Random(seed)
    resolved = {}
    for uid in sorted(candidates):
        options = candidates[uid]
        resolved[uid] = options[0] if len(options) == 1 else options[rng.randrange(len(options))]
    return resolved


def apply_pseudo_labels(
    corpus: Corpus, resolved: Mapping[str, frozenset[str]]
) -> Corpus:
    """Attach resolved intent sets to matching utterances (provenance
    becomes ``pseudo``); everything else is untouched."""
    new_splits = {}
    for split, utts in corpus.splits.items():
        out = []
        for utt in utts:
            if utt.id in resolved and utt.intents is None:
                out.append(
                    replace(utt, intents=resolved[utt.id], provenance="pseudo")
                )
            else:
                out.append(utt)
        new_splits[split] = out
    return corpus.with_splits(new_splits)


def ensemble_predict(state: TriadState, utterance: Utterance) -> frozenset[str]:
    """Per-label 2-of-3 majority vote over the triad's predictions."""
    return ensemble_predict_many(state, [utterance])[0]


def ensemble_predict_many(
    state: TriadState, utts: Sequence[Utterance], x=None
) -> list[frozenset[str]]:
    if x is None:
        x = utterance_matrix(utts, state.config.base_model)
    votes = [predict_intents(m, utts, x) for m in state.models]
    out = []
    for t in range(len(utts)):
        counts: dict[str, int] = {}
        for k in range(3):
            for label in votes[k][t]:
                counts[label] = counts.get(label, 0) + 1
        out.append(frozenset(l for l, c in counts.items() if c >= 2))
    return out


@dataclass(frozen=True)
class CompareReport:
    seed: int
    baseline_emr: float
    baseline_sample_f1: float
    tritrained_emr: float
    tritrained_sample_f1: float
    episodes: int
    emr_gain: float

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "baseline_emr": self.baseline_emr,
            "baseline_sample_f1": self.baseline_sample_f1,
            "tritrained_emr": self.tritrained_emr,
            "tritrained_sample_f1": self.tritrained_sample_f1,
            "episodes": self.episodes,
            "emr_gain": self.emr_gain,
        }


def baseline_compare(
    labeled: Sequence[Utterance],
    dev: Sequence[Utterance],
    test: Sequence[Utterance],
    unlabeled: Sequence[Utterance],
    config: TriTrainConfig,
    scoring: str = "relax",
) -> CompareReport:
    """Ensemble test metrics of the bootstrap-only triad versus the
    tri-trained triad, from identical bootstrap samples (same seed)."""
    baseline = init_triad(labeled, dev, config, unlabeled, scoring)
    gold = [u.intents or frozenset() for u in test]
    x_test = utterance_matrix(test, config.base_model)
    base_pred = ensemble_predict_many(baseline, test, x_test)
    tri_state, _ = run(labeled, dev, unlabeled, config, scoring, initial_state=baseline)
    tri_pred = ensemble_predict_many(tri_state, test, x_test)
    base_emr = emr(gold, base_pred)
    tri_emr = emr(gold, tri_pred)
    return CompareReport(
        seed=config.seed,
        baseline_emr=base_emr,
        baseline_sample_f1=sample_prf(gold, base_pred).f1,
        tritrained_emr=tri_emr,
        tritrained_sample_f1=sample_prf(gold, tri_pred).f1,
        episodes=tri_state.episode,
        emr_gain=tri_emr - base_emr,
    )
