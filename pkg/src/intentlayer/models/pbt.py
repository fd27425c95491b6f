"""Population-based hyperparameter search for the joint model.

A population of training configurations is trained in rounds. After each
round the bottom exploit fraction copies weights and configuration from
the top fraction, then perturbs learning rate and batch size by a factor
drawn from the configured pair. Members are selected by the mean of slot
span F1 and intent Godbole accuracy on the dev set; the raw pair is kept
in the search log.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from ..corpus.types import Utterance
from ..metrics import godbole_accuracy, slot_span_f1
from .joint import (
    JointModelConfig,
    LabelSchema,
    ModelError,
    TrainConfig,
    TrainedModel,
    Weights,
    predict_intents,
    predict_tags,
    train_joint,
)


@dataclass(frozen=True)
class HyperSearchConfig:
    population: int = 8
    rounds: int = 4
    epoch_range: tuple[int, int] = (5, 100)
    batch_range: tuple[int, int] = (8, 32)
    lr_range: tuple[float, float] = (0.1, 0.5)  # transformer range scaled to the linear model
    perturb_factors: tuple[float, float] = (0.8, 1.25)
    exploit_fraction: float = 0.25
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population < 4:
            raise ModelError("population must be >= 4")
        if self.rounds < 1:
            raise ModelError("rounds must be >= 1")
        for lo, hi in (self.epoch_range, self.batch_range, self.lr_range):
            if lo > hi or lo <= 0:
                raise ModelError("ranges must be non-empty and positive")
        if not (0.0 < self.exploit_fraction <= 0.5):
            raise ModelError("exploit_fraction must lie in (0, 0.5]")


@dataclass(frozen=True)
class SearchTrial:
    round: int
    member: int
    train_config: TrainConfig
    slot_f1: float
    intent_accuracy: float
    score: float
    exploited_from: Optional[int] = None


@dataclass
class _Member:
    config: TrainConfig
    weights: Optional[Weights] = None


def _score(model: TrainedModel, dev: Sequence[Utterance]) -> tuple[float, float, float]:
    gold_intents = [u.intents or frozenset() for u in dev]
    pred_intents = predict_intents(model, dev)
    acc = godbole_accuracy(gold_intents, pred_intents)
    gold_tags = [u.tag_strings() or () for u in dev]
    pred_tags = predict_tags(model, dev)
    f1 = slot_span_f1(gold_tags, pred_tags)
    return f1, acc, (f1 + acc) / 2.0


def _sample_config(space: HyperSearchConfig, rng: random.Random) -> TrainConfig:
    epochs = rng.randint(*space.epoch_range)
    batch = rng.randint(*space.batch_range)
    lr = math.exp(rng.uniform(math.log(space.lr_range[0]), math.log(space.lr_range[1])))
    return TrainConfig(
        learning_rate=lr,
        batch_size=batch,
        max_epochs=epochs,
        patience=max(1, epochs - 1),
    )


def _perturb(
    config: TrainConfig, space: HyperSearchConfig, rng: random.Random
) -> TrainConfig:
    lr = config.learning_rate * rng.choice(space.perturb_factors)
    lr = min(max(lr, space.lr_range[0] / 4), space.lr_range[1] * 4)
    batch = round(config.batch_size * rng.choice(space.perturb_factors))
    batch = min(max(batch, space.batch_range[0]), space.batch_range[1])
    return replace(config, learning_rate=lr, batch_size=batch)


def pbt_search(
    train: Sequence[Utterance],
    dev: Sequence[Utterance],
    space: HyperSearchConfig,
    mconfig: JointModelConfig,
    *,
    schema: Optional[LabelSchema] = None,
    scoring: str = "relax",
) -> tuple[TrainConfig, TrainedModel, list[SearchTrial]]:
    """Run the search; returns (best config, best model, full trial log).

    The returned pair is the best-scoring trial over all rounds, so its
    score is >= the score of every initial population member. Deterministic
    per seed.
    """
    if not train or not dev:
        raise ModelError("population-based search needs non-empty train and dev sets")
    if schema is None:
        schema = LabelSchema.from_utterances(list(train) + list(dev), scoring)
    rng = random.Random(space.seed)
    members = [_Member(_sample_config(space, rng)) for _ in range(space.population)]
    log: list[SearchTrial] = []
    best: Optional[tuple[float, TrainConfig, TrainedModel]] = None
    exploited_from: list[Optional[int]] = [None] * space.population

    for rnd in range(1, space.rounds + 1):
        scored: list[tuple[float, int, TrainedModel]] = []
        for i, member in enumerate(members):
            member_mconfig = replace(mconfig, seed=mconfig.seed + i)
            model = train_joint(
                train,
                dev,
                member_mconfig,
                member.config,
                schema=schema,
                init=member.weights,
                early_stop=False,
                scoring=scoring,
            )
            member.weights = model.weights
            slot_f1, acc, score = _score(model, dev)
            log.append(
                SearchTrial(rnd, i, member.config, slot_f1, acc, score, exploited_from[i])
            )
            scored.append((score, i, model))
            if best is None or score > best[0]:
                best = (score, member.config, model)

        exploited_from = [None] * space.population
        if rnd == space.rounds:
            break
        ranked = sorted(scored, key=lambda t: (-t[0], t[1]))
        k = max(1, int(space.population * space.exploit_fraction))
        tops = ranked[:k]
        bottoms = ranked[-k:]
        for (_, top_i, top_model), (_, bot_i, _) in zip(tops, bottoms):
            if top_i == bot_i:
                continue
            members[bot_i] = _Member(
                _perturb(members[top_i].config, space, rng),
                top_model.weights.copy(),
            )
            exploited_from[bot_i] = top_i

    assert best is not None
    return best[1], best[2], log
