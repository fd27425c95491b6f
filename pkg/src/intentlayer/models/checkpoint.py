"""Versioned model checkpoints: a JSON container with base64-encoded
weight arrays and the schema fingerprint, validated on load."""
from __future__ import annotations

import base64
import io
import json
from dataclasses import asdict
from typing import Optional, Sequence

import numpy as np

from ..corpus.types import Utterance
from .joint import (
    EpochRecord,
    JointModelConfig,
    LabelSchema,
    ModelError,
    TrainConfig,
    TrainedModel,
    Weights,
    check_schema,
)

FORMAT_NAME = "intentlayer.model"
FORMAT_VERSION = 1


def _encode_array(arr: np.ndarray) -> str:
    buf = io.BytesIO()
    np.save(buf, arr, allow_pickle=False)
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _decode_array(text: str) -> np.ndarray:
    return np.load(io.BytesIO(base64.b64decode(text)), allow_pickle=False)


def model_to_json(model: TrainedModel) -> str:
    payload = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "model_config": asdict(model.model_config),
        "train_config": asdict(model.train_config),
        "schema": {
            "intent_labels": list(model.schema.intent_labels),
            "slot_tags": list(model.schema.slot_tags),
            "scoring": model.schema.scoring,
            "fingerprint": model.schema.fingerprint(),
        },
        "weights": {
            "w_intent": _encode_array(model.weights.w_intent),
            "b_intent": _encode_array(model.weights.b_intent),
            "w_slot": _encode_array(model.weights.w_slot),
            "b_slot": _encode_array(model.weights.b_slot),
        },
        "training_log": [asdict(r) for r in model.training_log],
        "best_epoch": model.best_epoch,
        "warnings": list(model.warnings),
    }
    return json.dumps(payload, sort_keys=True)


def model_from_json(text: str) -> TrainedModel:
    payload = json.loads(text)
    if payload.get("format") != FORMAT_NAME:
        raise ModelError("not a model checkpoint")
    if payload.get("version") != FORMAT_VERSION:
        raise ModelError(f"unsupported checkpoint version {payload.get('version')}")
    mconfig = payload["model_config"]
    mconfig["ngram_orders"] = tuple(mconfig["ngram_orders"])
    mconfig["char_ngram_orders"] = tuple(mconfig["char_ngram_orders"])
    schema = LabelSchema(
        tuple(payload["schema"]["intent_labels"]),
        tuple(payload["schema"]["slot_tags"]),
        payload["schema"]["scoring"],
    )
    if schema.fingerprint() != payload["schema"]["fingerprint"]:
        raise ModelError("checkpoint schema fingerprint does not match its contents")
    weights = Weights(
        _decode_array(payload["weights"]["w_intent"]),
        _decode_array(payload["weights"]["b_intent"]),
        _decode_array(payload["weights"]["w_slot"]),
        _decode_array(payload["weights"]["b_slot"]),
    )
    return TrainedModel(
        model_config=JointModelConfig(**mconfig),
        train_config=TrainConfig(**payload["train_config"]),
        schema=schema,
        weights=weights,
        training_log=tuple(EpochRecord(**r) for r in payload["training_log"]),
        best_epoch=payload["best_epoch"],
        warnings=tuple(payload["warnings"]),
    )


def save_model(model: TrainedModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))


def load_model(path: str, target: Optional[Sequence[Utterance]] = None) -> TrainedModel:
    """Load a checkpoint; when ``target`` utterances are given, verify the
    model schema can express their annotations."""
    with open(path, encoding="utf-8") as fh:
        model = model_from_json(fh.read())
    if target is not None:
        check_schema(model, target)
    return model
