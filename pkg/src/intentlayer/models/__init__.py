"""Joint intent + slot classifier: hashed-feature linear reference
back-end, training with early stopping, checkpoints, and population-based
hyperparameter search."""
from .checkpoint import load_model, model_from_json, model_to_json, save_model
from .features import featurize, token_matrix, utterance_matrix
from .joint import (
    TRANSFORMER_REFERENCE_LR,
    EpochRecord,
    JointModelConfig,
    LabelSchema,
    ModelError,
    SchemaMismatch,
    TrainConfig,
    TrainedModel,
    Weights,
    check_schema,
    evaluate,
    intent_probabilities,
    loss_and_grads,
    predict,
    predict_intents,
    predict_tags,
    predicted_corpus,
    select_intents,
    train_joint,
)
from .pbt import HyperSearchConfig, SearchTrial, pbt_search

__all__ = [
    "EpochRecord",
    "HyperSearchConfig",
    "JointModelConfig",
    "LabelSchema",
    "ModelError",
    "SchemaMismatch",
    "SearchTrial",
    "TRANSFORMER_REFERENCE_LR",
    "TrainConfig",
    "TrainedModel",
    "Weights",
    "check_schema",
    "evaluate",
    "featurize",
    "intent_probabilities",
    "load_model",
    "loss_and_grads",
    "model_from_json",
    "model_to_json",
    "pbt_search",
    "predict",
    "predict_intents",
    "predict_tags",
    "predicted_corpus",
    "save_model",
    "select_intents",
    "token_matrix",
    "train_joint",
    "utterance_matrix",
]
