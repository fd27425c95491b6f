"""Corpus data model, file formats, validation, statistics, sampling,
intent transfer, noising, and synthetic fixture generation."""
from .formats import (
    CorpusFormatError,
    guess_format,
    load_corpus,
    parse_corpus,
    save_corpus,
    serialize_corpus,
)
from .noise import inject_word_errors
from .ops import (
    CorpusStats,
    Unmatched,
    compute_stats,
    project_relax,
    sample_annotation_subset,
    transfer_intents,
)
from .spans import concept_sequence, extract_spans, orphan_positions
from .synthetic import SyntheticConfig, generate_synthetic, make_template, strip_intents
from .types import (
    EXCLUSIVE_INTENT,
    INTENT_LABELS,
    PROVENANCES,
    SCORING_MODES,
    SPLIT_NAMES,
    UNLABELED_SENTINEL,
    ConceptLabel,
    Corpus,
    CorpusError,
    SlotTag,
    Token,
    Utterance,
    check_intent_names,
    format_intents,
    parse_intents,
)
from .validate import Violation, validate_corpus

__all__ = [
    "ConceptLabel",
    "Corpus",
    "CorpusError",
    "CorpusFormatError",
    "CorpusStats",
    "EXCLUSIVE_INTENT",
    "INTENT_LABELS",
    "PROVENANCES",
    "SCORING_MODES",
    "SPLIT_NAMES",
    "SlotTag",
    "SyntheticConfig",
    "Token",
    "UNLABELED_SENTINEL",
    "Unmatched",
    "Utterance",
    "Violation",
    "check_intent_names",
    "compute_stats",
    "concept_sequence",
    "extract_spans",
    "format_intents",
    "generate_synthetic",
    "guess_format",
    "inject_word_errors",
    "load_corpus",
    "make_template",
    "orphan_positions",
    "parse_corpus",
    "parse_intents",
    "project_relax",
    "sample_annotation_subset",
    "save_corpus",
    "serialize_corpus",
    "strip_intents",
    "transfer_intents",
    "validate_corpus",
]
