"""Single command-line entry point for the toolkit pipelines.

Exit codes: 0 success, 1 usage error, 2 data validation error, 3 runtime
failure. With --json-errors failures are reported as one JSON object on
stderr. Stochastic commands require an explicit --seed. Input paths that
do not exist are retried under $INTENTLAYER_DATA_DIR.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from typing import Optional, Sequence

from . import __version__, review, tritrain
from .corpus import (
    Corpus,
    CorpusError,
    compute_stats,
    inject_word_errors,
    load_corpus,
    project_relax,
    save_corpus,
    validate_corpus,
)
from .manifest import load_manifest, sha256_file, write_manifest
from .metrics import MetricError, MetricsReport
from .models import (
    HyperSearchConfig,
    JointModelConfig,
    ModelError,
    TrainConfig,
    evaluate,
    load_model,
    pbt_search,
    save_model,
    train_joint,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1, not argparse's default 2
        raise UsageError(message)


def _resolve_input(path: str) -> str:
    """Fall back to $INTENTLAYER_DATA_DIR for inputs given as bare names."""
    if os.path.exists(path):
        return path
    data_dir = os.environ.get("INTENTLAYER_DATA_DIR")
    if data_dir:
        candidate = os.path.join(data_dir, path)
        if os.path.exists(candidate):
            return candidate
    return path


def _load(path: str, fmt: Optional[str] = None, scoring: str = "relax"):
    return load_corpus(_resolve_input(path), fmt, scoring)


def _load_config_file(path: Optional[str]) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return obj


def _build(cls, section: dict, overrides: dict):
    merged = dict(section)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return cls(**merged)
    except TypeError as exc:
        raise UsageError(f"bad {cls.__name__} field: {exc}") from exc


def _percent(x: float) -> str:
    return f"{100.0 * x:.2f}"


def _print_shaped_report(report: MetricsReport) -> None:
    rows = [
        ("Acc.", report.accuracy_godbole),
        ("EMR", report.emr),
        ("F1", report.slot_span_f1),
        ("F1mh", report.multihot_f1),
        ("CER", report.cer),
        ("SFA", report.sfa),
    ]
    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        print(f"{name:<{width}}  {_percent(value):>7}")
    print()
    print(report.format_flat())


# --------------------------------------------------------------------------
# commands


def cmd_convert(args, argv) -> int:
    corpus = _load(args.infile, args.in_format, args.scoring)
    if args.to_relax:
        corpus = project_relax(corpus)
    save_corpus(corpus, args.out, args.out_format)
    write_manifest("convert", argv, {"scoring": corpus.scoring}, [], [args.infile], [args.out])
    return EXIT_OK


def cmd_validate(args, argv) -> int:
    corpus = _load(args.infile, args.in_format, args.scoring)
    violations = validate_corpus(corpus)
    for v in violations:
        print(f"{v.utterance_id}\t{v.rule}\t{v.message}")
    print(f"{len(violations)} violation(s)", file=sys.stderr)
    return EXIT_OK if not violations else EXIT_DATA


def cmd_stats(args, argv) -> int:
    corpus = _load(args.infile, args.in_format, args.scoring)
    stats = compute_stats(corpus)
    if args.json:
        print(json.dumps(asdict(stats), indent=2, sort_keys=True))
    else:
        splits = ("train", "dev", "test", "test2")
        header = ["label"] + list(splits) + ["total"]
        print("\t".join(header))
        for label, counts in stats.intent_counts.items():
            row = [label] + [str(counts[s]) for s in splits] + [str(stats.intent_total(label))]
            print("\t".join(row))
        print(
            "utterances\t"
            + "\t".join(str(stats.utterance_counts[s]) for s in splits)
            + f"\t{stats.total_utterances()}"
        )
        print(
            "concept lexicon\t"
            + "\t".join(str(stats.concept_lexicon_sizes[s]) for s in splits)
            + "\t-"
        )
        if stats.combination_counts:
            print("\ncombinations:")
            for combo, counts in stats.combination_counts.items():
                print(f"{combo}\t" + "\t".join(str(counts[s]) for s in splits)
                      + f"\t{stats.combination_total(combo)}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(asdict(stats), fh, indent=2, sort_keys=True)
        write_manifest("stats", argv, {}, [], [args.infile], [args.out])
    return EXIT_OK


def _model_overrides(args) -> dict:
    return {
        "feature_dim": args.feature_dim,
        "intent_threshold": args.intent_threshold,
        "seed": args.seed,
    }


def _train_overrides(args) -> dict:
    return {
        "learning_rate": args.learning_rate,
        "batch_size": args.batch_size,
        "max_epochs": args.max_epochs,
        "patience": args.patience,
        "regularization": args.regularization,
    }


def cmd_train(args, argv) -> int:
    cfg = _load_config_file(args.config)
    mconfig = _build(JointModelConfig, cfg.get("model", {}), _model_overrides(args))
    tconfig = _build(TrainConfig, cfg.get("train", {}), _train_overrides(args))
    corpus = _load(args.corpus, args.in_format, args.scoring)
    train = list(corpus.splits[args.train_split])
    dev = list(corpus.splits[args.dev_split])
    model = train_joint(train, dev, mconfig, tconfig, scoring=corpus.scoring)
    save_model(model, args.out)
    best = model.training_log[model.best_epoch - 1] if model.training_log else None
    if best and best.dev_emr is not None:
        print(f"trained {len(model.training_log)} epoch(s), best dev EMR {best.dev_emr:.4f}")
    else:
        print(f"trained {len(model.training_log)} epoch(s)")
    write_manifest(
        "train",
        argv,
        {"model": asdict(mconfig), "train": asdict(tconfig)},
        [args.seed],
        [args.corpus],
        [args.out],
    )
    return EXIT_OK


def cmd_evaluate(args, argv) -> int:
    corpus = _load(args.corpus, args.in_format, args.scoring)
    split = list(corpus.splits[args.split])
    model = load_model(args.model, split)
    report = evaluate(model, split)
    if args.json:
        print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    else:
        _print_shaped_report(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
        write_manifest("evaluate", argv, {}, [], [args.corpus, args.model], [args.out])
    return EXIT_OK


def cmd_score(args, argv) -> int:
    """Compare a predicted corpus against a gold corpus, split by split."""
    from .metrics import full_report

    gold = _load(args.gold, args.in_format, args.scoring)
    pred = _load(args.pred, args.in_format, args.scoring)
    splits = [args.split] if args.split else [
        s for s in ("train", "dev", "test", "test2") if gold.splits[s]
    ]
    gold_utts, pred_utts = [], []
    for split in splits:
        g, p = gold.splits[split], pred.splits[split]
        if len(g) != len(p):
            raise MetricError(
                f"split {split}: {len(g)} gold vs {len(p)} predicted utterances"
            )
        gold_utts.extend(g)
        pred_utts.extend(p)
    schema = sorted({l for u in gold_utts for l in (u.intents or ())})
    report = full_report(gold_utts, pred_utts, schema)
    if args.json:
        print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    else:
        _print_shaped_report(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
        write_manifest("score", argv, {}, [], [args.gold, args.pred], [args.out])
    return EXIT_OK


def cmd_pbt(args, argv) -> int:
    cfg = _load_config_file(args.config)
    mconfig = _build(JointModelConfig, cfg.get("model", {}), _model_overrides(args))
    space = _build(
        HyperSearchConfig,
        cfg.get("search", {}),
        {"population": args.population, "rounds": args.rounds, "seed": args.seed},
    )
    corpus = _load(args.corpus, args.in_format, args.scoring)
    train = list(corpus.splits[args.train_split])
    dev = list(corpus.splits[args.dev_split])
    best_config, best_model, log = pbt_search(
        train, dev, space, mconfig, scoring=corpus.scoring
    )
    save_model(best_model, args.out)
    outputs = [args.out]
    if args.log_out:
        with open(args.log_out, "w", encoding="utf-8") as fh:
            for trial in log:
                record = asdict(trial)
                record["train_config"] = asdict(trial.train_config)
                fh.write(json.dumps(record) + "\n")
        outputs.append(args.log_out)
    print(json.dumps({"best": asdict(best_config)}, indent=2, sort_keys=True))
    write_manifest(
        "pbt",
        argv,
        {"model": asdict(mconfig), "search": asdict(space)},
        [args.seed],
        [args.corpus],
        outputs,
    )
    return EXIT_OK


def _all_utterances(corpus: Corpus):
    return list(corpus.utterances())


def cmd_tritrain(args, argv) -> int:
    cfg = _load_config_file(args.config)
    mconfig = _build(JointModelConfig, cfg.get("model", {}), {"feature_dim": args.feature_dim})
    tconfig = _build(TrainConfig, cfg.get("train", {}), _train_overrides(args))
    labeled = _all_utterances(_load(args.labeled, None, args.scoring))
    dev = _all_utterances(_load(args.dev, None, args.scoring))
    unlabeled = _all_utterances(_load(args.unlabeled, None, args.scoring))
    config = _build(
        tritrain.TriTrainConfig,
        cfg.get("tritrain", {}),
        {
            "base_model": mconfig,
            "base_train": tconfig,
            "bootstrap_size": args.bootstrap_size,
            "max_episodes": args.max_episodes,
            "seed": args.seed,
        },
    )
    outputs = []
    if args.compare_baseline:
        if not args.test:
            raise UsageError("--compare-baseline requires --test")
        test = _all_utterances(_load(args.test, None, args.scoring))
        seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else [args.seed]
        reports = []
        from dataclasses import replace as _replace

        for seed in seeds:
            rep = tritrain.baseline_compare(
                labeled, dev, test, unlabeled, _replace(config, seed=seed), args.scoring
            )
            reports.append(rep.as_dict())
            print(json.dumps(rep.as_dict()))
        if args.compare_out:
            with open(args.compare_out, "w", encoding="utf-8") as fh:
                json.dump(reports, fh, indent=2, sort_keys=True)
            outputs.append(args.compare_out)
        write_manifest(
            "tritrain",
            argv,
            {"tritrain": _config_dict(config)},
            seeds,
            [args.labeled, args.dev, args.unlabeled, args.test],
            outputs,
        )
        return EXIT_OK

    state, store = tritrain.run(labeled, dev, unlabeled, config, args.scoring)
    store.save(args.store_out)
    outputs.append(args.store_out)
    if args.reports_out:
        with open(args.reports_out, "w", encoding="utf-8") as fh:
            for report in state.reports:
                fh.write(json.dumps(report.as_dict()) + "\n")
        outputs.append(args.reports_out)
    print(
        f"ran {state.episode} episode(s), {len(store)} consensus record(s), "
        f"dev EMR {['%.4f' % e for e in state.reports[-1].dev_emr]}"
    )
    write_manifest(
        "tritrain",
        argv,
        {"tritrain": _config_dict(config)},
        [args.seed],
        [args.labeled, args.dev, args.unlabeled],
        outputs,
    )
    return EXIT_OK


def _config_dict(config: tritrain.TriTrainConfig) -> dict:
    out = asdict(config)
    return out


def cmd_resolve(args, argv) -> int:
    store = tritrain.PseudoLabelStore.load(args.store)
    resolved = tritrain.resolve_consensus(store, args.seed)
    corpus = _load(args.corpus, args.in_format, args.scoring)
    labeled = tritrain.apply_pseudo_labels(corpus, resolved)
    save_corpus(labeled, args.out)
    attached = sum(
        1 for u in labeled.utterances() if u.provenance == "pseudo"
    )
    print(f"resolved {len(resolved)} utterance(s), attached {attached} pseudo label set(s)")
    write_manifest(
        "resolve", argv, {}, [args.seed], [args.store, args.corpus], [args.out]
    )
    return EXIT_OK


def cmd_noise(args, argv) -> int:
    corpus = _load(args.corpus, args.in_format, args.scoring)
    noised, achieved = inject_word_errors(corpus, args.wer, args.seed)
    save_corpus(noised, args.out)
    print(f"achieved WER {achieved:.4f} (target {args.wer:.4f})")
    write_manifest(
        "noise",
        argv,
        {"target_wer": args.wer},
        [args.seed],
        [args.corpus],
        [args.out],
    )
    return EXIT_OK


def cmd_review_serve(args, argv) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    corpus = _load(args.corpus, args.in_format, args.scoring)
    if args.store:
        if args.seed is None:
            raise UsageError("--store requires --seed for consensus resolution")
        store = tritrain.PseudoLabelStore.load(args.store)
        corpus = tritrain.apply_pseudo_labels(
            corpus, tritrain.resolve_consensus(store, args.seed)
        )
    session = review.ReviewSession(corpus)
    import os

    if args.log and os.path.exists(args.log):
        for decision in review.read_log(args.log):
            review.apply_decision(session, decision)
        print(f"replayed {len(session.history)} decision(s) from {args.log}")
    app = create_app(
        session,
        ServiceConfig(
            log_path=args.log, export_path=args.export_out, assets_dir=args.assets
        ),
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_replay(args, argv) -> int:
    manifest = load_manifest(args.manifest)
    code = main(list(manifest.argv))
    if code != EXIT_OK:
        print(f"replayed command failed with exit code {code}", file=sys.stderr)
        return EXIT_RUNTIME
    mismatched = []
    for path, digest in manifest.outputs.items():
        if sha256_file(path) != digest:
            mismatched.append(path)
    if mismatched:
        print(f"outputs differ after replay: {mismatched}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"replay reproduced {len(manifest.outputs)} output(s) bit-identically")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _add_corpus_args(p):
    p.add_argument("--corpus", required=True)
    p.add_argument("--scoring", choices=("relax", "full"), default="relax")
    p.add_argument("--in-format", choices=("conll", "jsonl"), default=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="intentlayer", description=__doc__)
    parser.add_argument("--json-errors", action="store_true")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert between corpus formats")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scoring", choices=("relax", "full"), default="relax")
    p.add_argument("--in-format", choices=("conll", "jsonl"), default=None)
    p.add_argument("--out-format", choices=("conll", "jsonl"), default=None)
    p.add_argument("--to-relax", action="store_true")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("validate", help="report corpus rule violations")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--scoring", choices=("relax", "full"), default="relax")
    p.add_argument("--in-format", choices=("conll", "jsonl"), default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="intent/concept distribution tables")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--scoring", choices=("relax", "full"), default="relax")
    p.add_argument("--in-format", choices=("conll", "jsonl"), default=None)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train the joint intent+slot model")
    _add_corpus_args(p)
    p.add_argument("--train-split", default="train")
    p.add_argument("--dev-split", default="dev")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--config")
    p.add_argument("--feature-dim", type=int)
    p.add_argument("--intent-threshold", type=float)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--regularization", type=float)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a split")
    p.add_argument("--model", required=True)
    _add_corpus_args(p)
    p.add_argument("--split", default="test")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("score", help="score a predicted corpus against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--scoring", choices=("relax", "full"), default="relax")
    p.add_argument("--in-format", choices=("conll", "jsonl"), default=None)
    p.add_argument("--split")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("pbt", help="population-based hyperparameter search")
    _add_corpus_args(p)
    p.add_argument("--train-split", default="train")
    p.add_argument("--dev-split", default="dev")
    p.add_argument("--out", required=True)
    p.add_argument("--log-out")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--population", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--config")
    p.add_argument("--feature-dim", type=int)
    p.add_argument("--intent-threshold", type=float)
    p.set_defaults(func=cmd_pbt)

    p = sub.add_parser("tritrain", help="episodic tri-training")
    p.add_argument("--labeled", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--unlabeled", required=True)
    p.add_argument("--scoring", choices=("relax", "full"), default="relax")
    p.add_argument("--store-out", default="pseudo-labels.jsonl")
    p.add_argument("--reports-out")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-episodes", type=int)
    p.add_argument("--bootstrap-size", type=float)
    p.add_argument("--feature-dim", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--regularization", type=float)
    p.add_argument("--config")
    p.add_argument("--compare-baseline", action="store_true")
    p.add_argument("--test")
    p.add_argument("--seeds", help="comma-separated seed list for --compare-baseline")
    p.add_argument("--compare-out")
    p.set_defaults(func=cmd_tritrain)

    p = sub.add_parser("resolve", help="resolve consensus store into pseudo labels")
    p.add_argument("--store", required=True)
    _add_corpus_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("noise", help="inject word errors at a target WER")
    _add_corpus_args(p)
    p.add_argument("--wer", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("review-serve", help="serve the review API and UI")
    _add_corpus_args(p)
    p.add_argument("--log", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--store")
    p.add_argument("--seed", type=int)
    p.add_argument("--export-out")
    p.add_argument("--assets")
    p.set_defaults(func=cmd_review_serve)

    p = sub.add_parser("replay", help="re-run a manifest and verify outputs")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    json_errors = "--json-errors" in argv
    try:
        args = parser.parse_args(argv)
        return args.func(args, argv)
    except UsageError as exc:
        _report_error("usage", EXIT_USAGE, str(exc), json_errors)
        return EXIT_USAGE
    except (CorpusError, MetricError, ModelError, tritrain.TriTrainError, review.ReviewError) as exc:
        _report_error("data", EXIT_DATA, str(exc), json_errors)
        return EXIT_DATA
    except OSError as exc:
        _report_error("io", EXIT_RUNTIME, str(exc), json_errors)
        return EXIT_RUNTIME


def _report_error(code: str, exit_code: int, message: str, as_json: bool) -> None:
    if as_json:
        print(
            json.dumps({"error": {"code": code, "exit": exit_code, "message": message}}),
            file=sys.stderr,
        )
    else:
        print(f"error: {message}", file=sys.stderr)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
