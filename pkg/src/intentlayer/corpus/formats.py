"""Corpus file formats: CoNLL blocks and JSONL, with round-trip identity.

CoNLL layout::

    # corpus = demo
    # scoring = relax

    # split = train
    # id = u1
    # dialogue = d1
    # intents = booking#greeting
    surface<TAB>B-city
    ...
    <blank line>

The leading corpus/scoring header block is optional on input (bare files
default to the ``scoring`` argument and the name "corpus") and always
written on output so that parse(serialize(c)) == c.

JSONL: one header object ``{"corpus": ..., "scoring": ...}`` then one
object per utterance with fields id, dialogue_id, split, tokens, slots,
intents, provenance. UTF-8, LF endings.
"""
from __future__ import annotations

import io
import json
from typing import IO, Optional, Union

from .types import (
    Corpus,
    CorpusError,
    SlotTag,
    Token,
    Utterance,
    format_intents,
    parse_intents,
)

FORMATS = ("conll", "jsonl")

Source = Union[bytes, str, IO[bytes]]


class CorpusFormatError(CorpusError):
    """Malformed corpus file; carries the offending line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def parse_corpus(source: Source, format: str, scoring: str) -> Corpus:
    """Parse a byte stream into a validated :class:`Corpus`.

    Raises :class:`CorpusFormatError` with a line number on malformed input.
    """
    if format not in FORMATS:
        raise CorpusError(f"unknown corpus format {format!r}")
    text = _read_text(source)
    if format == "conll":
        return _parse_conll(text, scoring)
    return _parse_jsonl(text, scoring)


def serialize_corpus(corpus: Corpus, format: str) -> bytes:
    if format not in FORMATS:
        raise CorpusError(f"unknown corpus format {format!r}")
    if format == "conll":
        return _serialize_conll(corpus).encode("utf-8")
    return _serialize_jsonl(corpus).encode("utf-8")


def load_corpus(path: str, format: Optional[str] = None, scoring: str = "relax") -> Corpus:
    fmt = format or guess_format(path)
    with open(path, "rb") as fh:
        return parse_corpus(fh, fmt, scoring)


def save_corpus(corpus: Corpus, path: str, format: Optional[str] = None) -> None:
    fmt = format or guess_format(path)
    with open(path, "wb") as fh:
        fh.write(serialize_corpus(corpus, fmt))


def guess_format(path: str) -> str:
    if path.endswith(".jsonl"):
        return "jsonl"
    if path.endswith(".conll") or path.endswith(".conllu") or path.endswith(".txt"):
        return "conll"
    raise CorpusError(f"cannot guess corpus format from path {path!r}")


# --------------------------------------------------------------------------
# CoNLL


def _parse_conll(text: str, scoring: str) -> Corpus:
    name = "corpus"
    file_scoring: Optional[str] = None
    splits: dict[str, list[Utterance]] = {s: [] for s in ("train", "dev", "test", "test2")}

    comments: dict[str, str] = {}
    rows: list[tuple[int, str, str]] = []  # (line_no, surface, tag-or-"")
    block_start: Optional[int] = None
    saw_header_block = False

    def flush(end_line: int) -> None:
        nonlocal comments, rows, block_start, name, file_scoring, saw_header_block
        if not comments and not rows:
            return
        keys = set(comments)
        if not rows and keys and keys <= {"corpus", "scoring"} and not saw_header_block:
            saw_header_block = True
            name = comments.get("corpus", name)
            file_scoring = comments.get("scoring", file_scoring)
            comments, rows, block_start = {}, [], None
            return
        if not rows:
            raise CorpusFormatError("utterance block has no token lines", end_line)
        if "id" not in comments:
            raise CorpusFormatError("utterance block missing '# id = ...'", block_start)
        split = comments.get("split", "train")
        if split not in splits:
            raise CorpusFormatError(f"unknown split {split!r}", block_start)
        tokens = []
        tags: list[SlotTag] = []
        has_tags = rows[0][2] != ""
        for line_no, surface, tag_text in rows:
            try:
                tokens.append(Token(surface))
            except CorpusError as exc:
                raise CorpusFormatError(str(exc), line_no) from exc
            if (tag_text != "") != has_tags:
                raise CorpusFormatError(
                    "mixed tagged and untagged token lines in one utterance", line_no
                )
            if has_tags:
                try:
                    tags.append(SlotTag.from_string(tag_text, file_scoring or scoring))
                except CorpusError as exc:
                    raise CorpusFormatError(str(exc), line_no) from exc
        try:
            intents = parse_intents(comments.get("intents", "__unlabeled__"))
            utt = Utterance(
                id=comments["id"],
                dialogue_id=comments.get("dialogue", ""),
                tokens=tuple(tokens),
                slots=tuple(tags) if has_tags else None,
                intents=intents,
                provenance=comments.get("provenance", "manual"),
            )
        except CorpusError as exc:
            raise CorpusFormatError(str(exc), block_start) from exc
        splits[split].append(utt)
        comments, rows, block_start = {}, [], None

    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip():
            flush(line_no)
            continue
        if block_start is None:
            block_start = line_no
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" not in body:
                raise CorpusFormatError(f"malformed comment {line!r}", line_no)
            key, _, value = body.partition("=")
            comments[key.strip()] = value.strip()
            continue
        parts = line.split("\t")
        if len(parts) == 1:
            rows.append((line_no, parts[0], ""))
        elif len(parts) == 2:
            rows.append((line_no, parts[0], parts[1]))
        else:
            raise CorpusFormatError(
                f"expected 'surface<TAB>tag', got {line!r}", line_no
            )
    flush(len(text.splitlines()) + 1)

    effective = file_scoring or scoring
    if file_scoring is not None and file_scoring != scoring:
        raise CorpusFormatError(
            f"file declares scoring {file_scoring!r} but {scoring!r} was requested"
        )
    return Corpus(name=name, scoring=effective, splits=splits)


def _serialize_conll(corpus: Corpus) -> str:
    out = io.StringIO()
    out.write(f"# corpus = {corpus.name}\n")
    out.write(f"# scoring = {corpus.scoring}\n")
    out.write("\n")
    for split in ("train", "dev", "test", "test2"):
        for utt in corpus.splits[split]:
            out.write(f"# split = {split}\n")
            out.write(f"# id = {utt.id}\n")
            out.write(f"# dialogue = {utt.dialogue_id}\n")
            out.write(f"# intents = {format_intents(utt.intents)}\n")
            out.write(f"# provenance = {utt.provenance}\n")
            for i, token in enumerate(utt.tokens):
                if utt.slots is None:
                    out.write(f"{token.surface}\n")
                else:
                    out.write(f"{token.surface}\t{utt.slots[i]}\n")
            out.write("\n")
    return out.getvalue()


# --------------------------------------------------------------------------
# JSONL


def _parse_jsonl(text: str, scoring: str) -> Corpus:
    name = "corpus"
    file_scoring: Optional[str] = None
    splits: dict[str, list[Utterance]] = {s: [] for s in ("train", "dev", "test", "test2")}

    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"invalid JSON: {exc.msg}", line_no) from exc
        if not isinstance(obj, dict):
            raise CorpusFormatError("expected a JSON object", line_no)
        if "corpus" in obj and "id" not in obj:
            name = obj["corpus"]
            file_scoring = obj.get("scoring")
            continue
        try:
            tokens = []
            for tok in obj["tokens"]:
                token = Token(tok["surface"])
                if bool(tok.get("truncated", token.truncated)) != token.truncated:
                    raise CorpusError(
                        f"token {token.surface!r}: truncated flag inconsistent "
                        "with trailing '*'"
                    )
                tokens.append(token)
            raw_slots = obj.get("slots")
            slots = None
            if raw_slots is not None:
                slots = tuple(
                    SlotTag.from_string(t, file_scoring or scoring) for t in raw_slots
                )
            raw_intents = obj.get("intents")
            intents = None if raw_intents is None else frozenset(raw_intents)
            utt = Utterance(
                id=obj["id"],
                dialogue_id=obj.get("dialogue_id", ""),
                tokens=tuple(tokens),
                slots=slots,
                intents=intents,
                provenance=obj.get("provenance", "manual"),
            )
        except KeyError as exc:
            raise CorpusFormatError(f"missing field {exc.args[0]!r}", line_no) from exc
        except CorpusError as exc:
            raise CorpusFormatError(str(exc), line_no) from exc
        split = obj.get("split", "train")
        if split not in splits:
            raise CorpusFormatError(f"unknown split {split!r}", line_no)
        splits[split].append(utt)

    effective = file_scoring or scoring
    if file_scoring is not None and file_scoring != scoring:
        raise CorpusFormatError(
            f"file declares scoring {file_scoring!r} but {scoring!r} was requested"
        )
    return Corpus(name=name, scoring=effective, splits=splits)


def _utterance_to_obj(utt: Utterance, split: str) -> dict:
    return {
        "id": utt.id,
        "dialogue_id": utt.dialogue_id,
        "split": split,
        "tokens": [{"surface": t.surface, "truncated": t.truncated} for t in utt.tokens],
        "slots": None if utt.slots is None else [str(t) for t in utt.slots],
        "intents": None if utt.intents is None else sorted(utt.intents),
        "provenance": utt.provenance,
    }


def _serialize_jsonl(corpus: Corpus) -> str:
    lines = [json.dumps({"corpus": corpus.name, "scoring": corpus.scoring}, ensure_ascii=False)]
    for split in ("train", "dev", "test", "test2"):
        for utt in corpus.splits[split]:
            lines.append(json.dumps(_utterance_to_obj(utt, split), ensure_ascii=False))
    return "\n".join(lines) + "\n"
