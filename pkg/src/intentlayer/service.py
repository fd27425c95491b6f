"""HTTP/JSON API for the review workflow (FastAPI).

Decision writes are serialized through a lock and appended durably to the
decision log before the response is sent; every displayed count comes from
the session so clients never do their own arithmetic over history.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import __version__
from .corpus.formats import save_corpus
from .corpus.types import EXCLUSIVE_INTENT, INTENT_LABELS, Utterance
from .review import (
    Decision,
    ProgressReport,
    ReviewError,
    ReviewSession,
    append_log,
    apply_decision,
    export_final,
    progress,
)

DEFAULT_PAGE_SIZE = 50


@dataclass
class ServiceConfig:
    log_path: Optional[str] = None
    export_path: Optional[str] = None
    assets_dir: Optional[str] = None


class ProgressOut(BaseModel):
    total_pseudo: int
    decided_pseudo: int
    erroneous: int
    erroneous_percent: float
    non_pseudo: int
    decided_queue: int
    remaining: int


class SessionOut(BaseModel):
    corpus_name: str
    toolkit_version: str
    groups: int
    progress: ProgressOut


class GroupOut(BaseModel):
    id: str
    label: str
    intents: list[str]
    size: int
    decided: int


class TokenOut(BaseModel):
    surface: str
    truncated: bool


class UtteranceOut(BaseModel):
    id: str
    dialogue_id: str
    tokens: list[TokenOut]
    slots: Optional[list[str]]
    pseudo_intents: Optional[list[str]]
    final_intents: Optional[list[str]]
    decided: bool


class PageOut(BaseModel):
    items: list[UtteranceOut]
    cursor: int
    next_cursor: Optional[int]
    total: int


class DecisionIn(BaseModel):
    utterance_id: str
    verdicts: dict[str, str] = Field(default_factory=dict)
    replacement: Optional[list[str]] = None
    annotator: str = "anonymous"
    timestamp: str = ""


class DecisionOut(BaseModel):
    utterance_id: str
    final_intents: list[str]
    progress: ProgressOut


class ExportOut(BaseModel):
    path: Optional[str]
    utterances: int


class SchemaOut(BaseModel):
    intents: list[str]
    exclusive: list[str]


def _progress_out(report: ProgressReport) -> ProgressOut:
    return ProgressOut(**report.as_dict())


def _utterance_out(session: ReviewSession, utt: Utterance) -> UtteranceOut:
    pseudo = session.pseudo.get(utt.id)
    final = session.final.get(utt.id)
    return UtteranceOut(
        id=utt.id,
        dialogue_id=utt.dialogue_id,
        tokens=[TokenOut(surface=t.surface, truncated=t.truncated) for t in utt.tokens],
        slots=None if utt.slots is None else [str(t) for t in utt.slots],
        pseudo_intents=None if pseudo is None else sorted(pseudo),
        final_intents=None if final is None else sorted(final),
        decided=final is not None,
    )


def _page(session: ReviewSession, ids: list[str], cursor: int, limit: int) -> PageOut:
    if cursor < 0:
        raise HTTPException(422, detail={"code": "bad_cursor", "message": "cursor < 0"})
    window = ids[cursor : cursor + limit]
    next_cursor = cursor + limit if cursor + limit < len(ids) else None
    return PageOut(
        items=[_utterance_out(session, session.utterance(uid)) for uid in window],
        cursor=cursor,
        next_cursor=next_cursor,
        total=len(ids),
    )


def create_app(session: ReviewSession, config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="intentlayer review service", version=__version__)
    lock = threading.Lock()

    @app.get("/api/session", response_model=SessionOut)
    def get_session() -> SessionOut:
        return SessionOut(
            corpus_name=session.corpus.name,
            toolkit_version=__version__,
            groups=len(session.groups),
            progress=_progress_out(progress(session)),
        )

    @app.get("/api/groups", response_model=list[GroupOut])
    def get_groups() -> list[GroupOut]:
        return [
            GroupOut(
                id=g.id,
                label=g.label,
                intents=sorted(g.intents),
                size=g.size,
                decided=sum(1 for uid in g.utterance_ids if uid in session.final),
            )
            for g in session.groups
        ]

    @app.get("/api/groups/{group_id}", response_model=PageOut)
    def get_group_page(
        group_id: str,
        cursor: int = Query(0, ge=0),
        limit: int = Query(DEFAULT_PAGE_SIZE, ge=1, le=500),
    ) -> PageOut:
        try:
            group = session.group(group_id)
        except ReviewError as exc:
            raise HTTPException(404, detail={"code": exc.code, "message": str(exc)})
        return _page(session, list(group.utterance_ids), cursor, limit)

    @app.get("/api/queue/unlabeled", response_model=PageOut)
    def get_queue(
        cursor: int = Query(0, ge=0),
        limit: int = Query(DEFAULT_PAGE_SIZE, ge=1, le=500),
    ) -> PageOut:
        return _page(session, session.queue_ids, cursor, limit)

    @app.post("/api/decisions", response_model=DecisionOut)
    def post_decision(body: DecisionIn) -> DecisionOut:
        decision = Decision(
            utterance_id=body.utterance_id,
            verdicts=dict(body.verdicts),
            replacement=None if body.replacement is None else frozenset(body.replacement),
            annotator=body.annotator,
            timestamp=body.timestamp,
        )
        with lock:
            try:
                final = apply_decision(session, decision)
            except ReviewError as exc:
                raise HTTPException(
                    409, detail={"code": exc.code, "message": str(exc), **exc.detail}
                )
            if config.log_path:
                append_log(config.log_path, decision)
            report = progress(session)
        return DecisionOut(
            utterance_id=decision.utterance_id,
            final_intents=sorted(final),
            progress=_progress_out(report),
        )

    @app.post("/api/export", response_model=ExportOut)
    def post_export() -> ExportOut:
        with lock:
            try:
                corpus = export_final(session)
            except ReviewError as exc:
                raise HTTPException(
                    409, detail={"code": exc.code, "message": str(exc), **exc.detail}
                )
            if config.export_path:
                save_corpus(corpus, config.export_path)
        return ExportOut(path=config.export_path, utterances=corpus.size())

    @app.get("/api/schema", response_model=SchemaOut)
    def get_schema() -> SchemaOut:
        return SchemaOut(intents=list(INTENT_LABELS), exclusive=[EXCLUSIVE_INTENT])

    if config.assets_dir and Path(config.assets_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.assets_dir, html=True), name="ui")
    return app
