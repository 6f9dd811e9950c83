"""HTTP facade over the runtime: search, recommendations, walks, documents,
templates, expansion, and admin, all JSON.

Handlers own their response bytes (wire.dumps) rather than delegating to the
framework encoder, so recorded sessions replay byte-for-byte after a
snapshot restore.
"""

from __future__ import annotations

import json
import os
from typing import Literal

from fastapi import FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from pydantic import BaseModel, Field

from . import wire
from .config import Settings
from .errors import (
    AntipodalVectors,
    BadPayload,
    DegenerateVector,
    DimensionMismatch,
    EmptyIndex,
    FileUnreadable,
    InvalidQuerySpec,
    MalformedDocument,
    NonPositiveWeight,
    NotFound,
    ProviderUnavailable,
    UnknownTemplate,
    VectorLensError,
)
from .index import BadLine, VectorIndex
from .runtime import Runtime
from .wire import MAX_K


# -- request bodies ------------------------------------------------------


class TermModel(BaseModel):
    text: str
    weight: float = 1.0
    polarity: Literal["more", "less"] = "more"


class ContextItemModel(BaseModel):
    doc_id: str | None = None
    image: str | None = None
    weight: float = 1.0


class QuerySpecModel(BaseModel):
    terms: list[TermModel]
    template: str | None = None
    context_items: list[ContextItemModel] = []
    demote_quality: bool = False
    demote_weight: float | None = None
    k: int = Field(default=20, ge=1, le=MAX_K)
    filter: dict[str, str] | None = None


class RecommendBody(BaseModel):
    seed_ids: list[str]
    k: int = Field(default=20, ge=1, le=MAX_K)


class WalkStartModel(BaseModel):
    doc_id: str | None = None
    vector: list[float] | None = None
    query_spec: QuerySpecModel | None = None


class WalkParamsModel(BaseModel):
    layers: int | None = Field(default=None, ge=1)
    children: int | None = Field(default=None, ge=1)
    neighbours: int | None = Field(default=None, ge=1)
    seed: int | None = None


class WalkBody(BaseModel):
    start: WalkStartModel
    params: WalkParamsModel | None = None
    include_root_vector: bool = False
    literal_filtering: bool = False


class ExpandBody(BaseModel):
    query_spec: QuerySpecModel
    liked_ids: list[str] = []


class PathBody(BaseModel):
    path: str


# -- response shapes (published schema; handlers emit matching dicts) ----


class HitModel(BaseModel):
    id: str
    score: float = Field(ge=-1.0, le=1.0)
    rank: int = Field(ge=1)


class SearchResponse(BaseModel):
    hits: list[HitModel]
    compiled_query_norm: float
    trace: dict | None = None


class RecommendResponse(BaseModel):
    hits: list[HitModel]


class TreeNodeModel(BaseModel):
    vector: list[float] | None = None
    doc_id: str | None
    children: list["TreeNodeModel"]


class WalkResponse(BaseModel):
    tree: TreeNodeModel


class DocumentModel(BaseModel):
    id: str
    title: str
    media_ref: str | None
    metadata: dict[str, str]
    vector: list[float]


class IngestErrorModel(BaseModel):
    line: int
    error: str


class IngestResponse(BaseModel):
    ingested: int
    skipped: int
    errors: list[IngestErrorModel]


class TemplateModel(BaseModel):
    id: str
    pattern: str
    description: str


class ExpandResponse(BaseModel):
    query_spec: QuerySpecModel


class HealthResponse(BaseModel):
    status: str
    dimension: int
    doc_count: int


class DeleteResponse(BaseModel):
    deleted: bool


class ReloadTemplatesResponse(BaseModel):
    templates: int


class SnapshotResponse(BaseModel):
    written: int
    path: str


class RestoreResponse(BaseModel):
    restored: int
    path: str


class ApiErrorModel(BaseModel):
    code: Literal[
        "bad_request",
        "not_found",
        "dimension_mismatch",
        "degenerate_query",
        "provider_unavailable",
        "internal",
    ]
    message: str
    detail: dict | list | None = None


TreeNodeModel.model_rebuild()

REQUEST_SCHEMAS = {
    "query_spec": QuerySpecModel,
    "recommend": RecommendBody,
    "walk": WalkBody,
    "expand": ExpandBody,
}

RESPONSE_SCHEMAS = {
    "search": SearchResponse,
    "recommend": RecommendResponse,
    "walk": WalkResponse,
    "document": DocumentModel,
    "ingest": IngestResponse,
    "templates": TemplateModel,
    "expand": ExpandResponse,
    "health": HealthResponse,
    "delete": DeleteResponse,
    "reload_templates": ReloadTemplatesResponse,
    "snapshot": SnapshotResponse,
    "restore": RestoreResponse,
    "error": ApiErrorModel,
}


# -- error mapping -------------------------------------------------------

_ERROR_MAP: list[tuple[type, str, int]] = [
    (NotFound, "not_found", 404),
    (DimensionMismatch, "dimension_mismatch", 400),
    (DegenerateVector, "degenerate_query", 422),
    (AntipodalVectors, "degenerate_query", 422),
    (ProviderUnavailable, "provider_unavailable", 503),
    (UnknownTemplate, "bad_request", 400),
    (InvalidQuerySpec, "bad_request", 400),
    (BadPayload, "bad_request", 400),
    (MalformedDocument, "bad_request", 400),
    (NonPositiveWeight, "bad_request", 400),
    (EmptyIndex, "bad_request", 400),
    (FileUnreadable, "bad_request", 400),
]


def classify_error(exc: Exception) -> tuple[str, int]:
    for exc_type, code, status in _ERROR_MAP:
        if isinstance(exc, exc_type):
            return code, status
    if isinstance(exc, (ValueError, VectorLensError)):
        return "bad_request", 400
    return "internal", 500


def _json(payload, status: int = 200) -> Response:
    return Response(
        content=wire.dumps(payload), media_type="application/json", status_code=status
    )


def _error_response(code: str, message: str, status: int, detail=None) -> Response:
    body = {"code": code, "message": message}
    if detail is not None:
        body["detail"] = detail
    return _json(body, status=status)


def create_app(settings: Settings | None = None, index: VectorIndex | None = None) -> FastAPI:
    runtime = Runtime(settings, index)
    app = FastAPI(title="vectorlens", version="0.1.0")
    app.state.runtime = runtime

    if runtime.settings.cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[runtime.settings.cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(VectorLensError)
    def handle_engine_error(_request: Request, exc: VectorLensError) -> Response:
        code, status = classify_error(exc)
        return _error_response(code, str(exc), status)

    @app.exception_handler(ValueError)
    def handle_value_error(_request: Request, exc: ValueError) -> Response:
        return _error_response("bad_request", str(exc), 400)

    @app.exception_handler(RequestValidationError)
    def handle_validation_error(_request: Request, exc: RequestValidationError) -> Response:
        detail = [
            {"loc": [str(part) for part in err.get("loc", ())], "msg": str(err.get("msg", ""))}
            for err in exc.errors()
        ]
        return _error_response("bad_request", "request body failed validation", 400, detail)

    @app.get("/v1/healthz")
    def healthz() -> Response:
        return _json(runtime.health_payload())

    @app.post("/v1/search")
    def search(spec: QuerySpecModel, debug: int = Query(default=0)) -> Response:
        return _json(runtime.search_payload(spec.model_dump(), debug=bool(debug)))

    @app.post("/v1/recommend")
    def recommend(body: RecommendBody) -> Response:
        return _json(runtime.recommend_payload(body.seed_ids, body.k))

    @app.post("/v1/walk")
    def walk(body: WalkBody) -> Response:
        params = wire.walk_params_from_dict(
            body.params.model_dump(exclude_none=True) if body.params else None,
            runtime.settings.walk_params(),
        )
        return _json(
            runtime.walk_payload(
                body.start.model_dump(),
                params,
                include_root_vector=body.include_root_vector,
                literal_filtering=body.literal_filtering,
            )
        )

    @app.post("/v1/documents")
    async def ingest_documents(
        request: Request, embed_missing: int = Query(default=0)
    ) -> Response:
        raw = await request.body()
        content_type = request.headers.get("content-type", "").split(";")[0].strip()
        records: list[tuple[int, object]] = []
        if content_type == "application/x-ndjson":
            for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    records.append((lineno, json.loads(line)))
                except json.JSONDecodeError as exc:
                    records.append((lineno, BadLine(str(exc))))
        else:
            try:
                parsed = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise BadPayload(f"body is not valid JSON: {exc}") from exc
            if not isinstance(parsed, list):
                raise BadPayload("expected a JSON array of documents or NDJSON body")
            records = list(enumerate(parsed, start=1))
        return _json(runtime.ingest_payload(records, embed_missing=bool(embed_missing)))

    @app.get("/v1/documents/{doc_id}")
    def get_document(doc_id: str) -> Response:
        return _json(runtime.document_payload(doc_id))

    @app.delete("/v1/documents/{doc_id}")
    def delete_document(doc_id: str) -> Response:
        return _json(runtime.delete_payload(doc_id))

    @app.get("/v1/templates")
    def templates() -> Response:
        return _json(runtime.templates_payload())

    @app.post("/v1/expand")
    def expand(body: ExpandBody) -> Response:
        return _json(runtime.expand_payload(body.query_spec.model_dump(), body.liked_ids))

    @app.post("/v1/admin/reload-templates")
    def reload_templates() -> Response:
        return _json(runtime.reload_templates_payload())

    @app.post("/v1/admin/snapshot")
    def snapshot(body: PathBody) -> Response:
        return _json(runtime.snapshot_payload(body.path))

    @app.post("/v1/admin/restore")
    def restore(body: PathBody) -> Response:
        return _json(runtime.restore_payload(body.path))

    @app.get("/v1/schema")
    def schema() -> Response:
        return _json(
            {
                "requests": {name: model.model_json_schema() for name, model in REQUEST_SCHEMAS.items()},
                "responses": {name: model.model_json_schema() for name, model in RESPONSE_SCHEMAS.items()},
            }
        )

    console_dir = runtime.settings.console_dir
    if console_dir and os.path.isdir(console_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/console", StaticFiles(directory=console_dir, html=True), name="console")

    return app


def serve(settings: Settings) -> None:
    import uvicorn

    host, port = settings.bind_address()
    uvicorn.run(create_app(settings), host=host, port=port)
