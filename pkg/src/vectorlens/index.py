"""Document store with exact cosine k-NN, metadata filtering, and JSONL I/O.

Concurrency contract: many concurrent readers or one writer. Reads operate
on an immutable view captured under the read lock, so a search (or a whole
recommendation walk) never observes a partially applied upsert. Scoring is
deliberately brute force: results must match a linear-scan oracle exactly,
and the (query, k, filter, exclude) interface leaves room to slot in an
approximate backend later without API changes.
"""

from __future__ import annotations

import json
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import vecmath
from .embedder import Embedder, EmbedRequest
from .errors import (
    DimensionMismatch,
    FileUnreadable,
    MalformedDocument,
    NotFound,
    VectorLensError,
)

INGEST_WRITE_BATCH = 100


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    vector: np.ndarray
    media_ref: str | None = None
    metadata: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class SearchHit:
    id: str
    score: float
    rank: int


@dataclass(frozen=True)
class IngestReport:
    ingested: int
    skipped: int
    errors: tuple[tuple[int, str], ...] = ()


class _RWLock:
    """Readers share; a writer excludes everyone. No fairness guarantees."""

    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._readers = 0
        self._writing = False

    @contextmanager
    def read(self):
        with self._cond:
            while self._writing:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                if self._readers == 0:
                    self._cond.notify_all()

    @contextmanager
    def write(self):
        with self._cond:
            while self._writing or self._readers > 0:
                self._cond.wait()
            self._writing = True
        try:
            yield
        finally:
            with self._cond:
                self._writing = False
                self._cond.notify_all()


def _validate_document(doc: Document, dimension: int) -> Document:
    if not isinstance(doc.id, str) or not doc.id:
        raise MalformedDocument("document id must be a nonempty string")
    if not isinstance(doc.title, str):
        raise MalformedDocument(f"document {doc.id!r}: title must be a string")
    for key, value in doc.metadata.items():
        if not isinstance(key, str) or not isinstance(value, str):
            raise MalformedDocument(f"document {doc.id!r}: metadata must map strings to strings")
    vec = vecmath.as_vector(doc.vector)
    if vec.shape[0] != dimension:
        raise DimensionMismatch(
            f"document {doc.id!r}: vector width {vec.shape[0]}, index dimension {dimension}"
        )
    vecmath.check_unit(vec)
    vec.setflags(write=False)
    return Document(
        id=doc.id,
        title=doc.title,
        vector=vec,
        media_ref=doc.media_ref,
        metadata=dict(doc.metadata),
    )


class IndexView:
    """Immutable point-in-time view; all read operations live here."""

    def __init__(self, dimension: int, docs: Mapping[str, Document]):
        self.dimension = dimension
        self._docs = docs

    def count(self) -> int:
        return len(self._docs)

    def get(self, doc_id: str) -> Document:
        try:
            return self._docs[doc_id]
        except KeyError:
            raise NotFound(f"document {doc_id!r} not found") from None

    def documents(self) -> Iterable[Document]:
        return self._docs.values()

    def nn_search(
        self,
        q: np.ndarray,
        k: int,
        metadata_filter: Mapping[str, str] | None = None,
        exclude: set[str] | frozenset[str] | None = None,
    ) -> list[SearchHit]:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        q = vecmath.as_vector(q)
        if q.shape[0] != self.dimension:
            raise DimensionMismatch(
                f"query width {q.shape[0]}, index dimension {self.dimension}"
            )
        exclude = exclude or frozenset()
        scored: list[tuple[float, str]] = []
        for doc in self._docs.values():
            if doc.id in exclude:
                continue
            if metadata_filter is not None and not _matches(doc.metadata, metadata_filter):
                continue
            # Scores are cosines: clamp the raw dot to [-1, 1] so float noise
            # on (near-)identical vectors cannot leak out of range.
            scored.append((min(1.0, max(-1.0, float(np.dot(doc.vector, q)))), doc.id))
        scored.sort(key=lambda pair: (-pair[0], pair[1]))
        return [
            SearchHit(id=doc_id, score=score, rank=rank)
            for rank, (score, doc_id) in enumerate(scored[:k], start=1)
        ]


def _matches(metadata: Mapping[str, str], metadata_filter: Mapping[str, str]) -> bool:
    return all(metadata.get(key) == value for key, value in metadata_filter.items())


class VectorIndex:
    """Keyed document store over a fixed deployment dimension."""

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValueError(f"dimension must be positive, got {dimension}")
        self.dimension = dimension
        self._docs: dict[str, Document] = {}
        self._lock = _RWLock()

    # -- reads ---------------------------------------------------------

    def snapshot_view(self) -> IndexView:
        with self._lock.read():
            return IndexView(self.dimension, dict(self._docs))

    def count(self) -> int:
        return self.snapshot_view().count()

    def get(self, doc_id: str) -> Document:
        return self.snapshot_view().get(doc_id)

    def nn_search(
        self,
        q: np.ndarray,
        k: int,
        metadata_filter: Mapping[str, str] | None = None,
        exclude: set[str] | frozenset[str] | None = None,
    ) -> list[SearchHit]:
        return self.snapshot_view().nn_search(q, k, metadata_filter, exclude)

    # -- writes --------------------------------------------------------

    def upsert(self, doc: Document) -> None:
        validated = _validate_document(doc, self.dimension)
        with self._lock.write():
            self._docs[validated.id] = validated

    def delete(self, doc_id: str) -> bool:
        with self._lock.write():
            return self._docs.pop(doc_id, None) is not None

    def _upsert_batch(self, docs: Sequence[Document]) -> None:
        # Batched writer sections bound reader starvation during ingest.
        for start in range(0, len(docs), INGEST_WRITE_BATCH):
            with self._lock.write():
                for doc in docs[start : start + INGEST_WRITE_BATCH]:
                    self._docs[doc.id] = doc

    # -- bulk I/O ------------------------------------------------------

    def ingest_records(
        self,
        records: Iterable[tuple[int, object]],
        embed_missing: bool = False,
        embedder: Embedder | None = None,
    ) -> IngestReport:
        """Upsert (line_number, parsed-JSON) records, recording per-line errors.

        Parsing and embedding happen outside the writer lock.
        """
        ready: list[Document] = []
        errors: list[tuple[int, str]] = []
        for lineno, record in records:
            try:
                ready.append(
                    _validate_document(
                        _record_to_document(record, embed_missing, embedder),
                        self.dimension,
                    )
                )
            except VectorLensError as exc:
                errors.append((lineno, f"{type(exc).__name__}: {exc}"))
            except (TypeError, ValueError) as exc:
                errors.append((lineno, f"MalformedDocument: {exc}"))
        self._upsert_batch(ready)
        return IngestReport(ingested=len(ready), skipped=len(errors), errors=tuple(errors))

    def ingest_jsonl(
        self,
        path: str,
        embed_missing: bool = False,
        embedder: Embedder | None = None,
    ) -> IngestReport:
        return self.ingest_records(
            _read_jsonl(path, strict=False), embed_missing, embedder
        )

    def snapshot(self, path: str) -> int:
        """Write all documents as JSONL sorted by id; bit-exact reproducible."""
        view = self.snapshot_view()
        docs = sorted(view.documents(), key=lambda d: d.id)
        with open(path, "w", encoding="utf-8") as fh:
            for doc in docs:
                fh.write(json.dumps(document_to_record(doc), ensure_ascii=False))
                fh.write("\n")
        return len(docs)

    def restore(self, path: str) -> int:
        """Replace the full index contents from a snapshot file. Strict."""
        docs = []
        for lineno, record in _read_jsonl(path, strict=True):
            try:
                docs.append(
                    _validate_document(_record_to_document(record, False, None), self.dimension)
                )
            except MalformedDocument as exc:
                raise MalformedDocument(f"line {lineno}: {exc}") from exc
            except (VectorLensError, TypeError, ValueError) as exc:
                raise MalformedDocument(f"line {lineno}: {exc}") from exc
        with self._lock.write():
            self._docs = {doc.id: doc for doc in docs}
        return len(docs)


def _read_jsonl(path: str, strict: bool) -> Iterable[tuple[int, object]]:
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"cannot read {path!r}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                if strict:
                    raise MalformedDocument(f"line {lineno}: invalid JSON: {exc}") from exc
                yield lineno, BadLine(str(exc))


class BadLine:
    """Placeholder record for a line that failed JSON parsing."""

    def __init__(self, message: str):
        self.message = message


def _record_to_document(
    record: object, embed_missing: bool, embedder: Embedder | None
) -> Document:
    if isinstance(record, BadLine):
        raise MalformedDocument(f"invalid JSON: {record.message}")
    if not isinstance(record, dict):
        raise MalformedDocument("expected a JSON object")
    doc_id = record.get("id")
    if not isinstance(doc_id, str) or not doc_id:
        raise MalformedDocument("missing or empty 'id'")
    title = record.get("title", "")
    media_ref = record.get("media_ref")
    metadata = record.get("metadata") or {}
    if not isinstance(metadata, dict):
        raise MalformedDocument(f"document {doc_id!r}: 'metadata' must be an object")

    if "vector" in record and record["vector"] is not None:
        vector = vecmath.as_vector(record["vector"])
    elif embed_missing:
        if embedder is None:
            raise MalformedDocument("embed_missing requires an embedder")
        text = record.get("text_for_embedding")
        if isinstance(text, str) and text:
            req = EmbedRequest(kind="text", payload=text)
        elif isinstance(media_ref, str) and media_ref:
            req = EmbedRequest(kind="image", payload=media_ref)
        else:
            raise MalformedDocument(
                f"document {doc_id!r}: no vector and nothing to embed"
            )
        vector = embedder.embed(req)
    else:
        raise MalformedDocument(f"document {doc_id!r}: no vector present")

    return Document(
        id=doc_id,
        title=title if isinstance(title, str) else str(title),
        vector=vector,
        media_ref=media_ref if isinstance(media_ref, str) else None,
        metadata=metadata,
    )


def document_to_record(doc: Document) -> dict:
    """JSONL/wire shape of a document; key order is fixed for reproducibility."""
    return {
        "id": doc.id,
        "title": doc.title,
        "media_ref": doc.media_ref,
        "metadata": dict(doc.metadata),
        "vector": [float(x) for x in doc.vector.tolist()],
    }
