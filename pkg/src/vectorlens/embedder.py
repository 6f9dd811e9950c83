"""Embedding providers: a deterministic mock and a JSON-over-HTTP client.

The mock provider hashes (kind, payload, seed) into a counter-based RNG and
draws a standard-normal vector, so outputs are uniform on the sphere and
byte-identical across calls. It carries no semantics between related
strings; geometry-aware tests use the "fixture:" payload sigil instead,
which parses a literal comma-separated vector.

This module also hosts the pluggable query-expansion provider (stub +
remote adapter).
"""

from __future__ import annotations

import hashlib
import os
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence
from urllib.parse import urlparse

import numpy as np
import requests

from . import vecmath
from .errors import BadPayload, DimensionMismatch, ProviderUnavailable

FIXTURE_SIGIL = "fixture:"
MAX_TEXT_BYTES = 8192
MAX_BATCH = 256
MAX_EXPANSION_TERMS = 8


@dataclass(frozen=True)
class EmbedRequest:
    kind: str  # "text" | "image"
    payload: str

    def validate(self) -> None:
        if self.kind not in ("text", "image"):
            raise BadPayload(f"unknown embed kind {self.kind!r}")
        if self.payload.startswith(FIXTURE_SIGIL):
            return  # literal vector, parsed elsewhere
        if self.kind == "text":
            if not self.payload.strip():
                raise BadPayload("text payload is empty")
            if len(self.payload.encode("utf-8")) > MAX_TEXT_BYTES:
                raise BadPayload(f"text payload exceeds {MAX_TEXT_BYTES} bytes")
        else:
            if not _looks_like_url(self.payload) and not os.path.exists(self.payload):
                raise BadPayload(
                    f"image reference {self.payload!r} is neither a URL nor an existing path"
                )


def _looks_like_url(ref: str) -> bool:
    parsed = urlparse(ref)
    return parsed.scheme in ("http", "https", "file") and bool(parsed.netloc or parsed.path)


@dataclass(frozen=True)
class EmbedderConfig:
    provider: str = "mock"  # "mock" | "remote"
    endpoint: str | None = None
    timeout_s: float = 10.0
    dimension: int = 512
    mock_seed: int = 0
    pool_size: int = 16

    def validate(self) -> None:
        if self.provider not in ("mock", "remote"):
            raise BadPayload(f"unknown embedder provider {self.provider!r}")
        if self.provider == "remote" and not self.endpoint:
            raise BadPayload("remote embedder requires an endpoint")
        if self.timeout_s <= 0:
            raise BadPayload("timeout must be positive")
        if self.dimension < 1:
            raise BadPayload("dimension must be positive")


def _parse_fixture(payload: str, dimension: int) -> np.ndarray:
    body = payload[len(FIXTURE_SIGIL):]
    try:
        values = [float(part) for part in body.split(",")]
    except ValueError as exc:
        raise BadPayload(f"bad fixture vector {payload!r}: {exc}") from exc
    if len(values) != dimension:
        raise DimensionMismatch(
            f"fixture vector has {len(values)} components, deployment dimension is {dimension}"
        )
    return vecmath.normalize(values)


def _mock_vector(req: EmbedRequest, dimension: int, seed: int) -> np.ndarray:
    digest = hashlib.sha256()
    digest.update(req.kind.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(req.payload.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(int(seed).to_bytes(8, "big", signed=False))
    key = int.from_bytes(digest.digest()[:16], "big")
    rng = np.random.Generator(np.random.Philox(key=key))
    return vecmath.normalize(rng.standard_normal(dimension))


class Embedder:
    """Stateless request/response embedder; safe for concurrent use.

    Remote calls are bounded by a semaphore of ``pool_size`` in-flight
    requests; callers block when saturated.
    """

    def __init__(self, config: EmbedderConfig):
        config.validate()
        self.config = config
        self._gate = threading.BoundedSemaphore(config.pool_size)
        self._session = requests.Session()

    def embed(self, req: EmbedRequest) -> np.ndarray:
        return self.embed_batch([req])[0]

    def embed_batch(self, reqs: Sequence[EmbedRequest]) -> list[np.ndarray]:
        if not 1 <= len(reqs) <= MAX_BATCH:
            raise BadPayload(f"batch size must be in [1, {MAX_BATCH}], got {len(reqs)}")
        for i, req in enumerate(reqs):
            try:
                req.validate()
            except (BadPayload, DimensionMismatch) as exc:
                raise type(exc)(f"item {i}: {exc}") from exc

        fixtures: dict[int, np.ndarray] = {}
        pending: list[tuple[int, EmbedRequest]] = []
        for i, req in enumerate(reqs):
            if req.payload.startswith(FIXTURE_SIGIL):
                fixtures[i] = _parse_fixture(req.payload, self.config.dimension)
            else:
                pending.append((i, req))

        out: dict[int, np.ndarray] = dict(fixtures)
        if pending:
            if self.config.provider == "mock":
                for i, req in pending:
                    out[i] = _mock_vector(req, self.config.dimension, self.config.mock_seed)
            else:
                vectors = self._embed_remote([req for _, req in pending])
                for (i, _), vec in zip(pending, vectors):
                    out[i] = vec
        return [out[i] for i in range(len(reqs))]

    def _embed_remote(self, reqs: Sequence[EmbedRequest]) -> list[np.ndarray]:
        body = {"inputs": [{"kind": r.kind, "payload": r.payload} for r in reqs]}
        url = self.config.endpoint.rstrip("/") + "/embed"
        with self._gate:
            try:
                resp = self._session.post(url, json=body, timeout=self.config.timeout_s)
            except requests.RequestException as exc:
                raise ProviderUnavailable(f"embedding service at {url}: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderUnavailable(
                f"embedding service at {url} returned status {resp.status_code}"
            )
        try:
            payload = resp.json()
            raw_vectors = payload["vectors"]
        except (ValueError, KeyError) as exc:
            raise ProviderUnavailable(f"malformed embedding response: {exc}") from exc
        if len(raw_vectors) != len(reqs):
            raise ProviderUnavailable(
                f"requested {len(reqs)} vectors, service returned {len(raw_vectors)}"
            )
        vectors = []
        for i, raw in enumerate(raw_vectors):
            vec = vecmath.as_vector(raw)
            if vec.shape[0] != self.config.dimension:
                raise DimensionMismatch(
                    f"item {i}: service returned width {vec.shape[0]}, expected {self.config.dimension}"
                )
            norm = float(np.linalg.norm(vec))
            if abs(norm - 1.0) > 1e-6:
                vec = vecmath.normalize(vec)
            vectors.append(vec)
        return vectors


def embed(req: EmbedRequest, config: EmbedderConfig) -> np.ndarray:
    return Embedder(config).embed(req)


def embed_batch(reqs: Sequence[EmbedRequest], config: EmbedderConfig) -> list[np.ndarray]:
    return Embedder(config).embed_batch(reqs)


class ExpansionProvider(Protocol):
    """Source of short query-expansion terms derived from liked documents."""

    def terms(self, query: str, feedback_ids: Sequence[str]) -> list[str]: ...


@dataclass
class StubExpansionProvider:
    """Deterministic stand-in for an LLM expansion service.

    Returns the top-3 most frequent values of ``tag_key`` among the feedback
    documents' metadata, ties broken lexicographically.
    """

    get_document: Callable[[str], "object"]
    tag_key: str = "tag"

    def terms(self, query: str, feedback_ids: Sequence[str]) -> list[str]:
        counts: Counter[str] = Counter()
        for doc_id in feedback_ids:
            doc = self.get_document(doc_id)  # raises NotFound for unknown ids
            value = doc.metadata.get(self.tag_key)
            if value:
                counts[value] += 1
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return [term for term, _ in ranked[:3]]


@dataclass
class RemoteExpansionProvider:
    """HTTP adapter for a real expansion backend (LLM or otherwise).

    POST {endpoint}/expand with {"query": ..., "feedback_ids": [...]};
    expects {"terms": [...]}.
    """

    endpoint: str
    timeout_s: float = 10.0
    _session: requests.Session = field(default_factory=requests.Session, repr=False)

    def terms(self, query: str, feedback_ids: Sequence[str]) -> list[str]:
        url = self.endpoint.rstrip("/") + "/expand"
        try:
            resp = self._session.post(
                url,
                json={"query": query, "feedback_ids": list(feedback_ids)},
                timeout=self.timeout_s,
            )
        except requests.RequestException as exc:
            raise ProviderUnavailable(f"expansion service at {url}: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderUnavailable(f"expansion service at {url} returned {resp.status_code}")
        try:
            terms = resp.json()["terms"]
        except (ValueError, KeyError) as exc:
            raise ProviderUnavailable(f"malformed expansion response: {exc}") from exc
        return [str(t) for t in terms]


def expansion_terms(
    query: str, feedback_ids: Sequence[str], provider: ExpansionProvider
) -> list[str]:
    """0-8 short text terms to append to a query; empty feedback yields []."""
    if not query.strip():
        raise BadPayload("expansion query is empty")
    if not feedback_ids:
        return []
    terms = provider.terms(query, feedback_ids)
    cleaned = [t.strip() for t in terms if t and t.strip()]
    return cleaned[:MAX_EXPANSION_TERMS]
