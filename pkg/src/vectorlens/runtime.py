"""Application core: wires the index, embedder, templates, query engine and
recommender together and assembles every externally visible payload.

HTTP handlers and the CLI's --local mode are both thin callers into this
class, which is what keeps their outputs identical.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from . import recommender, wire
from .config import Settings
from .embedder import Embedder, StubExpansionProvider
from .errors import InvalidQuerySpec
from .index import VectorIndex
from .query import QueryEngine, TemplateRegistry
from .recommender import WalkParams


class Runtime:
    def __init__(self, settings: Settings | None = None, index: VectorIndex | None = None):
        self.settings = settings if settings is not None else Settings()
        self.index = index if index is not None else VectorIndex(self.settings.dimension)
        if self.index.dimension != self.settings.dimension:
            raise InvalidQuerySpec(
                f"index dimension {self.index.dimension} != configured {self.settings.dimension}"
            )
        self.embedder = Embedder(self.settings.embedder_config())
        self.registry = TemplateRegistry(path=self.settings.templates_path)
        self.engine = QueryEngine(
            index=self.index,
            embedder=self.embedder,
            registry=self.registry,
            context_alpha=self.settings.context_alpha,
            demote_weight=self.settings.demote_weight,
            expansion_weight=self.settings.expansion_weight,
            expansion_provider=StubExpansionProvider(get_document=lambda doc_id: self.index.get(doc_id)),
        )

    # -- payload assembly ------------------------------------------------

    def health_payload(self) -> dict:
        return {
            "status": "ok",
            "dimension": self.index.dimension,
            "doc_count": self.index.count(),
        }

    def search_payload(self, spec_dict: Mapping, debug: bool = False) -> dict:
        spec = wire.spec_from_dict(spec_dict)
        if spec.k > wire.MAX_K:
            raise InvalidQuerySpec(f"k must be <= {wire.MAX_K}, got {spec.k}")
        vector, trace = self.engine.compile_with_trace(spec)
        hits = self.index.nn_search(vector, spec.k, spec.metadata_filter)
        payload = {
            "hits": [wire.hit_to_dict(h) for h in hits],
            "compiled_query_norm": _norm(vector),
        }
        if debug:
            payload["trace"] = trace
        return payload

    def recommend_payload(self, seed_ids: Sequence[str], k: int) -> dict:
        if not seed_ids:
            raise InvalidQuerySpec("recommend requires at least one seed id")
        if not 1 <= k <= wire.MAX_K:
            raise InvalidQuerySpec(f"k must be in [1, {wire.MAX_K}], got {k}")
        hits = recommender.recommend(self.index, list(seed_ids), k)
        return {"hits": [wire.hit_to_dict(h) for h in hits]}

    def walk_payload(
        self,
        start: Mapping,
        params: WalkParams,
        include_root_vector: bool = False,
        literal_filtering: bool = False,
    ) -> dict:
        tree = recommender.walk(
            self.index,
            self._resolve_walk_start(start),
            params,
            literal_filtering=literal_filtering,
        )
        return {"tree": wire.tree_to_dict(tree, include_root_vector=include_root_vector)}

    def _resolve_walk_start(self, start: Mapping):
        if not isinstance(start, Mapping):
            raise InvalidQuerySpec("walk start must be an object")
        given = [key for key in ("doc_id", "vector", "query_spec") if start.get(key) is not None]
        if len(given) != 1:
            raise InvalidQuerySpec(
                "walk start needs exactly one of 'doc_id', 'vector', 'query_spec'"
            )
        if given[0] == "doc_id":
            return str(start["doc_id"])
        if given[0] == "vector":
            return start["vector"]
        return self.engine.compile_query(wire.spec_from_dict(start["query_spec"]))

    def ingest_payload(
        self, records: Iterable[tuple[int, object]], embed_missing: bool = False
    ) -> dict:
        report = self.index.ingest_records(records, embed_missing, self.embedder)
        return wire.ingest_report_to_dict(report)

    def document_payload(self, doc_id: str) -> dict:
        return wire.doc_to_dict(self.index.get(doc_id))

    def delete_payload(self, doc_id: str) -> dict:
        return {"deleted": self.index.delete(doc_id)}

    def templates_payload(self) -> list:
        return [wire.template_to_dict(tpl) for tpl in self.registry.all()]

    def expand_payload(self, spec_dict: Mapping, liked_ids: Sequence[str]) -> dict:
        spec = wire.spec_from_dict(spec_dict)
        expanded = self.engine.expand_with_feedback(spec, list(liked_ids))
        return {"query_spec": wire.spec_to_dict(expanded)}

    def reload_templates_payload(self) -> dict:
        return {"templates": self.registry.reload()}

    def snapshot_payload(self, path: str) -> dict:
        return {"written": self.index.snapshot(path), "path": path}

    def restore_payload(self, path: str) -> dict:
        return {"restored": self.index.restore(path), "path": path}


def _norm(vector) -> float:
    return float(np.linalg.norm(vector))
