"""Canonical JSON shapes for every externally visible payload.

Both the HTTP service and the CLI's --local mode assemble responses through
these helpers and serialize with the same dumps(), which is what makes
`vl --json` outputs byte-identical to service responses.
"""

from __future__ import annotations

import json
from typing import Mapping

from .errors import InvalidQuerySpec
from .index import Document, IngestReport, SearchHit, document_to_record
from .query import ContextItem, PromptTemplate, QuerySpec, Term
from .recommender import RecTree, WalkParams


# Pagination is out of scope; k is capped uniformly across service and CLI.
MAX_K = 200


def dumps(payload) -> str:
    return json.dumps(payload, ensure_ascii=False, allow_nan=False, separators=(",", ":"))


def hit_to_dict(hit: SearchHit) -> dict:
    return {"id": hit.id, "score": hit.score, "rank": hit.rank}


def doc_to_dict(doc: Document) -> dict:
    return document_to_record(doc)


def tree_to_dict(tree: RecTree, include_root_vector: bool = False) -> dict:
    """Nested {doc_id, children}; the root vector is emitted only on request."""
    out: dict = {}
    if include_root_vector:
        out["vector"] = [float(x) for x in tree.vector.tolist()]
    out["doc_id"] = tree.doc_id
    out["children"] = [_subtree_to_dict(child) for child in tree.children]
    return out


def _subtree_to_dict(node: RecTree) -> dict:
    return {
        "doc_id": node.doc_id,
        "children": [_subtree_to_dict(child) for child in node.children],
    }


def template_to_dict(tpl: PromptTemplate) -> dict:
    return {"id": tpl.id, "pattern": tpl.pattern, "description": tpl.description}


def ingest_report_to_dict(report: IngestReport) -> dict:
    return {
        "ingested": report.ingested,
        "skipped": report.skipped,
        "errors": [{"line": line, "error": message} for line, message in report.errors],
    }


def spec_to_dict(spec: QuerySpec) -> dict:
    return {
        "terms": [
            {"text": t.text, "weight": t.weight, "polarity": t.polarity} for t in spec.terms
        ],
        "template": spec.template,
        "context_items": [
            {("doc_id" if item.kind == "doc" else "image"): item.ref, "weight": item.weight}
            for item in spec.context_items
        ],
        "demote_quality": spec.demote_quality,
        "demote_weight": spec.demote_weight,
        "k": spec.k,
        "filter": dict(spec.metadata_filter) if spec.metadata_filter is not None else None,
    }


def spec_from_dict(raw: Mapping) -> QuerySpec:
    if not isinstance(raw, Mapping):
        raise InvalidQuerySpec("query spec must be a JSON object")
    terms = []
    for entry in raw.get("terms") or []:
        if not isinstance(entry, Mapping) or "text" not in entry:
            raise InvalidQuerySpec(f"bad term entry {entry!r}")
        terms.append(
            Term(
                text=str(entry["text"]),
                weight=_as_float(entry.get("weight", 1.0), "term weight"),
                polarity=str(entry.get("polarity", "more")),
            )
        )
    context_items = []
    for entry in raw.get("context_items") or []:
        if not isinstance(entry, Mapping):
            raise InvalidQuerySpec(f"bad context item {entry!r}")
        weight = _as_float(entry.get("weight", 1.0), "context weight")
        if "doc_id" in entry and entry["doc_id"] is not None:
            context_items.append(ContextItem(kind="doc", ref=str(entry["doc_id"]), weight=weight))
        elif "image" in entry and entry["image"] is not None:
            context_items.append(ContextItem(kind="image", ref=str(entry["image"]), weight=weight))
        else:
            raise InvalidQuerySpec("context item needs 'doc_id' or 'image'")
    metadata_filter = raw.get("filter")
    if metadata_filter is not None:
        if not isinstance(metadata_filter, Mapping) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in metadata_filter.items()
        ):
            raise InvalidQuerySpec("filter must map string keys to string values")
        metadata_filter = dict(metadata_filter)
    demote_weight = raw.get("demote_weight")
    return QuerySpec(
        terms=tuple(terms),
        template=raw.get("template"),
        context_items=tuple(context_items),
        demote_quality=bool(raw.get("demote_quality", False)),
        demote_weight=_as_float(demote_weight, "demote weight") if demote_weight is not None else None,
        k=_as_int(raw.get("k", 20), "k"),
        metadata_filter=metadata_filter,
    )


def walk_params_from_dict(raw: Mapping | None, defaults: WalkParams) -> WalkParams:
    raw = raw or {}
    return WalkParams(
        layers=_as_int(raw.get("layers", defaults.layers), "layers"),
        children=_as_int(raw.get("children", defaults.children), "children"),
        neighbours=_as_int(raw.get("neighbours", defaults.neighbours), "neighbours"),
        rng_seed=_as_int(raw.get("seed", defaults.rng_seed), "seed"),
    )


def _as_float(value, what: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise InvalidQuerySpec(f"{what} must be a number, got {value!r}") from None


def _as_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidQuerySpec(f"{what} must be an integer, got {value!r}")
    return value
