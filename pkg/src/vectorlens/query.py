"""Declarative query compilation: refinement, templates, contextualization.

A QuerySpec compiles to a single unit query vector in a fixed pipeline:

1. template application (positive-polarity terms only),
2. optional quality demotion (a negatively weighted stock phrase),
3. term embedding with signed weights,
4. optional contextualization: the term combination keeps the majority of
   the mass (alpha), context vectors proportionally share the rest.

Terms combine via linear interpolation, not slerp: negative weights are
meaningful here and slerp excludes them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from . import vecmath
from .embedder import Embedder, EmbedRequest, ExpansionProvider, expansion_terms
from .errors import FileUnreadable, InvalidQuerySpec, UnknownTemplate
from .index import SearchHit, VectorIndex

# Stock demotion phrase and weight for low-quality listings; the misspelling
# is intentional and load-bearing (indexed corpora were demoted against this
# exact string).
DEMOTE_TEXT = "low quality, low res, burry, jpeg artefacts"
DEMOTE_WEIGHT = -1.1

MAX_ABS_WEIGHT = 10.0
PLACEHOLDER = "<QUERY>"

POLARITY_MORE = "more"
POLARITY_LESS = "less"


@dataclass(frozen=True)
class Term:
    text: str
    weight: float = 1.0
    polarity: str = POLARITY_MORE

    @property
    def signed_weight(self) -> float:
        return abs(self.weight) if self.polarity == POLARITY_MORE else -abs(self.weight)


@dataclass(frozen=True)
class ContextItem:
    """Either an indexed document (kind="doc") or an image reference."""

    kind: str
    ref: str
    weight: float = 1.0


@dataclass(frozen=True)
class QuerySpec:
    terms: tuple[Term, ...]
    template: str | None = None
    context_items: tuple[ContextItem, ...] = ()
    demote_quality: bool = False
    demote_weight: float | None = None  # None -> engine default
    k: int = 20
    metadata_filter: Mapping[str, str] | None = None


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    pattern: str
    description: str = ""

    def validate(self) -> None:
        if self.pattern.count(PLACEHOLDER) != 1:
            raise InvalidQuerySpec(
                f"template {self.id!r} must contain {PLACEHOLDER} exactly once"
            )


def render_template(tpl: PromptTemplate, query_text: str) -> str:
    """Substitute the single placeholder; no other mutation of the pattern."""
    if not query_text:
        raise InvalidQuerySpec("query text for template rendering is empty")
    return tpl.pattern.replace(PLACEHOLDER, query_text, 1)


DEFAULT_TEMPLATES = [
    PromptTemplate(
        id="monochrome",
        pattern="A black and white, monochromatic image of a <QUERY>",
        description="Black-and-white, monochromatic styling",
    ),
    PromptTemplate(
        id="boho",
        pattern="A bohemian (boho) style image of a <QUERY>, rich in patterns, colors, and textures",
        description="Bohemian style, rich in patterns, colors, and textures",
    ),
    PromptTemplate(
        id="photo",
        pattern="a photo of a <QUERY>",
        description="Plain photographic caption prefix",
    ),
]


class TemplateRegistry:
    """Prompt templates keyed by id; reloadable from a JSON file."""

    def __init__(self, templates: Sequence[PromptTemplate] | None = None, path: str | None = None):
        self._path = path
        self._templates: dict[str, PromptTemplate] = {}
        if path is not None:
            self.reload()
        else:
            for tpl in templates if templates is not None else DEFAULT_TEMPLATES:
                tpl.validate()
                self._templates[tpl.id] = tpl

    def reload(self) -> int:
        if self._path is None:
            return len(self._templates)
        try:
            with open(self._path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise FileUnreadable(f"cannot read template registry {self._path!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidQuerySpec(f"template registry {self._path!r}: {exc}") from exc
        if not isinstance(raw, list):
            raise InvalidQuerySpec("template registry must be a JSON array")
        loaded = {}
        for entry in raw:
            tpl = PromptTemplate(
                id=str(entry.get("id", "")),
                pattern=str(entry.get("pattern", "")),
                description=str(entry.get("description", "")),
            )
            if not tpl.id:
                raise InvalidQuerySpec("template registry entry without id")
            tpl.validate()
            loaded[tpl.id] = tpl
        self._templates = loaded
        return len(loaded)

    def get(self, template_id: str) -> PromptTemplate:
        try:
            return self._templates[template_id]
        except KeyError:
            raise UnknownTemplate(f"template {template_id!r} not registered") from None

    def all(self) -> list[PromptTemplate]:
        return sorted(self._templates.values(), key=lambda tpl: tpl.id)


def validate_spec(spec: QuerySpec, registry: TemplateRegistry | None = None) -> None:
    if not spec.terms:
        raise InvalidQuerySpec("query needs at least one term")
    if not any(t.polarity == POLARITY_MORE for t in spec.terms):
        raise InvalidQuerySpec("query needs at least one positive ('more') term")
    for term in spec.terms:
        if term.polarity not in (POLARITY_MORE, POLARITY_LESS):
            raise InvalidQuerySpec(f"unknown polarity {term.polarity!r}")
        if not term.text.strip():
            raise InvalidQuerySpec("term text is empty")
        if not math.isfinite(term.weight) or abs(term.weight) > MAX_ABS_WEIGHT:
            raise InvalidQuerySpec(
                f"term weight {term.weight!r} outside [-{MAX_ABS_WEIGHT}, {MAX_ABS_WEIGHT}]"
            )
    for item in spec.context_items:
        if item.kind not in ("doc", "image"):
            raise InvalidQuerySpec(f"unknown context item kind {item.kind!r}")
        if not math.isfinite(item.weight) or item.weight <= 0:
            raise InvalidQuerySpec("context item weights must be positive")
    if spec.k < 1:
        raise InvalidQuerySpec(f"k must be >= 1, got {spec.k}")
    if spec.template is not None and registry is not None:
        registry.get(spec.template)


class QueryEngine:
    """Compiles QuerySpecs against an index + embedder and runs searches."""

    def __init__(
        self,
        index: VectorIndex,
        embedder: Embedder,
        registry: TemplateRegistry | None = None,
        context_alpha: float = 0.7,
        demote_weight: float = DEMOTE_WEIGHT,
        expansion_weight: float = 0.4,
        expansion_provider: ExpansionProvider | None = None,
    ):
        if not 0.0 < context_alpha < 1.0:
            raise ValueError(f"context_alpha must be in (0, 1), got {context_alpha}")
        self.index = index
        self.embedder = embedder
        self.registry = registry if registry is not None else TemplateRegistry()
        self.context_alpha = context_alpha
        self.demote_weight = demote_weight
        self.expansion_weight = expansion_weight
        self.expansion_provider = expansion_provider

    def compile_query(self, spec: QuerySpec) -> np.ndarray:
        vector, _ = self.compile_with_trace(spec)
        return vector

    def compile_with_trace(self, spec: QuerySpec) -> tuple[np.ndarray, dict]:
        validate_spec(spec, self.registry)

        template = self.registry.get(spec.template) if spec.template else None
        rendered_terms: list[tuple[str, float]] = []
        trace_terms: list[dict] = []
        for term in spec.terms:
            text = term.text
            # Templates style the information need; avoidance terms embed
            # verbatim.
            if template is not None and term.polarity == POLARITY_MORE:
                text = render_template(template, term.text)
            rendered_terms.append((text, term.signed_weight))
            trace_terms.append(
                {
                    "text": term.text,
                    "rendered": text,
                    "weight": term.signed_weight,
                    "polarity": term.polarity,
                }
            )

        demotion = None
        if spec.demote_quality:
            weight = spec.demote_weight if spec.demote_weight is not None else self.demote_weight
            rendered_terms.append((DEMOTE_TEXT, weight))
            demotion = {"text": DEMOTE_TEXT, "weight": weight}

        requests = [EmbedRequest(kind="text", payload=text) for text, _ in rendered_terms]
        vectors = self.embedder.embed_batch(requests)
        weighted = [(vec, weight) for vec, (_, weight) in zip(vectors, rendered_terms)]
        q0 = vecmath.lerp_combine(weighted)

        trace = {
            "template": spec.template,
            "terms": trace_terms,
            "demotion": demotion,
            "context": [],
            "context_alpha": None,
        }
        if not spec.context_items:
            return q0, trace

        alpha = self.context_alpha
        total_context_weight = sum(item.weight for item in spec.context_items)
        combined: list[tuple[np.ndarray, float]] = [(q0, alpha)]
        context_trace = []
        for item in spec.context_items:
            if item.kind == "doc":
                vec = self.index.get(item.ref).vector
            else:
                vec = self.embedder.embed(EmbedRequest(kind="image", payload=item.ref))
            # Context items share (1 - alpha) proportionally to their given
            # weights, so the query keeps the majority regardless of count.
            scaled = (1.0 - alpha) * item.weight / total_context_weight
            combined.append((vec, scaled))
            context_trace.append(
                {"kind": item.kind, "ref": item.ref, "weight": item.weight, "scaled_weight": scaled}
            )
        trace["context"] = context_trace
        trace["context_alpha"] = alpha
        return vecmath.lerp_combine(combined), trace

    def search(self, spec: QuerySpec) -> list[SearchHit]:
        q = self.compile_query(spec)
        return self.index.nn_search(q, spec.k, spec.metadata_filter)

    def expand_with_feedback(self, spec: QuerySpec, liked_ids: Sequence[str]) -> QuerySpec:
        """Append provider-suggested terms as softly weighted positives.

        Returns a new spec; the input is never mutated. Empty feedback
        returns the spec unchanged.
        """
        validate_spec(spec, self.registry)
        if not liked_ids:
            return spec
        if self.expansion_provider is None:
            raise InvalidQuerySpec("no expansion provider configured")
        primary = next(t for t in spec.terms if t.polarity == POLARITY_MORE)
        suggested = expansion_terms(primary.text, liked_ids, self.expansion_provider)
        new_terms = spec.terms + tuple(
            Term(text=text, weight=self.expansion_weight, polarity=POLARITY_MORE)
            for text in suggested
        )
        return replace(spec, terms=new_terms)
