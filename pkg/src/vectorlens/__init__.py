"""Multimodal vector search and recommendation engine.

Composable query algebra on the unit sphere (weighted linear and spherical
interpolation), an exact cosine k-NN document index, query refinement with
templates and contextualization, recommendation ensembling and random
walks, plus an HTTP service and CLI on top.
"""

from .config import Settings, load_settings
from .embedder import Embedder, EmbedderConfig, EmbedRequest
from .index import Document, SearchHit, VectorIndex
from .query import PromptTemplate, QueryEngine, QuerySpec, TemplateRegistry, Term
from .recommender import RecTree, WalkParams, ensemble, recommend, walk, walk_flat
from .runtime import Runtime

__version__ = "0.1.0"

__all__ = [
    "Document",
    "Embedder",
    "EmbedderConfig",
    "EmbedRequest",
    "PromptTemplate",
    "QueryEngine",
    "QuerySpec",
    "RecTree",
    "Runtime",
    "SearchHit",
    "Settings",
    "TemplateRegistry",
    "Term",
    "VectorIndex",
    "WalkParams",
    "ensemble",
    "load_settings",
    "recommend",
    "walk",
    "walk_flat",
    "__version__",
]
