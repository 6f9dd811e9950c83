"""Recommendations as search: ensembling and random recommendation walks.

A walk expands a start vector breadth-first: each node retrieves its k
nearest unvisited neighbours, samples up to C of them uniformly without
replacement, and attaches the sampled documents as children, for L-1
expansion rounds. Every sampling decision draws from a counter-based RNG
stream keyed on (walk seed, breadth-first node index), so trees are fully
deterministic for a fixed corpus and the shape of one region does not
change when unrelated corpus regions grow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import vecmath
from .errors import EmptyIndex, InvalidQuerySpec
from .index import IndexView, SearchHit, VectorIndex

DEFAULT_LAYERS = 3
DEFAULT_CHILDREN = 3
DEFAULT_NEIGHBOURS = 20

_UINT64_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class WalkParams:
    layers: int = DEFAULT_LAYERS
    children: int = DEFAULT_CHILDREN
    neighbours: int = DEFAULT_NEIGHBOURS
    rng_seed: int = 0

    def validate(self) -> None:
        if self.layers < 1:
            raise InvalidQuerySpec(f"layers must be >= 1, got {self.layers}")
        if self.children < 1:
            raise InvalidQuerySpec(f"children must be >= 1, got {self.children}")
        if self.neighbours < self.children:
            # Fewer retrieved neighbours than the child budget systematically
            # starves sampling.
            raise InvalidQuerySpec(
                f"neighbours ({self.neighbours}) must be >= children ({self.children})"
            )


@dataclass
class RecTree:
    vector: np.ndarray
    doc_id: str | None
    children: list["RecTree"] = field(default_factory=list)


def node_stream(rng_seed: int, node_index: int) -> np.random.Generator:
    """Per-node RNG stream: Philox keyed on (seed, BFS node index)."""
    key = np.array(
        [np.uint64(rng_seed & _UINT64_MASK), np.uint64(node_index & _UINT64_MASK)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def _sample_without_replacement(rng: np.random.Generator, items: list, count: int) -> list:
    """Uniform draw of ``count`` items: repeated index draws from a shrinking pool."""
    pool = list(items)
    out = []
    for _ in range(count):
        j = int(rng.integers(len(pool)))
        out.append(pool.pop(j))
    return out


def ensemble(index: VectorIndex, item_ids: Sequence[str]) -> np.ndarray:
    """Equal-weight spherical combination of the items' stored vectors.

    Order-sensitive like the underlying pairwise merge; a single item
    returns its own vector exactly.
    """
    if not item_ids:
        raise InvalidQuerySpec("ensemble requires at least one item id")
    view = index.snapshot_view()
    vectors = [view.get(doc_id).vector for doc_id in item_ids]
    return vecmath.hierarchical_slerp([(vec, 1.0) for vec in vectors])


def recommend(index: VectorIndex, seed_ids: Sequence[str], k: int) -> list[SearchHit]:
    """Nearest neighbours of the seeds' ensemble; seeds never appear."""
    q = ensemble(index, seed_ids)
    return index.nn_search(q, k, exclude=set(seed_ids))


def walk(
    index: VectorIndex,
    start: str | np.ndarray | Sequence[float],
    params: WalkParams,
    *,
    literal_filtering: bool = False,
) -> RecTree:
    """Generate a recommendation tree by a seeded random walk.

    ``start`` is a document id or a raw vector (e.g. a compiled query or an
    ensemble). A start document is marked visited immediately: it cannot
    recommend itself. With ``literal_filtering`` the index retrieves k
    neighbours first and drops visited ones afterwards (which can starve
    dense regions); the default excludes visited ids at search time so every
    expansion sees k fresh candidates.
    """
    params.validate()
    view = index.snapshot_view()
    if view.count() == 0:
        raise EmptyIndex("cannot walk an empty index")

    visited: set[str] = set()
    if isinstance(start, str):
        doc = view.get(start)
        root = RecTree(vector=doc.vector, doc_id=doc.id)
        visited.add(doc.id)
    else:
        root = RecTree(vector=vecmath.normalize(start), doc_id=None)

    next_node_index = 1  # root is 0
    front: list[tuple[RecTree, int]] = [(root, 0)]
    for _ in range(params.layers - 1):
        next_front: list[tuple[RecTree, int]] = []
        for node, node_index in front:
            candidates = _fresh_neighbours(view, node, visited, params, literal_filtering)
            if not candidates:
                continue
            rng = node_stream(params.rng_seed, node_index)
            count = min(params.children, len(candidates))
            for hit in _sample_without_replacement(rng, candidates, count):
                visited.add(hit.id)
                child = RecTree(vector=view.get(hit.id).vector, doc_id=hit.id)
                node.children.append(child)
                next_front.append((child, next_node_index))
                next_node_index += 1
        front = next_front
    return root


def _fresh_neighbours(
    view: IndexView,
    node: RecTree,
    visited: set[str],
    params: WalkParams,
    literal_filtering: bool,
) -> list[SearchHit]:
    if literal_filtering:
        hits = view.nn_search(node.vector, params.neighbours)
        return [hit for hit in hits if hit.id not in visited]
    return view.nn_search(node.vector, params.neighbours, exclude=set(visited))


def walk_flat(
    index: VectorIndex,
    start: str | np.ndarray | Sequence[float],
    params: WalkParams,
    *,
    literal_filtering: bool = False,
) -> list[str]:
    """Breadth-first document ids of a walk, excluding the start node itself."""
    tree = walk(index, start, params, literal_filtering=literal_filtering)
    out: list[str] = []
    queue = list(tree.children)
    while queue:
        node = queue.pop(0)
        if node.doc_id is not None:
            out.append(node.doc_id)
        queue.extend(node.children)
    return out
