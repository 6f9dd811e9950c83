import json

import numpy as np
import pytest

from vectorlens import vecmath, wire
from vectorlens.errors import EmptyIndex, InvalidQuerySpec, NotFound
from vectorlens.index import Document, VectorIndex
from vectorlens.recommender import (
    RecTree,
    WalkParams,
    ensemble,
    recommend,
    walk,
    walk_flat,
)

from oracles import draw_without_replacement, hslerp_oracle, nn_oracle, node_stream


def doc(doc_id, vector, metadata=None):
    return Document(id=doc_id, title=doc_id, vector=np.asarray(vector, float), metadata=metadata or {})


def build_index(docs):
    dim = len(next(iter(docs.values()))[0])
    idx = VectorIndex(dimension=dim)
    for doc_id, (vec, metadata) in docs.items():
        idx.upsert(doc(doc_id, vec, metadata))
    return idx


def random_docs(rng, n, dim):
    return {
        f"doc{i:03d}": (vecmath.normalize(rng.standard_normal(dim)), {})
        for i in range(n)
    }


def replay_walk(docs, start, params):
    """Independent expansion replay: oracle k-NN + the documented RNG streams."""
    visited = set()
    if isinstance(start, str):
        root = {"doc_id": start, "children": []}
        root_vec = docs[start][0]
        visited.add(start)
    else:
        arr = np.asarray(start, float)
        root = {"doc_id": None, "children": []}
        root_vec = arr / np.linalg.norm(arr)
    front = [(root, 0, root_vec)]
    next_index = 1
    for _ in range(params.layers - 1):
        nxt = []
        for node, idx, vec in front:
            candidates = nn_oracle(docs, vec, params.neighbours, None, set(visited))
            if not candidates:
                continue
            rng = node_stream(params.rng_seed, idx)
            count = min(params.children, len(candidates))
            for cid, _ in draw_without_replacement(rng, candidates, count):
                visited.add(cid)
                child = {"doc_id": cid, "children": []}
                node["children"].append(child)
                nxt.append((child, next_index, docs[cid][0]))
                next_index += 1
        front = nxt
    return root


def collect_ids(tree: RecTree):
    out = []
    stack = [tree]
    while stack:
        node = stack.pop()
        if node.doc_id is not None:
            out.append(node.doc_id)
        stack.extend(node.children)
    return out


def tree_depth(tree: RecTree):
    if not tree.children:
        return 1
    return 1 + max(tree_depth(c) for c in tree.children)


ORTHO_DOCS = {
    "X": ([1.0, 0.0], {}),
    "Y": ([0.0, 1.0], {}),
    "mid": ([0.7071067811865476, 0.7071067811865476], {}),
}


class TestEnsemble:
    def test_single_item_returns_own_vector_exactly(self):
        idx = build_index(ORTHO_DOCS)
        out = ensemble(idx, ["X"])
        assert out.tobytes() == idx.get("X").vector.tobytes()

    def test_orthogonal_pair_midpoint(self):
        idx = build_index(ORTHO_DOCS)
        np.testing.assert_allclose(
            ensemble(idx, ["X", "Y"]), [0.70711, 0.70711], atol=1e-5
        )

    def test_three_items_match_transcription_oracle(self):
        docs = {
            "a": ([1.0, 0, 0], {}),
            "b": ([0, 1.0, 0], {}),
            "c": ([0, 0, 1.0], {}),
        }
        idx = build_index(docs)
        expected = hslerp_oracle([docs["a"][0], docs["b"][0], docs["c"][0]], [1, 1, 1])
        np.testing.assert_allclose(ensemble(idx, ["a", "b", "c"]), expected, atol=1e-9)

    def test_unknown_id(self):
        idx = build_index(ORTHO_DOCS)
        with pytest.raises(NotFound):
            ensemble(idx, ["nope"])

    def test_empty_rejected(self):
        idx = build_index(ORTHO_DOCS)
        with pytest.raises(InvalidQuerySpec):
            ensemble(idx, [])


class TestRecommend:
    def test_midpoint_doc_ranked_first(self):
        idx = build_index(ORTHO_DOCS)
        hits = recommend(idx, ["X", "Y"], k=2)
        assert hits[0].id == "mid"

    def test_seeds_never_returned(self):
        idx = build_index(ORTHO_DOCS)
        ids = [h.id for h in recommend(idx, ["X"], k=3)]
        assert "X" not in ids
        assert len(ids) == 2

    def test_all_seeds_empty_result(self):
        idx = build_index(ORTHO_DOCS)
        assert recommend(idx, list(ORTHO_DOCS), k=5) == []

    def test_matches_oracle(self):
        rng = np.random.default_rng(31)
        docs = random_docs(rng, 30, 8)
        idx = build_index(docs)
        seed_ids = ["doc003"]
        q = idx.get("doc003").vector
        expected = nn_oracle(docs, q, 3, None, set(seed_ids))
        got = [(h.id, h.score) for h in recommend(idx, seed_ids, k=3)]
        assert got == expected


class TestWalk:
    def test_single_layer_no_children(self):
        idx = build_index(ORTHO_DOCS)
        tree = walk(idx, "X", WalkParams(layers=1, children=2, neighbours=3, rng_seed=1))
        assert tree.doc_id == "X"
        assert tree.children == []

    def test_two_layers_from_synthetic_start(self):
        idx = build_index(ORTHO_DOCS)
        params = WalkParams(layers=2, children=2, neighbours=3, rng_seed=5)
        start = [0.6, 0.8]
        tree = walk(idx, start, params)
        assert tree.doc_id is None
        assert len(tree.children) == 2
        expected = replay_walk(ORTHO_DOCS, start, params)
        assert wire.tree_to_dict(tree) == expected

    def test_exhaustion_prunes_branches(self):
        docs = {
            "a": ([1.0, 0.0], {}),
            "b": ([0.0, 1.0], {}),
            "c": ([0.6, 0.8], {}),
            "d": ([0.8, 0.6], {}),
        }
        idx = build_index(docs)
        tree = walk(idx, "a", WalkParams(layers=3, children=2, neighbours=3, rng_seed=9))
        ids = collect_ids(tree)
        assert len(ids) == len(set(ids))
        assert len(ids) <= 4
        assert tree_depth(tree) <= 3

    def test_start_doc_never_reappears(self):
        rng = np.random.default_rng(17)
        docs = random_docs(rng, 25, 6)
        idx = build_index(docs)
        tree = walk(idx, "doc000", WalkParams(layers=3, children=3, neighbours=5, rng_seed=2))
        ids = collect_ids(tree)
        assert ids.count("doc000") == 1  # the root only

    def test_deterministic_byte_identical(self):
        rng = np.random.default_rng(23)
        docs = random_docs(rng, 40, 8)
        idx = build_index(docs)
        params = WalkParams(layers=3, children=3, neighbours=6, rng_seed=77)
        a = json.dumps(wire.tree_to_dict(walk(idx, "doc001", params)), sort_keys=True)
        b = json.dumps(wire.tree_to_dict(walk(idx, "doc001", params)), sort_keys=True)
        assert a == b

    def test_seed_changes_tree(self):
        rng = np.random.default_rng(29)
        docs = random_docs(rng, 40, 8)
        idx = build_index(docs)
        trees = {
            json.dumps(
                wire.tree_to_dict(
                    walk(idx, "doc001", WalkParams(layers=3, children=2, neighbours=12, rng_seed=s))
                ),
                sort_keys=True,
            )
            for s in range(6)
        }
        assert len(trees) > 1

    def test_replay_over_random_cases(self):
        rng = np.random.default_rng(41)
        for case in range(25):
            n = int(rng.integers(3, 50))
            docs = random_docs(np.random.default_rng(1000 + case), n, 6)
            idx = build_index(docs)
            children = int(rng.integers(1, 4))
            params = WalkParams(
                layers=int(rng.integers(1, 5)),
                children=children,
                neighbours=children + int(rng.integers(0, 5)),
                rng_seed=int(rng.integers(0, 2**63)),
            )
            start = (
                f"doc{int(rng.integers(n)):03d}"
                if rng.integers(2)
                else vecmath.normalize(rng.standard_normal(6))
            )
            tree = walk(idx, start, params)
            assert wire.tree_to_dict(tree) == replay_walk(docs, start, params)
            ids = collect_ids(tree)
            assert len(ids) == len(set(ids))
            assert tree_depth(tree) <= params.layers

    def test_literal_filtering_can_starve(self):
        # Line up the corpus so every document's top-k neighbours are the
        # already-visited cluster: post-filtering then finds nothing while
        # exclusion at search time keeps expanding.
        docs = {
            "hub": ([1.0, 0.0, 0.0], {}),
            "n1": (vecmath.normalize([1.0, 0.05, 0.0]).tolist(), {}),
            "n2": (vecmath.normalize([1.0, -0.05, 0.0]).tolist(), {}),
            "far": (vecmath.normalize([0.1, 1.0, 0.0]).tolist(), {}),
        }
        idx = build_index(docs)
        params = WalkParams(layers=3, children=2, neighbours=2, rng_seed=3)
        literal = walk(idx, "hub", params, literal_filtering=True)
        fresh = walk(idx, "hub", params)
        assert len(collect_ids(literal)) < len(collect_ids(fresh))

    def test_unknown_start_doc(self):
        idx = build_index(ORTHO_DOCS)
        with pytest.raises(NotFound):
            walk(idx, "ghost", WalkParams(layers=2, children=1, neighbours=1))

    def test_empty_index(self):
        idx = VectorIndex(dimension=2)
        with pytest.raises(EmptyIndex):
            walk(idx, [1.0, 0.0], WalkParams(layers=1, children=1, neighbours=1))

    def test_params_validation(self):
        with pytest.raises(InvalidQuerySpec):
            WalkParams(layers=0, children=1, neighbours=1).validate()
        with pytest.raises(InvalidQuerySpec):
            WalkParams(layers=1, children=3, neighbours=2).validate()

    def test_node_count_bound(self):
        rng = np.random.default_rng(53)
        docs = random_docs(rng, 200, 8)
        idx = build_index(docs)
        params = WalkParams(layers=4, children=3, neighbours=5, rng_seed=11)
        ids = collect_ids(walk(idx, "doc000", params))
        bound = 1 + 3 + 9 + 27
        assert len(ids) <= min(len(docs), bound)


class TestWalkFlat:
    def test_single_layer_from_doc_is_empty(self):
        idx = build_index(ORTHO_DOCS)
        assert walk_flat(idx, "X", WalkParams(layers=1, children=2, neighbours=3)) == []

    def test_matches_tree_breadth_first(self):
        rng = np.random.default_rng(61)
        docs = random_docs(rng, 30, 6)
        idx = build_index(docs)
        params = WalkParams(layers=3, children=2, neighbours=4, rng_seed=8)
        tree = walk(idx, "doc004", params)
        flat = walk_flat(idx, "doc004", params)
        level = list(tree.children)
        expected = []
        while level:
            expected.extend(node.doc_id for node in level)
            level = [c for node in level for c in node.children]
        assert flat == expected

    def test_ids_pairwise_distinct(self):
        rng = np.random.default_rng(67)
        docs = random_docs(rng, 30, 6)
        idx = build_index(docs)
        flat = walk_flat(idx, "doc000", WalkParams(layers=4, children=3, neighbours=6, rng_seed=13))
        assert len(flat) == len(set(flat))
