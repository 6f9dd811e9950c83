import numpy as np
import pytest

from vectorlens import vecmath
from vectorlens.embedder import Embedder, EmbedderConfig, EmbedRequest, StubExpansionProvider
from vectorlens.errors import (
    DegenerateVector,
    InvalidQuerySpec,
    NotFound,
    UnknownTemplate,
)
from vectorlens.index import Document, VectorIndex
from vectorlens.query import (
    DEMOTE_TEXT,
    ContextItem,
    PromptTemplate,
    QueryEngine,
    QuerySpec,
    TemplateRegistry,
    Term,
    render_template,
)

from oracles import lerp_oracle

MONO = PromptTemplate(
    id="monochrome", pattern="A black and white, monochromatic image of a <QUERY>"
)


def build_engine(dimension=64, docs=(), **kwargs):
    index = VectorIndex(dimension=dimension)
    for doc in docs:
        index.upsert(doc)
    embedder = Embedder(EmbedderConfig(dimension=dimension, mock_seed=42))
    provider = StubExpansionProvider(get_document=index.get)
    return QueryEngine(index, embedder, expansion_provider=provider, **kwargs), index, embedder


def doc(doc_id, vector, metadata=None):
    return Document(id=doc_id, title=doc_id, vector=np.asarray(vector, float), metadata=metadata or {})


def spec(*terms, **kwargs):
    return QuerySpec(terms=tuple(terms), **kwargs)


class TestRenderTemplate:
    def test_monochrome(self):
        out = render_template(MONO, "chair")
        assert out == "A black and white, monochromatic image of a chair"

    def test_identity_template(self):
        assert render_template(PromptTemplate(id="t", pattern="<QUERY>"), "sofa") == "sofa"

    def test_boho(self):
        tpl = PromptTemplate(
            id="boho",
            pattern="A bohemian (boho) style image of a <QUERY>, rich in patterns, colors, and textures",
        )
        assert (
            render_template(tpl, "rug")
            == "A bohemian (boho) style image of a rug, rich in patterns, colors, and textures"
        )

    def test_no_placeholder_left_and_query_present(self):
        out = render_template(MONO, "oak table")
        assert "<QUERY>" not in out
        assert "oak table" in out

    def test_template_needs_exactly_one_placeholder(self):
        with pytest.raises(InvalidQuerySpec):
            PromptTemplate(id="x", pattern="no placeholder").validate()
        with pytest.raises(InvalidQuerySpec):
            PromptTemplate(id="x", pattern="<QUERY> and <QUERY>").validate()


class TestCompile:
    def test_single_term_is_embed_unchanged(self):
        engine, _, embedder = build_engine()
        out = engine.compile_query(spec(Term("chair")))
        expected = embedder.embed(EmbedRequest(kind="text", payload="chair"))
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_worked_refinement_matches_lerp_of_parts(self):
        # The canonical three-part refinement: 1.0 / 0.6 / -1.1.
        engine, _, embedder = build_engine(dimension=512)
        composed = engine.compile_query(
            spec(
                Term("dining chair", 1.0, "more"),
                Term("scandinavian design", 0.6, "more"),
                Term("upholstery", 1.1, "less"),
            )
        )
        parts = [
            (embedder.embed(EmbedRequest(kind="text", payload="dining chair")), 1.0),
            (embedder.embed(EmbedRequest(kind="text", payload="scandinavian design")), 0.6),
            (embedder.embed(EmbedRequest(kind="text", payload="upholstery")), -1.1),
        ]
        np.testing.assert_allclose(composed, vecmath.lerp_combine(parts), atol=1e-12)
        np.testing.assert_allclose(composed, lerp_oracle(parts), atol=1e-12)

    def test_polarity_is_weight_sign_sugar(self):
        engine, _, _ = build_engine()
        a = engine.compile_query(spec(Term("chair", 1.0), Term("plastic", -0.5, "less")))
        b = engine.compile_query(spec(Term("chair", 1.0), Term("plastic", 0.5, "less")))
        np.testing.assert_allclose(a, b, atol=0)

    def test_template_applies_to_positive_terms_only(self):
        registry = TemplateRegistry([MONO])
        engine, _, _ = build_engine()
        engine.registry = registry
        _, trace = engine.compile_with_trace(
            spec(Term("chair", 1.0), Term("clutter", 0.5, "less"), template="monochrome")
        )
        rendered = {t["text"]: t["rendered"] for t in trace["terms"]}
        assert rendered["chair"] == "A black and white, monochromatic image of a chair"
        assert rendered["clutter"] == "clutter"

    def test_unknown_template(self):
        engine, _, _ = build_engine()
        with pytest.raises(UnknownTemplate):
            engine.compile_query(spec(Term("chair"), template="nope"))

    def test_demotion_appends_exact_text_and_weight(self):
        engine, _, embedder = build_engine()
        composed, trace = engine.compile_with_trace(spec(Term("chair"), demote_quality=True))
        assert trace["demotion"] == {
            "text": "low quality, low res, burry, jpeg artefacts",
            "weight": -1.1,
        }
        manual = vecmath.lerp_combine(
            [
                (embedder.embed(EmbedRequest(kind="text", payload="chair")), 1.0),
                (embedder.embed(EmbedRequest(kind="text", payload=DEMOTE_TEXT)), -1.1),
            ]
        )
        np.testing.assert_allclose(composed, manual, atol=1e-12)

    def test_demote_weight_overridable_per_request(self):
        engine, _, _ = build_engine()
        _, trace = engine.compile_with_trace(
            spec(Term("chair"), demote_quality=True, demote_weight=-0.3)
        )
        assert trace["demotion"]["weight"] == -0.3

    def test_demotion_not_templated(self):
        engine, _, _ = build_engine()
        engine.registry = TemplateRegistry([MONO])
        _, trace = engine.compile_with_trace(
            spec(Term("chair"), template="monochrome", demote_quality=True)
        )
        assert trace["demotion"]["text"] == DEMOTE_TEXT

    def test_context_split_frozen(self):
        # q0 = e1 via fixture term, context doc at e2: 0.7/0.3 split.
        engine, _, _ = build_engine(
            dimension=2, docs=[doc("X", [0.0, 1.0])]
        )
        out = engine.compile_query(
            spec(Term("fixture:1,0"), context_items=(ContextItem("doc", "X"),))
        )
        np.testing.assert_allclose(
            out, [0.9191450300180579, 0.3939192985791677], atol=1e-9
        )
        np.testing.assert_allclose(
            out, lerp_oracle([([1.0, 0.0], 0.7), ([0.0, 1.0], 0.3)]), atol=1e-12
        )

    def test_multiple_context_items_share_mass_proportionally(self):
        engine, _, _ = build_engine(
            dimension=3, docs=[doc("X", [0, 1.0, 0]), doc("Y", [0, 0, 1.0])]
        )
        out = engine.compile_query(
            spec(
                Term("fixture:1,0,0"),
                context_items=(ContextItem("doc", "X", 3.0), ContextItem("doc", "Y", 1.0)),
            )
        )
        # X gets 0.3 * 3/4, Y gets 0.3 * 1/4.
        expected = lerp_oracle(
            [([1.0, 0, 0], 0.7), ([0, 1.0, 0], 0.225), ([0, 0, 1.0], 0.075)]
        )
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_context_alpha_configurable(self):
        engine, _, _ = build_engine(
            dimension=2, docs=[doc("X", [0.0, 1.0])], context_alpha=0.5
        )
        out = engine.compile_query(
            spec(Term("fixture:1,0"), context_items=(ContextItem("doc", "X"),))
        )
        np.testing.assert_allclose(out, lerp_oracle([([1, 0], 0.5), ([0, 1], 0.5)]), atol=1e-12)

    def test_context_image_reference(self):
        engine, _, embedder = build_engine()
        out = engine.compile_query(
            spec(Term("backpack"), context_items=(ContextItem("image", "http://img/forest.png"),))
        )
        img = embedder.embed(EmbedRequest(kind="image", payload="http://img/forest.png"))
        q0 = embedder.embed(EmbedRequest(kind="text", payload="backpack"))
        np.testing.assert_allclose(out, vecmath.lerp_combine([(q0, 0.7), (img, 0.3)]), atol=1e-12)

    def test_context_doc_missing(self):
        engine, _, _ = build_engine()
        with pytest.raises(NotFound):
            engine.compile_query(spec(Term("chair"), context_items=(ContextItem("doc", "ghost"),)))

    def test_cancelling_weights_degenerate(self):
        engine, _, _ = build_engine(dimension=2)
        with pytest.raises(DegenerateVector):
            engine.compile_query(spec(Term("fixture:1,0", 1.0), Term("fixture:1,0", 1.0, "less")))

    def test_deterministic(self):
        engine, _, _ = build_engine()
        s = spec(Term("chair", 1.0), Term("metal", 0.4, "less"))
        assert engine.compile_query(s).tobytes() == engine.compile_query(s).tobytes()

    def test_scaling_invariance(self):
        engine, _, _ = build_engine()
        base = engine.compile_query(spec(Term("chair", 1.0), Term("wood", 0.6)))
        for c in (0.5, 2.0, 10.0):
            # Cap is |w| <= 10, so c=10 uses weights 1.0 and 0.6 scaled down.
            scaled = engine.compile_query(
                spec(Term("chair", min(1.0 * c, 10.0)), Term("wood", min(0.6 * c, 6.0)))
            )
            np.testing.assert_allclose(scaled, base, atol=1e-9)


class TestSearch:
    def _fixture_engine(self):
        return build_engine(
            dimension=2, docs=[doc("chair-doc", [1.0, 0.0]), doc("lamp-doc", [0.0, 1.0])]
        )

    def test_self_match_through_pipeline(self):
        engine, _, _ = self._fixture_engine()
        hits = engine.search(spec(Term("fixture:1,0"), k=1))
        assert [(h.id, h.score) for h in hits] == [("chair-doc", 1.0)]

    def test_negative_term_flips_ranking(self):
        engine, _, _ = self._fixture_engine()
        hits = engine.search(
            spec(Term("fixture:1,0", 1.0), Term("fixture:1,0", 1.1, "less"), Term("fixture:0,1", 1.0))
        )
        assert hits[0].id == "lamp-doc"

    def test_negative_term_never_boosts_matching_doc(self):
        engine, _, _ = self._fixture_engine()
        before = {h.id: h.score for h in engine.search(spec(Term("fixture:1,1")))}
        after = {
            h.id: h.score
            for h in engine.search(spec(Term("fixture:1,1"), Term("fixture:1,0", 0.5, "less")))
        }
        assert after["chair-doc"] <= before["chair-doc"] + 1e-9

    def test_empty_index_empty_hits(self):
        engine, _, _ = build_engine(dimension=2)
        assert engine.search(spec(Term("fixture:1,0"))) == []

    def test_filter_passthrough(self):
        engine, index, _ = self._fixture_engine()
        index.upsert(doc("tagged", [0.6, 0.8], metadata={"style": "boho"}))
        hits = engine.search(spec(Term("fixture:1,0"), metadata_filter={"style": "boho"}))
        assert [h.id for h in hits] == ["tagged"]


class TestExpandWithFeedback:
    def _engine_with_tags(self):
        docs = [
            doc("r1", [1.0, 0, 0], {"tag": "rustic"}),
            doc("r2", [0, 1.0, 0], {"tag": "rustic"}),
            doc("m1", [0, 0, 1.0], {"tag": "modern"}),
        ]
        return build_engine(dimension=3, docs=docs)

    def test_appends_stub_terms(self):
        engine, _, _ = self._engine_with_tags()
        base = spec(Term("chair"))
        out = engine.expand_with_feedback(base, ["r1", "r2", "m1"])
        added = [(t.text, t.weight, t.polarity) for t in out.terms[1:]]
        assert added == [("rustic", 0.4, "more"), ("modern", 0.4, "more")]

    def test_original_spec_not_mutated(self):
        engine, _, _ = self._engine_with_tags()
        base = spec(Term("chair"))
        engine.expand_with_feedback(base, ["r1"])
        assert len(base.terms) == 1

    def test_empty_likes_unchanged(self):
        engine, _, _ = self._engine_with_tags()
        base = spec(Term("chair"))
        assert engine.expand_with_feedback(base, []) == base

    def test_unknown_liked_id(self):
        engine, _, _ = self._engine_with_tags()
        with pytest.raises(NotFound):
            engine.expand_with_feedback(spec(Term("chair")), ["ghost"])

    def test_expansion_weight_configurable(self):
        engine, _, _ = build_engine(
            dimension=3,
            docs=[doc("r1", [1.0, 0, 0], {"tag": "rustic"})],
            expansion_weight=0.9,
        )
        out = engine.expand_with_feedback(spec(Term("chair")), ["r1"])
        assert out.terms[-1].weight == 0.9


class TestValidation:
    def test_needs_positive_term(self):
        engine, _, _ = build_engine()
        with pytest.raises(InvalidQuerySpec):
            engine.compile_query(spec(Term("chair", 1.0, "less")))

    def test_no_terms(self):
        engine, _, _ = build_engine()
        with pytest.raises(InvalidQuerySpec):
            engine.compile_query(QuerySpec(terms=()))

    def test_weight_cap(self):
        engine, _, _ = build_engine()
        with pytest.raises(InvalidQuerySpec):
            engine.compile_query(spec(Term("chair", 10.5)))

    def test_unknown_polarity(self):
        engine, _, _ = build_engine()
        with pytest.raises(InvalidQuerySpec):
            engine.compile_query(spec(Term("chair", 1.0, "maybe")))

    def test_empty_term_text(self):
        engine, _, _ = build_engine()
        with pytest.raises(InvalidQuerySpec):
            engine.compile_query(spec(Term("  ")))

    def test_nonpositive_context_weight(self):
        engine, _, _ = build_engine()
        with pytest.raises(InvalidQuerySpec):
            engine.compile_query(
                spec(Term("chair"), context_items=(ContextItem("doc", "X", -1.0),))
            )

    def test_bad_k(self):
        engine, _, _ = build_engine()
        with pytest.raises(InvalidQuerySpec):
            engine.compile_query(spec(Term("chair"), k=0))


class TestTemplateRegistry:
    def test_defaults_include_monochrome(self):
        registry = TemplateRegistry()
        tpl = registry.get("monochrome")
        assert tpl.pattern == "A black and white, monochromatic image of a <QUERY>"

    def test_load_and_reload_from_file(self, tmp_path):
        import json

        path = tmp_path / "templates.json"
        path.write_text(json.dumps([{"id": "t1", "pattern": "a <QUERY>", "description": "d"}]))
        registry = TemplateRegistry(path=str(path))
        assert registry.get("t1").pattern == "a <QUERY>"
        path.write_text(
            json.dumps(
                [
                    {"id": "t1", "pattern": "b <QUERY>", "description": "d"},
                    {"id": "t2", "pattern": "c <QUERY>", "description": "d"},
                ]
            )
        )
        assert registry.reload() == 2
        assert registry.get("t1").pattern == "b <QUERY>"

    def test_bad_registry_pattern_rejected(self, tmp_path):
        import json

        path = tmp_path / "templates.json"
        path.write_text(json.dumps([{"id": "t1", "pattern": "nope", "description": ""}]))
        with pytest.raises(InvalidQuerySpec):
            TemplateRegistry(path=str(path))
