import pytest

from xparts import (FormatError, KnowledgeBase, Triple, ValidationError,
                    extract_kb, kb_to_graph, monumai_expert_kb, parse_kb,
                    serialize_kb, synth_generate)
from xparts.data import SynthNoiseConfig
from xparts.kb import vectorize_sample


def co_occurrence_edges(ds):
    """Brute-force attribute-class co-occurrence over the raw samples."""
    edges = set()
    for s in ds.samples:
        cname = ds.class_vocab.name_of(s.label)
        for attr_id in vectorize_sample(s, ds.attr_vocab):
            edges.add((ds.attr_vocab.name_of(attr_id), cname))
    return edges


class TestExtractKb:
    def test_single_sample(self):
        kb = monumai_expert_kb()
        ds = synth_generate(kb, 1, SynthNoiseConfig(p_omit=1.0), seed=3)
        one = type(ds)(ds.attr_vocab, ds.class_vocab, ds.samples[:1])
        sample = one.samples[0]
        extracted = extract_kb(one)
        attr = ds.attr_vocab.name_of(sample.gt_boxes[0].attribute_id)
        cname = ds.class_vocab.name_of(sample.label)
        assert extracted.tbox == (Triple(attr, "isPartOf", cname),)
        assert extracted.abox == (
            Triple(sample.sample_id, "hasLabel", cname),
            Triple(sample.sample_id, "hasAttributes", (attr,)))

    def test_exclusive_attribute_links_only_its_class(self):
        kb = monumai_expert_kb()
        ds = synth_generate(kb, 20, SynthNoiseConfig(p_omit=0.1), seed=9)
        extracted = extract_kb(ds)
        serliana_links = [t.object for t in extracted.tbox
                          if t.subject == "Serliana"]
        assert serliana_links == ["Renaissance Monument"]

    def test_matches_co_occurrence_oracle_at_zero_support(self):
        kb = monumai_expert_kb()
        ds = synth_generate(kb, 10, SynthNoiseConfig(p_omit=0.3), seed=21)
        graph = kb_to_graph(extract_kb(ds, min_support=0.0))
        assert set(graph.edges) == co_occurrence_edges(ds)

    def test_min_support_drops_rare_attribute(self):
        kb = monumai_expert_kb()
        ds = synth_generate(kb, 2, SynthNoiseConfig(p_omit=0.0), seed=1)
        # keep two samples of one class, strip one attribute from one of them
        cls = ds.samples[0].label
        pair = [s for s in ds.samples if s.label == cls][:2]
        target = pair[0].gt_boxes[0].attribute_id
        import dataclasses

        from xparts import rasterize_bboxes
        boxes = tuple(b for b in pair[0].gt_boxes if b.attribute_id != target)
        seg = rasterize_bboxes(boxes, 64, 64)
        modified = dataclasses.replace(pair[0], gt_boxes=boxes, gt_segmap=seg)
        ds2 = type(ds)(ds.attr_vocab, ds.class_vocab, (modified, pair[1]))
        name = ds.attr_vocab.name_of(target)
        cname = ds.class_vocab.name_of(cls)
        low = extract_kb(ds2, min_support=0.0)
        high = extract_kb(ds2, min_support=0.6)
        assert Triple(name, "isPartOf", cname) in low.tbox
        assert Triple(name, "isPartOf", cname) not in high.tbox

    def test_monotone_decreasing_in_min_support(self):
        kb = monumai_expert_kb()
        ds = synth_generate(kb, 8, SynthNoiseConfig(p_omit=0.4), seed=33)
        prev = None
        for support in (0.0, 0.25, 0.5, 0.75, 1.0):
            edges = set(kb_to_graph(extract_kb(ds, support)).edges)
            if prev is not None:
                assert edges.issubset(prev)
            prev = edges

    def test_abox_cardinality(self):
        kb = monumai_expert_kb()
        ds = synth_generate(kb, 5, seed=2)
        assert len(extract_kb(ds).abox) == 2 * len(ds.samples)

    def test_empty_dataset_rejected(self):
        kb = monumai_expert_kb()
        ds = synth_generate(kb, 1, seed=0)
        empty = type(ds)(ds.attr_vocab, ds.class_vocab, ())
        with pytest.raises(ValidationError):
            extract_kb(empty)


class TestSerialization:
    def test_empty_roundtrip(self):
        empty = KnowledgeBase((), ())
        assert serialize_kb(empty) == ""
        assert parse_kb("") == empty

    def test_monumai_fixture_roundtrips(self):
        kb = monumai_expert_kb()
        assert len(kb.tbox) == 18
        assert parse_kb(serialize_kb(kb)) == kb

    def test_extracted_kb_roundtrips(self):
        ds = synth_generate(monumai_expert_kb(), 3,
                            SynthNoiseConfig(p_omit=0.2), seed=4)
        kb = extract_kb(ds)
        assert parse_kb(serialize_kb(kb)) == kb

    def test_unknown_predicate_rejected(self):
        with pytest.raises(FormatError, match="partOf"):
            parse_kb('("x", partOf, "y")\n')

    def test_syntax_error_carries_line_number(self):
        text = '("a", isPartOf, "b")\nnot a triple\n'
        with pytest.raises(FormatError, match=":2"):
            parse_kb(text)


class TestKbToGraph:
    def test_monumai_shape(self):
        graph = kb_to_graph(monumai_expert_kb())
        assert len(graph.attr_nodes) == 15
        assert len(graph.class_nodes) == 4
        assert len(graph.edges) == 18

    def test_empty_tbox(self):
        graph = kb_to_graph(KnowledgeBase((), ()))
        assert not graph.nodes and not graph.edges

    def test_single_triple_single_edge(self):
        kb = KnowledgeBase((Triple("a", "isPartOf", "c"),), ())
        graph = kb_to_graph(kb)
        assert graph.edges == frozenset({("a", "c")})
