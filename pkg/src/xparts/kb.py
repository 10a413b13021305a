"""Knowledge-base triplification: extract (subject, predicate, object)
triples from a dataset, serialize/parse the triple text format, and turn
the terminological part into a bipartite attribute-class graph.

Triples use human-readable names, never numeric ids, so downstream
explanations stay grounded in vocabulary symbols.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .data import AttributeVocabulary, ClassVocabulary, TripleDataset, vectorize
from .errors import FormatError, ValidationError

PREDICATES = ("isPartOf", "hasLabel", "hasAttributes")


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: str | tuple[str, ...]

    def __post_init__(self):
        if self.predicate not in PREDICATES:
            raise ValidationError(f"unknown predicate {self.predicate!r}")
        if not self.subject:
            raise ValidationError("empty subject")
        if isinstance(self.object, tuple):
            if self.predicate != "hasAttributes":
                raise ValidationError(
                    f"list object only allowed for hasAttributes")
        elif not self.object:
            raise ValidationError("empty object")


@dataclass(frozen=True)
class KnowledgeBase:
    tbox: tuple[Triple, ...]  # (attribute, isPartOf, class)
    abox: tuple[Triple, ...]  # per-sample hasLabel / hasAttributes

    def __post_init__(self):
        if len(set(self.tbox)) != len(self.tbox):
            raise ValidationError("duplicate TBox triple")
        for t in self.tbox:
            if t.predicate != "isPartOf":
                raise ValidationError("TBox may only contain isPartOf triples")
        for t in self.abox:
            if t.predicate == "isPartOf":
                raise ValidationError("ABox may not contain isPartOf triples")


def extract_kb(ds: TripleDataset, min_support: float = 0.0) -> KnowledgeBase:
    """Triplify a dataset.

    The TBox links an attribute to a class when the attribute occurs in at
    least a min_support fraction of that class's samples (min_support 0 keeps
    any co-occurrence). The ABox records one hasLabel and one hasAttributes
    triple per sample, in sample order.
    """
    if not ds.samples:
        raise ValidationError("cannot extract a knowledge base from an "
                              "empty dataset")
    if not 0.0 <= min_support <= 1.0:
        raise ValidationError("min_support must lie in [0, 1]")
    class_counts = [0] * len(ds.class_vocab)
    co_counts = {}  # (attr_id, class_id) -> count
    abox = []
    for s in ds.samples:
        class_counts[s.label] += 1
        vec = vectorize_sample(s, ds.attr_vocab)
        names = tuple(ds.attr_vocab.name_of(i) for i in vec)
        abox.append(Triple(s.sample_id, "hasLabel",
                           ds.class_vocab.name_of(s.label)))
        abox.append(Triple(s.sample_id, "hasAttributes", names))
        for attr_id in vec:
            key = (attr_id, s.label)
            co_counts[key] = co_counts.get(key, 0) + 1
    tbox = []
    for cid, cname in enumerate(ds.class_vocab.names):
        for attr_id in ds.attr_vocab.ids:
            count = co_counts.get((attr_id, cid), 0)
            if count == 0:
                continue
            if min_support == 0.0 or count / class_counts[cid] >= min_support:
                tbox.append(Triple(ds.attr_vocab.name_of(attr_id),
                                   "isPartOf", cname))
    return KnowledgeBase(tuple(tbox), tuple(abox))


def vectorize_sample(sample, attr_vocab) -> tuple[int, ...]:
    """Attribute ids present in a sample's ground-truth segmentation map."""
    return vectorize(sample.gt_segmap, attr_vocab).present_ids()


# ---------------------------------------------------------------------------
# text format: one "(subject, predicate, object)" per line; names quoted,
# hasAttributes objects written as a quoted-name list in brackets.

_NAME = r'"((?:[^"\\]|\\.)*)"'
_TRIPLE_RE = re.compile(
    rf'^\(\s*{_NAME}\s*,\s*(\w+)\s*,\s*({_NAME}|\[[^\]]*\])\s*\)$')
_LIST_ITEM_RE = re.compile(_NAME)


def _quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _unquote(raw: str) -> str:
    return raw.replace('\\"', '"').replace("\\\\", "\\")


def serialize_kb(kb: KnowledgeBase) -> str:
    lines = []
    for t in list(kb.tbox) + list(kb.abox):
        if isinstance(t.object, tuple):
            obj = "[" + ", ".join(_quote(n) for n in t.object) + "]"
        else:
            obj = _quote(t.object)
        lines.append(f"({_quote(t.subject)}, {t.predicate}, {obj})")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_kb(text: str) -> KnowledgeBase:
    tbox, abox = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        m = _TRIPLE_RE.match(line)
        if not m:
            raise FormatError("not a '(subject, predicate, object)' triple",
                              line=lineno)
        subject, predicate, raw_obj = _unquote(m.group(1)), m.group(2), m.group(3)
        if predicate not in PREDICATES:
            raise FormatError(f"unknown predicate {predicate!r}", line=lineno)
        if raw_obj.startswith("["):
            obj = tuple(_unquote(i.group(1))
                        for i in _LIST_ITEM_RE.finditer(raw_obj))
        else:
            obj = _unquote(m.group(4))
        triple = Triple(subject, predicate, obj)
        (tbox if predicate == "isPartOf" else abox).append(triple)
    return KnowledgeBase(tuple(tbox), tuple(abox))


def load_kb(path) -> KnowledgeBase:
    return parse_kb(Path(path).read_text(encoding="utf-8"))


def save_kb(kb: KnowledgeBase, path) -> None:
    Path(path).write_text(serialize_kb(kb), encoding="utf-8")


def monumai_expert_kb() -> KnowledgeBase:
    """The MonuMAI art-historian knowledge base shipped as a fixture."""
    text = (resources.files("xparts") / "fixtures" / "monumai_kb.txt").read_text(
        encoding="utf-8")
    return parse_kb(text)


# ---------------------------------------------------------------------------
# graph view


def kb_to_graph(kb: KnowledgeBase):
    """Bipartite attribute-class graph of the TBox (one edge per triple)."""
    from .kg import KnowledgeGraph

    attr_nodes, class_nodes, edges = set(), set(), set()
    for t in kb.tbox:
        attr_nodes.add(t.subject)
        class_nodes.add(t.object)
        edges.add((t.subject, t.object))
    return KnowledgeGraph(frozenset(attr_nodes), frozenset(class_nodes),
                          frozenset(edges))


def class_attribute_map(kb: KnowledgeBase):
    """Vocabularies (ordered by first TBox appearance) and the per-class
    attribute sets, for KB-driven generation and classification."""
    attr_order, class_order = [], []
    linked: dict[str, set[str]] = {}
    for t in kb.tbox:
        if t.subject not in attr_order:
            attr_order.append(t.subject)
        if t.object not in class_order:
            class_order.append(t.object)
        linked.setdefault(t.object, set()).add(t.subject)
    attr_vocab = AttributeVocabulary(tuple(attr_order))
    class_vocab = ClassVocabulary(tuple(class_order))
    return attr_vocab, class_vocab, linked
