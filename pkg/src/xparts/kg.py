"""Bipartite attribute-class knowledge graphs: extraction from classifier
weights, exact graph edit distance between labeled graphs, the deterministic
edge-count classifier baseline, and the validity audit comparing the
extracted graph to an expert one.

Node labels are unique and never relabeled, so the minimal edit distance
under unit insert/delete costs reduces to the size of the symmetric
differences of the node and edge sets; ged() builds an explicit edit script
realizing that minimum.
"""

from __future__ import annotations

from dataclasses import dataclass

from .classifier import LogRegModel
from .data import AttributeVector, AttributeVocabulary, ClassVocabulary
from .errors import ValidationError

DEFAULT_EPSILON = 0.01
GED_NODE_BOUND = 40


@dataclass(frozen=True)
class KnowledgeGraph:
    attr_nodes: frozenset[str]
    class_nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]  # (attribute, class)

    def __post_init__(self):
        if self.attr_nodes & self.class_nodes:
            raise ValidationError("attribute and class node names overlap")
        for a, c in self.edges:
            if a not in self.attr_nodes or c not in self.class_nodes:
                raise ValidationError(f"edge ({a!r}, {c!r}) references a "
                                      "missing node")

    @property
    def nodes(self) -> frozenset[str]:
        return self.attr_nodes | self.class_nodes


@dataclass(frozen=True)
class GedResult:
    distance: int
    edit_script: tuple[tuple[str, object], ...]  # (op, payload)


def extract_kg(model: LogRegModel, epsilon: float = DEFAULT_EPSILON,
               ) -> KnowledgeGraph:
    """Read the graph off the weight matrix: an edge wherever the weight of
    (class, attribute) exceeds epsilon. Attribute nodes without edges are
    omitted; every class keeps a node."""
    if epsilon < 0:
        raise ValidationError("epsilon must be >= 0")
    edges = set()
    for k, cname in enumerate(model.class_vocab.names):
        for j, aname in enumerate(model.attr_vocab.names):
            if float(model.weights[k][j]) > epsilon:
                edges.add((aname, cname))
    attr_nodes = {a for a, _ in edges}
    return KnowledgeGraph(frozenset(attr_nodes),
                          frozenset(model.class_vocab.names),
                          frozenset(edges))


def ged(a: KnowledgeGraph, b: KnowledgeGraph) -> GedResult:
    """Exact edit distance between labeled graphs under unit insert/delete
    costs with zero-cost matching of identically labeled nodes.

    The script deletes edges and nodes present only in `a`, then inserts
    nodes and edges present only in `b`; with unique non-relabelable labels
    no shorter script exists.
    """
    if len(a.nodes) > GED_NODE_BOUND or len(b.nodes) > GED_NODE_BOUND:
        raise ValidationError(
            f"exact edit distance limited to {GED_NODE_BOUND} nodes; "
            "approximate matching is out of scope")
    script: list[tuple[str, object]] = []
    for edge in sorted(a.edges - b.edges):
        script.append(("delete-edge", edge))
    for node in sorted(a.nodes - b.nodes):
        script.append(("delete-node", node))
    for node in sorted(b.nodes - a.nodes):
        script.append(("insert-node", node))
    for edge in sorted(b.edges - a.edges):
        script.append(("insert-edge", edge))
    return GedResult(len(script), tuple(script))


def kg_deterministic_classify(kg: KnowledgeGraph, z: AttributeVector,
                              attr_vocab: AttributeVocabulary,
                              class_vocab: ClassVocabulary) -> int:
    """Untrained baseline: score each class by how many present attributes
    link to it in the graph; ties resolve to the lowest class id."""
    unknown = kg.nodes - set(attr_vocab.names) - set(class_vocab.names)
    if unknown:
        raise ValidationError(f"graph nodes not in vocabularies: "
                              f"{sorted(unknown)}")
    present = {attr_vocab.name_of(i) for i in z.present_ids()}
    best_id, best_score = 0, -1
    for cid, cname in enumerate(class_vocab.names):
        score = sum(1 for a in present if (a, cname) in kg.edges)
        if score > best_score:
            best_id, best_score = cid, score
    return best_id


def audit_validity(model: LogRegModel, expert_kb,
                   epsilon: float = DEFAULT_EPSILON) -> tuple[bool, GedResult]:
    """Compare the graph extracted from the weights against the expert
    knowledge base; valid means edit distance zero."""
    from .kb import kb_to_graph

    expert = kb_to_graph(expert_kb)
    unmatched = sorted(
        (expert.attr_nodes - set(model.attr_vocab.names))
        | (expert.class_nodes - set(model.class_vocab.names)))
    if unmatched:
        raise ValidationError(
            f"expert names missing from model vocabularies: {unmatched}")
    result = ged(extract_kg(model, epsilon), expert)
    return result.distance == 0, result


# ---------------------------------------------------------------------------
# exports


def kg_to_edge_list(kg: KnowledgeGraph) -> str:
    """One "(attr) -- (class)" line per edge, sorted."""
    lines = [f"({a}) -- ({c})" for a, c in sorted(kg.edges)]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_edge_list(text: str) -> KnowledgeGraph:
    """Inverse of kg_to_edge_list; attribute endpoint first on each line."""
    import re

    from .errors import FormatError

    pattern = re.compile(r"^\((.+)\) -- \((.+)\)$")
    attrs, classes, edges = set(), set(), set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        m = pattern.match(line)
        if not m:
            raise FormatError("expected '(attr) -- (class)'", line=lineno)
        attrs.add(m.group(1))
        classes.add(m.group(2))
        edges.add((m.group(1), m.group(2)))
    return KnowledgeGraph(frozenset(attrs), frozenset(classes),
                          frozenset(edges))


def kg_to_dot(kg: KnowledgeGraph) -> str:
    lines = ["graph {"]
    for a in sorted(kg.attr_nodes):
        lines.append(f'  "{a}" [shape=ellipse];')
    for c in sorted(kg.class_nodes):
        lines.append(f'  "{c}" [shape=box];')
    for a, c in sorted(kg.edges):
        lines.append(f'  "{a}" -- "{c}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
