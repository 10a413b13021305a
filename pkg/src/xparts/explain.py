"""Natural-language explanations of classifier decisions, machine-checkable
audits of their quality, and exhaustive minimal-flip counterfactuals.

An explanation quotes the attribute names present in the input and the
exact classifier weights tying them to the predicted class; the audits
verify that it uses vocabulary symbols and weights (objectivity), that every
quoted value traces back to the model and input (intrinsicality), and that
the model itself is of self-explaining form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .classifier import LogRegModel, predict, predict_proba
from .data import AttributeVector
from .errors import ValidationError

ALLOWED_PROVENANCE = frozenset({"model-weight", "input-bit", "vocabulary"})
DEFAULT_SCAN_BOUND = 24
DEFAULT_SIMULATABILITY_BOUND = 32


@dataclass(frozen=True)
class Explanation:
    sample_id: str
    predicted_class: str
    attributes: tuple[tuple[str, float], ...]  # (name, weight), |weight| desc
    text: str
    provenance: tuple[tuple[str, str], ...]  # (field, source tag)
    segmap_ref: str | None = None


def explain(model: LogRegModel, z: AttributeVector, sample_id: str,
            segmap_ref: str | None = None) -> Explanation:
    """Render the template explanation for one prediction.

    Weights appear in the text with 4 decimals but are stored exact so the
    audits can compare them against the model bit-for-bit. An all-zero input
    yields a degenerate no-attributes variant (prediction still emitted).
    """
    class_id = predict(model, z)
    class_name = model.class_vocab.name_of(class_id)
    pairs = []
    for attr_id in z.present_ids():
        name = model.attr_vocab.name_of(attr_id)
        weight = float(model.weights[class_id][attr_id - 1])
        pairs.append((name, weight, attr_id))
    pairs.sort(key=lambda p: (-abs(p[1]), p[2]))
    attributes = tuple((name, weight) for name, weight, _ in pairs)

    provenance = [("predicted_class", "vocabulary")]
    for name, _, attr_id in pairs:
        provenance.append((f"attribute:{name}", "vocabulary"))
        provenance.append((f"bit:{attr_id}", "input-bit"))
        provenance.append((f"weight:{name}", "model-weight"))

    if attributes:
        names = ", ".join(name for name, _ in attributes)
        values = ", ".join(f"{w:.4f}" for _, w in attributes)
        text = (f"Image {sample_id} represents a {class_name} because "
                f"attributes {names} are present, and the classifier leads "
                f"those attributes respectively with weights {values} to "
                f"class {class_name}.")
    else:
        text = (f"Image {sample_id} represents a {class_name} but no "
                f"attributes were detected.")
    return Explanation(sample_id, class_name, attributes, text,
                       tuple(provenance), segmap_ref)


def audit_objectivity(e: Explanation) -> bool:
    """True when the explanation names at least one vocabulary symbol and
    quotes at least one weight relating it to the prediction."""
    return len(e.attributes) >= 1


def audit_intrinsicality(e: Explanation, model: LogRegModel,
                         z: AttributeVector) -> bool:
    """True when every quoted element traces back to the model or its input:
    allowed provenance tags only, weights exactly equal to the stored matrix,
    and every named attribute actually present in the input vector."""
    if any(tag not in ALLOWED_PROVENANCE for _, tag in e.provenance):
        return False
    if e.predicted_class not in model.class_vocab.names:
        return False
    class_id = model.class_vocab.id_of(e.predicted_class)
    present = set(z.present_ids())
    for name, weight in e.attributes:
        if name not in model.attr_vocab.names:
            return False
        attr_id = model.attr_vocab.id_of(name)
        if attr_id not in present:
            return False
        if float(model.weights[class_id][attr_id - 1]) != weight:
            return False
    return True


@dataclass(frozen=True)
class CounterfactualResult:
    flips: tuple[int, ...]  # 0-based bit indices toggled, sorted
    new_class: int
    old_prob: float  # probability of the original class before flipping
    new_prob: float  # probability of the original class after flipping


def counterfactual_scan(model: LogRegModel, z: AttributeVector,
                        max_flips: int = 2,
                        scan_bound: int = DEFAULT_SCAN_BOUND,
                        ) -> list[CounterfactualResult]:
    """Exhaustively search the Hamming ball for class-changing flip sets.

    Enumerates flip sets by increasing cardinality up to max_flips and
    returns every minimal-cardinality set that changes the argmax, ordered
    by cardinality then lexicographically. Empty when no change is reachable.
    """
    if max_flips < 1:
        raise ValidationError("max_flips must be >= 1")
    k = len(z)
    if k > scan_bound:
        raise ValidationError(
            f"exhaustive scan refused for {k} attributes (bound {scan_bound})")
    orig_class = predict(model, z)
    old_prob = float(predict_proba(model, z)[orig_class])
    results: list[CounterfactualResult] = []
    for cardinality in range(1, max_flips + 1):
        for flips in itertools.combinations(range(k), cardinality):
            bits = list(z.bits)
            for j in flips:
                bits[j] = 1 - bits[j]
            flipped = AttributeVector(tuple(bits))
            new_class = predict(model, flipped)
            if new_class != orig_class:
                new_prob = float(predict_proba(model, flipped)[orig_class])
                results.append(CounterfactualResult(flips, new_class,
                                                    old_prob, new_prob))
        if results:
            break
    return results


def audit_self_explaining(model: LogRegModel,
                          bound: int = DEFAULT_SIMULATABILITY_BOUND,
                          n_checks: int = 100, seed: int = 0) -> bool:
    """Check the self-explaining form of the classifier.

    (a) additive separability: per-attribute contributions sum to the linear
    score within 1e-12 on sampled inputs; (b) monotonicity: increasing one
    contribution never decreases the class score; (c) the attribute basis is
    small enough to simulate (at most `bound` attributes).
    """
    if model.n_attrs > bound:
        return False
    rng = np.random.default_rng(seed)
    dim = model.weights.shape[1]
    for _ in range(n_checks):
        bits = rng.integers(0, 2, size=model.n_attrs)
        x = bits.astype(np.float64)
        if model.use_bias:
            x = np.append(x, 1.0)
        for k in range(model.n_classes):
            contributions = model.weights[k] * x
            total = float(model.weights[k] @ x)
            if abs(float(contributions.sum()) - total) > 1e-12:
                return False
            # bumping any single contribution term raises the score by the
            # same amount: the score is the identity over summed terms
            delta = 0.5
            if (float(contributions.sum()) + delta) - total < delta - 1e-12:
                return False
    return True
