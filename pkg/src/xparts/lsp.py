"""Segmentation predictors behind one interface: a ground-truth oracle, a
directory of externally produced prediction files, and a seeded noise
simulator reproducing the segmentation failure taxonomy (exact / incomplete
/ wrong segmentation crossed with prediction correctness).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .data import (AttributeVocabulary, BBox, Sample, SegMap, VectorizeConfig, derive_seed,
                   rasterize_bboxes, read_segmap, vectorize)
from .errors import ValidationError


@dataclass(frozen=True)
class NoiseConfig:
    """Generative error model applied to ground-truth boxes, in fixed order:
    instance drops, then attribute drops, then spurious injections.

    Instance drops erase each box independently; when that would erase every
    box of a still-wanted attribute and p_drop_instance < 1, one box is kept
    so instance noise alone never changes the attribute set. At
    p_drop_instance = 1 the attribute is fully erased (degenerates to an
    attribute drop).
    """

    p_drop_instance: float = 0.0
    p_drop_attribute: float = 0.0
    p_spurious: float = 0.0
    seed: int = 0
    spurious_min_pixels: int = 1  # injected regions survive vectorization

    def __post_init__(self):
        for name in ("p_drop_instance", "p_drop_attribute", "p_spurious"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class PredictorConfig:
    kind: str  # "oracle" | "file" | "noisy"
    prediction_dir: str | None = None
    noise: NoiseConfig | None = None

    def __post_init__(self):
        if self.kind not in ("oracle", "file", "noisy"):
            raise ValidationError(f"unknown predictor kind {self.kind!r}")
        if self.kind == "file":
            if self.prediction_dir is None or not Path(self.prediction_dir).is_dir():
                raise ValidationError("file predictor requires an existing "
                                      "prediction directory")
        if self.kind == "noisy" and self.noise is None:
            raise ValidationError("noisy predictor requires a NoiseConfig")


class SegQuality(enum.Enum):
    EXACT = "ExactSeg"
    INCOMPLETE = "IncompleteSeg"
    WRONG = "WrongSeg"


class PredQuality(enum.Enum):
    CORRECT = "CorrectPred"
    WRONG = "WrongPred"


@dataclass(frozen=True)
class FailureCase:
    seg: SegQuality
    pred: PredQuality

    def __str__(self) -> str:
        return f"{self.seg.value}/{self.pred.value}"


def predict_segmap(cfg: PredictorConfig, sample: Sample,
                   n_attrs: int | None = None) -> SegMap:
    """Produce the predicted segmentation map for one sample.

    Oracle returns the ground truth unchanged; file mode parses
    <dir>/<sample_id>.segmap (+ optional .conf); noisy mode perturbs the
    ground-truth boxes and rasterizes, reproducibly under the configured
    seed (sub-seeded per sample_id, so evaluation order is irrelevant).
    """
    if cfg.kind == "oracle":
        return sample.gt_segmap
    if cfg.kind == "file":
        base = Path(cfg.prediction_dir) / sample.sample_id
        return read_segmap(base.with_suffix(".segmap"),
                           base.with_suffix(".conf"))
    return _noisy_segmap(cfg.noise, sample, n_attrs)


def _noisy_segmap(noise: NoiseConfig, sample: Sample,
                  n_attrs: int | None) -> SegMap:
    rng = np.random.default_rng(derive_seed(noise.seed, sample.sample_id))
    h, w = sample.gt_segmap.labels.shape

    by_attr: dict[int, list[BBox]] = {}
    for b in sample.gt_boxes:
        by_attr.setdefault(b.attribute_id, []).append(b)

    kept: list[BBox] = []
    for attr_id in sorted(by_attr):
        boxes = by_attr[attr_id]
        survivors = [b for b in boxes
                     if rng.random() >= noise.p_drop_instance]
        if not survivors and noise.p_drop_instance < 1.0:
            survivors = [boxes[int(rng.integers(0, len(boxes)))]]
        kept.extend(survivors)

    present = sorted({b.attribute_id for b in kept})
    dropped = {a for a in present if rng.random() < noise.p_drop_attribute}
    kept = [b for b in kept if b.attribute_id not in dropped]

    if n_attrs is None:
        n_attrs = max([b.attribute_id for b in sample.gt_boxes], default=0)
    present_now = {b.attribute_id for b in kept}
    side = max(1, math.isqrt(noise.spurious_min_pixels - 1) + 1)
    side = min(side, h, w)
    for attr_id in range(1, n_attrs + 1):
        if attr_id in present_now:
            continue
        if rng.random() < noise.p_spurious:
            x = int(rng.integers(0, w - side + 1))
            y = int(rng.integers(0, h - side + 1))
            kept.append(BBox(attr_id, x, y, side, side))

    return rasterize_bboxes(kept, h, w)


def region_counts(segmap: SegMap) -> dict[int, int]:
    """Number of 4-connected regions per attribute id (background excluded)."""
    counts: dict[int, int] = {}
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    for attr_id in sorted(segmap.present_ids()):
        _, n = ndimage.label(segmap.labels == attr_id, structure=structure)
        counts[attr_id] = int(n)
    return counts


def classify_failure(gt: Sample, pred_map: SegMap, pred_label: int,
                     cfg: VectorizeConfig = VectorizeConfig(),
                     reference_label: int | None = None) -> FailureCase:
    """Place one prediction in the failure taxonomy.

    Attribute sets are compared under the vectorization policy; instance
    counts are 4-connected regions of the raster maps. Equal sets with equal
    counts is exact segmentation; equal sets with differing counts is
    incomplete; differing sets is wrong. Prediction quality compares
    pred_label against the sample label (or reference_label when given,
    e.g. the oracle-path prediction).
    """
    n_attrs = max(
        max([b.attribute_id for b in gt.gt_boxes], default=0),
        max(gt.gt_segmap.present_ids() | pred_map.present_ids(), default=0))
    vocab = AttributeVocabulary(tuple(f"a{i}" for i in range(1, n_attrs + 1)))
    gt_set = set(vectorize(gt.gt_segmap, vocab, cfg).present_ids())
    pred_set = set(vectorize(pred_map, vocab, cfg).present_ids())
    if gt_set != pred_set:
        seg = SegQuality.WRONG
    elif region_counts(gt.gt_segmap) == region_counts(pred_map):
        seg = SegQuality.EXACT
    else:
        seg = SegQuality.INCOMPLETE
    target = gt.label if reference_label is None else reference_label
    pred = PredQuality.CORRECT if pred_label == target else PredQuality.WRONG
    return FailureCase(seg, pred)
