"""Triple datasets: vocabularies, bounding boxes, segmentation maps and
attribute vectors, plus manifest I/O and the synthetic sample generator.

A dataset ties together raster annotations (boxes rasterized into a
segmentation map), a binary attribute-presence vector per sample, and a
class label. All types are immutable after construction; operations taking
a seed are pure functions of their arguments.
"""

from __future__ import annotations

import hashlib
import shlex
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError

DEFAULT_GRID = 64


# ---------------------------------------------------------------------------
# vocabularies


@dataclass(frozen=True)
class AttributeVocabulary:
    """Ordered attribute names; id 0 is reserved for background."""

    names: tuple[str, ...]  # index j holds the name of attribute id j+1

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValidationError("duplicate attribute names")
        if any(not n for n in self.names):
            raise ValidationError("empty attribute name")

    def __len__(self) -> int:
        return len(self.names)

    @property
    def ids(self) -> range:
        return range(1, len(self.names) + 1)

    def name_of(self, attr_id: int) -> str:
        if not 1 <= attr_id <= len(self.names):
            raise ValidationError(f"unknown attribute id {attr_id}")
        return self.names[attr_id - 1]

    def id_of(self, name: str) -> int:
        try:
            return self.names.index(name) + 1
        except ValueError:
            raise ValidationError(f"unknown attribute name {name!r}") from None


@dataclass(frozen=True)
class ClassVocabulary:
    """Ordered class names; index is the class id (0..K-1)."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValidationError("duplicate class names")
        if any(not n for n in self.names):
            raise ValidationError("empty class name")

    def __len__(self) -> int:
        return len(self.names)

    def name_of(self, class_id: int) -> str:
        if not 0 <= class_id < len(self.names):
            raise ValidationError(f"unknown class id {class_id}")
        return self.names[class_id]

    def id_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown class name {name!r}") from None


# ---------------------------------------------------------------------------
# raster types


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box annotating one attribute instance, pixel coords."""

    attribute_id: int
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValidationError(f"degenerate box {self}")

    @property
    def area(self) -> int:
        return self.w * self.h


@dataclass(frozen=True)
class SegMap:
    """2-D grid of attribute ids (0 = background), optional confidence grid."""

    labels: np.ndarray  # int array, shape (H, W)
    confidence: np.ndarray | None = None  # float array in [0, 1], same shape

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        if self.confidence is not None:
            conf = np.asarray(self.confidence, dtype=np.float64)
            if conf.shape != labels.shape:
                raise ValidationError("confidence shape differs from labels")
            if conf.min() < 0.0 or conf.max() > 1.0:
                raise ValidationError("confidence values outside [0, 1]")
            conf.setflags(write=False)
            object.__setattr__(self, "confidence", conf)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def present_ids(self) -> set[int]:
        return set(np.unique(self.labels).tolist()) - {0}

    def __eq__(self, other) -> bool:
        if not isinstance(other, SegMap):
            return NotImplemented
        if not np.array_equal(self.labels, other.labels):
            return False
        if (self.confidence is None) != (other.confidence is None):
            return False
        if self.confidence is not None:
            return np.array_equal(self.confidence, other.confidence)
        return True


@dataclass(frozen=True)
class AttributeVector:
    """Binary presence vector; index j corresponds to attribute id j+1."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValidationError("attribute vector entries must be 0 or 1")

    def __len__(self) -> int:
        return len(self.bits)

    def present_ids(self) -> tuple[int, ...]:
        return tuple(j + 1 for j, b in enumerate(self.bits) if b)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=np.float64)

    @staticmethod
    def from_ids(ids, size: int) -> "AttributeVector":
        bits = [0] * size
        for i in ids:
            if not 1 <= i <= size:
                raise ValidationError(f"attribute id {i} outside vocabulary")
            bits[i - 1] = 1
        return AttributeVector(tuple(bits))


@dataclass(frozen=True)
class Sample:
    """One (boxes, segmentation map, label) training triple."""

    sample_id: str
    gt_boxes: tuple[BBox, ...]
    gt_segmap: SegMap
    label: int


@dataclass(frozen=True)
class TripleDataset:
    attr_vocab: AttributeVocabulary
    class_vocab: ClassVocabulary
    samples: tuple[Sample, ...]

    def __post_init__(self):
        seen = set()
        for s in self.samples:
            if s.sample_id in seen:
                raise ValidationError(f"duplicate sample_id {s.sample_id!r}")
            seen.add(s.sample_id)
            if not 0 <= s.label < len(self.class_vocab):
                raise ValidationError(
                    f"sample {s.sample_id!r}: label {s.label} not in class vocabulary")
            for b in s.gt_boxes:
                if not 1 <= b.attribute_id <= len(self.attr_vocab):
                    raise ValidationError(
                        f"sample {s.sample_id!r}: attribute id {b.attribute_id} "
                        "not in vocabulary")


# ---------------------------------------------------------------------------
# configs


@dataclass(frozen=True)
class VectorizeConfig:
    """Confidence-mask policy for turning a segmentation map into bits."""

    tau: float = 0.5
    min_pixels: int = 1

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValidationError("tau must lie in [0, 1]")
        if self.min_pixels < 1:
            raise ValidationError("min_pixels must be >= 1")


@dataclass(frozen=True)
class SynthNoiseConfig:
    """Controls for the synthetic sample generator."""

    p_omit: float = 0.0  # prob of dropping each class-linked attribute
    grid_h: int = DEFAULT_GRID
    grid_w: int = DEFAULT_GRID
    max_instances: int = 2  # boxes per present attribute, uniform in [1, max]
    min_box: int = 2
    max_box: int = 10

    def __post_init__(self):
        if not 0.0 <= self.p_omit <= 1.0:
            raise ValidationError("p_omit must lie in [0, 1]")
        if self.max_instances < 1:
            raise ValidationError("max_instances must be >= 1")
        if not 1 <= self.min_box <= self.max_box <= min(self.grid_h, self.grid_w):
            raise ValidationError("box size bounds inconsistent with grid")


# ---------------------------------------------------------------------------
# core operations


def rasterize_bboxes(boxes, height: int, width: int) -> SegMap:
    """Paint boxes onto a background-0 grid.

    A pixel covered by several boxes takes the attribute of the box with the
    smallest area; equal areas are broken by the lower attribute id, so the
    result is independent of box order.
    """
    for b in boxes:
        if b.x < 0 or b.y < 0 or b.x + b.w > width or b.y + b.h > height:
            raise ValidationError(f"box {b} outside {height}x{width} grid")
    labels = np.zeros((height, width), dtype=np.int64)
    # paint largest area first so smaller boxes overwrite; among equal areas
    # paint higher ids first so the lowest id ends up on top
    for b in sorted(boxes, key=lambda b: (-b.area, -b.attribute_id)):
        labels[b.y:b.y + b.h, b.x:b.x + b.w] = b.attribute_id
    return SegMap(labels)


def vectorize(segmap: SegMap, vocab: AttributeVocabulary,
              cfg: VectorizeConfig = VectorizeConfig()) -> AttributeVector:
    """Collapse a segmentation map into a binary attribute-presence vector.

    Bit j is set iff attribute j+1 covers at least cfg.min_pixels cells whose
    confidence is >= cfg.tau (missing confidence counts as 1.0). Background
    never sets a bit; instance counts are discarded.
    """
    ids = segmap.present_ids()
    if not ids.issubset(set(vocab.ids)):
        raise ValidationError(f"segmap ids {sorted(ids - set(vocab.ids))} "
                              "outside vocabulary")
    if segmap.confidence is None:
        confident = np.ones_like(segmap.labels, dtype=bool)
    else:
        confident = segmap.confidence >= cfg.tau
    bits = [0] * len(vocab)
    for attr_id in ids:
        count = int(np.count_nonzero((segmap.labels == attr_id) & confident))
        if count >= cfg.min_pixels:
            bits[attr_id - 1] = 1
    return AttributeVector(tuple(bits))


def derive_seed(seed: int, key: str) -> int:
    """Stable per-key sub-seed so parallel per-sample work is order-free."""
    digest = hashlib.sha256(f"{seed}:{key}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _random_box(rng: np.random.Generator, attr_id: int,
                cfg: SynthNoiseConfig) -> BBox:
    w = int(rng.integers(cfg.min_box, cfg.max_box + 1))
    h = int(rng.integers(cfg.min_box, cfg.max_box + 1))
    x = int(rng.integers(0, cfg.grid_w - w + 1))
    y = int(rng.integers(0, cfg.grid_h - h + 1))
    return BBox(attr_id, x, y, w, h)


def synth_generate(kb, n_per_class: int,
                   noise: SynthNoiseConfig = SynthNoiseConfig(),
                   seed: int = 0) -> TripleDataset:
    """Generate a dataset whose samples follow a knowledge base.

    Each sample of class c draws its attribute set from the attributes linked
    to c, dropping each independently with probability noise.p_omit but always
    retaining at least one. Attributes are placed as random boxes and
    rasterized. Fully reproducible under a fixed seed.
    """
    from .kb import class_attribute_map  # local import to avoid a cycle

    attr_vocab, class_vocab, linked = class_attribute_map(kb)
    samples = []
    for cid, cname in enumerate(class_vocab.names):
        attrs = linked[cname]
        if not attrs:
            raise ValidationError(f"class {cname!r} has no linked attributes")
        attr_ids = sorted(attr_vocab.id_of(a) for a in attrs)
        for i in range(n_per_class):
            sample_id = f"c{cid}-{i:05d}"
            rng = np.random.default_rng(derive_seed(seed, sample_id))
            keep = [a for a in attr_ids if rng.random() >= noise.p_omit]
            if not keep:
                keep = [attr_ids[int(rng.integers(0, len(attr_ids)))]]
            boxes = []
            for attr_id in keep:
                n_inst = int(rng.integers(1, noise.max_instances + 1))
                for _ in range(n_inst):
                    boxes.append(_random_box(rng, attr_id, noise))
            segmap = rasterize_bboxes(boxes, noise.grid_h, noise.grid_w)
            samples.append(Sample(sample_id, tuple(boxes), segmap, cid))
    samples.sort(key=lambda s: s.sample_id)
    return TripleDataset(attr_vocab, class_vocab, tuple(samples))


# ---------------------------------------------------------------------------
# manifest format
#
# Line-delimited UTF-8, shlex-style quoting for names:
#   attr <id> <name>
#   class <id> <name>
#   grid <H> <W>
#   sample <sample_id> <class_id> [attr,x,y,w,h ...]
# Blank lines and lines starting with '#' are ignored. Vocabulary and grid
# lines must precede sample lines.


def load_dataset(manifest_path) -> TripleDataset:
    """Parse a manifest file into a dataset, ordering samples by sample_id."""
    path = Path(manifest_path)
    attrs: dict[int, str] = {}
    classes: dict[int, str] = {}
    grid = (DEFAULT_GRID, DEFAULT_GRID)
    raw_samples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                tokens = shlex.split(line)
            except ValueError as exc:
                raise FormatError(f"bad quoting: {exc}", str(path), lineno)
            kind, rest = tokens[0], tokens[1:]
            try:
                if kind == "attr":
                    attrs[int(rest[0])] = rest[1]
                elif kind == "class":
                    classes[int(rest[0])] = rest[1]
                elif kind == "grid":
                    grid = (int(rest[0]), int(rest[1]))
                elif kind == "sample":
                    sid, cid = rest[0], int(rest[1])
                    boxes = []
                    for quint in rest[2:]:
                        a, x, y, w, h = (int(v) for v in quint.split(","))
                        boxes.append((a, x, y, w, h))
                    raw_samples.append((sid, cid, boxes, lineno))
                else:
                    raise FormatError(f"unknown record kind {kind!r}",
                                      str(path), lineno)
            except (IndexError, ValueError) as exc:
                raise FormatError(f"malformed {kind} record: {exc}",
                                  str(path), lineno)
    attr_vocab = _vocab_from_entries(attrs, path, kind="attribute")
    if sorted(classes) != list(range(len(classes))):
        raise FormatError("class ids must be contiguous from 0", str(path))
    class_vocab = ClassVocabulary(tuple(classes[i] for i in sorted(classes)))

    samples = []
    for sid, cid, raw_boxes, lineno in raw_samples:
        if cid not in classes:
            raise ValidationError(f"sample {sid!r}: unknown class id {cid}")
        boxes = []
        for a, x, y, w, h in raw_boxes:
            if a not in attrs:
                raise ValidationError(f"sample {sid!r}: unknown attribute id {a}")
            boxes.append(BBox(a, x, y, w, h))
        segmap = rasterize_bboxes(boxes, grid[0], grid[1])
        samples.append(Sample(sid, tuple(boxes), segmap, cid))
    samples.sort(key=lambda s: s.sample_id)
    return TripleDataset(attr_vocab, class_vocab, tuple(samples))


def _vocab_from_entries(entries: dict[int, str], path, kind: str):
    if sorted(entries) != list(range(1, len(entries) + 1)):
        raise FormatError(f"{kind} ids must be contiguous from 1", str(path))
    return AttributeVocabulary(tuple(entries[i] for i in sorted(entries)))


def save_dataset(ds: TripleDataset, manifest_path) -> None:
    """Write a dataset back out in the manifest format."""
    lines = []
    for i, name in enumerate(ds.attr_vocab.names, start=1):
        lines.append(f"attr {i} {shlex.quote(name)}")
    for i, name in enumerate(ds.class_vocab.names):
        lines.append(f"class {i} {shlex.quote(name)}")
    if ds.samples:
        h, w = ds.samples[0].gt_segmap.labels.shape
        lines.append(f"grid {h} {w}")
    for s in sorted(ds.samples, key=lambda s: s.sample_id):
        quints = " ".join(f"{b.attribute_id},{b.x},{b.y},{b.w},{b.h}"
                          for b in s.gt_boxes)
        record = f"sample {shlex.quote(s.sample_id)} {s.label}"
        lines.append(f"{record} {quints}" if quints else record)
    Path(manifest_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# segmentation-map file format
#
# First line "H W", then H rows of W space-separated integer ids. The
# optional companion confidence file has the same shape with decimals in
# [0, 1]. This is the byte-level contract shared with external predictors.


def write_segmap(segmap: SegMap, path, confidence_path=None) -> None:
    rows = [f"{segmap.height} {segmap.width}"]
    for row in segmap.labels:
        rows.append(" ".join(str(int(v)) for v in row))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")
    if confidence_path is not None and segmap.confidence is not None:
        rows = [f"{segmap.height} {segmap.width}"]
        for row in segmap.confidence:
            rows.append(" ".join(repr(float(v)) for v in row))
        Path(confidence_path).write_text("\n".join(rows) + "\n",
                                         encoding="utf-8")


def _read_grid(path, parse):
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        try:
            h, w = (int(v) for v in header.split())
        except ValueError:
            raise FormatError("header must be 'H W'", str(path), 1)
        rows = []
        for lineno in range(2, h + 2):
            line = fh.readline()
            if not line:
                raise FormatError(f"expected {h} rows, file ended",
                                  str(path), lineno)
            try:
                row = [parse(v) for v in line.split()]
            except ValueError as exc:
                raise FormatError(str(exc), str(path), lineno)
            if len(row) != w:
                raise FormatError(f"expected {w} columns, got {len(row)}",
                                  str(path), lineno)
            rows.append(row)
        trailing = fh.readline()
        if trailing.strip():
            raise FormatError("unexpected data after grid", str(path), h + 2)
    return np.asarray(rows)


def read_segmap(path, confidence_path=None) -> SegMap:
    labels = _read_grid(path, int)
    confidence = None
    if confidence_path is not None and Path(confidence_path).exists():
        confidence = _read_grid(confidence_path, float)
        if confidence.shape != labels.shape:
            raise FormatError("confidence shape differs from labels",
                              str(confidence_path))
        if confidence.min() < 0.0 or confidence.max() > 1.0:
            raise FormatError("confidence values outside [0, 1]",
                              str(confidence_path))
    return SegMap(labels, confidence)
