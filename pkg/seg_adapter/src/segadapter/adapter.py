"""Wrap a segmentation model and export its per-image predictions as text
grids: one `<sample_id>.segmap` file of attribute ids and one
`<sample_id>.conf` file of per-pixel confidences in [0, 1].

File format (shared contract with the classification pipeline's reader):
first line "H W", then H lines of W space-separated values — integers in
the .segmap file, floats in the .conf file. Model class indices are
remapped to vocabulary attribute ids through a mapping file of
"model_index attribute_id" pairs; unmapped indices become background 0.

Images are plain text grids in the same "H W" + rows layout, holding
integer intensities. A stub model family ("stub:<k>") predicts the
constant model class k everywhere, which exercises the full export path
without a real network or checkpoint.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger("segadapter")


class AdapterError(Exception):
    """Configuration or input problem that aborts the export."""


@dataclass(frozen=True)
class AdapterConfig:
    model_ref: str
    input_dir: str
    output_dir: str
    attr_mapping: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        targets = list(self.attr_mapping.values())
        if len(set(targets)) != len(targets):
            raise AdapterError("attribute mapping must be injective: "
                               f"duplicate targets in {sorted(targets)}")
        if any(t <= 0 for t in targets):
            raise AdapterError("attribute ids must be positive")
        if any(s < 0 for s in self.attr_mapping):
            raise AdapterError("model class indices must be >= 0")


def load_mapping(path) -> dict[int, int]:
    """Parse a mapping file: one "model_index attribute_id" pair per line;
    blank lines and '#' comments ignored."""
    mapping: dict[int, int] = {}
    for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise AdapterError(f"{path}:{lineno}: expected "
                               "'model_index attribute_id'")
        try:
            src, dst = int(parts[0]), int(parts[1])
        except ValueError:
            raise AdapterError(f"{path}:{lineno}: indices must be integers")
        if src in mapping:
            raise AdapterError(f"{path}:{lineno}: duplicate model index "
                               f"{src}")
        mapping[src] = dst
    return mapping


# ---------------------------------------------------------------------------
# images and models


def read_image(path) -> np.ndarray:
    """Text-grid image: "H W" header, then H rows of W integer pixels."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise AdapterError(f"{path}: empty image file")
    try:
        h, w = (int(v) for v in lines[0].split())
    except ValueError:
        raise AdapterError(f"{path}:1: header must be 'H W'")
    if h <= 0 or w <= 0 or len(lines) < h + 1:
        raise AdapterError(f"{path}: expected {h} pixel rows")
    rows = []
    for i in range(1, h + 1):
        try:
            row = [int(v) for v in lines[i].split()]
        except ValueError:
            raise AdapterError(f"{path}:{i + 1}: pixels must be integers")
        if len(row) != w:
            raise AdapterError(f"{path}:{i + 1}: expected {w} pixels, "
                               f"got {len(row)}")
        rows.append(row)
    return np.asarray(rows, dtype=np.int64)


class StubModel:
    """Constant predictor: every pixel gets model class `class_index` with
    the confidence a one-hot logit head would give it (softmax of a unit
    logit against `n_classes - 1` zeros)."""

    def __init__(self, class_index: int, n_classes: int = 16):
        if not 0 <= class_index < n_classes:
            raise AdapterError(f"stub class {class_index} outside "
                               f"[0, {n_classes})")
        self.class_index = class_index
        self.confidence = math.e / (math.e + n_classes - 1)

    def predict(self, image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        labels = np.full(image.shape, self.class_index, dtype=np.int64)
        conf = np.full(image.shape, self.confidence, dtype=np.float64)
        return labels, conf


def load_model(model_ref: str):
    """Resolve a model reference. Supported: "stub:<k>"; anything else is
    treated as an unloadable checkpoint."""
    if model_ref.startswith("stub:"):
        try:
            k = int(model_ref.split(":", 1)[1])
        except ValueError:
            raise AdapterError(f"bad stub reference {model_ref!r}")
        return StubModel(k)
    raise AdapterError(f"cannot load checkpoint {model_ref!r}; only "
                       "stub:<k> references are available")


# ---------------------------------------------------------------------------
# export


def write_grid(path, grid: np.ndarray, fmt) -> None:
    rows = [f"{grid.shape[0]} {grid.shape[1]}"]
    for row in grid:
        rows.append(" ".join(fmt(v) for v in row))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def export_predictions(cfg: AdapterConfig) -> int:
    """Predict every .img file in input_dir and write the remapped
    .segmap/.conf pair into output_dir; returns the number of images
    exported. Unreadable images are skipped with a logged error."""
    model = load_model(cfg.model_ref)
    in_dir, out_dir = Path(cfg.input_dir), Path(cfg.output_dir)
    if not in_dir.is_dir():
        raise AdapterError(f"input directory {in_dir} does not exist")
    out_dir.mkdir(parents=True, exist_ok=True)
    remap_warned: set[int] = set()
    written = 0
    for image_path in sorted(in_dir.glob("*.img")):
        try:
            image = read_image(image_path)
        except AdapterError as exc:
            logger.error("skipping %s: %s", image_path.name, exc)
            continue
        labels, conf = model.predict(image)
        remapped = np.zeros_like(labels)
        for src in np.unique(labels):
            src = int(src)
            if src in cfg.attr_mapping:
                remapped[labels == src] = cfg.attr_mapping[src]
            elif src not in remap_warned:
                logger.warning("model class %d is unmapped; using "
                               "background 0", src)
                remap_warned.add(src)
        sample_id = image_path.stem
        write_grid(out_dir / f"{sample_id}.segmap", remapped,
                   lambda v: str(int(v)))
        write_grid(out_dir / f"{sample_id}.conf", conf,
                   lambda v: repr(float(v)))
        written += 1
    return written


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class FormatViolation:
    file: str
    line: int  # 0 when the problem is file-level
    message: str

    def __str__(self):
        return f"{self.file}:{self.line}: {self.message}"


def _check_grid(path, parse, low=None, high=None) -> list[FormatViolation]:
    out: list[FormatViolation] = []
    name = Path(path).name
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        return [FormatViolation(name, 0, "empty file")]
    try:
        h, w = (int(v) for v in lines[0].split())
    except ValueError:
        return [FormatViolation(name, 1, "header must be 'H W'")]
    if len(lines) - 1 != h:
        out.append(FormatViolation(name, len(lines),
                                   f"expected {h} rows, found "
                                   f"{len(lines) - 1}"))
    for i, line in enumerate(lines[1:h + 1], start=2):
        try:
            row = [parse(v) for v in line.split()]
        except ValueError:
            out.append(FormatViolation(name, i, "unparsable value"))
            continue
        if len(row) != w:
            out.append(FormatViolation(name, i,
                                       f"expected {w} values, got "
                                       f"{len(row)}"))
        if low is not None and any(v < low or v > high for v in row):
            out.append(FormatViolation(name, i,
                                       f"value outside [{low}, {high}]"))
    return out


def validate_format(output_dir) -> list[FormatViolation]:
    """Check every exported pair against the grid grammar: .segmap holds
    non-negative integers, .conf holds floats in [0, 1] with the same
    shape; a .segmap without its .conf (or vice versa) is a violation."""
    out_dir = Path(output_dir)
    if not out_dir.is_dir():
        raise AdapterError(f"{out_dir} is not a directory")
    violations: list[FormatViolation] = []
    segmaps = sorted(out_dir.glob("*.segmap"))
    confs = sorted(out_dir.glob("*.conf"))
    stems = {p.stem for p in segmaps}
    for conf in confs:
        if conf.stem not in stems:
            violations.append(FormatViolation(conf.name, 0,
                                              "confidence without segmap"))
    for segmap in segmaps:
        violations.extend(
            _check_grid(segmap, lambda v: _non_negative_int(v)))
        conf = segmap.with_suffix(".conf")
        if not conf.exists():
            violations.append(FormatViolation(segmap.name, 0,
                                              "missing confidence file"))
            continue
        violations.extend(_check_grid(conf, float, low=0.0, high=1.0))
    return violations


def _non_negative_int(token: str) -> int:
    value = int(token)
    if value < 0:
        raise ValueError("negative id")
    return value
