"""End-to-end classification: predict a segmentation map, vectorize it,
classify, explain, and aggregate evaluation reports over a dataset.

Everything is deterministic given configs and seeds; per-sample rows are
ordered by sample_id so the report bytes never depend on evaluation order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .classifier import LogRegModel, predict
from .data import (AttributeVector, SegMap, Sample, TripleDataset,
                   VectorizeConfig, vectorize)
from .explain import Explanation, explain
from .lsp import FailureCase, PredictorConfig, classify_failure, predict_segmap


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    confusion: np.ndarray  # (K, K) counts, rows = ground truth
    failure_counts: dict[str, int]
    per_sample: tuple[tuple[str, int, int, str, str], ...]
    # (sample_id, gt label, predicted label, failure case, explanation text)

    def __post_init__(self):
        conf = np.asarray(self.confusion, dtype=np.int64)
        conf.setflags(write=False)
        object.__setattr__(self, "confusion", conf)


def run_inference(sample: Sample, predictor_cfg: PredictorConfig,
                  model: LogRegModel,
                  vect_cfg: VectorizeConfig = VectorizeConfig(),
                  ) -> tuple[int, Explanation, SegMap]:
    """Predict map -> vectorize -> classify -> explain, in that order."""
    segmap = predict_segmap(predictor_cfg, sample, n_attrs=model.n_attrs)
    z = vectorize(segmap, model.attr_vocab, vect_cfg)
    class_id = predict(model, z)
    explanation = explain(model, z, sample.sample_id)
    return class_id, explanation, segmap


def evaluate(ds: TripleDataset, predictor_cfg: PredictorConfig,
             model: LogRegModel,
             vect_cfg: VectorizeConfig = VectorizeConfig()) -> EvalReport:
    """Run inference over every sample and aggregate accuracy, the confusion
    matrix and the failure-taxonomy counts."""
    k = len(ds.class_vocab)
    confusion = np.zeros((k, k), dtype=np.int64)
    failure_counts: dict[str, int] = {}
    rows = []
    for sample in sorted(ds.samples, key=lambda s: s.sample_id):
        class_id, explanation, segmap = run_inference(
            sample, predictor_cfg, model, vect_cfg)
        case = classify_failure(sample, segmap, class_id, vect_cfg)
        confusion[sample.label][class_id] += 1
        failure_counts[str(case)] = failure_counts.get(str(case), 0) + 1
        rows.append((sample.sample_id, sample.label, class_id, str(case),
                     explanation.text))
    accuracy = float(np.trace(confusion)) / len(ds.samples)
    return EvalReport(accuracy, confusion, failure_counts, tuple(rows))


def report_to_text(report: EvalReport, class_names) -> str:
    lines = [f"accuracy: {report.accuracy:.6f}", "confusion (rows = truth):"]
    for i, name in enumerate(class_names):
        counts = " ".join(f"{int(v):6d}" for v in report.confusion[i])
        lines.append(f"  {name:<28s} {counts}")
    lines.append("failure cases:")
    for case in sorted(report.failure_counts):
        lines.append(f"  {case:<32s} {report.failure_counts[case]}")
    return "\n".join(lines) + "\n"


def report_to_records(report: EvalReport) -> str:
    """Machine-readable line-delimited JSON: one summary record followed by
    one record per sample, stable key order."""
    out = [json.dumps({
        "record": "summary",
        "accuracy": report.accuracy,
        "confusion": report.confusion.tolist(),
        "failure_counts": {k: report.failure_counts[k]
                           for k in sorted(report.failure_counts)},
    }, sort_keys=True)]
    for sid, gt, pred, case, text in report.per_sample:
        out.append(json.dumps({
            "record": "sample", "sample_id": sid, "gt_label": gt,
            "pred_label": pred, "failure_case": case, "explanation": text,
        }, sort_keys=True))
    return "\n".join(out) + "\n"


def ground_truth_vectors(ds: TripleDataset,
                         vect_cfg: VectorizeConfig = VectorizeConfig(),
                         ) -> tuple[list[AttributeVector], list[int]]:
    """Vectorized ground-truth segmentation maps and labels, sample order."""
    X = [vectorize(s.gt_segmap, ds.attr_vocab, vect_cfg) for s in ds.samples]
    y = [s.label for s in ds.samples]
    return X, y
