import dataclasses

import numpy as np
import pytest

from xparts import (BBox, NoiseConfig, PredictorConfig, Sample,
                    ValidationError, VectorizeConfig, classify_failure,
                    monumai_expert_kb, predict_segmap, rasterize_bboxes,
                    read_segmap, synth_generate, vectorize, write_segmap)
from xparts.data import SynthNoiseConfig
from xparts.lsp import PredQuality, SegQuality, region_counts


def make_sample(boxes, label=0, size=16, sample_id="s"):
    return Sample(sample_id, tuple(boxes),
                  rasterize_bboxes(boxes, size, size), label)


class TestOracleAndFileModes:
    def test_oracle_returns_ground_truth(self):
        sample = make_sample([BBox(1, 0, 0, 4, 4)])
        assert predict_segmap(PredictorConfig("oracle"), sample) == \
            sample.gt_segmap

    def test_file_mode_roundtrip(self, tmp_path):
        sample = make_sample([BBox(1, 0, 0, 4, 4), BBox(2, 8, 8, 3, 3)],
                             sample_id="xyz")
        write_segmap(sample.gt_segmap, tmp_path / "xyz.segmap")
        cfg = PredictorConfig("file", prediction_dir=str(tmp_path))
        assert predict_segmap(cfg, sample) == sample.gt_segmap

    def test_file_mode_missing_file(self, tmp_path):
        sample = make_sample([BBox(1, 0, 0, 4, 4)], sample_id="nope")
        cfg = PredictorConfig("file", prediction_dir=str(tmp_path))
        with pytest.raises(OSError):
            predict_segmap(cfg, sample)

    def test_missing_dir_rejected(self):
        with pytest.raises(ValidationError):
            PredictorConfig("file", prediction_dir="/does/not/exist")


class TestNoisyMode:
    def test_zero_noise_equals_oracle(self):
        sample = make_sample([BBox(1, 0, 0, 4, 4), BBox(2, 8, 8, 3, 3)])
        cfg = PredictorConfig("noisy", noise=NoiseConfig(seed=1))
        assert predict_segmap(cfg, sample, n_attrs=3) == sample.gt_segmap

    def test_full_instance_drop_erases_attribute(self):
        boxes = [BBox(1, x, 0, 2, 2) for x in (0, 2, 4, 6, 8, 10)]
        sample = make_sample(boxes)
        cfg = PredictorConfig(
            "noisy", noise=NoiseConfig(p_drop_instance=1.0, seed=2))
        out = predict_segmap(cfg, sample, n_attrs=1)
        assert out.present_ids() == set()

    def test_partial_instance_drop_keeps_attribute_set(self):
        boxes = ([BBox(1, x, 0, 2, 2) for x in (0, 3, 6, 9)]
                 + [BBox(2, 0, 8, 3, 3)])
        sample = make_sample(boxes)
        for seed in range(20):
            cfg = PredictorConfig(
                "noisy", noise=NoiseConfig(p_drop_instance=0.7, seed=seed))
            out = predict_segmap(cfg, sample, n_attrs=2)
            assert out.present_ids() == {1, 2}

    def test_attribute_drop_removes_all_instances(self):
        boxes = [BBox(1, x, 0, 2, 2) for x in (0, 3, 6)]
        sample = make_sample(boxes)
        cfg = PredictorConfig(
            "noisy", noise=NoiseConfig(p_drop_attribute=1.0, seed=3))
        out = predict_segmap(cfg, sample, n_attrs=1)
        assert out.present_ids() == set()

    def test_spurious_injection_adds_absent_attributes(self):
        sample = make_sample([BBox(1, 0, 0, 4, 4)])
        cfg = PredictorConfig(
            "noisy", noise=NoiseConfig(p_spurious=1.0, seed=4))
        out = predict_segmap(cfg, sample, n_attrs=3)
        assert out.present_ids() == {1, 2, 3}

    def test_reproducible_under_seed(self):
        sample = make_sample([BBox(1, 0, 0, 4, 4), BBox(2, 6, 6, 5, 5)])
        noise = NoiseConfig(p_drop_instance=0.5, p_spurious=0.5, seed=9)
        cfg = PredictorConfig("noisy", noise=noise)
        a = predict_segmap(cfg, sample, n_attrs=4)
        b = predict_segmap(cfg, sample, n_attrs=4)
        assert a == b

    def test_instance_drop_never_changes_vector(self):
        # downstream invariant: surviving-set noise keeps the bits unchanged
        kb = monumai_expert_kb()
        ds = synth_generate(kb, 5, SynthNoiseConfig(p_omit=0.2), seed=31)
        vc = VectorizeConfig()
        for seed in range(5):
            noise = NoiseConfig(p_drop_instance=0.6, seed=seed)
            cfg = PredictorConfig("noisy", noise=noise)
            for s in ds.samples:
                out = predict_segmap(cfg, s, n_attrs=len(ds.attr_vocab))
                assert (vectorize(out, ds.attr_vocab, vc)
                        == vectorize(s.gt_segmap, ds.attr_vocab, vc))


class TestRegionCounts:
    def test_counts_disjoint_boxes(self):
        seg = rasterize_bboxes([BBox(1, 0, 0, 2, 2), BBox(1, 5, 5, 2, 2),
                                BBox(2, 10, 0, 3, 3)], 16, 16)
        assert region_counts(seg) == {1: 2, 2: 1}

    def test_touching_boxes_merge(self):
        seg = rasterize_bboxes([BBox(1, 0, 0, 2, 2), BBox(1, 2, 0, 2, 2)],
                               8, 8)
        assert region_counts(seg) == {1: 1}


class TestClassifyFailure:
    def test_exact_and_correct(self):
        sample = make_sample([BBox(1, 0, 0, 4, 4)], label=2)
        case = classify_failure(sample, sample.gt_segmap, 2)
        assert case.seg is SegQuality.EXACT
        assert case.pred is PredQuality.CORRECT

    def test_incomplete_when_instances_missing(self):
        boxes = [BBox(1, 3 * i, 0, 2, 2) for i in range(6)]
        sample = make_sample(boxes, label=1, size=32)
        pred = rasterize_bboxes(boxes[:1], 32, 32)  # 5 of 6 regions erased
        case = classify_failure(sample, pred, 1)
        assert case.seg is SegQuality.INCOMPLETE
        assert case.pred is PredQuality.CORRECT

    def test_wrong_seg_wrong_pred_on_spurious_attributes(self):
        sample = make_sample([BBox(1, 0, 0, 4, 4)], label=0)
        pred = rasterize_bboxes([BBox(1, 0, 0, 4, 4), BBox(3, 8, 8, 4, 4)],
                                16, 16)
        case = classify_failure(sample, pred, 2)
        assert case.seg is SegQuality.WRONG
        assert case.pred is PredQuality.WRONG

    def test_reference_label_override(self):
        sample = make_sample([BBox(1, 0, 0, 4, 4)], label=0)
        case = classify_failure(sample, sample.gt_segmap, 3,
                                reference_label=3)
        assert case.pred is PredQuality.CORRECT
