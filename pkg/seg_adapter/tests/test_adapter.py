import logging

import numpy as np
import pytest

from segadapter import (AdapterConfig, AdapterError, StubModel,
                        export_predictions, load_mapping, load_model,
                        read_image, validate_format, write_grid)


def write_image(path, grid):
    grid = np.asarray(grid)
    write_grid(path, grid, lambda v: str(int(v)))


@pytest.fixture
def image_dir(tmp_path):
    d = tmp_path / "images"
    d.mkdir()
    rng = np.random.default_rng(0)
    for i in range(3):
        write_image(d / f"img-{i}.img", rng.integers(0, 256, size=(6, 8)))
    return d


class TestMapping:
    def test_parse_pairs_with_comments(self, tmp_path):
        f = tmp_path / "map.txt"
        f.write_text("# header\n3 1\n4 2\n\n")
        assert load_mapping(f) == {3: 1, 4: 2}

    def test_duplicate_source_rejected(self, tmp_path):
        f = tmp_path / "map.txt"
        f.write_text("3 1\n3 2\n")
        with pytest.raises(AdapterError) as exc:
            load_mapping(f)
        assert "2" in str(exc.value)

    def test_non_injective_mapping_rejected(self):
        with pytest.raises(AdapterError):
            AdapterConfig("stub:1", "in", "out", {0: 5, 1: 5})

    def test_nonpositive_attribute_id_rejected(self):
        with pytest.raises(AdapterError):
            AdapterConfig("stub:1", "in", "out", {0: 0})


class TestImagesAndModels:
    def test_image_roundtrip(self, tmp_path):
        grid = np.arange(12).reshape(3, 4)
        write_image(tmp_path / "a.img", grid)
        assert np.array_equal(read_image(tmp_path / "a.img"), grid)

    def test_bad_header_rejected(self, tmp_path):
        (tmp_path / "a.img").write_text("nope\n")
        with pytest.raises(AdapterError):
            read_image(tmp_path / "a.img")

    def test_stub_predicts_constant_with_valid_confidence(self):
        model = StubModel(3, n_classes=16)
        labels, conf = model.predict(np.zeros((4, 5)))
        assert (labels == 3).all()
        assert conf.shape == (4, 5)
        assert 0.0 < float(conf[0][0]) < 1.0

    def test_stub_reference_parsing(self):
        assert load_model("stub:2").class_index == 2
        with pytest.raises(AdapterError):
            load_model("resnet101.ckpt")
        with pytest.raises(AdapterError):
            load_model("stub:banana")


class TestExport:
    def test_three_images_three_pairs(self, image_dir, tmp_path):
        out = tmp_path / "out"
        cfg = AdapterConfig("stub:3", str(image_dir), str(out), {3: 7})
        assert export_predictions(cfg) == 3
        assert sorted(p.name for p in out.glob("*.segmap")) == \
            ["img-0.segmap", "img-1.segmap", "img-2.segmap"]
        assert len(list(out.glob("*.conf"))) == 3

    def test_remap_applied(self, image_dir, tmp_path):
        out = tmp_path / "out"
        export_predictions(
            AdapterConfig("stub:3", str(image_dir), str(out), {3: 7}))
        body = (out / "img-0.segmap").read_text().splitlines()
        assert body[0] == "6 8"
        assert set(body[1].split()) == {"7"}

    def test_unmapped_class_becomes_background(self, image_dir, tmp_path,
                                               caplog):
        out = tmp_path / "out"
        with caplog.at_level(logging.WARNING, logger="segadapter"):
            export_predictions(
                AdapterConfig("stub:3", str(image_dir), str(out), {5: 7}))
        body = (out / "img-0.segmap").read_text().splitlines()
        assert set(body[1].split()) == {"0"}
        assert any("unmapped" in r.message for r in caplog.records)

    def test_unreadable_image_skipped_with_error(self, image_dir, tmp_path,
                                                 caplog):
        (image_dir / "broken.img").write_text("not a grid\n")
        out = tmp_path / "out"
        with caplog.at_level(logging.ERROR, logger="segadapter"):
            count = export_predictions(
                AdapterConfig("stub:3", str(image_dir), str(out), {3: 7}))
        assert count == 3
        assert not (out / "broken.segmap").exists()
        assert any("broken.img" in r.message for r in caplog.records)

    def test_missing_input_dir_rejected(self, tmp_path):
        with pytest.raises(AdapterError):
            export_predictions(
                AdapterConfig("stub:3", str(tmp_path / "nope"),
                              str(tmp_path / "out"), {}))


class TestValidateFormat:
    def exported(self, image_dir, tmp_path):
        out = tmp_path / "out"
        export_predictions(
            AdapterConfig("stub:3", str(image_dir), str(out), {3: 7}))
        return out

    def test_wellformed_dir_has_zero_violations(self, image_dir, tmp_path):
        out = self.exported(image_dir, tmp_path)
        assert validate_format(out) == []

    def test_width_mismatch_reported_with_line(self, image_dir, tmp_path):
        out = self.exported(image_dir, tmp_path)
        path = out / "img-0.segmap"
        lines = path.read_text().splitlines()
        lines[5] = lines[5] + " 9"
        path.write_text("\n".join(lines) + "\n")
        violations = validate_format(out)
        assert len(violations) == 1
        assert violations[0].file == "img-0.segmap"
        assert violations[0].line == 6

    def test_confidence_out_of_range(self, image_dir, tmp_path):
        out = self.exported(image_dir, tmp_path)
        path = out / "img-1.conf"
        lines = path.read_text().splitlines()
        lines[1] = "1.3 " + " ".join(lines[1].split()[1:])
        path.write_text("\n".join(lines) + "\n")
        violations = validate_format(out)
        assert len(violations) == 1
        assert "outside [0.0, 1.0]" in violations[0].message

    def test_missing_confidence_reported(self, image_dir, tmp_path):
        out = self.exported(image_dir, tmp_path)
        (out / "img-2.conf").unlink()
        violations = validate_format(out)
        assert [str(v) for v in violations] == \
            ["img-2.segmap:0: missing confidence file"]

    def test_negative_id_reported(self, image_dir, tmp_path):
        out = self.exported(image_dir, tmp_path)
        path = out / "img-0.segmap"
        lines = path.read_text().splitlines()
        lines[2] = "-1 " + " ".join(lines[2].split()[1:])
        path.write_text("\n".join(lines) + "\n")
        assert any(v.line == 3 and "unparsable" in v.message
                   for v in validate_format(path.parent))


class TestFormatContract:
    """Acceptance criterion: the classification pipeline's file predictor
    parses exported files with zero violations, and the parsed grids equal
    the in-memory predictions element-wise."""

    def test_criterion_11_exports_parse_in_primary(self, image_dir,
                                                   tmp_path):
        xparts = pytest.importorskip("xparts")
        from xparts import PredictorConfig, Sample, SegMap, predict_segmap

        out = tmp_path / "out"
        mapping = {3: 7}
        cfg = AdapterConfig("stub:3", str(image_dir), str(out), mapping)
        count = export_predictions(cfg)
        assert validate_format(out) == []
        model = StubModel(3)
        pred_cfg = PredictorConfig(kind="file", prediction_dir=str(out))
        checked = 0
        for image_path in sorted(image_dir.glob("*.img")):
            image = read_image(image_path)
            labels, conf = model.predict(image)
            expected = np.where(labels == 3, mapping[3], 0)
            sample = Sample(image_path.stem, (),
                            SegMap(np.zeros_like(image)), 0)
            parsed = predict_segmap(pred_cfg, sample)
            assert np.array_equal(parsed.labels, expected)
            assert parsed.confidence is not None
            assert np.array_equal(parsed.confidence, conf)
            checked += 1
        assert checked == count == 3
        print("CRITERION 11 adapter-format-contract: PASS")
