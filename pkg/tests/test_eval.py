import csv
import os

import numpy as np
import pytest

from syncmark.evalrun import CSV_COLUMNS, EvalConfig, ResultRecord, run_eval, write_csv
from syncmark.report import render_report


def small_config(corpus_dir, out_csv, **overrides):
    cfg = EvalConfig(
        images_dir=str(corpus_dir / "images"),
        masks_dir=str(corpus_dir / "masks"),
        backgrounds_dir=str(corpus_dir / "backgrounds"),
        out_csv=str(out_csv),
        key=0xC0FFEE,
        alpha=6.0 / 255.0,
        distortions=[{"kind": "none"}, {"kind": "jpeg", "parameter": 60}, {"kind": "brightness"}],
        master_seed=11,
    )
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg


@pytest.fixture(scope="module")
def mini_records(mini_corpus_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("eval") / "results.csv"
    cfg = small_config(mini_corpus_dir, out)
    records = run_eval(cfg)
    write_csv(records, cfg.out_csv)
    return cfg, records


class TestRunEval:
    def test_row_counts(self, mini_records):
        cfg, records = mini_records
        per_image = [r for r in records if r.status == "ok"]
        assert len(per_image) == 6 * 3
        aggregates = [r for r in records if r.status == "aggregate"]
        assert any(r.image_id == "mean" and r.distortion == "all" for r in aggregates)
        assert any(r.image_id.startswith("bucket:") for r in aggregates)

    def test_clean_rows_decode_perfectly(self, mini_records):
        _, records = mini_records
        clean = [r for r in records if r.status == "ok" and r.distortion == "none"]
        assert np.mean([r.bar for r in clean]) >= 0.95

    def test_csv_deterministic(self, mini_corpus_dir, tmp_path):
        cfg1 = small_config(mini_corpus_dir, tmp_path / "a.csv")
        cfg2 = small_config(mini_corpus_dir, tmp_path / "b.csv")
        write_csv(run_eval(cfg1), cfg1.out_csv)
        write_csv(run_eval(cfg2), cfg2.out_csv)
        with open(cfg1.out_csv, "rb") as f:
            a = f.read()
        with open(cfg2.out_csv, "rb") as f:
            b = f.read()
        assert a == b

    def test_csv_schema(self, mini_records):
        cfg, _ = mini_records
        with open(cfg.out_csv, newline="") as f:
            rows = list(csv.reader(f))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert all(len(r) == len(CSV_COLUMNS) for r in rows[1:])

    def test_error_rows_keep_running(self, mini_corpus_dir, tmp_path):
        # no translation or scale sync: most objects land outside the canvas
        cfg = small_config(
            mini_corpus_dir,
            tmp_path / "err.csv",
            distortions=[{"kind": "none"}],
            disable_translation_sync=True,
            disable_scale_sync=True,
        )
        records = run_eval(cfg)
        errors = [r for r in records if r.status.startswith("decode_error")]
        assert errors, "expected at least one decode error row"
        assert all(r.bar == 0.5 for r in errors)
        assert any(r.status == "aggregate" for r in records)

    def test_perturbed_mask_mode(self, mini_corpus_dir, tmp_path):
        cfg = small_config(
            mini_corpus_dir,
            tmp_path / "pert.csv",
            distortions=[{"kind": "none"}],
            perturb_mask_iou=0.9,
        )
        records = [r for r in records_ok(run_eval(cfg))]
        assert all(0.84 <= r.mask_iou <= 0.96 for r in records)

    def test_combined_kind_resolves(self, mini_corpus_dir, tmp_path):
        cfg = small_config(
            mini_corpus_dir,
            tmp_path / "comb.csv",
            distortions=[{"kind": "combined"}],
        )
        records = records_ok(run_eval(cfg))
        assert len(records) == 6

    def test_config_json_roundtrip(self, mini_corpus_dir, tmp_path):
        cfg = small_config(mini_corpus_dir, tmp_path / "cfg.csv")
        back = EvalConfig.from_json(cfg.to_json())
        assert back == cfg


def records_ok(records):
    return [r for r in records if r.status == "ok"]


class TestReport:
    def test_renders_figures(self, mini_records, tmp_path):
        cfg, _ = mini_records
        written = render_report(cfg.out_csv, tmp_path / "figs")
        names = {os.path.basename(p) for p in written}
        assert "bar_by_distortion.png" in names
        assert "capacity_sweep.png" in names
        for p in written:
            assert os.path.getsize(p) > 1000

    def test_ablation_figure_when_mixed(self, tmp_path):
        rows = []
        for ablation in ("full_sync", "no_rotation"):
            for i in range(3):
                rows.append(
                    ResultRecord(
                        image_id=f"img_{i}",
                        attack="rot_deg=10.00;scale=1.0;dx=0;dy=0",
                        distortion="none",
                        bar=1.0 if ablation == "full_sync" else 0.5,
                        psnr=40.0,
                        ssim=0.98,
                        mask_iou=1.0,
                        confidence=0.8,
                        ablation_id=ablation,
                        occupancy=0.3,
                        bpp=0.001,
                        status="ok",
                    )
                )
        path = tmp_path / "mixed.csv"
        write_csv(rows, path)
        written = render_report(path, tmp_path)
        assert any(p.endswith("ablation.png") for p in written)
