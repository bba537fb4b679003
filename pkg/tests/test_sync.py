import math

import numpy as np
import pytest

from helpers import bar_mask, disc_mask, flat_image
from syncmark.corpus import make_host
from syncmark.errors import EmptyRegionError
from syncmark.metrics import iou, masked_mean_abs_error
from syncmark.moments import centroid, compute_moments, min_bounding_square
from syncmark.raster import SimilarityTransform, erode_mask, warp, warp_mask
from syncmark.sync import (
    SyncAblationFlags,
    SyncRecord,
    apply_mask_crop,
    desynchronize_residual,
    synchronize,
    transform_deviation,
)

N = 256


def canvases_match(obj_a, obj_b, mae_budget, iou_budget):
    """Flip-aware comparison of two synchronized objects.

    A pi-wrapped orientation is a legitimate 180-degree variant; compare in
    whichever orientation overlaps better, over the 1-px-eroded mask
    intersection.
    """
    mask_b, canvas_b = obj_b.mask, obj_b.canvas
    if iou(obj_a.mask, mask_b[::-1, ::-1]) > iou(obj_a.mask, mask_b):
        mask_b = mask_b[::-1, ::-1]
        canvas_b = canvas_b[::-1, ::-1]
    m = erode_mask(obj_a.mask & mask_b, 1)
    mae = masked_mean_abs_error(obj_a.canvas, canvas_b, m)
    overlap = iou(obj_a.mask, mask_b)
    return mae <= mae_budget and overlap >= iou_budget, mae, overlap


class TestApplyMaskCrop:
    def test_all_true_passthrough(self, rng):
        img = rng.random((10, 12, 3))
        mask = np.ones((10, 12), dtype=bool)
        assert np.array_equal(apply_mask_crop(img, mask), img)

    def test_all_false_rejected(self, rng):
        img = rng.random((10, 12, 3))
        with pytest.raises(EmptyRegionError):
            apply_mask_crop(img, np.zeros((10, 12), dtype=bool))

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            apply_mask_crop(rng.random((5, 5, 3)), np.ones((4, 5), dtype=bool))

    def test_checkerboard_count(self, rng):
        img = rng.uniform(0.1, 1.0, (16, 16, 3))
        ys, xs = np.mgrid[0:16, 0:16]
        mask = (xs + ys) % 2 == 0
        out = apply_mask_crop(img, mask)
        nonzero = np.any(out > 0, axis=2).sum()
        assert nonzero == mask.sum()


class TestSynchronize:
    def test_fixed_point(self):
        host, mask = make_host(1, seed=300)
        obj, _ = synchronize(host, mask, N)
        obj2, rec2 = synchronize(obj.canvas, obj.mask, N)
        mae = masked_mean_abs_error(obj.canvas, obj2.canvas, erode_mask(obj.mask & obj2.mask, 1))
        assert mae <= 2.0 / 255.0
        shift, rot, dscale = transform_deviation(rec2.transform, N)
        assert shift <= 0.5 and rot <= 0.01 and dscale <= 0.02

    def test_attacked_object_matches(self):
        host, mask = make_host(2, seed=300)
        obj_a, _ = synchronize(host, mask, N)
        # pre-rotate 30 degrees and pre-scale 1.25 inside a larger frame
        m = compute_moments(mask)
        c = centroid(m)
        t = SimilarityTransform(
            rotation=math.radians(30.0), scale=1.25, pivot=c
        ).then(SimilarityTransform.translation(120.0, 90.0))
        big = warp(apply_mask_crop(host, mask), t, 512, 512, fill=0.0)
        big_mask = warp_mask(mask, t, 512, 512)
        obj_b, _ = synchronize(big, big_mask, N)
        ok, mae, overlap = canvases_match(obj_a, obj_b, 4.0 / 255.0, 0.97)
        assert ok, (mae * 255, overlap)

    def test_degenerate_disc_skips_rotation(self):
        img = flat_image(128, 128, 0.6)
        mask = disc_mask(128, 30.0, center=(50.0, 70.0))
        obj, rec = synchronize(img, mask, N)
        assert rec.degenerate_orientation
        assert rec.transform.rotation == 0.0
        # centroid and scale still normalized: the disc fills the canvas
        assert obj.mask.mean() > 0.7
        com = compute_moments(obj.mask)
        cx, cy = centroid(com)
        assert abs(cx - (N - 1) / 2) <= 1.0 and abs(cy - (N - 1) / 2) <= 1.0

    def test_background_zeroed(self):
        host, mask = make_host(3, seed=300)
        obj, _ = synchronize(host, mask, N)
        assert np.all(obj.canvas[~obj.mask] == 0.0)

    def test_mbs_spans_canvas(self):
        host, mask = make_host(4, seed=300)
        obj, _ = synchronize(host, mask, N)
        sq = min_bounding_square(obj.mask)
        assert abs(sq.side - N) <= 2
        assert -1.5 <= sq.x0 <= 1.5 and -1.5 <= sq.y0 <= 1.5

    def test_empty_mask_rejected(self):
        with pytest.raises(EmptyRegionError):
            synchronize(flat_image(32, 32), np.zeros((32, 32), dtype=bool), N)

    def test_small_canvas_rejected(self):
        with pytest.raises(ValueError):
            synchronize(flat_image(32, 32), np.ones((32, 32), dtype=bool), 8)

    def test_object_out_of_canvas_errors(self):
        # no translation or scale sync: a far-corner object misses the canvas
        img = flat_image(512, 512, 0.5)
        mask = np.zeros((512, 512), dtype=bool)
        mask[400:460, 400:470] = True
        flags = SyncAblationFlags(translation=True, scale=True)
        with pytest.raises(EmptyRegionError):
            synchronize(img, mask, N, flags)

    def test_ablation_scale_disabled_keeps_size(self):
        img = flat_image(256, 256, 0.5)
        mask = bar_mask(256, length=90, width=30, angle=0.3)
        obj, _ = synchronize(img, mask, N, SyncAblationFlags(scale=True))
        # object stays at native size instead of filling the canvas
        assert 0.8 * 90 * 30 <= obj.mask.sum() <= 1.2 * 90 * 30

    def test_record_roundtrips_json(self):
        host, mask = make_host(5, seed=300)
        _, rec = synchronize(host, mask, N)
        back = SyncRecord.from_json(rec.to_json())
        assert back == rec

    def test_replay_transform_reproduces_mask(self):
        host, mask = make_host(6, seed=300)
        obj, rec = synchronize(host, mask, N)
        replayed = warp_mask(mask, rec.transform, N, N)
        assert iou(replayed, obj.mask) >= 0.98

    def test_orientation_wrap_safety_sweep(self):
        # |theta| <= 45 deg on a small-phi object: measured phi tracks the
        # attack angle continuously, no pi jumps
        frame = 320
        mask = bar_mask(frame, length=140, width=36, angle=0.1)
        c = centroid(compute_moments(mask))
        phis = []
        for deg in range(-45, 46, 5):
            t = SimilarityTransform.rotation_about(math.radians(deg), c)
            rotated = warp_mask(mask, t, frame, frame)
            _, rec = synchronize(flat_image(frame, frame, 0.5), rotated, 64)
            phis.append(rec.source_phi)
        diffs = np.abs(np.diff(phis))
        assert np.all(diffs < 0.2), phis


class TestDesynchronizeResidual:
    def test_identity_record_passthrough(self, rng):
        residual = rng.random((64, 64, 3))
        rec = SyncRecord(
            transform=SimilarityTransform.identity(),
            source_centroid=(31.5, 31.5),
            source_phi=0.0,
            source_mbs=None,
            degenerate_orientation=False,
        )
        out = desynchronize_residual(residual, rec, 64, 64)
        assert np.array_equal(out, residual)

    def test_zero_residual_zero_output(self):
        rec = SyncRecord(
            transform=SimilarityTransform(dx=3.0, dy=-2.0, rotation=0.2, scale=1.1),
            source_centroid=(0.0, 0.0),
            source_phi=0.0,
            source_mbs=None,
            degenerate_orientation=False,
        )
        out = desynchronize_residual(np.zeros((32, 32, 3)), rec, 48, 40)
        assert np.all(out == 0.0)

    def test_impulse_mass_conserved_translation(self):
        n = 64
        residual = np.zeros((n, n, 3))
        residual[n // 2, n // 2] = 1.0
        # translation-only record: centroid at (10.25, 20.5) moved to center
        center = (n - 1) / 2.0
        t = SimilarityTransform.translation(center - 10.25, center - 20.5)
        rec = SyncRecord(
            transform=t,
            source_centroid=(10.25, 20.5),
            source_phi=0.0,
            source_mbs=None,
            degenerate_orientation=False,
        )
        out = desynchronize_residual(residual, rec, 80, 80)
        plane = out[..., 0]
        total = plane.sum()
        assert abs(total - 1.0) <= 0.01
        ys, xs = np.nonzero(plane > 0)
        cx = (plane[ys, xs] * xs).sum() / total
        cy = (plane[ys, xs] * ys).sum() / total
        # the impulse sits at pixel (n//2, n//2), half a pixel past the even
        # canvas center, so its source-frame image is centroid + 0.5
        assert cx == pytest.approx(10.75, abs=1e-6)
        assert cy == pytest.approx(21.0, abs=1e-6)

    def test_residual_roundtrip_correlation(self, rng):
        host, mask = make_host(7, seed=300)
        obj, rec = synchronize(host, mask, N)
        # a band-limited residual survives the warp round trip
        ys, xs = np.mgrid[0:N, 0:N].astype(np.float64)
        wave = 0.02 * np.sin(2 * math.pi * (xs + 0.6 * ys) / 24.0)
        residual = np.repeat(wave[:, :, None], 3, axis=2)
        residual = np.where(obj.mask[..., None], residual, 0.0)

        h, w = host.shape[:2]
        back = desynchronize_residual(residual, rec, w, h)
        back = np.where(mask[..., None], back, 0.0)
        modified = np.clip(host + back, 0.0, 1.0)
        obj2, _ = synchronize(modified, mask, N)
        recovered = obj2.canvas - obj.canvas
        sel = erode_mask(obj.mask & obj2.mask, 2)
        a = recovered[sel].ravel()
        b = residual[sel].ravel()
        corr = np.corrcoef(a, b)[0, 1]
        assert corr >= 0.95, corr
