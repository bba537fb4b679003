import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from helpers import bar_mask, brute_force_moments, disc_mask, wrap_halfpi
from syncmark.errors import EmptyRegionError
from syncmark.moments import (
    SquareRect,
    centroid,
    compute_moments,
    is_orientation_degenerate,
    min_bounding_square,
    principal_orientation,
)
from syncmark.raster import SimilarityTransform, warp_mask


def mask_from_pixels(h, w, pixels):
    m = np.zeros((h, w), dtype=bool)
    for x, y in pixels:
        m[y, x] = True
    return m


class TestComputeMoments:
    def test_single_pixel(self):
        m = compute_moments(mask_from_pixels(8, 8, [(3, 5)]))
        assert (m.m00, m.m10, m.m01) == (1.0, 3.0, 5.0)
        assert (m.mu11, m.mu20, m.mu02) == (0.0, 0.0, 0.0)

    def test_2x2_block(self):
        m = compute_moments(mask_from_pixels(4, 4, [(0, 0), (1, 0), (0, 1), (1, 1)]))
        assert (m.m00, m.m10, m.m01) == (4.0, 2.0, 2.0)
        assert (m.mu20, m.mu02, m.mu11) == (1.0, 1.0, 0.0)

    def test_empty_mask_rejected(self):
        with pytest.raises(EmptyRegionError):
            compute_moments(np.zeros((5, 5), dtype=bool))

    def test_matches_oracle_exactly_random(self, rng):
        for _ in range(25):
            h = int(rng.integers(1, 40))
            w = int(rng.integers(1, 40))
            mask = rng.random((h, w)) < rng.uniform(0.05, 0.9)
            if not mask.any():
                mask[rng.integers(0, h), rng.integers(0, w)] = True
            got = compute_moments(mask)
            want = brute_force_moments(mask)
            assert got == want  # exact: both sides sum with fsum

    @settings(max_examples=60, deadline=None)
    @given(
        mask=hnp.arrays(
            dtype=bool,
            shape=st.tuples(st.integers(1, 24), st.integers(1, 24)),
        ).filter(lambda m: m.any())
    )
    def test_matches_oracle_exactly_property(self, mask):
        assert compute_moments(mask) == brute_force_moments(mask)

    def test_cauchy_schwarz(self, rng):
        for _ in range(20):
            mask = rng.random((30, 30)) > 0.6
            if not mask.any():
                continue
            m = compute_moments(mask)
            assert m.mu11 ** 2 <= m.mu20 * m.mu02 * (1 + 1e-12) + 1e-9


class TestCentroid:
    def test_3x3_block(self):
        m = compute_moments(mask_from_pixels(5, 5, [(x, y) for x in range(3) for y in range(3)]))
        assert centroid(m) == (1.0, 1.0)

    def test_2x2_block(self):
        m = compute_moments(mask_from_pixels(4, 4, [(0, 0), (1, 0), (0, 1), (1, 1)]))
        assert centroid(m) == (0.5, 0.5)

    def test_single_pixel(self):
        m = compute_moments(mask_from_pixels(9, 9, [(7, 2)]))
        assert centroid(m) == (7.0, 2.0)

    def test_translation_equivariance_exact(self, rng):
        base = rng.random((20, 20)) > 0.5
        base[0, 0] = True
        padded = np.zeros((40, 40), dtype=bool)
        padded[3:23, 5:25] = base
        shifted = np.zeros((40, 40), dtype=bool)
        shifted[10:30, 9:29] = base
        m0 = compute_moments(padded)
        m1 = compute_moments(shifted)
        # integer raw moments make the shift exact; the centroid quotient
        # itself can differ in the last ulp
        assert m1.m10 == m0.m10 + 4.0 * m0.m00
        assert m1.m01 == m0.m01 + 7.0 * m0.m00
        c0 = centroid(m0)
        c1 = centroid(m1)
        assert c1[0] - c0[0] == pytest.approx(4.0, abs=1e-12)
        assert c1[1] - c0[1] == pytest.approx(7.0, abs=1e-12)
        # central moments shift-invariant up to the rounding of xbar itself
        assert m1.mu20 == pytest.approx(m0.mu20, rel=1e-13)
        assert m1.mu11 == pytest.approx(m0.mu11, rel=1e-13)
        assert m1.mu02 == pytest.approx(m0.mu02, rel=1e-13)


class TestPrincipalOrientation:
    def test_horizontal_bar(self):
        m = compute_moments(mask_from_pixels(3, 7, [(x, 1) for x in range(5)]))
        assert principal_orientation(m) == 0.0

    def test_vertical_bar(self):
        # mu20 = 0, mu02 = 10 for the 5-tall bar: atan2(0, -) = pi, halved
        m = compute_moments(mask_from_pixels(7, 3, [(1, y) for y in range(5)]))
        assert m.mu20 == 0.0 and m.mu02 == 10.0
        assert principal_orientation(m) == pytest.approx(math.pi / 2.0)

    def test_diagonal(self):
        m = compute_moments(mask_from_pixels(4, 4, [(0, 0), (1, 1), (2, 2)]))
        assert (m.mu11, m.mu20, m.mu02) == (2.0, 2.0, 2.0)
        assert principal_orientation(m) == pytest.approx(math.pi / 4.0)

    @pytest.mark.parametrize("theta_deg", [-40, -25, -10, 5, 20, 44])
    def test_rotation_equivariance(self, theta_deg):
        frame = 128
        base = bar_mask(frame, length=80, width=14, angle=0.0)
        m0 = compute_moments(base)
        phi0 = principal_orientation(m0)
        theta = math.radians(theta_deg)
        c = centroid(m0)
        rotated = warp_mask(
            base, SimilarityTransform.rotation_about(theta, c), frame, frame
        )
        phi1 = principal_orientation(compute_moments(rotated))
        assert abs(wrap_halfpi(phi1 - phi0 - theta)) <= 0.02

    @pytest.mark.parametrize("scale", [0.75, 0.9, 1.2, 1.5])
    def test_scale_invariance(self, scale):
        frame = 192
        base = bar_mask(frame, length=90, width=16, angle=0.35)
        phi0 = principal_orientation(compute_moments(base))
        c = centroid(compute_moments(base))
        scaled = warp_mask(
            base, SimilarityTransform.scaling_about(scale, c), frame, frame
        )
        phi1 = principal_orientation(compute_moments(scaled))
        assert abs(wrap_halfpi(phi1 - phi0)) <= 0.02


class TestDegeneracy:
    def test_solid_square(self):
        mask = np.zeros((30, 30), dtype=bool)
        mask[5:25, 5:25] = True
        assert is_orientation_degenerate(compute_moments(mask))

    def test_bar_not_degenerate(self):
        m = compute_moments(mask_from_pixels(3, 7, [(x, 1) for x in range(5)]))
        assert not is_orientation_degenerate(m)

    def test_disc_r20(self):
        mask = disc_mask(64, 20.0)
        assert is_orientation_degenerate(compute_moments(mask))


class TestMinBoundingSquare:
    def test_wide_bbox(self):
        mask = np.zeros((16, 16), dtype=bool)
        mask[4:10, 2:12] = True  # rows 4-9 (h=6), cols 2-11 (w=10)
        assert min_bounding_square(mask) == SquareRect(x0=2, y0=2, side=10)

    def test_square_bbox(self):
        mask = np.zeros((12, 12), dtype=bool)
        mask[3:8, 6:11] = True
        assert min_bounding_square(mask) == SquareRect(x0=6, y0=3, side=5)

    def test_odd_padding_goes_bottom(self):
        mask = np.zeros((20, 20), dtype=bool)
        mask[5:12, 4:14] = True  # w=10, h=7: top pad 1, bottom pad 2
        sq = min_bounding_square(mask)
        assert sq == SquareRect(x0=4, y0=4, side=10)
        # top pad = 5 - 4 = 1; bottom pad = (4 + 10) - 12 = 2
        assert 5 - sq.y0 == 1 and (sq.y0 + sq.side) - 12 == 2

    def test_empty_rejected(self):
        with pytest.raises(EmptyRegionError):
            min_bounding_square(np.zeros((4, 4), dtype=bool))
