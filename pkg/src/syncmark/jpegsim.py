"""JPEG-style lossy round trip: 8x8 block DCT quantization with the
standard luminance/chrominance tables and 4:2:0 chroma subsampling.

Only the lossy stages are simulated (color transform, subsampling, DCT,
quantize, dequantize, inverse) -- no entropy coding, since only the pixel
damage matters here. Quality scaling follows the conventional linear
scaling of the standard tables: ``scale = 5000/Q`` below 50, ``200 - 2Q``
at or above, with table entries clamped to [1, 255].
"""

from __future__ import annotations

import math

import numpy as np

from .raster import _require_image

# Standard base quantization tables (luminance / chrominance).
_QY = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)
_QC = np.array(
    [
        [17, 18, 24, 47, 99, 99, 99, 99],
        [18, 21, 26, 66, 99, 99, 99, 99],
        [24, 26, 56, 99, 99, 99, 99, 99],
        [47, 66, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
    ],
    dtype=np.float64,
)


def _dct_matrix() -> np.ndarray:
    d = np.zeros((8, 8), dtype=np.float64)
    for k in range(8):
        ck = math.sqrt(1.0 / 8.0) if k == 0 else math.sqrt(2.0 / 8.0)
        for x in range(8):
            d[k, x] = ck * math.cos((2 * x + 1) * k * math.pi / 16.0)
    return d


_DCT = _dct_matrix()


def quality_tables(quality: int) -> tuple[np.ndarray, np.ndarray]:
    """Quantization tables for a quality factor in [1, 100]."""
    q = int(quality)
    if not 1 <= q <= 100:
        raise ValueError(f"quality must be in [1, 100], got {quality}")
    scale = 5000.0 / q if q < 50 else 200.0 - 2.0 * q
    def scaled(tab):
        t = np.floor((tab * scale + 50.0) / 100.0)
        return np.clip(t, 1.0, 255.0)
    return scaled(_QY), scaled(_QC)


def _pad_to(arr: np.ndarray, mult: int) -> np.ndarray:
    h, w = arr.shape
    ph = (-h) % mult
    pw = (-w) % mult
    if ph or pw:
        arr = np.pad(arr, ((0, ph), (0, pw)), mode="edge")
    return arr


def _quantize_plane(plane: np.ndarray, table: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    padded = _pad_to(plane, 8)
    ph, pw = padded.shape
    blocks = padded.reshape(ph // 8, 8, pw // 8, 8).transpose(0, 2, 1, 3).reshape(-1, 8, 8)
    blocks = blocks - 128.0
    coef = np.einsum("ij,njk,lk->nil", _DCT, blocks, _DCT)
    coef = np.round(coef / table) * table
    rec = np.einsum("ji,njk,kl->nil", _DCT, coef, _DCT)
    rec = rec + 128.0
    rec = rec.reshape(ph // 8, pw // 8, 8, 8).transpose(0, 2, 1, 3).reshape(ph, pw)
    return rec[:h, :w]


def jpeg_roundtrip(image: np.ndarray, quality: int) -> np.ndarray:
    """Apply the quantization loss a JPEG encode/decode at ``quality`` would cause."""
    image = _require_image(image)
    ty, tc = quality_tables(quality)
    rgb = image * 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]

    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b

    # 4:2:0 -- chroma averaged over 2x2, processed at half resolution.
    def down(plane):
        p = _pad_to(plane, 2)
        return 0.25 * (p[0::2, 0::2] + p[0::2, 1::2] + p[1::2, 0::2] + p[1::2, 1::2])

    h, w = y.shape
    cb_s = _quantize_plane(down(cb), tc)
    cr_s = _quantize_plane(down(cr), tc)
    y_q = _quantize_plane(y, ty)
    cb_q = np.repeat(np.repeat(cb_s, 2, axis=0), 2, axis=1)[:h, :w]
    cr_q = np.repeat(np.repeat(cr_s, 2, axis=0), 2, axis=1)[:h, :w]

    r2 = y_q + 1.402 * (cr_q - 128.0)
    g2 = y_q - 0.344136 * (cb_q - 128.0) - 0.714136 * (cr_q - 128.0)
    b2 = y_q + 1.772 * (cb_q - 128.0)
    out = np.stack([r2, g2, b2], axis=-1) / 255.0
    return np.clip(out, 0.0, 1.0)
