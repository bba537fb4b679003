"""Quality and accuracy metrics: PSNR, SSIM, bit accuracy, mask IoU."""

from __future__ import annotations

import math

import numpy as np

from .raster import _require_image, _require_mask, luminance

#: Sentinel/cap for PSNR of (near-)identical images.
PSNR_CAP = 99.0

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_C1 = 0.01 ** 2
_SSIM_C2 = 0.03 ** 2


def psnr(a: np.ndarray, b: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Peak signal-to-noise ratio in dB over the included pixels.

    Intensities live in [0, 1], so this is ``10*log10(1/MSE)``. Identical
    inputs (and anything above it) return the 99.0 dB cap.
    """
    a = _require_image(a)
    b = _require_image(b)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    diff = a - b
    if mask is not None:
        mask = _require_mask(mask)
        if mask.shape != a.shape[:2]:
            raise ValueError(f"mask shape {mask.shape} does not match image {a.shape[:2]}")
        diff = diff[mask]
    mse = float(np.mean(diff * diff))
    if mse <= 0.0:
        return PSNR_CAP
    return min(10.0 * math.log10(1.0 / mse), PSNR_CAP)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    xs = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return w / w.sum()


def _valid_smooth(plane: np.ndarray, window: np.ndarray) -> np.ndarray:
    # Separable windowed mean, valid positions only.
    out = plane
    for axis in (0, 1):
        length = out.shape[axis] - window.size + 1
        acc = None
        for i, w in enumerate(window):
            sl = [slice(None)] * 2
            sl[axis] = slice(i, i + length)
            term = w * out[tuple(sl)]
            acc = term if acc is None else acc + term
        out = acc
    return out


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity on luminance.

    11x11 Gaussian window (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2 in the
    [0, 1] domain, averaged over valid window positions only.
    """
    a = _require_image(a)
    b = _require_image(b)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    if min(a.shape[0], a.shape[1]) < _SSIM_WINDOW:
        raise ValueError(f"images must be at least {_SSIM_WINDOW} pixels per side")

    x = luminance(a)
    y = luminance(b)
    w = _gaussian_window(_SSIM_WINDOW, _SSIM_SIGMA)

    mu_x = _valid_smooth(x, w)
    mu_y = _valid_smooth(y, w)
    ex2 = _valid_smooth(x * x, w)
    ey2 = _valid_smooth(y * y, w)
    exy = _valid_smooth(x * y, w)
    var_x = np.maximum(ex2 - mu_x * mu_x, 0.0)
    var_y = np.maximum(ey2 - mu_y * mu_y, 0.0)
    cov = exy - mu_x * mu_y

    num = (2.0 * mu_x * mu_y + _SSIM_C1) * (2.0 * cov + _SSIM_C2)
    den = (mu_x * mu_x + mu_y * mu_y + _SSIM_C1) * (var_x + var_y + _SSIM_C2)
    return float(np.mean(num / den))


def bar(decoded, truth) -> float:
    """Bit accuracy rate: fraction of matching positions."""
    d = list(decoded)
    t = list(truth)
    if len(d) != len(t):
        raise ValueError(f"bit strings differ in length: {len(d)} vs {len(t)}")
    return sum(1 for x, y in zip(d, t) if x == y) / len(d)


def iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two masks; two empty masks count as 1.0."""
    a = _require_mask(a)
    b = _require_mask(b)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = int(np.logical_or(a, b).sum())
    if union == 0:
        return 1.0
    inter = int(np.logical_and(a, b).sum())
    return inter / union


def masked_mean_abs_error(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> float:
    """Mean |a - b| over the masked pixels (all channels)."""
    a = _require_image(a)
    b = _require_image(b)
    mask = _require_mask(mask)
    if a.shape != b.shape or mask.shape != a.shape[:2]:
        raise ValueError("shape mismatch between images and mask")
    if not mask.any():
        raise ValueError("comparison mask is empty")
    return float(np.mean(np.abs(a[mask] - b[mask])))
