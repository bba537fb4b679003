"""Image/mask containers, coordinate conventions, and similarity warping.

Conventions used everywhere in this package:

* Images are numpy float64 arrays of shape ``(H, W, 3)`` with intensities
  in ``[0, 1]``; masks are bool arrays of shape ``(H, W)``.
* ``x`` is the column index, ``y`` the row index, origin at the top-left
  corner, pixel centers at integer coordinates.
* Positive rotation is mathematically counterclockwise in (x, y) with y
  pointing down, which is visually clockwise on screen. All geometric
  modules share this convention.
* 8-bit conversion rounds half up: ``v8 = floor(clamp(v, 0, 1)*255 + 0.5)``.

All functions are pure and all containers are plain immutable values, so
everything here is safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image as _PILImage


# ---------------------------------------------------------------------------
# 8-bit <-> float conversion and PNG I/O

def to_float(arr8: np.ndarray) -> np.ndarray:
    """Map 8-bit intensities to the [0, 1] processing domain."""
    return arr8.astype(np.float64) / 255.0


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Map [0, 1] intensities to 8-bit, rounding half up."""
    return np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def load_image(path) -> np.ndarray:
    """Read an RGB PNG into a float64 (H, W, 3) array in [0, 1]."""
    with _PILImage.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return to_float(arr)


def save_image(path, img: np.ndarray) -> None:
    """Write a float image as an 8-bit RGB PNG."""
    img = _require_image(img)
    _PILImage.fromarray(to_uint8(img), mode="RGB").save(path, format="PNG")


def load_mask(path) -> np.ndarray:
    """Read an 8-bit grayscale PNG as a bool mask (threshold at 128)."""
    with _PILImage.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.uint8)
    return arr >= 128


def save_mask(path, mask: np.ndarray) -> None:
    """Write a bool mask as an 8-bit grayscale PNG (0 / 255)."""
    mask = _require_mask(mask)
    arr = np.where(mask, np.uint8(255), np.uint8(0))
    _PILImage.fromarray(arr, mode="L").save(path, format="PNG")


def _require_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected (H, W, 3) image, got shape {img.shape}")
    return img


def _require_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.dtype != np.bool_:
        raise ValueError(f"expected bool mask, got dtype {mask.dtype}")
    if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
        raise ValueError(f"expected (H, W) mask, got shape {mask.shape}")
    return mask


def luminance(img: np.ndarray) -> np.ndarray:
    """Rec. 601 luma: 0.299 R + 0.587 G + 0.114 B."""
    return 0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2]


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """Normalized sampled Gaussian with radius ceil(3*sigma)."""
    radius = int(math.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_smooth(arr: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian filter, edge-clamped, fixed-order accumulation.

    Works on (H, W) planes and (H, W, C) stacks alike; no clamping.
    """
    kernel = gaussian_kernel_1d(sigma)
    radius = (kernel.size - 1) // 2
    out = np.asarray(arr, dtype=np.float64)
    for axis in (0, 1):
        pad = [(0, 0)] * out.ndim
        pad[axis] = (radius, radius)
        padded = np.pad(out, pad, mode="edge")
        acc = np.zeros_like(out)
        for i, w in enumerate(kernel):
            sl = [slice(None)] * out.ndim
            sl[axis] = slice(i, i + out.shape[axis])
            acc += w * padded[tuple(sl)]
        out = acc
    return out


# ---------------------------------------------------------------------------
# Similarity transforms

@dataclass(frozen=True)
class SimilarityTransform:
    """Similarity map ``p -> scale * R(rotation) * (p - pivot) + pivot + t``.

    ``t = (dx, dy)`` is applied after the scaled rotation about ``pivot``.
    A transform with ``pivot=(0, 0)`` is the canonical form produced by
    :meth:`then` and :meth:`inverse`.
    """

    dx: float = 0.0
    dy: float = 0.0
    rotation: float = 0.0
    scale: float = 1.0
    pivot: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError(f"scale must be finite and > 0, got {self.scale}")

    @classmethod
    def identity(cls) -> "SimilarityTransform":
        return cls()

    @classmethod
    def translation(cls, dx: float, dy: float) -> "SimilarityTransform":
        return cls(dx=dx, dy=dy)

    @classmethod
    def rotation_about(cls, angle: float, pivot: tuple[float, float]) -> "SimilarityTransform":
        return cls(rotation=angle, pivot=(float(pivot[0]), float(pivot[1])))

    @classmethod
    def scaling_about(cls, scale: float, pivot: tuple[float, float]) -> "SimilarityTransform":
        return cls(scale=scale, pivot=(float(pivot[0]), float(pivot[1])))

    def matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (M, o) such that the map is ``p -> M @ p + o``."""
        c = self.scale * math.cos(self.rotation)
        s = self.scale * math.sin(self.rotation)
        m = np.array([[c, -s], [s, c]], dtype=np.float64)
        px, py = self.pivot
        off = np.array(
            [self.dx + px - (c * px - s * py), self.dy + py - (s * px + c * py)],
            dtype=np.float64,
        )
        return m, off

    def apply(self, xs, ys) -> tuple[np.ndarray, np.ndarray]:
        """Map coordinate arrays through the transform."""
        m, off = self.matrix()
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        return m[0, 0] * xs + m[0, 1] * ys + off[0], m[1, 0] * xs + m[1, 1] * ys + off[1]

    def then(self, after: "SimilarityTransform") -> "SimilarityTransform":
        """Compose: the returned transform applies ``self`` first, ``after`` second."""
        m2, o2 = after.matrix()
        _, o1 = self.matrix()
        off = m2 @ o1 + o2
        return SimilarityTransform(
            dx=float(off[0]),
            dy=float(off[1]),
            rotation=self.rotation + after.rotation,
            scale=self.scale * after.scale,
        )

    def inverse(self) -> "SimilarityTransform":
        m, off = self.matrix()
        inv_scale = 1.0 / self.scale
        c = inv_scale * math.cos(-self.rotation)
        s = inv_scale * math.sin(-self.rotation)
        minv = np.array([[c, -s], [s, c]], dtype=np.float64)
        oinv = -(minv @ off)
        return SimilarityTransform(
            dx=float(oinv[0]),
            dy=float(oinv[1]),
            rotation=-self.rotation,
            scale=inv_scale,
        )


# ---------------------------------------------------------------------------
# Warping

def warp(
    src: np.ndarray,
    transform: SimilarityTransform,
    out_width: int,
    out_height: int,
    fill: float = 0.0,
) -> np.ndarray:
    """Resample ``src`` under ``transform`` into an (out_height, out_width) raster.

    Each output pixel is sampled at the inverse-mapped source location by
    bilinear interpolation; samples falling outside the source take
    ``fill``. Accepts a single plane ``(H, W)`` or a channel stack
    ``(H, W, C)``. Deterministic: corner contributions accumulate in a
    fixed order.
    """
    if out_width < 1 or out_height < 1:
        raise ValueError(f"output dimensions must be >= 1, got {out_width}x{out_height}")
    src = np.asarray(src, dtype=np.float64)
    if src.ndim not in (2, 3):
        raise ValueError(f"expected 2-D or 3-D source, got shape {src.shape}")
    h, w = src.shape[:2]

    inv = transform.inverse()
    xs = np.arange(out_width, dtype=np.float64)[None, :]
    ys = np.arange(out_height, dtype=np.float64)[:, None]
    sx, sy = inv.apply(xs, ys)

    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    out = None
    for dy in (0, 1):
        wy = fy if dy else 1.0 - fy
        yi = y0 + dy
        for dx in (0, 1):
            wx = fx if dx else 1.0 - fx
            xi = x0 + dx
            weight = wx * wy
            inb = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            xc = np.clip(xi, 0, w - 1)
            yc = np.clip(yi, 0, h - 1)
            val = src[yc, xc]
            if src.ndim == 3:
                val = np.where(inb[..., None], val, fill)
                term = weight[..., None] * val
            else:
                val = np.where(inb, val, fill)
                term = weight * val
            out = term if out is None else out + term
    return out


def warp_mask(
    src: np.ndarray,
    transform: SimilarityTransform,
    out_width: int,
    out_height: int,
) -> np.ndarray:
    """Warp a bool mask: bilinear coverage of the 0/1 plane, thresholded at 0.5."""
    src = _require_mask(src)
    coverage = warp(src.astype(np.float64), transform, out_width, out_height, fill=0.0)
    return coverage >= 0.5


# ---------------------------------------------------------------------------
# Mask morphology (4-connected, border treated as background)

def erode_mask(mask: np.ndarray, iterations: int = 1) -> np.ndarray:
    out = _require_mask(mask).copy()
    for _ in range(iterations):
        shrunk = out.copy()
        shrunk[1:, :] &= out[:-1, :]
        shrunk[:-1, :] &= out[1:, :]
        shrunk[:, 1:] &= out[:, :-1]
        shrunk[:, :-1] &= out[:, 1:]
        shrunk[0, :] = False
        shrunk[-1, :] = False
        shrunk[:, 0] = False
        shrunk[:, -1] = False
        out = shrunk
    return out


def dilate_mask(mask: np.ndarray, iterations: int = 1) -> np.ndarray:
    out = _require_mask(mask).copy()
    for _ in range(iterations):
        grown = out.copy()
        grown[1:, :] |= out[:-1, :]
        grown[:-1, :] |= out[1:, :]
        grown[:, 1:] |= out[:, :-1]
        grown[:, :-1] |= out[:, 1:]
        out = grown
    return out
