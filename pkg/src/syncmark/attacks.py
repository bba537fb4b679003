"""Cropping-paste attack composition and the pixel-distortion bank.

An attack cuts the masked object out of its host, rotates it about its
centroid, scales it, and pastes it at an offset into a (usually larger)
background image. The pasted mask is returned as geometric ground truth.
Pixel distortions are applied to the composite afterwards, never to the
ground-truth mask.

Everything is deterministic given the seed: parameter sampling uses
``numpy.random.default_rng`` with explicit seed sequences, and all filter
accumulations run in a fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PlacementInfeasibleError
from .jpegsim import jpeg_roundtrip
from .moments import centroid, compute_moments
from .raster import (
    SimilarityTransform,
    _require_image,
    _require_mask,
    gaussian_smooth,
    warp,
    warp_mask,
)
from .sync import apply_mask_crop

DEFAULT_ROTATION_MAX = math.pi / 4.0
DEFAULT_SCALE_MIN = 0.75
DEFAULT_SCALE_MAX = 1.5

#: kind -> (parameter lower bound, upper bound, inclusive-low)
_PARAM_RANGES = {
    "gaussian_blur": (0.0, 3.0, False),
    "gaussian_noise": (0.0, 0.05, False),
    "jpeg": (10, 90, True),
    "median_blur": (3, 5, True),
    "salt_pepper": (0.0, 0.1, False),
    "brightness": (0.8, 1.2, True),
    "contrast": (0.8, 1.2, True),
    "saturation": (0.8, 1.2, True),
    "hue": (-0.1, 0.1, True),
    "none": (0.0, 0.0, True),
}

DISTORTION_KINDS = tuple(_PARAM_RANGES)


@dataclass(frozen=True)
class AttackRanges:
    """Sampling bounds for cropping-paste parameters (must stay within defaults)."""

    rotation_max: float = DEFAULT_ROTATION_MAX
    scale_min: float = DEFAULT_SCALE_MIN
    scale_max: float = DEFAULT_SCALE_MAX

    def __post_init__(self):
        if not 0.0 <= self.rotation_max <= DEFAULT_ROTATION_MAX + 1e-12:
            raise ValueError(f"rotation_max must be in [0, pi/4], got {self.rotation_max}")
        if not DEFAULT_SCALE_MIN - 1e-12 <= self.scale_min <= self.scale_max <= DEFAULT_SCALE_MAX + 1e-12:
            raise ValueError(
                f"scale range [{self.scale_min}, {self.scale_max}] outside [0.75, 1.5]"
            )


@dataclass(frozen=True)
class AttackSpec:
    """One cropping-paste composition: rotate, scale, then paste at an offset."""

    rotation: float
    scale: float
    paste_offset: tuple[float, float]
    background_id: str = ""

    def to_dict(self) -> dict:
        return {
            "rotation": self.rotation,
            "scale": self.scale,
            "paste_offset": list(self.paste_offset),
            "background_id": self.background_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AttackSpec":
        return cls(
            rotation=float(d["rotation"]),
            scale=float(d["scale"]),
            paste_offset=(float(d["paste_offset"][0]), float(d["paste_offset"][1])),
            background_id=str(d.get("background_id", "")),
        )

    def describe(self) -> str:
        return (
            f"rot_deg={math.degrees(self.rotation):.2f};scale={self.scale:.4f};"
            f"dx={self.paste_offset[0]:.1f};dy={self.paste_offset[1]:.1f}"
        )


@dataclass(frozen=True)
class DistortionSpec:
    """One pixel-level distortion; ``parameter`` meaning depends on ``kind``."""

    kind: str
    parameter: float = 0.0

    def __post_init__(self):
        if self.kind not in _PARAM_RANGES:
            raise ValueError(f"unknown distortion kind {self.kind!r}")
        lo, hi, inclusive_low = _PARAM_RANGES[self.kind]
        p = self.parameter
        if self.kind == "none":
            return
        if self.kind in ("jpeg", "median_blur"):
            if p != int(p):
                raise ValueError(f"{self.kind} parameter must be an integer, got {p}")
            if self.kind == "median_blur" and int(p) not in (3, 5):
                raise ValueError(f"median_blur kernel must be 3 or 5, got {p}")
            if self.kind == "jpeg" and not (10 <= int(p) <= 90):
                raise ValueError(f"jpeg quality must be in [10, 90], got {p}")
            return
        ok = (lo <= p if inclusive_low else lo < p) and p <= hi
        if not ok:
            raise ValueError(f"{self.kind} parameter {p} outside ({lo}, {hi}]")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "parameter": self.parameter}

    @classmethod
    def from_dict(cls, d: dict) -> "DistortionSpec":
        return cls(kind=str(d["kind"]), parameter=float(d.get("parameter", 0.0)))

    def describe(self) -> str:
        if self.kind == "none":
            return "none"
        return f"{self.kind}={self.parameter:.4g}"


def attack_transform(spec: AttackSpec, object_centroid: tuple[float, float]) -> SimilarityTransform:
    """Host-frame to background-frame map realizing an AttackSpec."""
    rotate_scale = SimilarityTransform(
        rotation=spec.rotation, scale=spec.scale, pivot=object_centroid
    )
    return rotate_scale.then(
        SimilarityTransform.translation(spec.paste_offset[0], spec.paste_offset[1])
    )


def _transformed_bbox(
    mask: np.ndarray, spec: AttackSpec, object_centroid: tuple[float, float]
) -> tuple[float, float, float, float]:
    ys, xs = np.nonzero(mask)
    t = attack_transform(spec, object_centroid)
    tx, ty = t.apply(xs.astype(np.float64), ys.astype(np.float64))
    return float(tx.min()), float(ty.min()), float(tx.max()), float(ty.max())


def sample_attack(
    rng_seed,
    object_mask: np.ndarray,
    background_dims: tuple[int, int],
    ranges: AttackRanges = AttackRanges(),
    background_id: str = "",
) -> AttackSpec:
    """Draw a uniformly random feasible AttackSpec.

    Rotation and scale are sampled uniformly inside ``ranges``; the integer
    paste offset is sampled uniformly over positions that keep every
    transformed object pixel at least one pixel inside the background.
    Offset feasibility is resampled up to 100 times before giving up.

    Raises
    ------
    PlacementInfeasibleError
        When no feasible offset exists (or survives 100 draws).
    """
    object_mask = _require_mask(object_mask)
    bg_w, bg_h = background_dims
    rng = np.random.default_rng(rng_seed)
    rotation = float(rng.uniform(-ranges.rotation_max, ranges.rotation_max))
    scale = float(rng.uniform(ranges.scale_min, ranges.scale_max))

    m = compute_moments(object_mask)
    c = centroid(m)
    probe = AttackSpec(rotation=rotation, scale=scale, paste_offset=(0.0, 0.0))
    x_min, y_min, x_max, y_max = _transformed_bbox(object_mask, probe, c)

    margin = 1.0
    dx_lo = math.ceil(margin - x_min)
    dx_hi = math.floor(bg_w - 1 - margin - x_max)
    dy_lo = math.ceil(margin - y_min)
    dy_hi = math.floor(bg_h - 1 - margin - y_max)
    if dx_lo > dx_hi or dy_lo > dy_hi:
        raise PlacementInfeasibleError(
            f"object ({x_max - x_min:.0f}x{y_max - y_min:.0f} after transform) cannot fit "
            f"inside {bg_w}x{bg_h} background"
        )
    # The feasible-offset region is an exact rectangle, so a single uniform
    # draw over it replaces literal rejection sampling.
    dx = int(rng.integers(dx_lo, dx_hi + 1))
    dy = int(rng.integers(dy_lo, dy_hi + 1))
    return AttackSpec(
        rotation=rotation,
        scale=scale,
        paste_offset=(float(dx), float(dy)),
        background_id=background_id,
    )


def crop_paste(
    object_img: np.ndarray,
    object_mask: np.ndarray,
    background: np.ndarray,
    spec: AttackSpec,
) -> tuple[np.ndarray, np.ndarray]:
    """Composite the transformed object over the background.

    Returns ``(composite, gt_mask)``. Background pixels outside the warped
    mask are preserved bit-exactly; the warped mask is the geometric
    ground truth for downstream synchronization.
    """
    object_img = _require_image(object_img)
    object_mask = _require_mask(object_mask)
    background = _require_image(background)
    if object_img.shape[:2] != object_mask.shape:
        raise ValueError("object image and mask sizes differ")

    bg_h, bg_w = background.shape[:2]
    m = compute_moments(object_mask)
    c = centroid(m)
    x_min, y_min, x_max, y_max = _transformed_bbox(object_mask, spec, c)
    if x_min < 0 or y_min < 0 or x_max > bg_w - 1 or y_max > bg_h - 1:
        raise PlacementInfeasibleError(
            f"transformed object bbox [{x_min:.1f}, {y_min:.1f}, {x_max:.1f}, {y_max:.1f}] "
            f"exceeds {bg_w}x{bg_h} background"
        )

    t = attack_transform(spec, c)
    warped = warp(apply_mask_crop(object_img, object_mask), t, bg_w, bg_h, fill=0.0)
    gt_mask = warp_mask(object_mask, t, bg_w, bg_h)
    if not gt_mask.any():
        raise PlacementInfeasibleError("transformed object rasterized to an empty mask")
    composite = np.where(gt_mask[..., None], warped, background)
    return composite, gt_mask


# ---------------------------------------------------------------------------
# Pixel distortions

def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    return np.clip(gaussian_smooth(img, sigma), 0.0, 1.0)


def median_blur(img: np.ndarray, kernel: int) -> np.ndarray:
    radius = kernel // 2
    padded = np.pad(img, ((radius, radius), (radius, radius), (0, 0)), mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, (kernel, kernel), axis=(0, 1))
    return np.median(windows, axis=(-2, -1))


def _rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    maxc = np.max(img, axis=-1)
    minc = np.min(img, axis=-1)
    delta = maxc - minc
    safe = np.where(delta == 0.0, 1.0, delta)
    h = np.zeros_like(maxc)
    h = np.where(maxc == r, ((g - b) / safe) % 6.0, h)
    h = np.where((maxc == g) & (maxc != r), (b - r) / safe + 2.0, h)
    h = np.where((maxc == b) & (maxc != r) & (maxc != g), (r - g) / safe + 4.0, h)
    h = np.where(delta == 0.0, 0.0, h / 6.0)
    s = np.where(maxc == 0.0, 0.0, delta / np.where(maxc == 0.0, 1.0, maxc))
    return np.stack([h, s, maxc], axis=-1)


def _hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = i.astype(np.int64) % 6
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def distort(image: np.ndarray, spec: DistortionSpec, rng_seed=0) -> np.ndarray:
    """Apply one pixel-level distortion; deterministic given the seed.

    Kinds and parameters:

    * ``gaussian_blur``: separable kernel of radius ceil(3*sigma), edge-clamped.
    * ``gaussian_noise``: i.i.d. additive N(0, sigma^2) per channel, clamped.
    * ``jpeg``: quantization round trip at the given quality factor.
    * ``median_blur``: per-channel k x k median, edge-clamped.
    * ``salt_pepper``: the given fraction of pixels forced to 0 or 1 equiprobably.
    * ``brightness``: multiply intensities by the factor.
    * ``contrast``: ``(v - mean) * factor + mean`` with one scalar mean per image.
    * ``saturation`` / ``hue``: HSV round trip scaling S / shifting H (fraction
      of the full hue circle).
    * ``none``: bit-exact identity.
    """
    image = _require_image(image)
    kind, p = spec.kind, spec.parameter
    if kind == "none":
        return image
    if kind == "gaussian_blur":
        return gaussian_blur(image, p)
    if kind == "median_blur":
        return median_blur(image, int(p))
    if kind == "jpeg":
        return jpeg_roundtrip(image, int(p))
    if kind == "gaussian_noise":
        rng = np.random.default_rng(rng_seed)
        noise = rng.normal(0.0, p, size=image.shape)
        return np.clip(image + noise, 0.0, 1.0)
    if kind == "salt_pepper":
        rng = np.random.default_rng(rng_seed)
        u = rng.random(image.shape[:2])
        out = image.copy()
        out[u < p / 2.0] = 0.0
        out[(u >= p / 2.0) & (u < p)] = 1.0
        return out
    if kind == "brightness":
        return np.clip(image * p, 0.0, 1.0)
    if kind == "contrast":
        mean = float(image.mean())
        return np.clip((image - mean) * p + mean, 0.0, 1.0)
    if kind == "saturation":
        hsv = _rgb_to_hsv(image)
        hsv[..., 1] = np.clip(hsv[..., 1] * p, 0.0, 1.0)
        return np.clip(_hsv_to_rgb(hsv), 0.0, 1.0)
    if kind == "hue":
        hsv = _rgb_to_hsv(image)
        hsv[..., 0] = (hsv[..., 0] + p) % 1.0
        return np.clip(_hsv_to_rgb(hsv), 0.0, 1.0)
    raise ValueError(f"unknown distortion kind {kind!r}")


def attack_pipeline(
    object_img: np.ndarray,
    object_mask: np.ndarray,
    background: np.ndarray,
    attack: AttackSpec,
    distortions: list[DistortionSpec],
    rng_seed=0,
) -> tuple[np.ndarray, np.ndarray]:
    """crop_paste, then each distortion in order; gt_mask passes through clean."""
    composite, gt_mask = crop_paste(object_img, object_mask, background, attack)
    children = np.random.SeedSequence(rng_seed).spawn(len(distortions))
    for spec, child in zip(distortions, children):
        composite = distort(composite, spec, rng_seed=child)
    return composite, gt_mask


def evaluation_bank(jpeg_quality: int = 50) -> list[DistortionSpec]:
    """The evaluation distortion bank: the nine standard kinds plus identity.

    Ranged kinds (brightness/contrast/saturation/hue) carry their harshest
    endpoint here; the evaluation harness samples inside the ranges
    per-image instead when configured to.
    """
    return [
        DistortionSpec("none"),
        DistortionSpec("gaussian_blur", 3.0),
        DistortionSpec("gaussian_noise", 0.05),
        DistortionSpec("jpeg", jpeg_quality),
        DistortionSpec("median_blur", 5),
        DistortionSpec("salt_pepper", 0.1),
        DistortionSpec("brightness", 1.2),
        DistortionSpec("contrast", 0.8),
        DistortionSpec("saturation", 1.2),
        DistortionSpec("hue", 0.1),
    ]
