"""Synthetic desk corpus and controlled mask perturbation.

The corpus generator produces self-contained host/mask/background triples:
256x256 hosts carrying one smoothly textured object (bar, ellipse, star
polygon, harmonic blob, or superellipse) at a controlled occupancy between
25% and 60% of the frame, plus 512x512 background images for the
cropping-paste attack. Shapes are guaranteed anisotropic enough for
orientation normalization and small enough that any in-range attack fits
the background. Everything derives deterministically from one seed.

Directory layout (DUTS-style, name-matched):

    out_dir/images/shape_000.png ...
    out_dir/masks/shape_000.png ...
    out_dir/backgrounds/bg_000.png ...

``perturb_mask`` emulates segmentation error: randomized boundary
dilation/erosion steps until the IoU against the original reaches a
target, used by the segmentation-bias study.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .metrics import iou
from .moments import compute_moments, is_orientation_degenerate
from .raster import _require_mask, dilate_mask, erode_mask, save_image, save_mask

HOST_SIZE = 256
BACKGROUND_SIZE = 512

#: Occupancy buckets used by the capacity sweep (fractions of the host frame).
OCCUPANCY_BUCKETS = ((0.25, 0.30), (0.30, 0.40), (0.40, 0.50), (0.50, 0.60))

_MIN_ANISOTROPY = 3e-3


def _smooth_field(rng: np.random.Generator, size: int, base: float, spread: float) -> np.ndarray:
    """Sum of a few low-frequency sinusoids per channel; gentle gradients."""
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    out = np.empty((size, size, 3), dtype=np.float64)
    for ch in range(3):
        value = base + rng.uniform(-0.08, 0.08)
        acc = np.full((size, size), value)
        for _ in range(2):
            wavelength = rng.uniform(size / 2.5, size * 1.5)
            angle = rng.uniform(0.0, math.pi)
            phase = rng.uniform(0.0, 2.0 * math.pi)
            amp = rng.uniform(0.3, 1.0) * spread
            u = (xs * math.cos(angle) + ys * math.sin(angle)) / wavelength
            acc += amp * np.sin(2.0 * math.pi * u + phase)
        out[..., ch] = acc
    return np.clip(out, 0.05, 0.95)


def _object_texture(rng: np.random.Generator, size: int) -> np.ndarray:
    """Object shading: mid-range base color with multi-scale smooth relief.

    Wavelengths and amplitudes balance two pressures: gradients must stay
    shallow so sub-pixel re-synchronization error maps to small intensity
    error, while local variance inside an 11 px window must stay well
    above the embedding strength so SSIM reflects texture, not chips.
    """
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    shading = np.zeros((size, size), dtype=np.float64)
    for wavelength_lo, wavelength_hi, amp in (
        (56.0, 96.0, 0.065),
        (28.0, 48.0, 0.045),
        (16.0, 24.0, 0.06),
        (10.0, 14.0, 0.05),
    ):
        wavelength = rng.uniform(wavelength_lo, wavelength_hi)
        angle = rng.uniform(0.0, math.pi)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        u = (xs * math.cos(angle) + ys * math.sin(angle)) / wavelength
        shading += amp * np.sin(2.0 * math.pi * u + phase)
    base = rng.uniform(0.40, 0.60, size=3)
    tint = rng.uniform(0.85, 1.15, size=3)
    fine = rng.normal(0.0, 0.004, size=(size, size))
    out = base[None, None, :] + (shading + fine)[:, :, None] * tint[None, None, :]
    return np.clip(out, 0.08, 0.92)


def _mask_from_radius(size: int, center: tuple[float, float], radius_fn) -> np.ndarray:
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    dx = xs - center[0]
    dy = ys - center[1]
    r = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    return r <= radius_fn(theta)


def _shape_mask(rng: np.random.Generator, kind: str, size: int, occupancy: float) -> np.ndarray:
    """Rasterize one shape at the requested occupancy (bisection on scale)."""
    target_area = occupancy * size * size
    jitter = rng.uniform(-4.0, 4.0, size=2)
    center = (size / 2.0 + jitter[0], size / 2.0 + jitter[1])
    max_extent = size / 2.0 - 4.0 - float(np.max(np.abs(jitter)))

    if kind == "bar":
        angle = rng.uniform(-math.pi / 2.0, math.pi / 2.0)
        aspect = rng.uniform(2.2, 3.2)
        ca, sa = math.cos(angle), math.sin(angle)

        def build(scale: float) -> np.ndarray:
            length = scale * math.sqrt(aspect)
            width = scale / math.sqrt(aspect)
            ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
            u = (xs - center[0]) * ca + (ys - center[1]) * sa
            v = -(xs - center[0]) * sa + (ys - center[1]) * ca
            return (np.abs(u) <= length / 2.0) & (np.abs(v) <= width / 2.0)

        scale_cap = 2.0 * max_extent / math.sqrt(aspect + 1.0 / aspect)
    elif kind == "ellipse":
        angle = rng.uniform(-math.pi / 2.0, math.pi / 2.0)
        aspect = rng.uniform(1.45, 2.2) if occupancy < 0.42 else rng.uniform(1.28, 1.42)
        ca, sa = math.cos(angle), math.sin(angle)

        def build(scale: float) -> np.ndarray:
            a = scale * math.sqrt(aspect)
            b = scale / math.sqrt(aspect)
            ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
            u = (xs - center[0]) * ca + (ys - center[1]) * sa
            v = -(xs - center[0]) * sa + (ys - center[1]) * ca
            return (u / a) ** 2 + (v / b) ** 2 <= 1.0

        scale_cap = max_extent / math.sqrt(aspect)
    elif kind == "polygon":
        k = int(rng.integers(5, 9))
        angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, size=k))
        stretch = rng.uniform(1.35, 1.8)
        axis = rng.uniform(0.0, math.pi)
        radii = rng.uniform(0.82, 1.12, size=k)
        radii = radii * np.sqrt(
            (np.cos(angles - axis) * stretch) ** 2 + np.sin(angles - axis) ** 2
        )

        def radius_at(theta: np.ndarray, base: float) -> np.ndarray:
            # Straight polygon edges between consecutive (angle, radius) vertices.
            th = (theta - angles[0]) % (2.0 * math.pi) + angles[0]
            idx = np.searchsorted(angles, th, side="right") - 1
            idx = np.clip(idx, 0, k - 1)
            nxt = (idx + 1) % k
            a0 = angles[idx]
            a1 = np.where(nxt == 0, angles[0] + 2.0 * math.pi, angles[nxt])
            r0 = base * radii[idx]
            r1 = base * radii[nxt]
            span = a1 - a0
            num = r0 * r1 * np.sin(span)
            den = r1 * np.sin(a1 - th) + r0 * np.sin(th - a0)
            return num / np.maximum(den, 1e-9)

        def build(scale: float) -> np.ndarray:
            return _mask_from_radius(size, center, lambda t: radius_at(t, scale))

        scale_cap = max_extent / float(radii.max())
    elif kind == "blob":
        a2 = rng.uniform(0.16, 0.26)
        a3 = rng.uniform(0.0, 0.10)
        a4 = rng.uniform(0.0, 0.08)
        p2, p3, p4 = rng.uniform(0.0, 2.0 * math.pi, size=3)

        def build(scale: float) -> np.ndarray:
            def radius_fn(t):
                return scale * (
                    1.0
                    + a2 * np.cos(2.0 * t + p2)
                    + a3 * np.cos(3.0 * t + p3)
                    + a4 * np.cos(4.0 * t + p4)
                )

            return _mask_from_radius(size, center, radius_fn)

        scale_cap = max_extent / (1.0 + a2 + a3 + a4)
    elif kind == "superellipse":
        angle = rng.uniform(-math.pi / 2.0, math.pi / 2.0)
        aspect = rng.uniform(1.25, 1.4)
        power = rng.uniform(3.0, 4.5)
        ca, sa = math.cos(angle), math.sin(angle)

        def build(scale: float) -> np.ndarray:
            a = scale * math.sqrt(aspect)
            b = scale / math.sqrt(aspect)
            ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
            u = (xs - center[0]) * ca + (ys - center[1]) * sa
            v = -(xs - center[0]) * sa + (ys - center[1]) * ca
            return np.abs(u / a) ** power + np.abs(v / b) ** power <= 1.0

        # Corners reach ~2^(-1/p) of the way along the (a, b) diagonal.
        scale_cap = max_extent / (
            0.85 * math.hypot(math.sqrt(aspect), 1.0 / math.sqrt(aspect))
        )
    else:
        raise ValueError(f"unknown shape kind {kind!r}")

    lo, hi = 2.0, scale_cap
    mask = build(hi)
    if int(mask.sum()) < target_area:
        return mask  # occupancy capped by fit; caller re-draws
    for _ in range(22):
        mid = 0.5 * (lo + hi)
        mask = build(mid)
        if int(mask.sum()) >= target_area:
            hi = mid
        else:
            lo = mid
    return build(hi)


_KINDS_BY_OCC = (
    (0.34, ("bar", "ellipse", "polygon", "blob")),
    (0.45, ("ellipse", "polygon", "blob")),
    (0.52, ("ellipse", "polygon", "superellipse")),
    (1.00, ("superellipse",)),
)


def _feasible_kinds(occupancy: float) -> tuple[str, ...]:
    for cap, kinds in _KINDS_BY_OCC:
        if occupancy <= cap:
            return kinds
    return ("superellipse",)


def make_host(index: int, seed, size: int = HOST_SIZE) -> tuple[np.ndarray, np.ndarray]:
    """Generate one host image and its object mask.

    Occupancy cycles through the four buckets; within a bucket it is drawn
    uniformly. Shapes that rasterize off-target or near-isotropic are
    re-drawn from the same stream, so the output is a pure function of
    (index, seed).
    """
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 1, int(index))))
    lo, hi = OCCUPANCY_BUCKETS[index % len(OCCUPANCY_BUCKETS)]
    for _ in range(40):
        occupancy = float(rng.uniform(lo, hi))
        kind = str(rng.choice(_feasible_kinds(occupancy)))
        mask = _shape_mask(rng, kind, size, occupancy)
        occ = mask.sum() / (size * size)
        if not (lo - 0.015 <= occ <= hi + 0.015):
            continue
        m = compute_moments(mask)
        if is_orientation_degenerate(m, _MIN_ANISOTROPY):
            continue
        background = _smooth_field(rng, size, base=0.5, spread=0.10)
        texture = _object_texture(rng, size)
        host = np.where(mask[..., None], texture, background)
        return host, mask
    raise RuntimeError(f"could not generate a feasible shape for index {index}")


def make_background(index: int, seed, size: int = BACKGROUND_SIZE) -> np.ndarray:
    """Generate one attack background."""
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 2, int(index))))
    return _smooth_field(rng, size, base=0.5, spread=0.14)


def generate_corpus(
    out_dir,
    count: int = 50,
    seed=1,
    host_size: int = HOST_SIZE,
    background_size: int = BACKGROUND_SIZE,
) -> dict:
    """Write a complete corpus to disk; returns the written paths."""
    images_dir = os.path.join(out_dir, "images")
    masks_dir = os.path.join(out_dir, "masks")
    backgrounds_dir = os.path.join(out_dir, "backgrounds")
    for d in (images_dir, masks_dir, backgrounds_dir):
        os.makedirs(d, exist_ok=True)
    images, masks, backgrounds = [], [], []
    for i in range(count):
        host, mask = make_host(i, seed, host_size)
        name = f"shape_{i:03d}.png"
        save_image(os.path.join(images_dir, name), host)
        save_mask(os.path.join(masks_dir, name), mask)
        images.append(os.path.join(images_dir, name))
        masks.append(os.path.join(masks_dir, name))
        bg = make_background(i, seed, background_size)
        bg_name = f"bg_{i:03d}.png"
        save_image(os.path.join(backgrounds_dir, bg_name), bg)
        backgrounds.append(os.path.join(backgrounds_dir, bg_name))
    return {
        "images_dir": images_dir,
        "masks_dir": masks_dir,
        "backgrounds_dir": backgrounds_dir,
        "images": images,
        "masks": masks,
        "backgrounds": backgrounds,
    }


def perturb_mask(mask: np.ndarray, target_iou: float, rng_seed) -> tuple[np.ndarray, float]:
    """Degrade a mask to a target IoU against itself via boundary noise.

    Alternating randomized dilation/erosion flips boundary pixels until the
    IoU lands within +/-0.02 of ``target_iou`` (or best effort after 50
    iterations). Returns ``(perturbed, achieved_iou)``; deterministic given
    the seed.

    Raises
    ------
    ValueError
        If ``target_iou`` is outside (0.5, 1.0].
    """
    mask = _require_mask(mask)
    if not 0.5 < target_iou <= 1.0:
        raise ValueError(f"target IoU must be in (0.5, 1.0], got {target_iou}")
    if target_iou == 1.0:
        return mask.copy(), 1.0

    rng = np.random.default_rng(rng_seed)
    original = mask
    current = mask.copy()
    min_area = max(8, int(mask.sum()) // 16)

    for step in range(50):
        achieved = iou(current, original)
        if abs(achieved - target_iou) <= 0.02:
            break
        union = int(np.logical_or(current, original).sum())
        gap = abs(achieved - target_iou)
        want = max(1, int(round(gap * union * 0.7)))

        if achieved > target_iou:
            if step % 2 == 0:
                candidates = np.flatnonzero(dilate_mask(current) & ~current)
                grow = True
            else:
                candidates = np.flatnonzero(current & ~erode_mask(current))
                grow = False
                if int(current.sum()) - want < min_area:
                    want = max(0, int(current.sum()) - min_area)
            # flipping a whole boundary ring is reversible (the next step
            # would undo it); a random subset makes the noise accumulate
            want = min(want, max(1, candidates.size // 2))
        else:
            candidates = np.flatnonzero(np.logical_xor(current, original))
            grow = None
        if candidates.size == 0 or want == 0:
            continue
        pick = rng.choice(candidates, size=min(want, candidates.size), replace=False)
        flat = current.reshape(-1)
        if grow is None:
            flat[pick] = original.reshape(-1)[pick]
        else:
            flat[pick] = grow
        current = flat.reshape(mask.shape)

    return current, iou(current, original)
