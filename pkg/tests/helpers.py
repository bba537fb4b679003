"""Shared oracles and small builders for the test suite."""

from __future__ import annotations

import math

import numpy as np

from syncmark.moments import MomentSet


def brute_force_moments(mask: np.ndarray) -> MomentSet:
    """Independent double-loop oracle; this IS the definition.

    Terms are accumulated with math.fsum (correctly rounded), so the result
    is order-independent and comparable bit-for-bit with any implementation
    that also sums exactly.
    """
    h, w = mask.shape
    m00 = m10 = m01 = 0
    for y in range(h):
        for x in range(w):
            if mask[y][x]:
                m00 += 1
                m10 += x
                m01 += y
    xbar = m10 / m00
    ybar = m01 / m00
    t20, t11, t02 = [], [], []
    for y in range(h):
        for x in range(w):
            if mask[y][x]:
                dx = x - xbar
                dy = y - ybar
                t20.append(dx * dx)
                t11.append(dx * dy)
                t02.append(dy * dy)
    return MomentSet(
        m00=float(m00),
        m10=float(m10),
        m01=float(m01),
        mu20=math.fsum(t20),
        mu11=math.fsum(t11),
        mu02=math.fsum(t02),
    )


def bar_mask(
    frame: int, length: int, width: int, angle: float, center=None
) -> np.ndarray:
    """Rotated solid rectangle rasterized into a frame x frame mask."""
    if center is None:
        center = ((frame - 1) / 2.0, (frame - 1) / 2.0)
    ys, xs = np.mgrid[0:frame, 0:frame].astype(np.float64)
    ca, sa = math.cos(angle), math.sin(angle)
    u = (xs - center[0]) * ca + (ys - center[1]) * sa
    v = -(xs - center[0]) * sa + (ys - center[1]) * ca
    return (np.abs(u) <= length / 2.0) & (np.abs(v) <= width / 2.0)


def ellipse_mask(frame: int, a: float, b: float, angle: float, center=None) -> np.ndarray:
    if center is None:
        center = ((frame - 1) / 2.0, (frame - 1) / 2.0)
    ys, xs = np.mgrid[0:frame, 0:frame].astype(np.float64)
    ca, sa = math.cos(angle), math.sin(angle)
    u = (xs - center[0]) * ca + (ys - center[1]) * sa
    v = -(xs - center[0]) * sa + (ys - center[1]) * ca
    return (u / a) ** 2 + (v / b) ** 2 <= 1.0


def disc_mask(frame: int, radius: float, center=None) -> np.ndarray:
    return ellipse_mask(frame, radius, radius, 0.0, center)


def wrap_halfpi(angle: float) -> float:
    """Wrap an orientation difference into (-pi/2, pi/2]."""
    a = math.remainder(angle, math.pi)
    if a <= -math.pi / 2.0:
        a += math.pi
    return a


def flat_image(h: int, w: int, value: float = 0.5) -> np.ndarray:
    return np.full((h, w, 3), value, dtype=np.float64)
