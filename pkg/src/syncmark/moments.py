"""Raw and central moments of a binary mask and the invariant features
derived from them: centroid, principal orientation, minimum bounding square.

Moments are region moments: sums over all true pixels of the mask raster,

    m_pq  = sum x^p * y^q
    mu_pq = sum (x - xbar)^p * (y - ybar)^q,   (xbar, ybar) = (m10/m00, m01/m00)

with x the column and y the row of each true pixel. Multi-component masks
are used as given; no connected-component filtering happens here.

Sums are accumulated with ``math.fsum`` so results are the correctly
rounded double-precision values regardless of pixel order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyRegionError
from .raster import _require_mask

#: Default threshold on normalized second-moment anisotropy below which the
#: principal orientation is considered undefined.
DEGENERACY_EPS = 1e-3


@dataclass(frozen=True)
class MomentSet:
    """Raw spatial moments (m00, m10, m01) and central moments (mu20, mu11, mu02)."""

    m00: float
    m10: float
    m01: float
    mu20: float
    mu11: float
    mu02: float


@dataclass(frozen=True)
class SquareRect:
    """Axis-aligned square; ``x0``/``y0`` may be negative, ``side >= 1``."""

    x0: int
    y0: int
    side: int


def compute_moments(mask: np.ndarray) -> MomentSet:
    """Compute the six moments of a non-empty bool mask.

    Parameters
    ----------
    mask : bool array (H, W)
        Pixel membership of the region.

    Returns
    -------
    MomentSet

    Raises
    ------
    EmptyRegionError
        If the mask has no true pixel.
    """
    mask = _require_mask(mask)
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        raise EmptyRegionError("cannot compute moments of an empty mask")

    # Raw moments are integer sums; int64 accumulation is exact.
    m00 = float(xs.size)
    m10 = float(int(xs.sum(dtype=np.int64)))
    m01 = float(int(ys.sum(dtype=np.int64)))

    xbar = m10 / m00
    ybar = m01 / m00
    dx = xs.astype(np.float64) - xbar
    dy = ys.astype(np.float64) - ybar
    mu20 = math.fsum(dx * dx)
    mu11 = math.fsum(dx * dy)
    mu02 = math.fsum(dy * dy)
    return MomentSet(m00=m00, m10=m10, m01=m01, mu20=mu20, mu11=mu11, mu02=mu02)


def centroid(m: MomentSet) -> tuple[float, float]:
    """Center of mass ``(m10/m00, m01/m00)`` in continuous pixel coordinates."""
    return m.m10 / m.m00, m.m01 / m.m00


def principal_orientation(m: MomentSet) -> float:
    """Major-axis angle ``0.5 * atan2(2*mu11/m00, (mu20 - mu02)/m00)``.

    The result lies in (-pi/2, pi/2]. For near-isotropic regions the value
    is numerically meaningless; callers should gate on
    :func:`is_orientation_degenerate` first.
    """
    return 0.5 * math.atan2(2.0 * m.mu11 / m.m00, (m.mu20 - m.mu02) / m.m00)


def is_orientation_degenerate(m: MomentSet, eps: float = DEGENERACY_EPS) -> bool:
    """True when the second-moment anisotropy is below ``eps``.

    Anisotropy is ``hypot(2*mu11, mu20 - mu02) / m00**2``, a
    scale-invariant measure that is 0 for discs, squares, and anything
    else with a rotationally symmetric second-moment tensor.
    """
    return math.hypot(2.0 * m.mu11, m.mu20 - m.mu02) / (m.m00 * m.m00) < eps


def mask_bbox(mask: np.ndarray) -> tuple[int, int, int, int]:
    """Tight bounding rectangle of the true pixels as (x0, y0, width, height)."""
    mask = _require_mask(mask)
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        raise EmptyRegionError("cannot bound an empty mask")
    x0 = int(xs.min())
    y0 = int(ys.min())
    return x0, y0, int(xs.max()) - x0 + 1, int(ys.max()) - y0 + 1


def min_bounding_square(mask: np.ndarray) -> SquareRect:
    """Tight bounding rectangle padded to a square.

    ``side = max(bbox_w, bbox_h)``; the rectangle is centered inside the
    square, and when the leftover padding is odd the extra pixel goes to
    the right/bottom.
    """
    x0, y0, w, h = mask_bbox(mask)
    side = max(w, h)
    return SquareRect(x0=x0 - (side - w) // 2, y0=y0 - (side - h) // 2, side=side)
