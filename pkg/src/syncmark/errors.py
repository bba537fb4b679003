"""Exception types shared across the package.

The CLI maps these onto exit codes: invalid input (including empty
regions) exits 2, a decode that finds no usable signal exits 3, and an
attack placement that cannot fit exits 4.
"""


class EmptyRegionError(ValueError):
    """A mask with no true pixels was passed to a geometric operation."""


class CapacityExceededError(ValueError):
    """Message length exceeds the number of available carrier blocks."""


class NoSignalError(RuntimeError):
    """Extraction found zero usable blocks under the object mask."""


class PlacementInfeasibleError(RuntimeError):
    """No paste offset keeps the transformed object inside the background."""
