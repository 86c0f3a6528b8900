"""8-connected component labeling over grey masks.

Shared by the augmentation ops (which composite through per-segment stencils)
and the extraction pipeline (which reduces components to bounding boxes).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

# 3x3 all-ones structuring element: diagonal pixel bridges join a component.
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class Segment:
    """One maximal 8-connected component of a single class value.

    ``stencil`` is a boolean (h, w) array aligned with the tight bounding
    box; True marks the component's own pixels (other same-class components
    overlapping the box stay False).
    """

    value: int
    x: int
    y: int
    w: int
    h: int
    stencil: np.ndarray

    @property
    def pixel_count(self) -> int:
        return int(np.count_nonzero(self.stencil))

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        return (self.x, self.y, self.w, self.h)

    def pixels(self) -> np.ndarray:
        """(N, 2) array of (y, x) coordinates in mask space."""
        ys, xs = np.nonzero(self.stencil)
        return np.stack([ys + self.y, xs + self.x], axis=1)


def connected_components(mask: np.ndarray, value: int) -> list[Segment]:
    """Maximal 8-connected components of ``value``, ordered by (bbox y, then x).

    Absent class values yield an empty list.
    """
    binary = np.asarray(mask) == value
    labeled, count = ndimage.label(binary, structure=EIGHT_CONNECTED)
    segments: list[Segment] = []
    for index, slc in enumerate(ndimage.find_objects(labeled), start=1):
        if slc is None:
            continue
        ys, xs = slc
        stencil = labeled[slc] == index
        segments.append(
            Segment(
                value=int(value),
                x=int(xs.start),
                y=int(ys.start),
                w=int(xs.stop - xs.start),
                h=int(ys.stop - ys.start),
                stencil=stencil,
            )
        )
    segments.sort(key=lambda s: (s.y, s.x))
    return segments
