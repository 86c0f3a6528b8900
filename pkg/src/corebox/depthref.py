"""Depth referencing for extracted core columns.

Orders columns by the box layout direction, then apportions the well's
[top, bottom] depth range across them, either proportionally to pixel length
along the core axis or with a fixed per-column length. User edits are applied
verbatim; contiguity violations come back as warnings, not errors, since
gaps may legitimately represent missing core.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass

from .errors import DegenerateSpec, EmptyInput, NonPositiveInterval
from .extraction import BoundingBox

TOP_TO_BOTTOM = "top_to_bottom"
BOTTOM_TO_TOP = "bottom_to_top"
LEFT_TO_RIGHT = "left_to_right"
RIGHT_TO_LEFT = "right_to_left"
PROPORTIONAL = "proportional"
FIXED = "fixed"
HORIZONTAL = "horizontal"
VERTICAL = "vertical"

# e.g. box12_1200.0-1201.0m.jpg -> depths 1200.0 to 1201.0; the extension is
# optional so plain stems match too
_FILENAME_DEPTHS = re.compile(
    r"_(\d+(?:\.\d+)?)-(\d+(?:\.\d+)?)m(?:\.[A-Za-z][A-Za-z0-9]*)?$"
)

CSV_COLUMNS = ["index", "x", "y", "w", "h", "depth_from_m", "depth_to_m"]


@dataclass(frozen=True)
class DepthSpec:
    """Box depth range plus layout order and apportioning mode."""

    top: float
    bottom: float
    row_order: str = TOP_TO_BOTTOM
    row_direction: str = LEFT_TO_RIGHT
    mode: str = PROPORTIONAL
    column_length: float | None = None  # meters, fixed mode only

    def __post_init__(self):
        if self.bottom <= self.top:
            raise DegenerateSpec(f"bottom {self.bottom} must exceed top {self.top}")
        if self.row_order not in (TOP_TO_BOTTOM, BOTTOM_TO_TOP):
            raise ValueError(f"unknown row order {self.row_order!r}")
        if self.row_direction not in (LEFT_TO_RIGHT, RIGHT_TO_LEFT):
            raise ValueError(f"unknown row direction {self.row_direction!r}")
        if self.mode not in (PROPORTIONAL, FIXED):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == FIXED and (self.column_length is None or self.column_length <= 0):
            raise ValueError("fixed mode needs a positive column_length")

    @classmethod
    def from_dict(cls, doc: dict) -> "DepthSpec":
        return cls(
            top=float(doc["top"]),
            bottom=float(doc["bottom"]),
            row_order=str(doc.get("row_order", TOP_TO_BOTTOM)),
            row_direction=str(doc.get("row_direction", LEFT_TO_RIGHT)),
            mode=str(doc.get("mode", PROPORTIONAL)),
            column_length=(
                float(doc["column_length"]) if doc.get("column_length") is not None else None
            ),
        )


@dataclass(frozen=True)
class DepthInterval:
    index: int
    from_m: float
    to_m: float

    def as_dict(self) -> dict:
        return {"index": self.index, "from_m": self.from_m, "to_m": self.to_m}


def parse_depth_from_filename(name: str) -> tuple[float, float] | None:
    """Read depths from a ``<name>_<top>-<bottom>m.*`` filename, if present."""
    basename = name.replace("\\", "/").rsplit("/", 1)[-1]
    match = _FILENAME_DEPTHS.search(basename)
    if match is None:
        return None
    top, bottom = float(match.group(1)), float(match.group(2))
    if bottom <= top:
        return None
    return top, bottom


def order_columns(boxes: list[BoundingBox], spec: DepthSpec) -> list[BoundingBox]:
    """Sort boxes by the layout's row order (y), ties broken by x."""
    y_sign = 1 if spec.row_order == TOP_TO_BOTTOM else -1
    x_sign = 1 if spec.row_direction == LEFT_TO_RIGHT else -1
    return sorted(boxes, key=lambda b: (y_sign * b.y, x_sign * b.x))


def assign_depths(
    ordered: list[BoundingBox], spec: DepthSpec, core_axis: str = HORIZONTAL
) -> tuple[list[DepthInterval], list[str]]:
    """Apportion [top, bottom] over the ordered columns.

    Proportional mode splits by pixel length along the core axis (w for
    horizontal columns, h for vertical) and pins the last interval to the
    bottom depth exactly. Fixed mode gives each column ``column_length``
    meters, truncating the last one at the bottom with a warning.
    """
    if not ordered:
        raise EmptyInput("no columns to reference")
    if core_axis not in (HORIZONTAL, VERTICAL):
        raise ValueError(f"unknown core axis {core_axis!r}")
    lengths = [b.w if core_axis == HORIZONTAL else b.h for b in ordered]
    span = spec.bottom - spec.top
    warnings: list[str] = []
    intervals: list[DepthInterval] = []

    if spec.mode == PROPORTIONAL:
        total = sum(lengths)
        if total <= 0:
            raise EmptyInput("total pixel length along the core axis is zero")
        cursor = spec.top
        for i, length in enumerate(lengths):
            to = spec.bottom if i == len(lengths) - 1 else cursor + span * length / total
            intervals.append(DepthInterval(index=i, from_m=cursor, to_m=to))
            cursor = to
    else:
        cursor = spec.top
        for i in range(len(ordered)):
            to = cursor + spec.column_length
            if to > spec.bottom:
                to = spec.bottom
                warnings.append(
                    f"column {i} truncated at bottom depth {spec.bottom:g} m "
                    f"(fixed length {spec.column_length:g} m does not fit)"
                )
            if to <= cursor:
                warnings.append(
                    f"columns {i}.. fall entirely below bottom depth {spec.bottom:g} m"
                )
                break
            intervals.append(DepthInterval(index=i, from_m=cursor, to_m=to))
            cursor = to
    return intervals, warnings


def adjust_depths(
    intervals: list[DepthInterval], edits: list[tuple[int, float, float]]
) -> tuple[list[DepthInterval], list[str]]:
    """Apply user edits verbatim and re-check contiguity.

    Gaps or overlaps between consecutive intervals become warnings (a gap can
    mean missing core); an edit with to <= from raises NonPositiveInterval.
    """
    updated = {iv.index: iv for iv in intervals}
    for index, new_from, new_to in edits:
        if new_to <= new_from:
            raise NonPositiveInterval(
                f"interval {index} edit ({new_from}, {new_to}) has non-positive length"
            )
        if index not in updated:
            raise KeyError(f"no interval with index {index}")
        updated[index] = DepthInterval(index=index, from_m=float(new_from), to_m=float(new_to))
    result = [updated[iv.index] for iv in intervals]
    warnings = []
    for prev, cur in zip(result, result[1:]):
        if cur.from_m > prev.to_m + 1e-9:
            warnings.append(
                f"gap between column {prev.index} (to {prev.to_m:g} m) "
                f"and column {cur.index} (from {cur.from_m:g} m)"
            )
        elif cur.from_m < prev.to_m - 1e-9:
            warnings.append(
                f"overlap between column {prev.index} (to {prev.to_m:g} m) "
                f"and column {cur.index} (from {cur.from_m:g} m)"
            )
    return result, warnings


def depths_to_csv(
    boxes: list[BoundingBox], intervals: list[DepthInterval] | None
) -> str:
    """Export box geometry plus assigned depths; depth cells stay empty when
    no referencing has run."""
    by_index = {iv.index: iv for iv in intervals} if intervals else {}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for i, box in enumerate(boxes):
        iv = by_index.get(i)
        writer.writerow(
            [
                i,
                box.x,
                box.y,
                box.w,
                box.h,
                f"{iv.from_m:.2f}" if iv else "",
                f"{iv.to_m:.2f}" if iv else "",
            ]
        )
    return buf.getvalue()
