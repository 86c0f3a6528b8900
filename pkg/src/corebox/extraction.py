"""Core-column extraction: mask -> filtered bounding boxes -> crops.

Detected components are cleaned up with three statistical filters before
cropping: a position cut on the y coordinate, a median-band filter keeping
sizes within [median/n, median*n], and a global width floor of
image_width/m. Dropped boxes are tagged with the filter that rejected them,
and user-facing warnings flag suspicious results (no boxes, implausible
counts, off-median sizes).
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field

import numpy as np

from .errors import BoxOutOfBounds, DimensionMismatch, EmptyInput
from .imagery import LabelMap
from .segments import connected_components

WIDTH = "width"
HEIGHT = "height"

EXPECTED_COUNT_RANGE = (1, 6)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box: left x, top y, width, height (pixels)."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"degenerate box {self}")

    @property
    def right(self) -> int:
        return self.x + self.w

    @property
    def bottom(self) -> int:
        return self.y + self.h

    def size(self, dimension: str) -> int:
        if dimension == WIDTH:
            return self.w
        if dimension == HEIGHT:
            return self.h
        raise ValueError(f"unknown dimension {dimension!r}")

    def as_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, doc: dict) -> "BoundingBox":
        return cls(x=int(doc["x"]), y=int(doc["y"]), w=int(doc["w"]), h=int(doc["h"]))


@dataclass(frozen=True)
class FilterConfig:
    """Clean-up settings.

    n is the median-band coefficient (sensible range 1.2..1.5), m the global
    width divisor (50..200). y_max_ratio of 1.0 disables the position cut.
    ``dimensions`` selects which box sizes the median band applies to.
    """

    n: float = 1.2
    m: float = 100.0
    y_max_ratio: float = 1.0
    expected_count: tuple[int, int] = EXPECTED_COUNT_RANGE
    median_filter: bool = True
    width_filter: bool = True
    dimensions: tuple[str, ...] = (WIDTH,)

    def __post_init__(self):
        if self.n <= 1.0:
            raise ValueError(f"median-band coefficient n must exceed 1, got {self.n}")
        if self.m < 1.0:
            raise ValueError(f"global-width coefficient m must be >= 1, got {self.m}")
        if not 0.0 < self.y_max_ratio <= 1.0:
            raise ValueError(f"y_max_ratio must be in (0, 1], got {self.y_max_ratio}")
        for d in self.dimensions:
            if d not in (WIDTH, HEIGHT):
                raise ValueError(f"unknown filter dimension {d!r}")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "y_max_ratio": self.y_max_ratio,
            "expected_count": list(self.expected_count),
            "median_filter": self.median_filter,
            "width_filter": self.width_filter,
            "dimensions": list(self.dimensions),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FilterConfig":
        known = {
            "n",
            "m",
            "y_max_ratio",
            "expected_count",
            "median_filter",
            "width_filter",
            "dimensions",
        }
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown filter config keys: {sorted(unknown)}")
        kwargs: dict = {}
        if "n" in doc:
            kwargs["n"] = float(doc["n"])
        if "m" in doc:
            kwargs["m"] = float(doc["m"])
        if "y_max_ratio" in doc:
            kwargs["y_max_ratio"] = float(doc["y_max_ratio"])
        if "expected_count" in doc:
            lo, hi = doc["expected_count"]
            kwargs["expected_count"] = (int(lo), int(hi))
        if "median_filter" in doc:
            kwargs["median_filter"] = bool(doc["median_filter"])
        if "width_filter" in doc:
            kwargs["width_filter"] = bool(doc["width_filter"])
        if "dimensions" in doc:
            kwargs["dimensions"] = tuple(str(d) for d in doc["dimensions"])
        return cls(**kwargs)

    @classmethod
    def from_json_file(cls, path) -> "FilterConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class DroppedBox:
    """A rejected box plus the single filter that rejected it."""

    box: BoundingBox
    filter: str
    thresholds: dict

    def as_dict(self) -> dict:
        return {"box": self.box.as_dict(), "filter": self.filter, "thresholds": self.thresholds}


@dataclass
class ExtractionReport:
    kept: list[BoundingBox] = field(default_factory=list)
    dropped: list[DroppedBox] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    medians: dict[str, float] = field(default_factory=dict)
    gt: float | None = None

    @property
    def detected(self) -> int:
        return len(self.kept) + len(self.dropped)

    def to_dict(self) -> dict:
        return {
            "kept": [b.as_dict() for b in self.kept],
            "dropped": [d.as_dict() for d in self.dropped],
            "warnings": list(self.warnings),
            "medians": dict(self.medians),
            "gt": self.gt,
            "detected": self.detected,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExtractionReport":
        return cls(
            kept=[BoundingBox.from_dict(b) for b in doc.get("kept", [])],
            dropped=[
                DroppedBox(
                    box=BoundingBox.from_dict(d["box"]),
                    filter=str(d["filter"]),
                    thresholds=dict(d.get("thresholds", {})),
                )
                for d in doc.get("dropped", [])
            ],
            warnings=[str(w) for w in doc.get("warnings", [])],
            medians={str(k): float(v) for k, v in doc.get("medians", {}).items()},
            gt=float(doc["gt"]) if doc.get("gt") is not None else None,
        )


@dataclass(frozen=True)
class ColumnCrop:
    index: int
    box: BoundingBox
    image: np.ndarray


def boxes_from_mask(mask: np.ndarray, value: int) -> list[BoundingBox]:
    """Tight bounding boxes of 8-connected components, ordered (y, then x)."""
    return [
        BoundingBox(x=s.x, y=s.y, w=s.w, h=s.h) for s in connected_components(mask, value)
    ]


def median_size_filter(
    boxes: list[BoundingBox], n: float, dimension: str = WIDTH
) -> tuple[list[BoundingBox], list[BoundingBox], float, float]:
    """Keep boxes whose chosen dimension lies within [median/n, median*n].

    Returns (kept, dropped, xt_bot, xt_up). The median of an even count is
    the mean of the two middle values; comparisons are inclusive.
    """
    if not boxes:
        raise EmptyInput("median filter needs at least one box")
    if n <= 1.0:
        raise ValueError(f"n must exceed 1, got {n}")
    mu = statistics.median(b.size(dimension) for b in boxes)
    xt_up = mu * n
    xt_bot = mu / n
    kept = [b for b in boxes if xt_bot <= b.size(dimension) <= xt_up]
    dropped = [b for b in boxes if not (xt_bot <= b.size(dimension) <= xt_up)]
    return kept, dropped, xt_bot, xt_up


def global_width_filter(
    boxes: list[BoundingBox], image_width: int, m: float
) -> tuple[list[BoundingBox], list[BoundingBox], float]:
    """Keep boxes at least gt = image_width / m wide. Returns (kept, dropped, gt)."""
    if m < 1.0:
        raise ValueError(f"m must be >= 1, got {m}")
    gt = image_width / m
    kept = [b for b in boxes if b.w >= gt]
    dropped = [b for b in boxes if b.w < gt]
    return kept, dropped, gt


def position_filter(
    boxes: list[BoundingBox], image_height: int, y_max_ratio: float
) -> tuple[list[BoundingBox], list[BoundingBox]]:
    """Keep boxes starting above y_max_ratio * image_height."""
    if not 0.0 < y_max_ratio <= 1.0:
        raise ValueError(f"y_max_ratio must be in (0, 1], got {y_max_ratio}")
    limit = y_max_ratio * image_height
    kept = [b for b in boxes if b.y < limit]
    dropped = [b for b in boxes if b.y >= limit]
    return kept, dropped


def count_check(
    boxes: list[BoundingBox],
    n: float = 1.2,
    dimension: str = WIDTH,
    expected: tuple[int, int] = EXPECTED_COUNT_RANGE,
) -> list[str]:
    """User-facing plausibility warnings over the final box set."""
    warnings: list[str] = []
    if not boxes:
        warnings.append("no core detected: mask produced no bounding boxes")
        return warnings
    lo, hi = expected
    if not lo <= len(boxes) <= hi:
        warnings.append(
            f"box count {len(boxes)} outside the expected {lo}..{hi} range; check the mask"
        )
    mu = statistics.median(b.size(dimension) for b in boxes)
    for b in boxes:
        size = b.size(dimension)
        if not mu / n <= size <= mu * n:
            warnings.append(
                f"box at ({b.x}, {b.y}) has {dimension} {size} far from the median {mu:g}; "
                "check the mask"
            )
    return warnings


def extract_columns(image: np.ndarray, kept: list[BoundingBox]) -> list[ColumnCrop]:
    """Axis-aligned crops of the kept boxes, indexed in box order."""
    h, w = image.shape[:2]
    crops = []
    for index, box in enumerate(kept):
        if box.x < 0 or box.y < 0 or box.right > w or box.bottom > h:
            raise BoxOutOfBounds(f"box {box} exceeds image bounds {w}x{h}")
        crops.append(
            ColumnCrop(index=index, box=box, image=image[box.y : box.bottom, box.x : box.right].copy())
        )
    return crops


def resolve_class_value(labels: LabelMap, class_name: str | None) -> int:
    """The grey value to extract: the named class, or the obvious default.

    Default is the single registered class, or "core_column" when several
    exist.
    """
    if class_name is not None:
        return labels.value_of(class_name)
    if len(labels.entries) == 1:
        return next(iter(labels.entries.values()))
    if "core_column" in labels.entries:
        return labels.entries["core_column"]
    raise ValueError(
        f"label map has {len(labels.entries)} classes; pass class_name to pick one"
    )


def run_pipeline(
    image: np.ndarray,
    mask: np.ndarray,
    labels: LabelMap,
    config: FilterConfig | None = None,
    class_name: str | None = None,
) -> tuple[ExtractionReport, list[ColumnCrop]]:
    """Detect, filter, warn and crop in one pass.

    Filter order: position cut, median band (per configured dimension),
    global width floor, then the count check. Every dropped box is recorded
    with exactly one rejecting filter and its thresholds.
    """
    if image.shape[:2] != mask.shape:
        raise DimensionMismatch(f"image {image.shape[:2]} vs mask {mask.shape}")
    config = config or FilterConfig()
    value = resolve_class_value(labels, class_name)
    height, width = mask.shape

    report = ExtractionReport()
    boxes = boxes_from_mask(mask, value)

    if config.y_max_ratio < 1.0 and boxes:
        boxes, dropped = position_filter(boxes, height, config.y_max_ratio)
        limit = config.y_max_ratio * height
        report.dropped += [
            DroppedBox(box=b, filter="position", thresholds={"y_max": limit}) for b in dropped
        ]

    if config.median_filter and boxes:
        for dimension in config.dimensions:
            if not boxes:
                break
            report.medians[dimension] = statistics.median(b.size(dimension) for b in boxes)
            boxes, dropped, xt_bot, xt_up = median_size_filter(boxes, config.n, dimension)
            report.dropped += [
                DroppedBox(
                    box=b,
                    filter=f"median_{dimension}",
                    thresholds={"xt_bot": xt_bot, "xt_up": xt_up},
                )
                for b in dropped
            ]

    if config.width_filter and boxes:
        boxes, dropped, gt = global_width_filter(boxes, width, config.m)
        report.gt = gt
        report.dropped += [
            DroppedBox(box=b, filter="global_width", thresholds={"gt": gt}) for b in dropped
        ]

    report.kept = boxes
    report.warnings = count_check(
        boxes, n=config.n, dimension=config.dimensions[0], expected=config.expected_count
    )
    return report, extract_columns(image, boxes)
