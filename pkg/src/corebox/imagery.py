"""Raster I/O, label maps and preprocessing.

Images are numpy arrays throughout: RGB photographs are ``(H, W, 3) uint8``,
grey masks are ``(H, W) uint8``, normalized images are float32 in [0, 1].
Every loader validates its input and raises a typed error on bad data; all
returned arrays are fresh (callers may mutate them freely).
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DecodeError,
    DuplicateValue,
    EmptyDataset,
    InvalidTarget,
    LabelMapParseError,
    UnknownLabelValue,
    ValueOutOfRange,
)

# Semantic aliases; everything is a plain ndarray at runtime.
RasterImage = np.ndarray  # (H, W, 3) uint8
GrayMask = np.ndarray  # (H, W) uint8
NormalizedImage = np.ndarray  # (H, W, 3) float32 in [0, 1]

BACKGROUND = 0

RASTER_SUFFIXES = {".png", ".jpg", ".jpeg", ".tif", ".tiff"}


@dataclass(frozen=True)
class LabelMap:
    """Binding of class names to mask grey values. Background is always 0."""

    entries: dict[str, int]

    def __post_init__(self):
        if not self.entries:
            raise LabelMapParseError("label map must define at least one class")
        values = list(self.entries.values())
        if len(set(values)) != len(values):
            raise DuplicateValue(f"duplicate grey values in label map: {sorted(values)}")
        for name, value in self.entries.items():
            if not isinstance(value, int) or isinstance(value, bool):
                raise LabelMapParseError(f"grey value for {name!r} is not an integer")
            if not 1 <= value <= 255:
                raise ValueOutOfRange(f"grey value {value} for {name!r} outside 1..255")

    @property
    def valid_values(self) -> frozenset[int]:
        """All grey values a mask may contain, background included."""
        return frozenset(self.entries.values()) | {BACKGROUND}

    def value_of(self, name: str) -> int:
        return self.entries[name]

    def classes(self) -> list[tuple[str, int]]:
        """(name, value) pairs in ascending grey-value order."""
        return sorted(self.entries.items(), key=lambda kv: kv[1])

    def to_json(self) -> str:
        return json.dumps({"labels": dict(self.entries)}, indent=2)


@dataclass(frozen=True)
class DatasetEntry:
    """One paired image/mask file, keyed by shared filename stem."""

    stem: str
    image_path: Path
    mask_path: Path


def _open_raster(source) -> Image.Image:
    """Open and fully decode a raster from a path or bytes, mapping PIL failures."""
    try:
        if isinstance(source, (bytes, bytearray)):
            img = Image.open(io.BytesIO(source))
        else:
            img = Image.open(source)
        img.load()
        return img
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode raster: {exc}") from exc


def load_image(path) -> RasterImage:
    """Load an RGB photograph.

    Grayscale sources are expanded to three identical channels; palette and
    alpha images are converted to plain RGB.

    Raises:
        FileNotFoundError: missing file.
        DecodeError: corrupt or unsupported raster.
    """
    img = _open_raster(path)
    return decode_image_pil(img)


def decode_image(data: bytes) -> RasterImage:
    """Decode an RGB photograph from in-memory bytes (see load_image)."""
    return decode_image_pil(_open_raster(data))


def decode_image_pil(img: Image.Image) -> RasterImage:
    if img.mode != "RGB":
        img = img.convert("RGB")
    arr = np.asarray(img, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DecodeError(f"unexpected image shape {arr.shape}")
    return arr.copy()


def load_mask(path, labels: LabelMap) -> GrayMask:
    """Load a grey mask and validate every pixel value against the label map.

    Accepts true single-channel rasters or multi-channel rasters whose
    channels are identical (collapsed to one channel).

    Raises:
        FileNotFoundError: missing file.
        DecodeError: undecodable file, or a colour raster that is not
            collapsible to a single channel.
        UnknownLabelValue: a pixel value is neither 0 nor a registered class.
    """
    return _validate_mask(decode_gray(_open_raster(path)), labels)


def decode_mask(data: bytes, labels: LabelMap) -> GrayMask:
    """Decode and validate a grey mask from in-memory bytes (see load_mask)."""
    return _validate_mask(decode_gray(_open_raster(data)), labels)


def decode_gray(img: Image.Image) -> GrayMask:
    """Collapse a PIL image to a single uint8 channel without inventing values."""
    if img.mode == "L":
        return np.asarray(img, dtype=np.uint8).copy()
    if img.mode == "1":
        return (np.asarray(img, dtype=np.uint8) * 255).copy()
    rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    if not (np.array_equal(rgb[..., 0], rgb[..., 1]) and np.array_equal(rgb[..., 0], rgb[..., 2])):
        raise DecodeError("mask raster has differing colour channels; not collapsible")
    return rgb[..., 0].copy()


def _validate_mask(mask: GrayMask, labels: LabelMap) -> GrayMask:
    present = np.unique(mask)
    allowed = labels.valid_values
    for value in present:
        if int(value) not in allowed:
            raise UnknownLabelValue(int(value))
    return mask


def save_image(image: RasterImage, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(path)


def save_mask(mask: GrayMask, path) -> None:
    """Write a mask as 8-bit grayscale PNG (bitwise round trip with load_mask)."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(mask, dtype=np.uint8), mode="L").save(path, format="PNG")


def encode_image_png(image: RasterImage) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def encode_mask_png(mask: GrayMask) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(mask, dtype=np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def load_label_map(path) -> LabelMap:
    """Load a label map from JSON: an object with a top-level "labels" key.

    Class names are whitespace-trimmed on load. Values must be unique
    integers in 1..255.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise LabelMapParseError(f"label map is not valid JSON: {exc}") from exc
    return parse_label_map(doc)


def parse_label_map(doc) -> LabelMap:
    if not isinstance(doc, dict) or "labels" not in doc:
        raise LabelMapParseError('label map JSON must be an object with a "labels" key')
    raw = doc["labels"]
    if not isinstance(raw, dict):
        raise LabelMapParseError('"labels" must map class names to grey values')
    entries: dict[str, int] = {}
    for name, value in raw.items():
        trimmed = str(name).strip()
        if not trimmed:
            raise LabelMapParseError("class name is empty after trimming")
        if trimmed in entries:
            raise LabelMapParseError(f"class {trimmed!r} defined twice")
        if isinstance(value, bool) or not isinstance(value, int):
            raise LabelMapParseError(f"grey value for {trimmed!r} is not an integer")
        entries[trimmed] = value
    return LabelMap(entries)


def resize(raster: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Resample a raster to ``size=(width, height)``.

    RGB images use bilinear interpolation; 2-D masks use nearest-neighbour so
    no new grey values appear. Resizing to the current size returns an
    unchanged copy.
    """
    width, height = int(size[0]), int(size[1])
    if width < 1 or height < 1:
        raise InvalidTarget(f"resize target {width}x{height} below 1x1")
    arr = np.asarray(raster)
    if arr.shape[1] == width and arr.shape[0] == height:
        return arr.copy()
    if arr.ndim == 3:
        img = Image.fromarray(np.ascontiguousarray(arr, dtype=np.uint8), mode="RGB")
        out = img.resize((width, height), Image.Resampling.BILINEAR)
    elif arr.ndim == 2:
        img = Image.fromarray(np.ascontiguousarray(arr, dtype=np.uint8), mode="L")
        out = img.resize((width, height), Image.Resampling.NEAREST)
    else:
        raise InvalidTarget(f"cannot resize raster of shape {arr.shape}")
    return np.asarray(out, dtype=np.uint8).copy()


def min_max_normalize(image: RasterImage) -> NormalizedImage:
    """Per-image min-max normalization to [0, 1]; a constant image maps to zeros."""
    arr = np.asarray(image, dtype=np.float32)
    lo = float(arr.min())
    hi = float(arr.max())
    if hi == lo:
        return np.zeros_like(arr, dtype=np.float32)
    return (arr - lo) / (hi - lo)


def _index_rasters(directory: Path) -> dict[str, Path]:
    found: dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        if path.is_file() and path.suffix.lower() in RASTER_SUFFIXES:
            found.setdefault(path.stem, path)
    return found


def _raster_size(path: Path) -> tuple[int, int]:
    with Image.open(path) as img:
        return img.size  # (width, height), header read only


def validate_dataset(
    image_dir, mask_dir, labels: LabelMap
) -> tuple[list[DatasetEntry], list[str]]:
    """Pair images with masks by filename stem.

    Unmatched files and pairs with unequal dimensions are excluded and
    reported as warnings. Raises EmptyDataset when nothing valid remains.
    """
    image_dir = Path(image_dir)
    mask_dir = Path(mask_dir)
    if not image_dir.is_dir():
        raise EmptyDataset(f"image directory not found: {image_dir}")
    if not mask_dir.is_dir():
        raise EmptyDataset(f"mask directory not found: {mask_dir}")

    images = _index_rasters(image_dir)
    masks = _index_rasters(mask_dir)
    entries: list[DatasetEntry] = []
    warnings: list[str] = []

    for stem in sorted(images):
        if stem not in masks:
            warnings.append(f"image {images[stem].name} has no matching mask; skipped")
            continue
        try:
            if _raster_size(images[stem]) != _raster_size(masks[stem]):
                warnings.append(f"pair {stem}: image and mask dimensions differ; skipped")
                continue
        except (UnidentifiedImageError, OSError) as exc:
            warnings.append(f"pair {stem}: unreadable raster ({exc}); skipped")
            continue
        entries.append(DatasetEntry(stem=stem, image_path=images[stem], mask_path=masks[stem]))
    for stem in sorted(set(masks) - set(images)):
        warnings.append(f"mask {masks[stem].name} has no matching image; skipped")

    if not entries:
        raise EmptyDataset(f"no valid image/mask pairs under {image_dir} and {mask_dir}")
    return entries, warnings
