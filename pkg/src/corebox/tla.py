"""Template-like augmentation: synthesize new (image, mask) training pairs.

Segments picked out by the mask are swapped for pooled foreground textures,
backgrounds are composited over or under the pair, individual segments can be
cut out or mixed up, and the usual geometric/photometric augmentations run
last. Every operation is a hard-edged stencil paste: pixels outside the
stencil are bitwise untouched, and the mask only ever changes where a cut-out
removes a segment.

All randomness flows through a seeded numpy Generator (SFC64, picked for its
bulk-fill throughput), so a full augmentation is a pure function of
(inputs, seed); dataset-level runs derive one stream per output (seed + i)
and record everything in a JSON manifest.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import special

from .errors import DimensionMismatch, EmptyPool, EmptySample, SameSegment
from .imagery import (
    BACKGROUND,
    RASTER_SUFFIXES,
    DatasetEntry,
    LabelMap,
    load_image,
    load_mask,
    resize,
    save_image,
    save_mask,
)
from .segments import Segment, connected_components

__all__ = [
    "AugmentationConfig",
    "AugmentedPair",
    "ClassicSettings",
    "PoolSample",
    "SamplePool",
    "GENERATOR_NAME",
    "apply_background_bottom",
    "apply_background_top",
    "augment",
    "augment_dataset",
    "classic_augment",
    "connected_components",
    "cutout_segment",
    "load_pool",
    "mixup_segments",
    "swap_foreground",
]

# Recorded in manifests so a rerun can verify it uses the same stream family.
GENERATOR_NAME = "numpy.random.SFC64"

FOREGROUND_DIR = "foreground"
BACKGROUND_DIR = "background"


@dataclass(frozen=True)
class PoolSample:
    name: str
    image: np.ndarray  # (H, W, 3) uint8


@dataclass
class SamplePool:
    """Replacement material: per-class foreground textures plus backgrounds."""

    foregrounds: dict[str, list[PoolSample]] = field(default_factory=dict)
    backgrounds: list[PoolSample] = field(default_factory=list)

    def pick_foreground(self, class_name: str, rng: np.random.Generator) -> PoolSample:
        samples = self.foregrounds.get(class_name)
        if not samples:
            raise EmptyPool(f"no foreground samples for class {class_name!r}")
        return samples[int(rng.integers(0, len(samples)))]

    def pick_background(self, rng: np.random.Generator) -> PoolSample:
        if not self.backgrounds:
            raise EmptyPool("no background samples in pool")
        return self.backgrounds[int(rng.integers(0, len(self.backgrounds)))]


@dataclass(frozen=True)
class ClassicSettings:
    """Classic augmentations applied after the template operations.

    ``rotations`` are counterclockwise degrees; one is drawn uniformly when
    the tuple is non-empty (include 0.0 for a no-rotation chance). Multiples
    of 90 rotate exactly, other angles use bilinear (image) and
    nearest-neighbour (mask) resampling. Noise and jitter touch the image
    only.
    """

    flip_p: float = 0.0
    rotations: tuple[float, ...] = ()
    noise_sigma: float = 0.0
    jitter: float = 0.0
    resize_to: tuple[int, int] | None = None

    def __post_init__(self):
        if not 0.0 <= self.flip_p <= 1.0:
            raise ValueError(f"flip_p must be in [0, 1], got {self.flip_p}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not 0.0 <= self.jitter < 1.0:
            raise ValueError(f"jitter must be in [0, 1), got {self.jitter}")


@dataclass(frozen=True)
class AugmentationConfig:
    """Probabilities and settings driving one augmentation run.

    Defaults are all-off: every probability 0, seed 0.
    """

    foreground_p: dict[str, float] = field(default_factory=dict)
    background_top_p: float = 0.0
    background_bottom_p: float = 0.0
    cutout_p: float = 0.0
    mixup_p: float = 0.0
    classic: ClassicSettings = field(default_factory=ClassicSettings)
    seed: int = 0

    def __post_init__(self):
        probs = dict(self.foreground_p)
        probs.update(
            top=self.background_top_p,
            bottom=self.background_bottom_p,
            cutout=self.cutout_p,
            mixup=self.mixup_p,
        )
        for key, p in probs.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {key!r} must be in [0, 1], got {p}")

    def to_dict(self) -> dict:
        return {
            "foreground_p": dict(self.foreground_p),
            "background_top_p": self.background_top_p,
            "background_bottom_p": self.background_bottom_p,
            "cutout_p": self.cutout_p,
            "mixup_p": self.mixup_p,
            "classic": {
                "flip_p": self.classic.flip_p,
                "rotations": list(self.classic.rotations),
                "noise_sigma": self.classic.noise_sigma,
                "jitter": self.classic.jitter,
                "resize_to": list(self.classic.resize_to) if self.classic.resize_to else None,
            },
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AugmentationConfig":
        known = {
            "foreground_p",
            "background_top_p",
            "background_bottom_p",
            "cutout_p",
            "mixup_p",
            "classic",
            "seed",
        }
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown augmentation config keys: {sorted(unknown)}")
        classic_doc = dict(doc.get("classic") or {})
        unknown = set(classic_doc) - {"flip_p", "rotations", "noise_sigma", "jitter", "resize_to"}
        if unknown:
            raise ValueError(f"unknown classic settings keys: {sorted(unknown)}")
        resize_to = classic_doc.get("resize_to")
        classic = ClassicSettings(
            flip_p=float(classic_doc.get("flip_p", 0.0)),
            rotations=tuple(float(a) for a in classic_doc.get("rotations", ())),
            noise_sigma=float(classic_doc.get("noise_sigma", 0.0)),
            jitter=float(classic_doc.get("jitter", 0.0)),
            resize_to=(int(resize_to[0]), int(resize_to[1])) if resize_to else None,
        )
        return cls(
            foreground_p={str(k): float(v) for k, v in dict(doc.get("foreground_p", {})).items()},
            background_top_p=float(doc.get("background_top_p", 0.0)),
            background_bottom_p=float(doc.get("background_bottom_p", 0.0)),
            cutout_p=float(doc.get("cutout_p", 0.0)),
            mixup_p=float(doc.get("mixup_p", 0.0)),
            classic=classic,
            seed=int(doc.get("seed", 0)),
        )

    @classmethod
    def from_json_file(cls, path) -> "AugmentationConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class AugmentedPair:
    """An (image, mask) pair plus the provenance of how it was produced."""

    image: np.ndarray
    mask: np.ndarray
    log: list[dict] = field(default_factory=list)

    def __post_init__(self):
        _check_pair(self.image, self.mask)


def _check_pair(image: np.ndarray, mask: np.ndarray) -> None:
    if image.ndim != 3 or image.shape[2] != 3:
        raise DimensionMismatch(f"image must be (H, W, 3), got {image.shape}")
    if mask.ndim != 2:
        raise DimensionMismatch(f"mask must be (H, W), got {mask.shape}")
    if image.shape[:2] != mask.shape:
        raise DimensionMismatch(f"image {image.shape[:2]} vs mask {mask.shape}")


def load_pool(root, labels: LabelMap) -> tuple[SamplePool, list[str]]:
    """Index a pool directory: ``<root>/foreground/<class>/*`` and ``<root>/background/*``.

    Foreground folders whose name matches no class in the label map are
    skipped with a warning, as are undecodable files. Raises EmptyPool when
    neither subtree yields a single sample.
    """
    root = Path(root)
    warnings: list[str] = []
    pool = SamplePool()

    fg_root = root / FOREGROUND_DIR
    if fg_root.is_dir():
        for class_dir in sorted(p for p in fg_root.iterdir() if p.is_dir()):
            name = class_dir.name
            if name not in labels.entries:
                warnings.append(f"foreground folder {name!r} matches no class; skipped")
                continue
            samples = _load_samples(class_dir, warnings)
            if samples:
                pool.foregrounds[name] = samples

    bg_root = root / BACKGROUND_DIR
    if bg_root.is_dir():
        pool.backgrounds = _load_samples(bg_root, warnings)

    if not pool.foregrounds and not pool.backgrounds:
        raise EmptyPool(f"no usable samples under {root}")
    return pool, warnings


def _load_samples(directory: Path, warnings: list[str]) -> list[PoolSample]:
    samples = []
    for path in sorted(directory.iterdir()):
        if not (path.is_file() and path.suffix.lower() in RASTER_SUFFIXES):
            continue
        try:
            samples.append(PoolSample(name=path.name, image=load_image(path)))
        except Exception as exc:
            warnings.append(f"pool sample {path.name}: {exc}; skipped")
    return samples


def _fit_crop(sample: np.ndarray, w: int, h: int, rng: np.random.Generator | None) -> np.ndarray:
    """A w x h crop of the sample; undersized samples are upscaled to cover first.

    The crop position is drawn from ``rng``, or centered when rng is None.
    Upscaling resamples only the window that survives the crop, so a large
    target never materializes the whole scaled sample.
    """
    from PIL import Image as PILImage

    sample = np.asarray(sample)
    if sample.ndim != 3 or sample.shape[2] != 3 or sample.shape[0] < 1 or sample.shape[1] < 1:
        raise EmptySample(f"sample must be a non-empty RGB raster, got shape {sample.shape}")
    sh, sw = sample.shape[:2]
    if sw >= w and sh >= h:
        if rng is None:
            ox, oy = (sw - w) // 2, (sh - h) // 2
        else:
            ox = int(rng.integers(0, sw - w + 1))
            oy = int(rng.integers(0, sh - h + 1))
        return sample[oy : oy + h, ox : ox + w]
    scale = max(w / sw, h / sh)
    rw = max(w, math.ceil(sw * scale))
    rh = max(h, math.ceil(sh * scale))
    if rng is None:
        ox, oy = (rw - w) // 2, (rh - h) // 2
    else:
        ox = int(rng.integers(0, rw - w + 1))
        oy = int(rng.integers(0, rh - h + 1))
    img = PILImage.fromarray(np.ascontiguousarray(sample, dtype=np.uint8), mode="RGB")
    box = (ox * sw / rw, oy * sh / rh, (ox + w) * sw / rw, (oy + h) * sh / rh)
    out = img.resize((w, h), PILImage.Resampling.BILINEAR, box=box)
    return np.asarray(out, dtype=np.uint8)


def _swap_into(
    image: np.ndarray,
    mask: np.ndarray,
    segment: Segment,
    sample: np.ndarray,
    rng: np.random.Generator | None,
) -> None:
    x, y, w, h = segment.bbox
    crop = _fit_crop(sample, w, h, rng)
    region = image[y : y + h, x : x + w]
    stencil = mask[y : y + h, x : x + w] == segment.value
    np.copyto(region, crop, where=stencil[:, :, None])


def swap_foreground(
    image: np.ndarray,
    mask: np.ndarray,
    segment: Segment,
    sample: np.ndarray,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Replace a segment's texture with a crop of a pooled sample.

    The crop is sized to the segment's bounding box and pasted only where the
    mask equals the segment's class value inside that box; every other pixel
    and the mask itself are untouched.
    """
    _check_pair(image, mask)
    out = image.copy()
    _swap_into(out, mask, segment, sample, rng)
    return out


def _background_top_into(
    image: np.ndarray,
    mask: np.ndarray,
    sample: np.ndarray,
    rng: np.random.Generator | None,
) -> None:
    h, w = image.shape[:2]
    crop = _fit_crop(sample, w, h, rng)
    stencil = mask == BACKGROUND
    np.copyto(image, crop, where=stencil[:, :, None])


def apply_background_top(
    image: np.ndarray,
    mask: np.ndarray,
    sample: np.ndarray,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Composite a background sample over every background (mask == 0) pixel."""
    _check_pair(image, mask)
    out = image.copy()
    _background_top_into(out, mask, sample, rng)
    return out


def apply_background_bottom(
    image: np.ndarray,
    mask: np.ndarray,
    sample: np.ndarray,
    rng: np.random.Generator | None = None,
    scale: float | None = None,
    offset: tuple[int, int] | None = None,
) -> AugmentedPair:
    """Paste the whole pair onto a larger background canvas (box on the ground).

    The canvas is the sample resized to ``scale`` times the image size (scale
    drawn uniformly from [1.0, 1.5] when not given) and the pair lands at a
    random offset. The new mask is background everywhere except the pasted
    region, which keeps the old mask; class-pixel counts are preserved.
    """
    _check_pair(image, mask)
    h, w = image.shape[:2]
    if scale is None:
        scale = float(rng.uniform(1.0, 1.5)) if rng is not None else 1.0
    if scale < 1.0:
        raise ValueError(f"canvas scale must be >= 1.0, got {scale}")
    cw, ch = int(round(w * scale)), int(round(h * scale))
    if np.asarray(sample).ndim != 3:
        raise EmptySample(f"sample must be RGB, got shape {np.asarray(sample).shape}")
    canvas = resize(np.asarray(sample), (cw, ch))
    if offset is None:
        if rng is None:
            ox, oy = (cw - w) // 2, (ch - h) // 2
        else:
            ox = int(rng.integers(0, cw - w + 1))
            oy = int(rng.integers(0, ch - h + 1))
    else:
        ox, oy = int(offset[0]), int(offset[1])
        if not (0 <= ox <= cw - w and 0 <= oy <= ch - h):
            raise ValueError(f"offset {offset} puts the pair outside the {cw}x{ch} canvas")
    canvas[oy : oy + h, ox : ox + w] = image
    new_mask = np.zeros((ch, cw), dtype=np.uint8)
    new_mask[oy : oy + h, ox : ox + w] = mask
    record = {"op": "background_bottom", "scale": scale, "offset": [ox, oy]}
    return AugmentedPair(image=canvas, mask=new_mask, log=[record])


def _cutout_into(
    image: np.ndarray,
    mask: np.ndarray,
    segment: Segment,
    sample: np.ndarray,
    rng: np.random.Generator | None,
) -> None:
    x, y, w, h = segment.bbox
    crop = _fit_crop(sample, w, h, rng)
    np.copyto(image[y : y + h, x : x + w], crop, where=segment.stencil[:, :, None])
    np.copyto(mask[y : y + h, x : x + w], np.uint8(BACKGROUND), where=segment.stencil)


def cutout_segment(
    image: np.ndarray,
    mask: np.ndarray,
    segment: Segment,
    sample: np.ndarray,
    rng: np.random.Generator | None = None,
) -> AugmentedPair:
    """Remove a segment: background texture over its pixels, mask zeroed there.

    Only the segment's own component pixels change; other segments whose
    boxes overlap are untouched.
    """
    _check_pair(image, mask)
    out_image = image.copy()
    out_mask = mask.copy()
    _cutout_into(out_image, out_mask, segment, sample, rng)
    record = {"op": "cutout", "bbox": list(segment.bbox)}
    return AugmentedPair(image=out_image, mask=out_mask, log=[record])


def mixup_segments(
    image: np.ndarray,
    mask: np.ndarray,
    seg_a: Segment,
    seg_b: Segment,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Exchange the textures of two same-class segments; the mask is unchanged.

    Each segment's stencil receives the other segment's bounding-box content,
    bilinearly resized to fit.
    """
    _check_pair(image, mask)
    if seg_a.value != seg_b.value:
        raise ValueError("mix-up requires two segments of the same class")
    if (
        seg_a is seg_b
        or (seg_a.bbox == seg_b.bbox and np.array_equal(seg_a.stencil, seg_b.stencil))
    ):
        raise SameSegment("mix-up requires two distinct segments")
    out = image.copy()
    _mixup_into(out, seg_a, seg_b)
    return out


def _mixup_into(image: np.ndarray, seg_a: Segment, seg_b: Segment) -> None:
    ax, ay, aw, ah = seg_a.bbox
    bx, by, bw, bh = seg_b.bbox
    content_a = image[ay : ay + ah, ax : ax + aw].copy()
    content_b = image[by : by + bh, bx : bx + bw].copy()
    b_for_a = resize(content_b, (aw, ah))
    a_for_b = resize(content_a, (bw, bh))
    np.copyto(image[ay : ay + ah, ax : ax + aw], b_for_a, where=seg_a.stencil[:, :, None])
    np.copyto(image[by : by + bh, bx : bx + bw], a_for_b, where=seg_b.stencil[:, :, None])


def _rotate_pair(
    image: np.ndarray, mask: np.ndarray, angle: float
) -> tuple[np.ndarray, np.ndarray]:
    """Rotate counterclockwise; 90-degree multiples are exact coordinate maps.

    Right-angle results come back as views; callers materialize when needed.
    """
    from PIL import Image as PILImage

    a = angle % 360.0
    if a == 0.0:
        return image, mask
    if a % 90.0 == 0.0:
        k = int(a // 90)
        return np.rot90(image, k), np.rot90(mask, k)
    img = PILImage.fromarray(np.ascontiguousarray(image), mode="RGB").rotate(
        angle, resample=PILImage.Resampling.BILINEAR, expand=False, fillcolor=(0, 0, 0)
    )
    msk = PILImage.fromarray(np.ascontiguousarray(mask), mode="L").rotate(
        angle, resample=PILImage.Resampling.NEAREST, expand=False, fillcolor=0
    )
    return np.asarray(img, dtype=np.uint8).copy(), np.asarray(msk, dtype=np.uint8).copy()


_DIHEDRAL_MEMO: dict[tuple[bool, bool, int], object] = {}


def _net_dihedral(flip_h: bool, flip_v: bool, k: int):
    """PIL transpose op equal to hflip/vflip followed by k quarter-turns."""
    from PIL import Image as PILImage

    key = (flip_h, flip_v, k % 4)
    if key in _DIHEDRAL_MEMO:
        return _DIHEDRAL_MEMO[key]
    marker = np.arange(6, dtype=np.uint8).reshape(2, 3)
    rows = slice(None, None, -1) if flip_v else slice(None)
    cols = slice(None, None, -1) if flip_h else slice(None)
    want = np.rot90(marker[rows, cols], k)
    found = None
    if np.array_equal(marker, want):
        found = "identity"
    else:
        pil_marker = PILImage.fromarray(marker, mode="L")
        for op in PILImage.Transpose:
            got = np.asarray(pil_marker.transpose(op))
            if got.shape == want.shape and np.array_equal(got, want):
                found = op
                break
    if found is None:
        raise RuntimeError(f"no transpose matches flips={flip_h, flip_v} k={k}")
    _DIHEDRAL_MEMO[key] = found
    return found


def _blocked_copy(view: np.ndarray, tile: int = 256) -> np.ndarray:
    """Materialize a strided 2-D view tile by tile so reads stay in cache."""
    out = np.empty(view.shape, view.dtype)
    for i in range(0, view.shape[0], tile):
        for j in range(0, view.shape[1], tile):
            out[i : i + tile, j : j + tile] = view[i : i + tile, j : j + tile]
    return out


def _apply_dihedral(
    image: np.ndarray, mask: np.ndarray, flip_h: bool, flip_v: bool, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Apply the net flip/quarter-turn as one pass per array."""
    from PIL import Image as PILImage

    op = _net_dihedral(flip_h, flip_v, k)
    if op == "identity":
        return image, mask
    img = PILImage.fromarray(np.ascontiguousarray(image), mode="RGB").transpose(op)
    rows = slice(None, None, -1) if flip_v else slice(None)
    cols = slice(None, None, -1) if flip_h else slice(None)
    out_mask = _blocked_copy(np.rot90(mask[rows, cols], k))
    return np.asarray(img, dtype=np.uint8), out_mask


@lru_cache(maxsize=8)
def _noise_table(sigma: float) -> np.ndarray:
    """Integer noise offsets indexed by a uniform 16-bit draw.

    Entry ``u`` holds the rounded ``sigma``-scaled normal quantile at the
    midpoint of bucket ``u``, so a uniform uint16 maps to a zero-mean
    Gaussian offset quantised to integers. Pixel values are integers, so
    rounding the offset instead of the noisy sum gives the same output
    distribution, and a table lookup per pixel is several times cheaper
    than drawing normals. The quantile tails clip near 4.3 sigma.
    """
    bucket_mid = (np.arange(65536, dtype=np.float64) + 0.5) / 65536.0
    return np.rint(sigma * special.ndtri(bucket_mid)).astype(np.int16)


def _add_gaussian_noise(
    image: np.ndarray, sigma: float, rng: np.random.Generator, in_place: bool = False
) -> np.ndarray:
    """Additive zero-mean Gaussian noise, rounded and clipped back to uint8.

    Offsets come from ``_noise_table`` fed by raw generator bytes, processed
    in fixed-size int16 blocks so intermediates stay cache-resident.
    ``in_place`` writes through ``image``; each block is read out before its
    slot is overwritten.
    """
    table = _noise_table(float(sigma))
    out = image if in_place else np.empty_like(image)
    flat_in = image.reshape(-1)
    flat_out = out.reshape(-1)
    block = 1 << 20
    buf = np.empty(min(block, flat_in.size), dtype=np.int16)
    for start in range(0, flat_in.size, block):
        stop = min(start + block, flat_in.size)
        chunk = buf[: stop - start]
        draws = np.frombuffer(rng.bytes(2 * (stop - start)), dtype=np.uint16)
        np.take(table, draws, out=chunk)
        chunk += flat_in[start:stop]
        np.clip(chunk, 0, 255, out=chunk)
        flat_out[start:stop] = chunk
    return out


def classic_augment(
    pair: AugmentedPair, settings: ClassicSettings, rng: np.random.Generator
) -> AugmentedPair:
    """Flips, rotation, Gaussian noise, colour jitter and optional resize.

    Geometric transforms apply to image and mask alike; noise and jitter are
    image-only. With all-default settings the pair passes through unchanged.
    """
    image, mask = pair.image, pair.mask
    log = list(pair.log)
    flip_h = rng.random() < settings.flip_p
    flip_v = rng.random() < settings.flip_p
    if flip_h:
        log.append({"op": "hflip"})
    if flip_v:
        log.append({"op": "vflip"})
    angle = None
    if settings.rotations:
        angle = float(settings.rotations[int(rng.integers(0, len(settings.rotations)))])
        if angle % 360.0 != 0.0:
            log.append({"op": "rotate", "angle": angle})
    if angle is None or angle % 90.0 == 0.0:
        # flips plus any quarter-turn collapse into a single index remap
        quarter = int((angle or 0.0) % 360.0 // 90.0)
        if flip_h or flip_v or quarter:
            image, mask = _apply_dihedral(image, mask, flip_h, flip_v, quarter)
    else:
        if flip_h or flip_v:
            rows = slice(None, None, -1) if flip_v else slice(None)
            cols = slice(None, None, -1) if flip_h else slice(None)
            image, mask = image[rows, cols], mask[rows, cols]
        image, mask = _rotate_pair(image, mask, angle)
    image = np.ascontiguousarray(image)
    mask = np.ascontiguousarray(mask)
    if settings.noise_sigma > 0:
        owned = image is not pair.image and image.flags.writeable
        image = _add_gaussian_noise(image, settings.noise_sigma, rng, in_place=owned)
        log.append({"op": "gaussian_noise", "sigma": settings.noise_sigma})
    if settings.jitter > 0:
        factors = rng.uniform(1.0 - settings.jitter, 1.0 + settings.jitter, size=3)
        image = np.clip(np.rint(image.astype(np.float64) * factors), 0, 255).astype(np.uint8)
        log.append({"op": "color_jitter", "factors": [float(f) for f in factors]})
    if settings.resize_to is not None:
        image = resize(image, settings.resize_to)
        mask = resize(mask, settings.resize_to)
        log.append({"op": "resize", "to": list(settings.resize_to)})
    return AugmentedPair(image=image, mask=mask, log=log)


def augment(
    pair: AugmentedPair,
    pool: SamplePool,
    config: AugmentationConfig,
    labels: LabelMap,
    seed: int | None = None,
) -> AugmentedPair:
    """Run the full template-like augmentation flow on one pair.

    Per class (ascending grey value): each segment independently draws its
    foreground swap, then its cut-out; one mix-up draw per class exchanges a
    random surviving pair. Backgrounds follow (top overlay first, then the
    bottom-canvas paste), and the classic augmentations run last. Fully
    deterministic given the seed; the returned log records every applied
    transform with its sample names.
    """
    if seed is None:
        seed = config.seed
    rng = np.random.Generator(np.random.SFC64(seed))
    image = pair.image.copy()
    mask = pair.mask.copy()
    log: list[dict] = []

    for class_name, value in labels.classes():
        segs = connected_components(mask, value)
        p_swap = config.foreground_p.get(class_name, 0.0)
        for index, seg in enumerate(segs):
            if rng.random() < p_swap:
                sample = pool.pick_foreground(class_name, rng)
                _swap_into(image, mask, seg, sample.image, rng)
                log.append(
                    {
                        "op": "swap_foreground",
                        "class": class_name,
                        "segment": index,
                        "bbox": list(seg.bbox),
                        "sample": sample.name,
                    }
                )
        surviving: list[tuple[int, Segment]] = []
        for index, seg in enumerate(segs):
            if rng.random() < config.cutout_p:
                sample = pool.pick_background(rng)
                _cutout_into(image, mask, seg, sample.image, rng)
                log.append(
                    {
                        "op": "cutout",
                        "class": class_name,
                        "segment": index,
                        "bbox": list(seg.bbox),
                        "sample": sample.name,
                    }
                )
            else:
                surviving.append((index, seg))
        if rng.random() < config.mixup_p and len(surviving) >= 2:
            picked = rng.choice(len(surviving), size=2, replace=False)
            (ia, seg_a), (ib, seg_b) = surviving[int(picked[0])], surviving[int(picked[1])]
            _mixup_into(image, seg_a, seg_b)
            log.append({"op": "mixup", "class": class_name, "segments": [ia, ib]})

    if rng.random() < config.background_top_p:
        sample = pool.pick_background(rng)
        _background_top_into(image, mask, sample.image, rng)
        log.append({"op": "background_top", "sample": sample.name})
    if rng.random() < config.background_bottom_p:
        sample = pool.pick_background(rng)
        result = apply_background_bottom(image, mask, sample.image, rng)
        image, mask = result.image, result.mask
        log.append({**result.log[0], "sample": sample.name})

    return classic_augment(AugmentedPair(image=image, mask=mask, log=log), config.classic, rng)


def augment_dataset(
    entries: list[DatasetEntry],
    pool: SamplePool,
    config: AugmentationConfig,
    labels: LabelMap,
    count: int,
    out_image_dir,
    out_mask_dir,
    manifest_path=None,
    jobs: int = 1,
) -> dict:
    """Write ``count`` augmented pairs to disk plus a provenance manifest.

    Output ``i`` takes source entry ``i mod len(entries)`` and RNG stream
    ``seed + i``, so results are byte-identical across reruns and worker
    counts.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not entries:
        raise EmptyPool("no dataset entries to augment")
    out_image_dir = Path(out_image_dir)
    out_mask_dir = Path(out_mask_dir)
    out_image_dir.mkdir(parents=True, exist_ok=True)
    out_mask_dir.mkdir(parents=True, exist_ok=True)

    def produce(i: int) -> dict:
        entry = entries[i % len(entries)]
        source = AugmentedPair(
            image=load_image(entry.image_path),
            mask=load_mask(entry.mask_path, labels),
        )
        result = augment(source, pool, config, labels, seed=config.seed + i)
        name = f"aug_{i:05d}_{entry.stem}.png"
        save_image(result.image, out_image_dir / name)
        save_mask(result.mask, out_mask_dir / name)
        return {
            "output": name,
            "source": entry.stem,
            "seed": config.seed + i,
            "transforms": result.log,
        }

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool_exec:
            records = list(pool_exec.map(produce, range(count)))
    else:
        records = [produce(i) for i in range(count)]

    manifest = {
        "generator": GENERATOR_NAME,
        "seed": config.seed,
        "count": count,
        "config": config.to_dict(),
        "records": records,
    }
    if manifest_path is not None:
        manifest_path = Path(manifest_path)
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return manifest
