"""Synthetic core-box fixtures.

Generates small but realistic-looking box photographs (wooden box, a few
horizontal core columns with rocky texture) together with exact masks, a
label map and a sample pool. Used by the test suite and by
scripts/make_toy_dataset.py to build a runnable demo dataset; everything is
deterministic in the seed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .imagery import LabelMap, save_image, save_mask

CORE_CLASS = "core_column"
CORE_VALUE = 255

TOY_LABELS = LabelMap({CORE_CLASS: CORE_VALUE})


def texture(
    rng: np.random.Generator,
    width: int,
    height: int,
    base: tuple[int, int, int],
    noise: float = 14.0,
) -> np.ndarray:
    """A flat colour with speckle noise; enough structure to tell crops apart."""
    img = np.empty((height, width, 3), dtype=np.float64)
    img[:] = base
    img += rng.normal(0.0, noise, size=img.shape)
    # low-frequency horizontal banding, like bedding in a core photograph
    rows = 12.0 * np.sin(np.linspace(0, 6 * np.pi, height) + rng.uniform(0, np.pi))
    img += rows[:, None, None]
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def make_box_pair(
    rng: np.random.Generator,
    width: int = 320,
    height: int = 240,
    columns: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One synthetic box photo and its exact mask (core rows = 255)."""
    if columns is None:
        columns = int(rng.integers(3, 6))
    image = texture(rng, width, height, base=(120, 85, 50), noise=10.0)  # wooden box
    mask = np.zeros((height, width), dtype=np.uint8)

    slot_h = height // columns
    for row in range(columns):
        bar_h = max(4, int(slot_h * rng.uniform(0.5, 0.75)))
        y = row * slot_h + (slot_h - bar_h) // 2
        inset = int(width * rng.uniform(0.02, 0.06))
        x0, x1 = inset, width - inset
        # occasionally a short column, as when core was removed for tests
        if rng.random() < 0.25:
            x1 = x0 + int((x1 - x0) * rng.uniform(0.55, 0.85))
        grey = int(rng.integers(130, 190))
        core = texture(rng, x1 - x0, bar_h, base=(grey, grey - 10, grey - 25), noise=16.0)
        image[y : y + bar_h, x0:x1] = core
        mask[y : y + bar_h, x0:x1] = CORE_VALUE
    return image, mask


def make_toy_dataset(
    root,
    count: int = 5,
    seed: int = 0,
    width: int = 320,
    height: int = 240,
) -> dict:
    """Write a complete toy dataset and pool under ``root``.

    Layout: images/, masks/, labels.json, pool/foreground/core_column/,
    pool/background/. One image carries a depth-referenced filename so the
    filename-parsing path can be exercised.
    """
    root = Path(root)
    rng = np.random.default_rng(seed)
    image_dir = root / "images"
    mask_dir = root / "masks"
    fg_dir = root / "pool" / "foreground" / CORE_CLASS
    bg_dir = root / "pool" / "background"
    for d in (image_dir, mask_dir, fg_dir, bg_dir):
        d.mkdir(parents=True, exist_ok=True)

    stems = []
    for i in range(count):
        image, mask = make_box_pair(rng, width=width, height=height)
        stem = f"box_{i:02d}"
        if i == count - 1:
            stem = f"box_{i:02d}_1200.0-1201.0m"  # depth-in-filename example
        save_image(image, image_dir / f"{stem}.png")
        save_mask(mask, mask_dir / f"{stem}.png")
        stems.append(stem)

    for i in range(4):
        grey = int(rng.integers(120, 200))
        sample = texture(rng, width, height // 3, base=(grey, grey - 15, grey - 30), noise=20.0)
        save_image(sample, fg_dir / f"core_{i:02d}.png")
    for i, base in enumerate([(96, 120, 70), (150, 140, 130), (80, 70, 60)]):
        sample = texture(rng, int(width * 1.4), int(height * 1.4), base=base, noise=12.0)
        save_image(sample, bg_dir / f"ground_{i:02d}.png")

    labels_path = root / "labels.json"
    labels_path.write_text(TOY_LABELS.to_json(), encoding="utf-8")
    return {
        "root": root,
        "image_dir": image_dir,
        "mask_dir": mask_dir,
        "labels": labels_path,
        "pool": root / "pool",
        "stems": stems,
    }
