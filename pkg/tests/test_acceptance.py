"""Acceptance suite: one test per release criterion.

Every test here freezes independently computed expectations (hand-checked
reference rows, closed-form thresholds, brute-force oracles) and runs the
shipped implementation against them at a pinned tolerance. The conftest
summary hook prints one pass/fail line per criterion after the run.
"""

import io
import json
import math
import time
import zipfile

import numpy as np
import pytest
from fastapi.testclient import TestClient

from acceptance_report import criterion
from corebox import cli, depthref, extraction, metrics, tla
from corebox.imagery import (
    LabelMap,
    decode_image,
    encode_image_png,
    encode_mask_png,
)
from corebox.segments import connected_components
from corebox.service import create_app
from corebox.synth import make_box_pair
from oracles import components_oracle, confusion_oracle, f_beta_oracle

LABELS = LabelMap({"core_column": 255})

# Reference segmentation scores (precision, recall, reported f1, reported iou)
# from an external evaluation, used as a consistency fixture: our f_beta and
# the F1<->IoU identity must land within +-0.002 of every reported value.
# The matching reported F2 column is internally inconsistent with the written
# f-beta formula and is deliberately not part of this fixture (see the module
# docstring in corebox.metrics).
REFERENCE_ROWS = [
    (0.766, 0.976, 0.859, 0.752),
    (0.835, 0.637, 0.723, 0.566),
    (0.372, 0.993, 0.541, 0.371),
    (0.993, 0.286, 0.444, 0.285),
    (0.891, 0.955, 0.922, 0.855),
    (0.879, 0.933, 0.905, 0.827),
    (0.675, 0.992, 0.804, 0.672),
    (0.968, 0.992, 0.980, 0.960),
]


@criterion(1, "reference precision/recall rows reproduce F1 and IoU within 0.002")
def test_reference_rows_consistent():
    start = time.perf_counter()
    for p, r, f1_ref, iou_ref in REFERENCE_ROWS:
        f1 = metrics.f_beta(p, r, 1.0)
        assert abs(f1 - f1_ref) <= 0.002, (p, r, f1, f1_ref)
        iou = f1 / (2.0 - f1)
        assert abs(iou - iou_ref) <= 0.002, (p, r, iou, iou_ref)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    return f"8 rows, {elapsed * 1000:.1f} ms"


@criterion(2, "median band for median 430, n=1.2 is [358.33, 516.00] and filters accordingly")
def test_median_band_thresholds():
    widths = (400, 410, 430, 450, 470)  # median 430
    boxes = [extraction.BoundingBox(x=0, y=i, w=w, h=30) for i, w in enumerate(widths)]
    kept, dropped, xt_bot, xt_up = extraction.median_size_filter(boxes, 1.2)
    assert math.isclose(xt_bot, 430 / 1.2, rel_tol=0.0, abs_tol=1e-9)
    assert math.isclose(xt_up, 516.0, rel_tol=0.0, abs_tol=1e-9)
    assert round(xt_bot) == 358 and round(xt_up) == 516
    assert len(kept) == 5 and not dropped

    # ten boxes straddling the band: exactly the out-of-band ones drop
    ten = (100, 200, 358, 359, 430, 430, 440, 516, 517, 900)
    boxes = [extraction.BoundingBox(x=0, y=i, w=w, h=30) for i, w in enumerate(ten)]
    kept, dropped, xt_bot, xt_up = extraction.median_size_filter(boxes, 1.2)
    # median of the ten widths is again 430 -> same band, 516 inclusive
    assert math.isclose(xt_bot, 430 / 1.2, abs_tol=1e-9)
    assert math.isclose(xt_up, 516.0, abs_tol=1e-9)
    assert sorted(b.w for b in kept) == [359, 430, 430, 440, 516]
    assert sorted(b.w for b in dropped) == [100, 200, 358, 517, 900]
    return "thresholds exact to 1e-9"


@criterion(3, "global width floor for image width 4000, m=100 is exactly 40")
def test_global_width_floor():
    boxes = [extraction.BoundingBox(x=0, y=i, w=w, h=10) for i, w in enumerate((39, 40, 4000))]
    kept, dropped, gt = extraction.global_width_filter(boxes, 4000, 100.0)
    assert gt == 40.0
    assert [b.w for b in kept] == [40, 4000]
    assert [b.w for b in dropped] == [39]
    return "gt == 40.0"


@criterion(4, "confusion, metrics, components and boxes match brute-force oracles on 1000 masks")
def test_oracle_equivalence_bulk():
    rng = np.random.default_rng(1234)
    start = time.perf_counter()
    cases = 0
    for _ in range(500):
        h = int(rng.integers(1, 65))
        w = int(rng.integers(1, 65))
        density = float(rng.uniform(0.05, 0.95))
        pred = np.where(rng.random((h, w)) < density, 255, 0).astype(np.uint8)
        truth = np.where(rng.random((h, w)) < density, 255, 0).astype(np.uint8)

        for mask in (pred, truth):
            segments = connected_components(mask, 255)
            expected = components_oracle(mask.tolist(), 255)
            assert len(segments) == len(expected)
            for s, e in zip(segments, expected):
                assert (s.x, s.y, s.w, s.h) == (e["x"], e["y"], e["w"], e["h"])
                assert frozenset(map(tuple, s.pixels())) == e["pixels"]
            cases += 1

        c = metrics.confusion(pred, truth, 255)
        tp, tn, fp, fn = confusion_oracle(pred.tolist(), truth.tolist(), 255)
        assert (c.tp, c.tn, c.fp, c.fn) == (tp, tn, fp, fn)
        report = metrics.evaluate_pair(pred, truth, 255)
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        assert report.precision == p
        assert report.recall == r
        assert report.f1 == f_beta_oracle(p, r, 1.0)
        assert report.f2 == f_beta_oracle(p, r, 2.0)
        assert report.iou == (tp / (tp + fp + fn) if tp + fp + fn else 0.0)
    elapsed = time.perf_counter() - start
    assert cases == 1000
    assert elapsed < 30.0
    return f"1000 masks, {elapsed:.1f} s"


def _random_case(seed):
    rng = np.random.default_rng(seed)
    h = int(rng.integers(16, 48))
    w = int(rng.integers(16, 64))
    image = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
    mask = np.zeros((h, w), dtype=np.uint8)
    for _ in range(int(rng.integers(1, 4))):
        bw = int(rng.integers(3, max(4, w // 2)))
        bh = int(rng.integers(2, max(3, h // 3)))
        x = int(rng.integers(0, w - bw + 1))
        y = int(rng.integers(0, h - bh + 1))
        mask[y : y + bh, x : x + bw] = 255

    def sample():
        sw = int(rng.integers(8, 64))
        sh = int(rng.integers(8, 64))
        return rng.integers(0, 256, size=(sh, sw, 3), dtype=np.uint8)

    pool = tla.SamplePool(
        foregrounds={"core_column": [tla.PoolSample("f", sample())]},
        backgrounds=[tla.PoolSample("b", sample())],
    )
    config = tla.AugmentationConfig(
        foreground_p={"core_column": float(rng.uniform(0, 1))},
        background_top_p=float(rng.uniform(0, 1)),
        background_bottom_p=float(rng.uniform(0, 1)),
        cutout_p=float(rng.uniform(0, 0.6)),
        mixup_p=float(rng.uniform(0, 1)),
        classic=tla.ClassicSettings(
            flip_p=float(rng.uniform(0, 1)),
            rotations=(0.0, 90.0, 180.0, 270.0, float(rng.uniform(-20, 20))),
            noise_sigma=float(rng.uniform(0, 10)),
            jitter=float(rng.uniform(0, 0.3)),
        ),
        seed=int(seed),
    )
    return rng, image, mask, pool, config


@criterion(5, "augmentation laws hold on 200 randomized cases with zero violations")
def test_augmentation_property_sweep():
    start = time.perf_counter()
    for seed in range(200):
        rng, image, mask, pool, config = _random_case(seed)
        pair = tla.AugmentedPair(image=image.copy(), mask=mask.copy())

        segments = connected_components(mask, 255)
        seg = segments[int(rng.integers(0, len(segments)))]
        inside = np.zeros(mask.shape, dtype=bool)
        inside[seg.y : seg.y + seg.h, seg.x : seg.x + seg.w] = seg.stencil

        # stencil locality: swap changes nothing outside the segment, never the mask
        swapped = tla.swap_foreground(image, mask, seg, pool.backgrounds[0].image, rng)
        assert np.array_equal(swapped[~inside], image[~inside])
        assert np.array_equal(mask, pair.mask)

        # cut-out zeroes exactly the component, image outside untouched
        cut = tla.cutout_segment(image, mask, seg, pool.backgrounds[0].image, rng)
        assert (cut.mask[inside] == 0).all()
        assert np.array_equal(cut.mask[~inside], mask[~inside])
        assert np.array_equal(cut.image[~inside], image[~inside])

        # top overlay covers background pixels only
        top = tla.apply_background_top(image, mask, pool.backgrounds[0].image, rng)
        assert np.array_equal(top[mask != 0], image[mask != 0])

        # bottom canvas preserves class-pixel counts and grows dimensions
        bottom = tla.apply_background_bottom(image, mask, pool.backgrounds[0].image, rng)
        assert bottom.image.shape[0] >= image.shape[0]
        assert bottom.image.shape[1] >= image.shape[1]
        assert np.count_nonzero(bottom.mask == 255) == np.count_nonzero(mask == 255)

        # full flow: dimension law, value closure, byte-level determinism
        out_a = tla.augment(pair, pool, config, LABELS, seed=seed)
        out_b = tla.augment(pair, pool, config, LABELS, seed=seed)
        assert out_a.image.shape[:2] == out_a.mask.shape
        assert set(np.unique(out_a.mask)) <= {0, 255}
        assert np.array_equal(out_a.image, out_b.image)
        assert np.array_equal(out_a.mask, out_b.mask)
        assert out_a.log == out_b.log
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    return f"200 cases, {elapsed:.1f} s"


@criterion(6, "proportional depth apportioning is exact and contiguous on 500 layouts")
def test_depth_invariants():
    spec = depthref.DepthSpec(top=10.0, bottom=14.0)
    fixture = [
        extraction.BoundingBox(x=0, y=0, w=300, h=40),
        extraction.BoundingBox(x=0, y=100, w=100, h=40),
    ]
    intervals, warnings = depthref.assign_depths(fixture, spec)
    assert warnings == []
    assert [(iv.from_m, iv.to_m) for iv in intervals] == [(10.0, 13.0), (13.0, 14.0)]

    rng = np.random.default_rng(77)
    for _ in range(500):
        count = int(rng.integers(1, 9))
        boxes = [
            extraction.BoundingBox(
                x=int(rng.integers(0, 50)),
                y=i * 50,
                w=int(rng.integers(1, 4000)),
                h=int(rng.integers(10, 60)),
            )
            for i in range(count)
        ]
        top = float(rng.uniform(0, 3000))
        span = float(rng.uniform(0.1, 50))
        intervals, warnings = depthref.assign_depths(
            boxes, depthref.DepthSpec(top=top, bottom=top + span)
        )
        assert warnings == []
        assert intervals[0].from_m == top
        assert intervals[-1].to_m == top + span
        for prev, cur in zip(intervals, intervals[1:]):
            assert cur.from_m == prev.to_m
        total = sum(iv.to_m - iv.from_m for iv in intervals)
        assert abs(total - span) <= 1e-9 * max(1.0, top + span)
    return "500 layouts, tolerance 1e-9"


@criterion(7, "toy dataset runs augment -> extract -> evaluate end to end, reruns byte-identical")
def test_cli_end_to_end(toy_dataset, tmp_path, capsys):
    def augment_into(out):
        code = cli.main(
            [
                "augment",
                "--images", str(toy_dataset["image_dir"]),
                "--masks", str(toy_dataset["mask_dir"]),
                "--labels", str(toy_dataset["labels"]),
                "--pool", str(toy_dataset["pool"]),
                "--count", "20",
                "--seed", "42",
                "--out", str(out),
            ]
        )
        assert code == 0

    augment_into(tmp_path / "a")
    augment_into(tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a" / "images").iterdir())
    assert len(names) == 20
    for name in names:
        for kind in ("images", "masks"):
            assert (tmp_path / "a" / kind / name).read_bytes() == (
                tmp_path / "b" / kind / name
            ).read_bytes(), f"rerun differs on {kind}/{name}"

    code = cli.main(
        [
            "extract", "--batch",
            "--image", str(tmp_path / "a" / "images"),
            "--mask", str(tmp_path / "a" / "masks"),
            "--labels", str(toy_dataset["labels"]),
            "--out", str(tmp_path / "columns"),
        ]
    )
    assert code == 0
    assert len([p for p in (tmp_path / "columns").iterdir() if p.is_dir()]) == 20

    capsys.readouterr()  # drop augment/extract progress output
    code = cli.main(
        [
            "evaluate",
            "--pred-dir", str(tmp_path / "a" / "masks"),
            "--truth-dir", str(tmp_path / "a" / "masks"),
            "--labels", str(toy_dataset["labels"]),
            "--json",
        ]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["summary"]["mean"]["iou"] == 1.0
    assert doc["summary"]["min"]["iou"] == 1.0
    return "20 pairs, identical rerun, self-evaluation iou 1.0"


def _best_of(fn, repeats=5):
    # timeit-style (same repeat count as `python -m timeit`): the minimum is
    # the measurement least polluted by other processes sharing the machine
    best = math.inf
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return result, best


@criterion(8, "6000x4000 extraction under 2 s and 4000x2000 augmentation under 1 s")
def test_performance_bounds():
    rng = np.random.default_rng(5)
    mask = np.zeros((4000, 6000), dtype=np.uint8)
    for i in range(5):
        mask[300 + 700 * i : 650 + 700 * i, 200:5800] = 255
    image = rng.integers(0, 256, size=(4000, 6000, 3), dtype=np.uint8)
    (report, crops), extraction_s = _best_of(lambda: extraction.run_pipeline(image, mask, LABELS))
    assert len(report.kept) == 5
    assert extraction_s < 2.0

    image = rng.integers(0, 256, size=(2000, 4000, 3), dtype=np.uint8)
    mask = np.zeros((2000, 4000), dtype=np.uint8)
    for i in range(4):
        mask[150 + 450 * i : 420 + 450 * i, 100:3900] = 255
    pool = tla.SamplePool(
        foregrounds={
            "core_column": [
                tla.PoolSample("f", rng.integers(0, 256, (600, 1200, 3), dtype=np.uint8))
            ]
        },
        backgrounds=[tla.PoolSample("b", rng.integers(0, 256, (900, 1400, 3), dtype=np.uint8))],
    )
    config = tla.AugmentationConfig(
        foreground_p={"core_column": 1.0},
        background_top_p=1.0,
        background_bottom_p=1.0,
        cutout_p=0.25,
        mixup_p=1.0,
        classic=tla.ClassicSettings(flip_p=0.5, rotations=(0.0, 90.0), noise_sigma=5.0),
    )
    pair = tla.AugmentedPair(image=image, mask=mask)
    out, augment_s = _best_of(lambda: tla.augment(pair, pool, config, LABELS, seed=9))
    assert out.image.shape[:2] == out.mask.shape
    assert augment_s < 1.0
    return f"extraction {extraction_s:.2f} s, augmentation {augment_s:.2f} s"


@criterion(9, "service round trip exports crops byte-equal to offline extraction, 409 before")
def test_service_round_trip(rng):
    image, mask = make_box_pair(rng, width=320, height=240)
    client = TestClient(create_app())

    files = {"image": ("image.png", encode_image_png(image), "image/png")}
    sid = client.post("/sessions", files=files).json()["id"]
    assert client.get(f"/sessions/{sid}/export").status_code == 409

    payload = encode_mask_png(mask)
    assert (
        client.put(f"/sessions/{sid}/mask", files={"mask": ("m.png", payload, "image/png")})
        .status_code
        == 200
    )
    client.post(f"/sessions/{sid}/extract")

    # user edit: erase everything below y=180, then re-extract
    edited = mask.copy()
    edited[180:] = 0
    client.put(f"/sessions/{sid}/mask", files={"mask": ("m.png", encode_mask_png(edited), "image/png")})
    assert client.get(f"/sessions/{sid}/export").status_code == 409  # stale report gone
    boxes = client.post(f"/sessions/{sid}/extract").json()["boxes"]
    assert boxes

    body = client.put(
        f"/sessions/{sid}/depths", json={"spec": {"top": 100.0, "bottom": 103.0}}
    ).json()
    assert body["intervals"][-1]["to_m"] == 103.0

    archive = zipfile.ZipFile(io.BytesIO(client.get(f"/sessions/{sid}/export").content))
    report, offline = extraction.run_pipeline(image, edited, LABELS)
    crop_names = sorted(n for n in archive.namelist() if n.startswith("column_"))
    assert len(crop_names) == len(offline)
    for crop in offline:
        exported = decode_image(archive.read(f"column_{crop.index:03d}.png"))
        assert np.array_equal(exported, crop.image), f"crop {crop.index} differs"
    return f"{len(offline)} crops byte-equal"
