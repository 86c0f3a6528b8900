import io
import json
import zipfile

import numpy as np
import pytest
from fastapi.testclient import TestClient

from corebox.extraction import extract_columns, run_pipeline
from corebox.imagery import LabelMap, decode_image, encode_image_png, encode_mask_png
from corebox.service import Workspace, create_app
from corebox.synth import make_box_pair

LABELS = LabelMap({"core_column": 255})


@pytest.fixture
def pair(rng):
    return make_box_pair(rng, width=160, height=120)


@pytest.fixture
def client():
    return TestClient(create_app())


def create_session(client, image, mask=None, labels=None):
    files = {"image": ("image.png", encode_image_png(image), "image/png")}
    if mask is not None:
        files["mask"] = ("mask.png", encode_mask_png(mask), "image/png")
    data = {}
    if labels is not None:
        data["labels"] = json.dumps(labels)
    response = client.post("/sessions", files=files, data=data)
    assert response.status_code == 201, response.text
    return response.json()["id"]


class TestSessions:
    def test_health(self, client):
        assert client.get("/healthz").json() == {"status": "ok"}

    def test_create_with_mask(self, client, pair):
        image, mask = pair
        sid = create_session(client, image, mask)
        info = client.get(f"/sessions/{sid}").json()
        assert info["width"] == 160 and info["height"] == 120
        assert info["labels"] == {"core_column": 255}
        assert info["has_report"] is False

    def test_create_without_mask_defaults_to_background(self, client, pair):
        image, _ = pair
        sid = create_session(client, image)
        data = client.get(f"/sessions/{sid}/mask").content
        from corebox.imagery import decode_mask

        mask = decode_mask(data, LABELS)
        assert mask.shape == (120, 160)
        assert not mask.any()

    def test_mismatched_mask_rejected(self, client, pair):
        image, _ = pair
        files = {
            "image": ("image.png", encode_image_png(image), "image/png"),
            "mask": ("mask.png", encode_mask_png(np.zeros((50, 50), np.uint8)), "image/png"),
        }
        assert client.post("/sessions", files=files).status_code == 400

    def test_undecodable_image_rejected(self, client):
        files = {"image": ("image.png", b"garbage", "image/png")}
        assert client.post("/sessions", files=files).status_code == 400

    def test_bad_labels_rejected(self, client, pair):
        image, _ = pair
        files = {"image": ("image.png", encode_image_png(image), "image/png")}
        response = client.post("/sessions", files=files, data={"labels": "not json"})
        assert response.status_code == 400

    def test_custom_labels(self, client, pair):
        image, mask = pair
        relabeled = np.where(mask == 255, 77, 0).astype(np.uint8)
        sid = create_session(client, image, relabeled, labels={"labels": {"ore": 77}})
        info = client.get(f"/sessions/{sid}").json()
        assert info["labels"] == {"ore": 77}

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/feedbeef").status_code == 404
        assert client.post("/sessions/feedbeef/extract").status_code == 404

    def test_oversized_upload_413(self, pair):
        client = TestClient(create_app(max_upload_mb=0))
        image, _ = pair
        files = {"image": ("image.png", encode_image_png(image), "image/png")}
        assert client.post("/sessions", files=files).status_code == 413

    def test_image_round_trip(self, client, pair):
        image, _ = pair
        sid = create_session(client, image)
        served = decode_image(client.get(f"/sessions/{sid}/image").content)
        assert np.array_equal(served, image)


class TestExtractionFlow:
    def test_extract_returns_report_and_boxes(self, client, pair):
        image, mask = pair
        sid = create_session(client, image, mask)
        body = client.post(f"/sessions/{sid}/extract").json()
        assert body["report"]["detected"] >= len(body["boxes"]) > 0
        assert client.get(f"/sessions/{sid}").json()["has_report"] is True

    def test_extract_accepts_config(self, client, pair):
        image, mask = pair
        sid = create_session(client, image, mask)
        body = client.post(
            f"/sessions/{sid}/extract", json={"median_filter": False, "width_filter": False}
        ).json()
        assert body["report"]["dropped"] == []

    def test_bad_config_rejected(self, client, pair):
        image, mask = pair
        sid = create_session(client, image, mask)
        response = client.post(f"/sessions/{sid}/extract", json={"n": 0.5})
        assert response.status_code == 400

    def test_mask_put_invalidates_report(self, client, pair):
        image, mask = pair
        sid = create_session(client, image, mask)
        client.post(f"/sessions/{sid}/extract")
        files = {"mask": ("mask.png", encode_mask_png(np.zeros_like(mask)), "image/png")}
        assert client.put(f"/sessions/{sid}/mask", files=files).status_code == 200
        assert client.get(f"/sessions/{sid}").json()["has_report"] is False
        assert client.get(f"/sessions/{sid}/export").status_code == 409

    def test_mask_put_wrong_size_rejected(self, client, pair):
        image, mask = pair
        sid = create_session(client, image, mask)
        files = {"mask": ("mask.png", encode_mask_png(np.zeros((10, 10), np.uint8)), "image/png")}
        assert client.put(f"/sessions/{sid}/mask", files=files).status_code == 400

    def test_mask_put_get_round_trip(self, client, pair):
        image, mask = pair
        sid = create_session(client, image)
        payload = encode_mask_png(mask)
        client.put(f"/sessions/{sid}/mask", files={"mask": ("m.png", payload, "image/png")})
        assert client.get(f"/sessions/{sid}/mask").content == payload

    def test_reextract_reflects_edit(self, client, pair):
        image, mask = pair
        sid = create_session(client, image, mask)
        before = client.post(f"/sessions/{sid}/extract").json()
        # erase the first kept column completely
        b = before["boxes"][0]
        edited = mask.copy()
        edited[b["y"] : b["y"] + b["h"], b["x"] : b["x"] + b["w"]] = 0
        files = {"mask": ("m.png", encode_mask_png(edited), "image/png")}
        client.put(f"/sessions/{sid}/mask", files=files)
        after = client.post(f"/sessions/{sid}/extract").json()
        assert after["report"]["detected"] == before["report"]["detected"] - 1
        assert b not in after["boxes"]


class TestDepthsAndExport:
    def _extracted(self, client, pair):
        image, mask = pair
        sid = create_session(client, image, mask)
        boxes = client.post(f"/sessions/{sid}/extract").json()["boxes"]
        return sid, boxes

    def test_depths_require_extraction(self, client, pair):
        image, mask = pair
        sid = create_session(client, image, mask)
        response = client.put(
            f"/sessions/{sid}/depths", json={"spec": {"top": 10, "bottom": 14}}
        )
        assert response.status_code == 409

    def test_assign_and_edit(self, client, pair):
        sid, boxes = self._extracted(client, pair)
        body = client.put(
            f"/sessions/{sid}/depths", json={"spec": {"top": 10.0, "bottom": 14.0}}
        ).json()
        intervals = body["intervals"]
        assert len(intervals) == len(boxes)
        assert intervals[0]["from_m"] == 10.0
        assert intervals[-1]["to_m"] == 14.0

        first = intervals[0]
        edited = client.put(
            f"/sessions/{sid}/depths",
            json={"edits": [[0, first["from_m"], first["to_m"] - 0.25]]},
        ).json()
        assert edited["intervals"][0]["to_m"] == first["to_m"] - 0.25
        assert any("gap" in w for w in edited["warnings"])

    def test_invalid_spec_400(self, client, pair):
        sid, _ = self._extracted(client, pair)
        response = client.put(
            f"/sessions/{sid}/depths", json={"spec": {"top": 14, "bottom": 10}}
        )
        assert response.status_code == 400

    def test_edits_before_assignment_409(self, client, pair):
        sid, _ = self._extracted(client, pair)
        response = client.put(f"/sessions/{sid}/depths", json={"edits": [[0, 0, 1]]})
        assert response.status_code == 409

    def test_export_zip_contents(self, client, pair):
        image, mask = pair
        sid, boxes = self._extracted(client, (image, mask))
        client.put(f"/sessions/{sid}/depths", json={"spec": {"top": 10.0, "bottom": 14.0}})
        archive = zipfile.ZipFile(io.BytesIO(client.get(f"/sessions/{sid}/export").content))
        names = archive.namelist()
        assert "depths.csv" in names
        assert "report.json" in names
        assert "mask.png" in names
        crops = [n for n in names if n.startswith("column_")]
        assert len(crops) == len(boxes)

        report, offline = run_pipeline(image, mask, LABELS)
        for crop in offline:
            served = decode_image(archive.read(f"column_{crop.index:03d}.png"))
            assert np.array_equal(served, crop.image)
        csv_lines = archive.read("depths.csv").decode().splitlines()
        assert len(csv_lines) == len(boxes) + 1

    def test_export_is_deterministic(self, client, pair):
        sid, _ = self._extracted(client, pair)
        first = client.get(f"/sessions/{sid}/export").content
        second = client.get(f"/sessions/{sid}/export").content
        assert first == second

    def test_export_without_depths_has_empty_cells(self, client, pair):
        sid, _ = self._extracted(client, pair)
        archive = zipfile.ZipFile(io.BytesIO(client.get(f"/sessions/{sid}/export").content))
        lines = archive.read("depths.csv").decode().splitlines()
        assert lines[1].endswith(",,")


class TestWorkspace:
    def test_lru_eviction_without_spool_loses_sessions(self, pair):
        app = create_app(workspace=Workspace(capacity=2))
        client = TestClient(app)
        image, mask = pair
        ids = [create_session(client, image, mask) for _ in range(3)]
        assert client.get(f"/sessions/{ids[0]}").status_code == 404
        assert client.get(f"/sessions/{ids[2]}").status_code == 200

    def test_spool_restores_evicted_session(self, tmp_path, pair):
        app = create_app(workspace=Workspace(capacity=1, spool_dir=tmp_path))
        client = TestClient(app)
        image, mask = pair
        first = create_session(client, image, mask)
        report = client.post(f"/sessions/{first}/extract").json()["report"]
        create_session(client, image, mask)  # evicts `first` to disk

        assert (tmp_path / first / "state.json").is_file()
        info = client.get(f"/sessions/{first}").json()
        assert info["has_report"] is True
        restored = client.post(f"/sessions/{first}/extract").json()["report"]
        assert restored == report
        served = decode_image(client.get(f"/sessions/{first}/image").content)
        assert np.array_equal(served, image)

    def test_get_refreshes_recency(self, pair):
        app = create_app(workspace=Workspace(capacity=2))
        client = TestClient(app)
        image, mask = pair
        a = create_session(client, image, mask)
        b = create_session(client, image, mask)
        client.get(f"/sessions/{a}")  # a becomes most recent
        c = create_session(client, image, mask)  # evicts b
        assert client.get(f"/sessions/{a}").status_code == 200
        assert client.get(f"/sessions/{b}").status_code == 404
        assert client.get(f"/sessions/{c}").status_code == 200
