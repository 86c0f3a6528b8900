"""Session-oriented HTTP API around the extraction pipeline.

A client uploads a box photo (plus optional mask and label map), runs
extraction, edits the mask and depth table interactively, and downloads a
ZIP of column crops with depth referencing. Sessions live in an in-memory
LRU workspace; with a spool directory configured, evicted sessions are
flushed to disk and transparently reloaded.

Every mask mutation invalidates the cached extraction report, so an export
can never ship stale boxes: exporting before (re-)extraction answers 409.
"""

from __future__ import annotations

import io
import json
import threading
import time
import uuid
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, Form, HTTPException, Request, UploadFile
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import depthref, extraction
from .errors import CoreboxError, DecodeError, UnknownLabelValue
from .imagery import (
    LabelMap,
    decode_gray,
    decode_image,
    encode_image_png,
    encode_mask_png,
    parse_label_map,
)

DEFAULT_PORT = 8780
DEFAULT_CAPACITY = 64
DEFAULT_MAX_UPLOAD_MB = 64

DEFAULT_LABELS = LabelMap({"core_column": 255})

# Fixed DOS timestamp so repeated exports are byte-identical.
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


@dataclass
class Session:
    id: str
    image: np.ndarray
    mask: np.ndarray
    labels: LabelMap
    filter_config: extraction.FilterConfig = field(default_factory=extraction.FilterConfig)
    report: extraction.ExtractionReport | None = None
    intervals: list[depthref.DepthInterval] | None = None
    created: float = field(default_factory=time.time)
    modified: float = field(default_factory=time.time)
    lock: threading.RLock = field(default_factory=threading.RLock, repr=False)

    def touch(self) -> None:
        self.modified = time.time()

    def invalidate(self) -> None:
        """Drop everything derived from the mask."""
        self.report = None
        self.intervals = None

    def info(self) -> dict:
        return {
            "id": self.id,
            "width": int(self.image.shape[1]),
            "height": int(self.image.shape[0]),
            "labels": dict(self.labels.entries),
            "has_report": self.report is not None,
            "has_depths": self.intervals is not None,
            "created": self.created,
            "modified": self.modified,
        }


class Workspace:
    """Bounded session store: in-memory LRU, optional on-disk spool."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY, spool_dir=None):
        self._sessions: dict[str, Session] = {}
        self._order: list[str] = []  # least-recently-used first
        self._lock = threading.RLock()
        self.capacity = capacity
        self.spool_dir = Path(spool_dir) if spool_dir else None
        if self.spool_dir:
            self.spool_dir.mkdir(parents=True, exist_ok=True)

    def add(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.id] = session
            self._order.append(session.id)
            while len(self._sessions) > self.capacity:
                victim = self._order.pop(0)
                evicted = self._sessions.pop(victim)
                if self.spool_dir:
                    self._spool_write(evicted)

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is not None:
                self._order.remove(session_id)
                self._order.append(session_id)
                return session
        if self.spool_dir:
            session = self._spool_read(session_id)
            if session is not None:
                self.add(session)
                return session
        return None

    def _spool_write(self, session: Session) -> None:
        root = self.spool_dir / session.id
        root.mkdir(parents=True, exist_ok=True)
        (root / "image.png").write_bytes(encode_image_png(session.image))
        (root / "mask.png").write_bytes(encode_mask_png(session.mask))
        state = {
            "labels": dict(session.labels.entries),
            "filter_config": session.filter_config.to_dict(),
            "report": session.report.to_dict() if session.report else None,
            "intervals": [iv.as_dict() for iv in session.intervals] if session.intervals else None,
            "created": session.created,
            "modified": session.modified,
        }
        (root / "state.json").write_text(json.dumps(state), encoding="utf-8")

    def _spool_read(self, session_id: str) -> Session | None:
        root = self.spool_dir / session_id
        if not (root / "state.json").is_file():
            return None
        state = json.loads((root / "state.json").read_text(encoding="utf-8"))
        labels = LabelMap({str(k): int(v) for k, v in state["labels"].items()})
        session = Session(
            id=session_id,
            image=decode_image((root / "image.png").read_bytes()),
            mask=decode_gray_png((root / "mask.png").read_bytes()),
            labels=labels,
            filter_config=extraction.FilterConfig.from_dict(state["filter_config"]),
            created=state.get("created", time.time()),
            modified=state.get("modified", time.time()),
        )
        if state.get("report"):
            session.report = extraction.ExtractionReport.from_dict(state["report"])
        if state.get("intervals"):
            session.intervals = [
                depthref.DepthInterval(
                    index=int(d["index"]), from_m=float(d["from_m"]), to_m=float(d["to_m"])
                )
                for d in state["intervals"]
            ]
        return session


def decode_gray_png(data: bytes) -> np.ndarray:
    from PIL import Image

    with Image.open(io.BytesIO(data)) as img:
        img.load()
        return decode_gray(img)


def build_export_zip(session: Session) -> bytes:
    """Deterministic ZIP: column crops, depths.csv, report.json, final mask."""
    crops = extraction.extract_columns(session.image, session.report.kept)
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:

        def put(name: str, data: bytes) -> None:
            info = zipfile.ZipInfo(name, date_time=_ZIP_EPOCH)
            info.compress_type = zipfile.ZIP_STORED
            zf.writestr(info, data)

        for crop in crops:
            put(f"column_{crop.index:03d}.png", encode_image_png(crop.image))
        put(
            "depths.csv",
            depthref.depths_to_csv(session.report.kept, session.intervals).encode("utf-8"),
        )
        put("report.json", session.report.to_json().encode("utf-8"))
        put("mask.png", encode_mask_png(session.mask))
    return buf.getvalue()


def create_app(
    workspace: Workspace | None = None,
    max_upload_mb: int = DEFAULT_MAX_UPLOAD_MB,
    static_dir=None,
) -> FastAPI:
    app = FastAPI(title="corebox service")
    ws = workspace if workspace is not None else Workspace()
    max_bytes = max_upload_mb * 1024 * 1024

    @app.exception_handler(CoreboxError)
    def on_toolkit_error(request: Request, exc: CoreboxError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    def require(session_id: str) -> Session:
        session = ws.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return session

    def read_upload(upload: UploadFile) -> bytes:
        data = upload.file.read()
        if len(data) > max_bytes:
            raise HTTPException(status_code=413, detail=f"upload exceeds {max_upload_mb} MB")
        return data

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(
        image: UploadFile = File(...),
        mask: UploadFile | None = File(None),
        labels: str | None = Form(None),
    ):
        try:
            img = decode_image(read_upload(image))
        except DecodeError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if labels is not None:
            try:
                label_map = parse_label_map(json.loads(labels))
            except (json.JSONDecodeError, CoreboxError) as exc:
                raise HTTPException(status_code=400, detail=f"bad labels JSON: {exc}")
        else:
            label_map = DEFAULT_LABELS
        if mask is not None:
            try:
                mask_arr = decode_gray_png(read_upload(mask))
            except DecodeError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            if mask_arr.shape != img.shape[:2]:
                raise HTTPException(
                    status_code=400,
                    detail=f"mask {mask_arr.shape} does not match image {img.shape[:2]}",
                )
            bad = set(np.unique(mask_arr).tolist()) - set(label_map.valid_values)
            if bad:
                raise HTTPException(
                    status_code=400, detail=f"mask contains unregistered values {sorted(bad)}"
                )
        else:
            mask_arr = np.zeros(img.shape[:2], dtype=np.uint8)
        session = Session(id=uuid.uuid4().hex, image=img, mask=mask_arr, labels=label_map)
        ws.add(session)
        return {"id": session.id, "width": img.shape[1], "height": img.shape[0]}

    @app.get("/sessions/{session_id}")
    def session_info(session_id: str):
        return require(session_id).info()

    @app.get("/sessions/{session_id}/image")
    def get_image(session_id: str):
        session = require(session_id)
        with session.lock:
            return Response(content=encode_image_png(session.image), media_type="image/png")

    @app.get("/sessions/{session_id}/mask")
    def get_mask(session_id: str):
        session = require(session_id)
        with session.lock:
            return Response(content=encode_mask_png(session.mask), media_type="image/png")

    @app.put("/sessions/{session_id}/mask")
    def put_mask(session_id: str, mask: UploadFile = File(...)):
        session = require(session_id)
        try:
            mask_arr = decode_gray_png(read_upload(mask))
        except DecodeError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        with session.lock:
            if mask_arr.shape != session.image.shape[:2]:
                raise HTTPException(
                    status_code=400,
                    detail=f"mask {mask_arr.shape} does not match image "
                    f"{session.image.shape[:2]}",
                )
            bad = set(np.unique(mask_arr).tolist()) - set(session.labels.valid_values)
            if bad:
                raise HTTPException(
                    status_code=400, detail=f"mask contains unregistered values {sorted(bad)}"
                )
            session.mask = mask_arr
            session.invalidate()
            session.touch()
        return {"ok": True}

    @app.post("/sessions/{session_id}/extract")
    def extract(session_id: str, config: dict | None = None):
        session = require(session_id)
        with session.lock:
            if config:
                try:
                    session.filter_config = extraction.FilterConfig.from_dict(config)
                except ValueError as exc:
                    raise HTTPException(status_code=400, detail=str(exc))
            report, _ = extraction.run_pipeline(
                session.image, session.mask, session.labels, session.filter_config
            )
            session.report = report
            session.intervals = None
            session.touch()
            return {"report": report.to_dict(), "boxes": [b.as_dict() for b in report.kept]}

    @app.put("/sessions/{session_id}/depths")
    def put_depths(session_id: str, body: dict):
        session = require(session_id)
        with session.lock:
            if session.report is None:
                raise HTTPException(status_code=409, detail="run extraction first")
            if "spec" in body:
                try:
                    spec = depthref.DepthSpec.from_dict(body["spec"])
                except (KeyError, ValueError, TypeError, CoreboxError) as exc:
                    raise HTTPException(status_code=400, detail=f"bad depth spec: {exc}")
                core_axis = str(body.get("core_axis", depthref.HORIZONTAL))
                ordered = depthref.order_columns(session.report.kept, spec)
                try:
                    intervals, warnings = depthref.assign_depths(ordered, spec, core_axis)
                except (CoreboxError, ValueError) as exc:
                    raise HTTPException(status_code=400, detail=str(exc))
                # Keep crops, CSV rows and intervals on one shared index.
                session.report.kept = ordered
            elif "edits" in body:
                if session.intervals is None:
                    raise HTTPException(status_code=409, detail="assign depths first")
                edits = [(int(e[0]), float(e[1]), float(e[2])) for e in body["edits"]]
                try:
                    intervals, warnings = depthref.adjust_depths(session.intervals, edits)
                except (CoreboxError, KeyError) as exc:
                    raise HTTPException(status_code=400, detail=str(exc))
            else:
                raise HTTPException(status_code=400, detail='body needs "spec" or "edits"')
            session.intervals = intervals
            session.touch()
            return {
                "intervals": [iv.as_dict() for iv in intervals],
                "warnings": warnings,
            }

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str):
        session = require(session_id)
        with session.lock:
            if session.report is None:
                raise HTTPException(status_code=409, detail="run extraction before exporting")
            data = build_export_zip(session)
        return Response(
            content=data,
            media_type="application/zip",
            headers={"Content-Disposition": f'attachment; filename="{session_id}.zip"'},
        )

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="webui")

    return app
