"""HTTP backend for the pair-labeling screen.

Serves the image corpus, hands out labeling sessions (one random reference
plus a shuffled grid of everything else), and appends accepted annotations
to a JSONL pair file: each annotation becomes exactly two lines, (reference,
similar, label 1) and (reference, dissimilar, label 0) — the same format the
metric trainer consumes.
"""
from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
from dataclasses import asdict, dataclass

from fastapi import FastAPI, HTTPException
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    relpath: str
    width: int
    height: int


class Annotation(BaseModel):
    referenceId: str
    similarId: str
    dissimilarId: str
    timestamp: float | None = None


def scan_corpus(root: str | os.PathLike) -> list[CorpusEntry]:
    """List PNG images under root, sorted by id; other files are skipped."""
    root = os.fspath(root)
    entries = []
    for dirpath, _dirnames, filenames in os.walk(root):
        for name in filenames:
            path = os.path.join(dirpath, name)
            rel = os.path.relpath(path, root).replace(os.sep, "/")
            if not name.lower().endswith(".png"):
                logger.info("skipping non-PNG corpus file: %s", rel)
                continue
            try:
                with Image.open(path) as im:
                    width, height = im.size
            except OSError:
                logger.info("skipping unreadable corpus file: %s", rel)
                continue
            entries.append(CorpusEntry(id=rel, relpath=rel, width=width, height=height))
    entries.sort(key=lambda e: e.id)
    return entries


class PairLog:
    """Append-only JSONL pair writer; one lock, one write per annotation."""

    def __init__(self, path: str | os.PathLike):
        self.path = os.fspath(path)
        self._lock = threading.Lock()
        self._count = 0
        if os.path.exists(self.path):
            with open(self.path, "r", encoding="utf-8") as f:
                self._count = sum(1 for line in f if line.strip())

    @property
    def pair_count(self) -> int:
        with self._lock:
            return self._count

    def append(self, reference: str, similar: str, dissimilar: str) -> int:
        lines = (
            json.dumps({"a": reference, "b": similar, "label": 1})
            + "\n"
            + json.dumps({"a": reference, "b": dissimilar, "label": 0})
            + "\n"
        )
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(lines)
                f.flush()
                os.fsync(f.fileno())
            self._count += 2
            return self._count


def create_app(
    images_dir: str | os.PathLike,
    out_path: str | os.PathLike,
    seed: int | None = None,
    ui_dir: str | os.PathLike | None = None,
) -> FastAPI:
    images_dir = os.path.abspath(os.fspath(images_dir))
    corpus = scan_corpus(images_dir)
    by_id = {e.id: e for e in corpus}
    pair_log = PairLog(out_path)
    rng = random.Random(seed)

    app = FastAPI(title="pair studio")

    @app.exception_handler(RequestValidationError)
    async def _bad_body(_request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/api/images")
    def list_images() -> list[dict]:
        return [asdict(e) for e in corpus]

    @app.get("/api/session")
    def new_session() -> dict:
        if len(corpus) < 3:
            raise HTTPException(
                status_code=409,
                detail=f"need at least 3 corpus images, have {len(corpus)}",
            )
        reference = corpus[rng.randrange(len(corpus))]
        grid = [e for e in corpus if e.id != reference.id]
        rng.shuffle(grid)
        return {"reference": asdict(reference), "grid": [asdict(e) for e in grid]}

    @app.post("/api/pairs", status_code=201)
    def post_pairs(annotation: Annotation) -> dict:
        ids = (annotation.referenceId, annotation.similarId, annotation.dissimilarId)
        if len(set(ids)) != 3:
            raise HTTPException(status_code=400, detail="annotation ids must be distinct")
        for an_id in ids:
            if an_id not in by_id:
                raise HTTPException(status_code=400, detail=f"unknown image id {an_id!r}")
        try:
            count = pair_log.append(
                by_id[ids[0]].relpath, by_id[ids[1]].relpath, by_id[ids[2]].relpath
            )
        except OSError as e:
            raise HTTPException(status_code=500, detail=f"cannot persist pairs: {e}")
        return {"accepted": True, "pairCount": count}

    @app.post("/api/submit")
    def submit() -> dict:
        return {"pairCount": pair_log.pair_count}

    @app.get("/img/{relpath:path}")
    def serve_image(relpath: str):
        full = os.path.abspath(os.path.join(images_dir, relpath))
        if not (full == images_dir or full.startswith(images_dir + os.sep)):
            raise HTTPException(status_code=400, detail="path escapes corpus root")
        if not os.path.isfile(full):
            raise HTTPException(status_code=404, detail=f"no such image {relpath!r}")
        return FileResponse(full, headers={"Cache-Control": "public, max-age=3600"})

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=os.fspath(ui_dir), html=True), name="ui")

    # Session start time, handy when eyeballing logs of long labeling runs.
    app.state.started_at = time.time()
    app.state.corpus_size = len(corpus)
    return app


def serve(
    images_dir: str,
    out_path: str,
    port: int = 8080,
    seed: int | None = None,
    ui_dir: str | None = None,
    host: str = "127.0.0.1",
) -> None:
    """Blocking uvicorn server for the CLI."""
    import uvicorn

    app = create_app(images_dir, out_path, seed=seed, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
