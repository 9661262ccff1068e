"""HTTP annotation service backed by an append-only JSON Lines rating store.

Every accepted rating is flushed and fsynced before the request is
acknowledged, so a crash never loses acknowledged data; on startup the
in-memory uniqueness index is rebuilt from the store file.  Annotator-facing
endpoints never carry blinding information; ``/api/export`` is the
operator's unblinded view.
"""

from __future__ import annotations

import json
import os
import threading
from datetime import datetime, timezone
from typing import Sequence

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from .human_eval import (
    SLOTS,
    AnnotationRecord,
    AssignmentPlan,
    EvalItem,
)


class DuplicateRatingError(ValueError):
    pass


class RatingStore:
    """Append-only JSONL store with an in-memory (item, annotator, slot) index.

    All writes are serialized through one lock; reads return snapshots.
    """

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        self._records: list[AnnotationRecord] = []
        self._index: set[tuple[str, str, str]] = set()
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._remember(AnnotationRecord.from_dict(json.loads(line)))

    def _remember(self, record: AnnotationRecord) -> None:
        if record.key() in self._index:
            raise DuplicateRatingError(f"duplicate rating for {record.key()}")
        self._records.append(record)
        self._index.add(record.key())

    def append_all(self, records: Sequence[AnnotationRecord]) -> None:
        """Durably append ``records`` as a unit; nothing is written if any
        record would duplicate an existing one."""
        with self._lock:
            for record in records:
                if record.key() in self._index:
                    raise DuplicateRatingError(f"duplicate rating for {record.key()}")
            with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                for record in records:
                    fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            for record in records:
                self._remember(record)

    def records(self) -> list[AnnotationRecord]:
        with self._lock:
            return list(self._records)

    def has(self, item_id: str, annotator_id: str, slot: str) -> bool:
        with self._lock:
            return (item_id, annotator_id, slot) in self._index


class SlotRatings(BaseModel):
    meaning: int = Field(ge=1, le=5)
    simplicity: int = Field(ge=1, le=5)


class RatingsBody(BaseModel):
    item_id: str
    annotator: str
    ratings: dict[str, SlotRatings]


def create_app(items: Sequence[EvalItem], plan: AssignmentPlan, store: RatingStore) -> FastAPI:
    by_id = {item.item_id: item for item in items}
    for item_id in plan.assignments:
        if item_id not in by_id:
            raise ValueError(f"plan references unknown item {item_id!r}")
    known_annotators = set(plan.annotators())

    app = FastAPI(title="simpeval annotation service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def require_annotator(annotator: str) -> None:
        if annotator not in known_annotators:
            raise HTTPException(status_code=404, detail=f"unknown annotator {annotator!r}")

    def is_done(item_id: str, annotator: str) -> bool:
        return all(store.has(item_id, annotator, slot) for slot in SLOTS)

    @app.get("/api/items/next")
    def next_item(annotator: str = Query(...)):
        require_annotator(annotator)
        for item_id in plan.items_for(annotator):
            if not is_done(item_id, annotator):
                item = by_id[item_id]
                return {
                    "item_id": item.item_id,
                    "source": item.source,
                    "outputs": [{"slot": slot, "text": item.outputs[slot]} for slot in SLOTS],
                    "criteria": ["meaning", "simplicity"],
                }
        return Response(status_code=204)

    @app.post("/api/ratings", status_code=201)
    def post_ratings(body: RatingsBody):
        require_annotator(body.annotator)
        if body.item_id not in by_id:
            raise HTTPException(status_code=404, detail=f"unknown item {body.item_id!r}")
        if body.annotator not in plan.assignments.get(body.item_id, ()):
            raise HTTPException(
                status_code=403,
                detail=f"item {body.item_id!r} is not assigned to annotator {body.annotator!r}",
            )
        if set(body.ratings) != set(SLOTS):
            raise HTTPException(status_code=422, detail="ratings must cover exactly slots A and B")
        timestamp = datetime.now(timezone.utc).isoformat()
        records = [
            AnnotationRecord(
                item_id=body.item_id,
                annotator_id=body.annotator,
                slot=slot,
                meaning=body.ratings[slot].meaning,
                simplicity=body.ratings[slot].simplicity,
                timestamp=timestamp,
            )
            for slot in SLOTS
        ]
        try:
            store.append_all(records)
        except DuplicateRatingError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"accepted": len(records)}

    @app.get("/api/progress")
    def progress(annotator: str = Query(...)):
        require_annotator(annotator)
        assigned = plan.items_for(annotator)
        done = sum(1 for item_id in assigned if is_done(item_id, annotator))
        return {"done": done, "total": len(assigned)}

    @app.get("/api/export")
    def export():
        lines = []
        for record in store.records():
            unblinded = record.to_dict()
            unblinded["system"] = by_id[record.item_id].blinding[record.slot]
            lines.append(json.dumps(unblinded, ensure_ascii=False))
        return PlainTextResponse("\n".join(lines) + ("\n" if lines else ""),
                                 media_type="application/x-ndjson")

    return app


def serve_annotation(
    items: Sequence[EvalItem], plan: AssignmentPlan, store_path: str, bind_address: str
) -> None:
    """Run the annotation service until interrupted."""
    import uvicorn

    host, _, port = bind_address.rpartition(":")
    if not host:
        raise ValueError(f"bind address must be HOST:PORT, got {bind_address!r}")
    app = create_app(items, plan, RatingStore(store_path))
    uvicorn.run(app, host=host, port=int(port), log_level="info")
