"""HTTP API for metricF annotation: blind items out, scores in, aggregates back.

Endpoints: GET /api/items, POST /api/scores, GET /api/summary. The browser
client bundle (when present) is served at /.
"""

from __future__ import annotations

import random
from datetime import date
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .annotate import AnnotationItem, ScoreStore, record_score
from .metrics import VALID_SCORES, metricf_aggregate

COVERAGE_TARGET_PERCENT = 6.0


class ScorePost(BaseModel):
    item_id: str
    score: float
    annotator: str


def create_app(
    items: list[AnnotationItem],
    store: ScoreStore,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="hashtag annotation service")
    by_id = {it.item_id: it for it in items}

    @app.get("/api/items")
    def get_items(
        n: int = Query(10, gt=0, le=1000),
        annotator: str = Query("anon"),
    ) -> list[dict]:
        done = {
            iid for (iid, who) in store.effective() if who == annotator
        }
        pending = [it for it in items if it.item_id not in done]
        # stable presentation order per annotator and day
        rng = random.Random(f"{annotator}:{date.today().isoformat()}")
        rng.shuffle(pending)
        return [it.blind() for it in pending[:n]]

    @app.post("/api/scores", status_code=204)
    def post_score(body: ScorePost) -> Response:
        if body.score not in VALID_SCORES:
            raise HTTPException(400, f"score must be one of {VALID_SCORES}")
        item = by_id.get(body.item_id)
        if item is None:
            raise HTTPException(404, f"unknown item {body.item_id}")
        record_score(store, item, body.score, body.annotator)
        return Response(status_code=204)

    @app.get("/api/summary")
    def get_summary() -> dict:
        scores = list(store.effective().values())
        sources = sorted({it.source for it in items})
        per_source = {}
        for src in sources:
            total = sum(1 for it in items if it.source == src)
            agg = metricf_aggregate(scores, source=src, total_items=total)
            agg["coverage_target_reached"] = (
                agg["coverage_percent"] is not None
                and agg["coverage_percent"] >= COVERAGE_TARGET_PERCENT
            )
            per_source[src] = agg
        overall = metricf_aggregate(scores, total_items=len(items))
        overall["coverage_target_reached"] = (
            overall["coverage_percent"] is not None
            and overall["coverage_percent"] >= COVERAGE_TARGET_PERCENT
        )
        return {"overall": overall, "per_source": per_source}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
