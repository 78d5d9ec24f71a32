"""The /score HTTP service.

Contract: POST /score with {"pairs": [{"claim": str, "evidence": str}, ...]}
returns 200 {"scores": [...]} with one score in [0,1] per pair, in order.
Every failure is a non-200 status with a JSON {"error": str} body. Request
handling may be concurrent, but model invocations pass through a bounded
semaphore so the backend never sees more than max_inflight batches at once.
"""
from __future__ import annotations

import logging
import threading

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from .config import AdapterConfig
from .model import clamp_scores, load_model

logger = logging.getLogger(__name__)


class Pair(BaseModel):
    model_config = ConfigDict(extra="forbid")
    claim: str
    evidence: str


class ScoreRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    pairs: list[Pair]


def build_app(config: AdapterConfig, model=None) -> FastAPI:
    """Assemble the service; a model load failure aborts construction."""
    backend = model if model is not None else load_model(config.model, config.device)
    gate = threading.BoundedSemaphore(config.max_inflight)
    app = FastAPI(title="consistency scoring service", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def on_bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(Exception)
    async def on_internal_error(request: Request, exc: Exception):
        logger.exception("scoring failed")
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "model": getattr(backend, "identifier", config.model)}

    @app.post("/score")
    def score(request: ScoreRequest):
        if len(request.pairs) > config.max_batch:
            return JSONResponse(
                status_code=413,
                content={
                    "error": f"batch of {len(request.pairs)} exceeds max {config.max_batch}"
                },
            )
        for i, pair in enumerate(request.pairs):
            if not pair.claim.strip():
                return JSONResponse(
                    status_code=400, content={"error": f"pair {i}: claim must be nonempty"}
                )
        # Empty evidence means no support by definition; the backend never
        # sees those pairs.
        to_score = [
            (i, (p.claim, p.evidence))
            for i, p in enumerate(request.pairs)
            if p.evidence
        ]
        scores = [0.0] * len(request.pairs)
        if to_score:
            with gate:
                raw = backend.score_batch([pair for _, pair in to_score])
            if len(raw) != len(to_score):
                return JSONResponse(
                    status_code=500,
                    content={
                        "error": f"backend returned {len(raw)} scores for {len(to_score)} pairs"
                    },
                )
            for (i, _), value in zip(to_score, clamp_scores(list(raw))):
                scores[i] = value
        return {"scores": scores}

    return app
