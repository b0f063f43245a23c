"""HTTP reward service for external RL trainers.

``POST /v1/reward`` scores one Thinker response with the same code path as
the evaluation pipeline (:func:`thinkpress.pipeline.assess_response`), so a
trainer sees exactly the rewards an offline run would log.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import replace
from typing import List, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .backend import ChatBackend
from .errors import BackendError, InvalidInput
from .pipeline import RunSettings, assess_response
from .rewards import RewardWeights
from .trace import compute_budget

log = logging.getLogger(__name__)


class WeightsIn(BaseModel):
    lambda_fmt: float = Field(0.05, ge=0, le=1)
    lambda_utility: float = Field(0.95, ge=0, le=1)


class RewardRequest(BaseModel):
    response_text: str
    question: str = Field(min_length=1)
    golds: List[str] = Field(min_length=1)
    context_tokens: int = Field(ge=1)
    ratio: int = Field(ge=1)
    gamma: Optional[float] = Field(None, gt=0)
    weights: Optional[WeightsIn] = None


class RewardResponse(BaseModel):
    format: int
    utility: float
    budget: float
    hack_gate: int
    total: float
    lambda_fmt: float
    lambda_utility: float
    budget_tokens: int
    raw_tokens: int
    truncated_tokens: int
    prediction: str
    em: int
    f1: float


def score_request(req: RewardRequest, answerer: ChatBackend, settings: RunSettings) -> RewardResponse:
    if req.gamma is not None:
        settings = replace(settings, gamma=req.gamma)
    if req.weights is not None:
        settings = replace(settings, weights=RewardWeights(**req.weights.model_dump()))
    budget = compute_budget(req.context_tokens, req.ratio)
    a = assess_response(req.response_text, req.question, req.golds, budget, answerer, settings)
    r = a.reward
    return RewardResponse(
        format=r.format,
        utility=r.utility,
        budget=r.budget,
        hack_gate=r.hack_gate,
        total=r.total,
        lambda_fmt=r.weights.lambda_fmt,
        lambda_utility=r.weights.lambda_utility,
        budget_tokens=budget.budget,
        raw_tokens=a.trace.raw_tokens,
        truncated_tokens=a.trace.truncated_tokens,
        prediction=a.prediction,
        em=a.score.em,
        f1=a.score.f1,
    )


def create_app(
    answerer: ChatBackend, settings: RunSettings = RunSettings(), max_concurrency: int = 4
) -> FastAPI:
    app = FastAPI(title="thinkpress reward service")
    slots = threading.BoundedSemaphore(max_concurrency)

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        errors = [
            {"field": ".".join(str(p) for p in e["loc"][1:]) or "body", "message": e["msg"]}
            for e in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"error": "invalid request", "details": errors})

    @app.get("/healthz")
    def healthz():
        if answerer.ping():
            return {"status": "ok", "answerer": answerer.name}
        return JSONResponse(status_code=503, content={"status": "answerer unreachable"})

    @app.post("/v1/reward", response_model=RewardResponse)
    def reward(req: RewardRequest):
        try:
            with slots:
                return score_request(req, answerer, settings)
        except InvalidInput as e:
            return JSONResponse(status_code=400, content={"error": str(e)})
        except BackendError as e:
            log.warning("answerer failed: %s", e)
            return JSONResponse(status_code=502, content={"error": f"{type(e).__name__}: {e}"})

    return app


def serve_rewards(
    answerer: ChatBackend,
    settings: RunSettings = RunSettings(),
    host: str = "127.0.0.1",
    port: int = 8080,
    max_concurrency: int = 4,
) -> None:
    import uvicorn

    uvicorn.run(create_app(answerer, settings, max_concurrency), host=host, port=port)
