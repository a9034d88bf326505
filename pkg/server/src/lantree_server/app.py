"""FastAPI application exposing the probe protocol over a backend registry.

Request handling is stateless over immutable loaded backends; responses are
deterministic functions of (model, request)."""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from lantree_server.backends import BackendError


class DistRequest(BaseModel):
    model: str
    context: list[int] = Field(min_length=1)
    top_m: int = Field(ge=1)


class GenerateRequest(BaseModel):
    model: str
    prompt: list[int]
    max_new: int = Field(ge=1)
    stop: list[int] = Field(default_factory=list)


class TokenizeRequest(BaseModel):
    model: str
    text: str


class DetokenizeRequest(BaseModel):
    model: str
    tokens: list[int]


def create_app(registry: dict[str, object]) -> FastAPI:
    if not registry:
        raise ValueError("at least one backend must be configured")
    app = FastAPI(title="lantree-server")

    def backend_for(model: Optional[str]):
        if model is None and len(registry) == 1:
            return next(iter(registry.values()))
        if model not in registry:
            raise BackendError(f"unknown model {model!r}", status=404)
        return registry[model]

    @app.exception_handler(BackendError)
    async def backend_error_handler(_request, exc: BackendError):
        return JSONResponse(status_code=exc.status, content={"error": str(exc)})

    @app.post("/v1/next_token_distribution")
    def next_token_distribution(req: DistRequest):
        return backend_for(req.model).next_token_distribution(req.context, req.top_m)

    @app.post("/v1/generate")
    def generate(req: GenerateRequest):
        return {"tokens": backend_for(req.model).generate(req.prompt, req.max_new, req.stop)}

    @app.post("/v1/tokenize")
    def tokenize(req: TokenizeRequest):
        backend = backend_for(req.model)
        if getattr(backend, "tokenizer", None) is None:
            raise BackendError(f"model {req.model!r} has no tokenizer configured", status=400)
        return {"tokens": backend.tokenize(req.text)}

    @app.post("/v1/detokenize")
    def detokenize(req: DetokenizeRequest):
        backend = backend_for(req.model)
        if getattr(backend, "tokenizer", None) is None:
            raise BackendError(f"model {req.model!r} has no tokenizer configured", status=400)
        return {"text": backend.detokenize(req.tokens)}

    @app.get("/v1/info")
    def info(model: Optional[str] = Query(default=None)):
        backend = backend_for(model)
        name = model or next(iter(registry))
        return {
            "model": name,
            "vocab_size": int(backend.vocab_size),
            "context_window": int(backend.context_window),
            "tokenizer_hash": str(backend.tokenizer_hash),
        }

    return app
