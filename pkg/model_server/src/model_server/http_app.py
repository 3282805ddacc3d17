"""HTTP surface: POST /v1/distribution /v1/encode /v1/decode, GET /v1/info."""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .core import ModelRegistry, ServerError, handle


def build_app(registry: ModelRegistry) -> FastAPI:
    app = FastAPI(title="model-server")

    @app.exception_handler(ServerError)
    async def server_error(_request, exc: ServerError):
        return JSONResponse(status_code=exc.code, content={"error": exc.message})

    @app.get("/v1/info")
    def info(model_name: str = "default"):
        return handle(registry, "info", {"model_name": model_name})

    @app.post("/v1/distribution")
    def distribution(body: dict):
        body.pop("op", None)
        return handle(registry, "distribution", body)

    @app.post("/v1/encode")
    def encode(body: dict):
        body.pop("op", None)
        return handle(registry, "encode", body)

    @app.post("/v1/decode")
    def decode(body: dict):
        body.pop("op", None)
        return handle(registry, "decode", body)

    return app
