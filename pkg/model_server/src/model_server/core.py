"""Transport-independent request handling shared by the HTTP and stdio modes."""

from __future__ import annotations

from typing import Optional

import jsonschema
import numpy as np

from .schemas import REQUEST_SCHEMAS


class ServerError(Exception):
    """Error frame with an HTTP-equivalent status code."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


class ModelRegistry:
    """Named backends plus a default; lookups never crash the server."""

    def __init__(self, backends: dict, default: str):
        if default not in backends:
            raise ValueError(f"default model {default!r} not among backends")
        self._backends = dict(backends)
        self._default = default

    def get(self, model_name: Optional[str]):
        if model_name in (None, "", "default"):
            return self._backends[self._default]
        try:
            return self._backends[model_name]
        except KeyError:
            raise ServerError(404, f"unknown model {model_name!r}") from None

    def names(self) -> list[str]:
        return sorted(self._backends)


def _validate(op: str, request: dict) -> None:
    try:
        jsonschema.validate(request, REQUEST_SCHEMAS[op])
    except jsonschema.ValidationError as exc:
        raise ServerError(400, f"malformed {op} request: {exc.message}") from None


def handle(registry: ModelRegistry, op: str, request: dict) -> dict:
    """Serve one request; raises ServerError for every client-side fault."""
    if op not in REQUEST_SCHEMAS:
        raise ServerError(400, f"unknown op {op!r}")
    _validate(op, request)
    backend = registry.get(request.get("model_name"))

    if op == "info":
        return {
            "model_name": backend.name,
            "backend": type(backend).__name__,
            "vocab_size": backend.vocab_size,
            "done_token": backend.done_token,
            "temperature": backend.temperature,
            "top_k": backend.top_k,
        }

    if op == "distribution":
        tokens = request["tokens"]
        bad = [t for t in tokens if t >= backend.vocab_size]
        if bad:
            raise ServerError(400, f"token id {bad[0]} out of range "
                                   f"for vocabulary of {backend.vocab_size}")
        probs = np.asarray(backend.distribution(request["prompt"], tokens), dtype=float)
        if probs.shape != (backend.vocab_size,):
            raise ServerError(500, "backend returned a malformed distribution")
        frame = {"vocab_size": backend.vocab_size, "done_token": backend.done_token}
        if request.get("sparse"):
            nz = np.nonzero(probs)[0]
            frame.update(
                indices=[int(i) for i in nz],
                probs=[float(probs[i]) for i in nz],
                residual_uniform=False,
            )
        else:
            frame["probs"] = [float(p) for p in probs]
        return frame

    if op == "encode":
        try:
            return {"tokens": backend.encode(request["text"])}
        except ValueError as exc:
            raise ServerError(400, str(exc)) from None

    # decode
    tokens = request["tokens"]
    bad = [t for t in tokens if t >= backend.vocab_size]
    if bad:
        raise ServerError(400, f"token id {bad[0]} out of range")
    return {"text": backend.decode(tokens)}
