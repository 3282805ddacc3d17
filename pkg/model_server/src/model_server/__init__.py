"""Bridge exposing next-token distributions, tokenization, and detokenization
over HTTP and a stdio JSON-lines protocol."""

from .backends import BackendError, ByteBackend, TransformersBackend, build_backend
from .core import ModelRegistry, ServerError, handle
from .http_app import build_app
from .stdio import serve_stdio

__version__ = "0.1.0"
