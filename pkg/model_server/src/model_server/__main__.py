"""Entry point: `python -m model_server [--stdio] [--backend byte|gpt2] ...`."""

from __future__ import annotations

import argparse
import sys

from .backends import BackendError, build_backend
from .core import ModelRegistry
from .stdio import serve_stdio


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="model_server")
    ap.add_argument("--stdio", action="store_true", help="JSON-lines mode on stdin/stdout")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8750)
    ap.add_argument("--backend", default="byte", choices=["byte", "gpt2"])
    ap.add_argument("--model-path", help="local weights directory for gpt2")
    ap.add_argument("--temperature", type=float, default=1.0)
    ap.add_argument("--top-k", type=int, default=None)
    args = ap.parse_args(argv)

    kwargs = {}
    if args.backend == "gpt2":
        kwargs = {"model_path": args.model_path, "temperature": args.temperature,
                  "top_k": args.top_k}
    try:
        backend = build_backend(args.backend, **kwargs)
    except BackendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    registry = ModelRegistry({backend.name: backend, "default": backend},
                             default=backend.name)

    if args.stdio:
        serve_stdio(registry)
        return 0

    import uvicorn

    from .http_app import build_app

    uvicorn.run(build_app(registry), host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
