"""Stdio JSON-lines mode: one request object per line, one response per line.

Success frames are {"ok": true, "result": {...}}; failures are
{"ok": false, "error": {"code": <400|404|500>, "message": ...}}.  The loop
never exits on a bad request, only on EOF.
"""

from __future__ import annotations

import json
import sys

from .core import ModelRegistry, ServerError, handle


def serve_stdio(registry: ModelRegistry, stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ServerError(400, "request must be a JSON object")
            op = request.get("op")
            if not isinstance(op, str):
                raise ServerError(400, "request lacks an op field")
            result = handle(registry, op, request)
            frame = {"ok": True, "result": result}
        except ServerError as exc:
            frame = {"ok": False, "error": {"code": exc.code, "message": exc.message}}
        except json.JSONDecodeError as exc:
            frame = {"ok": False, "error": {"code": 400, "message": f"bad JSON: {exc}"}}
        stdout.write(json.dumps(frame) + "\n")
        stdout.flush()
