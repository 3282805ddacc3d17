"""JSON schemas for every request and response frame on the wire."""

_TOKENS = {"type": "array", "items": {"type": "integer", "minimum": 0}}

REQUEST_SCHEMAS = {
    "distribution": {
        "type": "object",
        "properties": {
            "op": {"const": "distribution"},
            "prompt": {"type": "string"},
            "tokens": _TOKENS,
            "model_name": {"type": "string"},
            "sparse": {"type": "boolean"},
        },
        "required": ["prompt", "tokens"],
        "additionalProperties": False,
    },
    "encode": {
        "type": "object",
        "properties": {
            "op": {"const": "encode"},
            "text": {"type": "string"},
            "model_name": {"type": "string"},
        },
        "required": ["text"],
        "additionalProperties": False,
    },
    "decode": {
        "type": "object",
        "properties": {
            "op": {"const": "decode"},
            "tokens": _TOKENS,
            "model_name": {"type": "string"},
        },
        "required": ["tokens"],
        "additionalProperties": False,
    },
    "info": {
        "type": "object",
        "properties": {
            "op": {"const": "info"},
            "model_name": {"type": "string"},
        },
        "additionalProperties": False,
    },
}

_PROBS = {"type": "array", "items": {"type": "number", "minimum": 0}}

RESPONSE_SCHEMAS = {
    "distribution": {
        "type": "object",
        "properties": {
            "probs": _PROBS,
            "indices": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            "residual_uniform": {"const": False},
            "vocab_size": {"type": "integer", "minimum": 1},
            "done_token": {"type": ["integer", "null"]},
        },
        "required": ["probs", "vocab_size", "done_token"],
        "additionalProperties": False,
    },
    "encode": {
        "type": "object",
        "properties": {"tokens": _TOKENS},
        "required": ["tokens"],
        "additionalProperties": False,
    },
    "decode": {
        "type": "object",
        "properties": {"text": {"type": "string"}},
        "required": ["text"],
        "additionalProperties": False,
    },
    "info": {
        "type": "object",
        "properties": {
            "model_name": {"type": "string"},
            "backend": {"type": "string"},
            "vocab_size": {"type": "integer", "minimum": 1},
            "done_token": {"type": ["integer", "null"]},
            "temperature": {"type": "number"},
            "top_k": {"type": ["integer", "null"]},
        },
        "required": ["model_name", "vocab_size", "done_token", "temperature", "top_k"],
        "additionalProperties": False,
    },
    "error": {
        "type": "object",
        "properties": {
            "error": {"type": "string"},
        },
        "required": ["error"],
        "additionalProperties": False,
    },
}
