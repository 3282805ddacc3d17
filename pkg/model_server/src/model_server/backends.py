"""Model backends: a deterministic byte-level toy and a transformers wrapper.

A backend owns a tokenizer pair (encode/decode) and produces the full
next-token probability vector for a context.  Distributions must be
deterministic for a fixed context within one server lifetime; clients replay
recorded traces, so repeated queries have to match byte for byte.
"""

from __future__ import annotations

import hashlib
import os
from typing import Optional, Sequence

import numpy as np


class BackendError(Exception):
    """Raised when a backend cannot be constructed (missing weights etc.)."""


class ByteBackend:
    """Self-contained byte-level model for protocol tests and desk work.

    Tokens 0-255 are Latin-1 bytes (a bijection, so encode/decode round-trip
    on any generated sequence); token 256 terminates.  The distribution for a
    context is a Dirichlet draw seeded from the trailing context window:
    deterministic, full-support, entropy a few bits per token.
    """

    name = "byte"
    vocab_size = 257
    done_token = 256
    temperature = 1.0
    top_k: Optional[int] = None

    _CONTEXT_WINDOW = 4

    def distribution(self, prompt: str, tokens: Sequence[int]) -> np.ndarray:
        tail = list(tokens[-self._CONTEXT_WINDOW:])
        material = prompt.encode("utf-8", "replace")[-16:] + bytes(
            t % 256 for t in tail
        ) + bytes([len(tail)])
        seed = int.from_bytes(hashlib.sha256(material).digest()[:8], "big")
        rng = np.random.default_rng(seed)
        probs = rng.dirichlet(np.full(self.vocab_size, 0.6))
        return probs / probs.sum()

    def encode(self, text: str) -> list[int]:
        try:
            return list(text.encode("latin-1"))
        except UnicodeEncodeError as exc:
            raise ValueError(f"byte backend accepts Latin-1 text only: {exc}") from None

    def decode(self, tokens: Sequence[int]) -> str:
        return bytes(t for t in tokens if t < 256).decode("latin-1")


class TransformersBackend:
    """Serves a causal LM from a local path or the hub cache.

    The prompt travels as text and generated tokens as ids; the context is
    tokenized prompt + ids.  Softmax runs in float64 at the configured
    temperature; top-k, when set, renormalizes over the k best entries.
    """

    def __init__(
        self,
        model_path: Optional[str] = None,
        name: str = "gpt2",
        temperature: float = 1.0,
        top_k: Optional[int] = None,
    ):
        try:
            import torch
            from transformers import AutoModelForCausalLM, AutoTokenizer
        except ImportError as exc:
            raise BackendError(f"transformers backend needs torch+transformers: {exc}")
        source = model_path or os.environ.get("STEGOTEXT_GPT2_DIR") or name
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(source)
            self._model = AutoModelForCausalLM.from_pretrained(source)
        except Exception as exc:
            raise BackendError(f"cannot load {source!r}: {exc}") from None
        self._model.eval()
        self._torch = torch
        self.name = name
        self.vocab_size = int(self._model.config.vocab_size)
        self.done_token = self._tokenizer.eos_token_id
        self.temperature = temperature
        self.top_k = top_k

    def distribution(self, prompt: str, tokens: Sequence[int]) -> np.ndarray:
        torch = self._torch
        ids = self._tokenizer.encode(prompt) + list(tokens)
        if not ids:
            ids = [self._tokenizer.bos_token_id or self.done_token]
        with torch.no_grad():
            logits = self._model(torch.tensor([ids])).logits[0, -1, : self.vocab_size]
        logits = logits.double() / self.temperature
        probs = torch.softmax(logits, dim=-1)
        if self.top_k is not None:
            kept, idx = torch.topk(probs, self.top_k)
            out = torch.zeros_like(probs)
            out[idx] = kept / kept.sum()
            probs = out
        return probs.numpy()

    def encode(self, text: str) -> list[int]:
        return self._tokenizer.encode(text)

    def decode(self, tokens: Sequence[int]) -> str:
        return self._tokenizer.decode(list(tokens))


def build_backend(kind: str, **kwargs):
    if kind == "byte":
        return ByteBackend()
    if kind == "gpt2":
        return TransformersBackend(**kwargs)
    raise BackendError(f"unknown backend {kind!r}")
