"""Token models, the binary reduction, and empirical-entropy accounting.

A model maps (prompt, generated tokens) to a distribution over the next
token.  All embedding and retrieval logic runs on the binary reduction of
that distribution: each token id is a fixed-width big-endian bit pattern and
bits are sampled one at a time from the conditional mass of their subtree.
Chaining the conditionals reproduces the token distribution exactly, so the
reduction is distribution-preserving by construction.
"""

from __future__ import annotations

import hashlib
import json
import math
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence

import numpy as np

from .errors import (
    ConfigError,
    EncodingError,
    ImpossibleSampleError,
    InvalidPrefixError,
    ModelUnavailableError,
    ProtocolError,
)

_SUM_TOL = 1e-6


@dataclass
class TokenDistribution:
    """Probability vector over the token vocabulary."""

    probs: np.ndarray

    def __init__(self, probs):
        arr = np.asarray(probs, dtype=float)
        if arr.ndim != 1:
            raise ConfigError("token distribution must be one-dimensional")
        if (arr < 0).any():
            raise ConfigError("token distribution has negative entries")
        if abs(float(arr.sum()) - 1.0) > _SUM_TOL:
            raise ConfigError(f"token distribution sums to {arr.sum()}, not 1")
        self.probs = arr
        # cum[i] = mass of ids < i; padding patterns beyond the vocabulary
        # implicitly carry zero mass.
        self._cum = np.concatenate(([0.0], np.cumsum(arr)))

    def __len__(self) -> int:
        return len(self.probs)

    def range_mass(self, lo: int, hi: int) -> float:
        lo = min(lo, len(self.probs))
        hi = min(hi, len(self.probs))
        if hi <= lo:
            return 0.0
        return float(self._cum[hi] - self._cum[lo])


@dataclass(frozen=True)
class BitDistribution:
    """Probability that the next binary token is 1."""

    p_one: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_one <= 1.0:
            raise ConfigError(f"p_one out of [0, 1]: {self.p_one}")


def token_width(vocab_size: int) -> int:
    """Bits per token: ceil(log2(vocab_size))."""
    if vocab_size < 1:
        raise ConfigError("vocabulary must be non-empty")
    return max(1, (vocab_size - 1).bit_length())


def bit_conditional(dist: TokenDistribution, bit_prefix: Sequence[int]) -> BitDistribution:
    """Conditional probability of a 1 after bit_prefix, under the token ids'
    fixed-width big-endian encoding."""
    width = token_width(len(dist))
    k = len(bit_prefix)
    if k >= width:
        raise InvalidPrefixError(f"prefix of {k} bits leaves no bit to sample at width {width}")
    prefix_val = 0
    for b in bit_prefix:
        prefix_val = (prefix_val << 1) | (1 if b else 0)
    span = 1 << (width - k)
    lo = prefix_val * span
    total = dist.range_mass(lo, lo + span)
    if total <= 0.0:
        raise InvalidPrefixError(f"prefix {tuple(bit_prefix)} has zero mass")
    ones = dist.range_mass(lo + span // 2, lo + span)
    return BitDistribution(ones / total)


def sample_bit(dist: BitDistribution, rng_value: float) -> tuple[int, float]:
    """Draw a bit with the convention bit = 1 iff rng_value <= p_one.

    Returns (bit, empirical entropy of the chosen branch in bits).
    """
    bit = 1 if rng_value <= dist.p_one else 0
    p = dist.p_one if bit else 1.0 - dist.p_one
    if p <= 0.0:
        raise ImpossibleSampleError(f"sampled a zero-probability branch (p_one={dist.p_one})")
    return bit, -math.log2(p)


def tokens_to_bits(tokens: Sequence[int], width: int) -> tuple[int, ...]:
    """Concatenate fixed-width big-endian encodings of the token ids."""
    out: list[int] = []
    for t in tokens:
        if not 0 <= t < (1 << width):
            raise EncodingError(f"token id {t} out of range for width {width}")
        out.extend((t >> (width - 1 - j)) & 1 for j in range(width))
    return tuple(out)


def bits_to_tokens(bits: Sequence[int], width: int) -> tuple[int, ...]:
    if len(bits) % width:
        raise EncodingError(f"bit count {len(bits)} not a multiple of width {width}")
    out = []
    for i in range(0, len(bits), width):
        val = 0
        for b in bits[i : i + width]:
            val = (val << 1) | (1 if b else 0)
        out.append(val)
    return tuple(out)


@dataclass
class EntropyLedger:
    """Per-bit empirical entropies (-log2 of the sampled branch) and their running sum."""

    per_bit: list[float] = field(default_factory=list)
    cumulative: float = 0.0

    def record(self, entropy: float) -> None:
        self.per_bit.append(entropy)
        self.cumulative += entropy

    def prefix_sums(self) -> list[float]:
        total, out = 0.0, []
        for h in self.per_bit:
            total += h
            out.append(total)
        return out


class Model(Protocol):
    vocab_size: int
    done_token: Optional[int]
    max_len: Optional[int]

    def next_token_dist(self, prompt, generated: Sequence[int]) -> TokenDistribution: ...

    def config_digest(self) -> str: ...


def next_token_dist(model: Model, prompt, generated: Sequence[int]) -> TokenDistribution:
    """Query the model and validate the returned distribution."""
    dist = model.next_token_dist(prompt, generated)
    if len(dist) != model.vocab_size:
        raise ProtocolError(
            f"model returned {len(dist)} probabilities for vocabulary of {model.vocab_size}"
        )
    return dist


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


class CoinModel:
    """Context-free binary model: P(token 1) = p at every position."""

    def __init__(self, p: float, max_len: Optional[int] = None, done_token: Optional[int] = None):
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"coin bias must lie in [0, 1], got {p}")
        self.p = p
        self.vocab_size = 2
        self.done_token = done_token
        self.max_len = max_len
        self._dist = TokenDistribution([1.0 - p, p])

    def next_token_dist(self, prompt, generated):
        return self._dist

    def config_digest(self) -> str:
        return _digest({"type": "coin", "p": self.p, "max_len": self.max_len,
                        "done_token": self.done_token})


class MarkovModel:
    """First-order Markov chain over token ids."""

    def __init__(
        self,
        transitions: Sequence[Sequence[float]],
        init: Optional[Sequence[float]] = None,
        max_len: Optional[int] = None,
        done_token: Optional[int] = None,
    ):
        matrix = [list(map(float, row)) for row in transitions]
        n = len(matrix)
        if any(len(row) != n for row in matrix):
            raise ConfigError("transition matrix must be square")
        self.vocab_size = n
        self.rows = [TokenDistribution(row) for row in matrix]
        self.init = TokenDistribution(init if init is not None else [1.0 / n] * n)
        self.done_token = done_token
        self.max_len = max_len
        self._raw = {"transitions": matrix,
                     "init": list(init) if init is not None else None}

    def next_token_dist(self, prompt, generated):
        if not generated:
            return self.init
        return self.rows[generated[-1]]

    def config_digest(self) -> str:
        return _digest({"type": "markov", "max_len": self.max_len,
                        "done_token": self.done_token, **self._raw})


class UniformModel:
    """Uniform over the vocabulary at every position."""

    def __init__(self, vocab_size: int, max_len: Optional[int] = None,
                 done_token: Optional[int] = None):
        self.vocab_size = vocab_size
        self.done_token = done_token
        self.max_len = max_len
        self._dist = TokenDistribution([1.0 / vocab_size] * vocab_size)

    def next_token_dist(self, prompt, generated):
        return self._dist

    def config_digest(self) -> str:
        return _digest({"type": "uniform", "vocab_size": self.vocab_size,
                        "max_len": self.max_len, "done_token": self.done_token})


class DeterministicModel:
    """Emits a fixed token sequence with probability 1 (zero entropy)."""

    def __init__(self, sequence: Sequence[int], vocab_size: int,
                 done_token: Optional[int] = None):
        self.sequence = list(sequence)
        self.vocab_size = vocab_size
        self.done_token = done_token
        self.max_len = len(self.sequence)

    def next_token_dist(self, prompt, generated):
        probs = np.zeros(self.vocab_size)
        probs[self.sequence[len(generated) % len(self.sequence)]] = 1.0
        return TokenDistribution(probs)

    def config_digest(self) -> str:
        return _digest({"type": "deterministic", "sequence": self.sequence,
                        "vocab_size": self.vocab_size, "done_token": self.done_token})


class ReplayModel:
    """Replays a recorded distribution trace, one vector per generated token."""

    def __init__(self, trace: Sequence[Sequence[float]], vocab_size: Optional[int] = None,
                 done_token: Optional[int] = None):
        self.trace = [TokenDistribution(row) for row in trace]
        if not self.trace:
            raise ConfigError("replay trace is empty")
        self.vocab_size = vocab_size or len(self.trace[0])
        self.done_token = done_token
        self.max_len = len(self.trace)

    @classmethod
    def from_file(cls, path: Path | str, **kwargs) -> "ReplayModel":
        rows = []
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if line:
                rows.append(json.loads(line)["probs"])
        return cls(rows, **kwargs)

    def next_token_dist(self, prompt, generated):
        i = len(generated)
        if i >= len(self.trace):
            raise ConfigError(f"replay trace exhausted at token {i}")
        return self.trace[i]

    def config_digest(self) -> str:
        h = hashlib.sha256()
        for d in self.trace:
            h.update(d.probs.tobytes())
        return h.hexdigest()[:16]


class RecordingModel:
    """Wraps a model and records every distribution it served."""

    def __init__(self, inner: Model):
        self.inner = inner
        self.vocab_size = inner.vocab_size
        self.done_token = inner.done_token
        self.max_len = inner.max_len
        self.trace: list[TokenDistribution] = []

    def next_token_dist(self, prompt, generated):
        dist = self.inner.next_token_dist(prompt, generated)
        self.trace.append(dist)
        return dist

    def config_digest(self) -> str:
        return self.inner.config_digest()

    def dump_trace(self, path: Path | str) -> None:
        with open(path, "w") as fh:
            for d in self.trace:
                fh.write(json.dumps({"probs": d.probs.tolist()}) + "\n")


def _validate_remote_frame(frame: dict, vocab_size: int) -> TokenDistribution:
    probs = frame.get("probs")
    if probs is None:
        raise ProtocolError("distribution frame lacks probs")
    if "indices" in frame:
        # sparse frame: probs parallel to indices, all other entries zero
        if frame.get("residual_uniform", False):
            raise ProtocolError("residual_uniform frames are not supported")
        indices = np.asarray(frame["indices"], dtype=int)
        if len(indices) != len(probs):
            raise ProtocolError("sparse frame: indices and probs lengths differ")
        if len(indices) and (indices.min() < 0 or indices.max() >= vocab_size):
            raise ProtocolError("sparse frame: index out of range")
        dense = np.zeros(vocab_size)
        dense[indices] = probs
        probs = dense
    elif len(probs) != vocab_size:
        raise ProtocolError(f"expected {vocab_size} probs, got {len(probs)}")
    try:
        return TokenDistribution(probs)
    except ConfigError as exc:
        raise ProtocolError(f"malformed distribution: {exc}") from None


class HttpModel:
    """Client for the HTTP distribution bridge.

    The prompt is server-side text; generated tokens travel as ids.  Responses
    are memoized per generation session only (reset_session clears the cache)
    so repeated queries within a session stay deterministic.
    """

    def __init__(self, base_url: str, model_name: str = "default", timeout: float = 60.0):
        import requests

        self._requests = requests
        self.base_url = base_url.rstrip("/")
        self.model_name = model_name
        self.timeout = timeout
        self._cache: dict = {}
        try:
            info = self._post_or_get("GET", "/v1/info")
        except ModelUnavailableError:
            raise
        self.vocab_size = int(info["vocab_size"])
        self.done_token = info.get("done_token")
        self.max_len = info.get("max_len")
        self._info = info

    def _post_or_get(self, method: str, route: str, body: Optional[dict] = None) -> dict:
        url = self.base_url + route
        try:
            if method == "GET":
                resp = self._requests.get(url, timeout=self.timeout)
            else:
                resp = self._requests.post(url, json=body, timeout=self.timeout)
        except Exception as exc:
            raise ModelUnavailableError(f"{method} {url}: {exc}") from None
        if resp.status_code >= 400:
            raise ProtocolError(f"{method} {route} -> HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except Exception as exc:
            raise ProtocolError(f"non-JSON response from {route}: {exc}") from None

    def next_token_dist(self, prompt, generated):
        key = (prompt, tuple(generated))
        if key in self._cache:
            return self._cache[key]
        frame = self._post_or_get(
            "POST",
            "/v1/distribution",
            {"prompt": prompt, "tokens": list(generated), "model_name": self.model_name},
        )
        dist = _validate_remote_frame(frame, self.vocab_size)
        self._cache[key] = dist
        return dist

    def encode(self, text: str) -> list[int]:
        return self._post_or_get("POST", "/v1/encode", {"text": text,
                                                        "model_name": self.model_name})["tokens"]

    def decode(self, tokens: Sequence[int]) -> str:
        return self._post_or_get("POST", "/v1/decode", {"tokens": list(tokens),
                                                        "model_name": self.model_name})["text"]

    def reset_session(self) -> None:
        self._cache.clear()

    def config_digest(self) -> str:
        return _digest({"type": "remote", "info": self._info, "model_name": self.model_name})


class StdioModel:
    """Client for the JSON-lines subprocess bridge (one request per line)."""

    def __init__(self, argv: Sequence[str], model_name: str = "default"):
        try:
            self._proc = subprocess.Popen(
                list(argv), stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True
            )
        except OSError as exc:
            raise ModelUnavailableError(f"cannot spawn {argv!r}: {exc}") from None
        self.model_name = model_name
        self._cache: dict = {}
        info = self._call({"op": "info"})
        self.vocab_size = int(info["vocab_size"])
        self.done_token = info.get("done_token")
        self.max_len = info.get("max_len")
        self._info = info

    def _call(self, request: dict) -> dict:
        if self._proc.poll() is not None:
            raise ModelUnavailableError("bridge process exited")
        try:
            self._proc.stdin.write(json.dumps(request) + "\n")
            self._proc.stdin.flush()
            line = self._proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise ModelUnavailableError(f"bridge pipe failed: {exc}") from None
        if not line:
            raise ModelUnavailableError("bridge closed its stdout")
        try:
            frame = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"bridge sent non-JSON line: {exc}") from None
        if not frame.get("ok", False):
            err = frame.get("error", {})
            raise ProtocolError(f"bridge error {err.get('code')}: {err.get('message')}")
        return frame["result"]

    def next_token_dist(self, prompt, generated):
        key = (prompt, tuple(generated))
        if key in self._cache:
            return self._cache[key]
        frame = self._call(
            {"op": "distribution", "prompt": prompt, "tokens": list(generated),
             "model_name": self.model_name}
        )
        dist = _validate_remote_frame(frame, self.vocab_size)
        self._cache[key] = dist
        return dist

    def encode(self, text: str) -> list[int]:
        return self._call({"op": "encode", "text": text, "model_name": self.model_name})["tokens"]

    def decode(self, tokens: Sequence[int]) -> str:
        return self._call({"op": "decode", "tokens": list(tokens),
                           "model_name": self.model_name})["text"]

    def reset_session(self) -> None:
        self._cache.clear()

    def config_digest(self) -> str:
        return _digest({"type": "stdio", "info": self._info, "model_name": self.model_name})

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)


def model_from_config(config: dict) -> Model:
    """Build a model from the JSON config shape
    {"type", "params", "vocab_size", "done_token", "max_len"}."""
    kind = config.get("type")
    params = config.get("params", {})
    done = config.get("done_token")
    max_len = config.get("max_len")
    if kind == "coin":
        return CoinModel(params["p"], max_len=max_len, done_token=done)
    if kind == "markov":
        return MarkovModel(params["transitions"], init=params.get("init"),
                           max_len=max_len, done_token=done)
    if kind == "uniform":
        return UniformModel(config.get("vocab_size") or params["vocab_size"],
                            max_len=max_len, done_token=done)
    if kind == "deterministic":
        return DeterministicModel(params["sequence"],
                                  config.get("vocab_size") or params["vocab_size"],
                                  done_token=done)
    if kind == "replay":
        return ReplayModel.from_file(params["trace"], done_token=done)
    if kind in ("http", "stdio"):
        if kind == "http":
            model = HttpModel(params["url"], model_name=params.get("model_name", "default"))
        else:
            model = StdioModel(params["argv"], model_name=params.get("model_name", "default"))
        if max_len is not None:
            model.max_len = max_len  # client-side cap on top of the served done token
        return model
    raise ConfigError(f"unknown model type {kind!r}")


def load_model_config(path: Path | str) -> Model:
    return model_from_config(json.loads(Path(path).read_text()))


class BinaryReduction:
    """Stateful bit-level walk over a token model.

    Exposes the conditional probability of the next bit, accepts the sampled
    bit, assembles tokens at width boundaries, and stops once the done token
    is completed or max_len tokens were emitted.
    """

    def __init__(self, model: Model, prompt):
        self.model = model
        self.prompt = prompt
        self.width = token_width(model.vocab_size)
        self.tokens: list[int] = []
        self.pending: list[int] = []
        self.bit_index = 0
        self._dist: Optional[TokenDistribution] = None
        self._finished = False

    def finished(self) -> bool:
        return self._finished

    def p_one(self) -> float:
        if self._finished:
            raise ConfigError("generation already finished")
        if self._dist is None:
            self._dist = next_token_dist(self.model, self.prompt, self.tokens)
        return bit_conditional(self._dist, self.pending).p_one

    def push(self, bit: int) -> None:
        self.pending.append(1 if bit else 0)
        self.bit_index += 1
        if len(self.pending) == self.width:
            token = bits_to_tokens(self.pending, self.width)[0]
            self.tokens.append(token)
            self.pending.clear()
            self._dist = None
            if self.model.done_token is not None and token == self.model.done_token:
                self._finished = True
            if self.model.max_len is not None and len(self.tokens) >= self.model.max_len:
                self._finished = True
