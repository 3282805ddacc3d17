"""Keyed pseudorandom values in [0, 1) with a canonical, bit-exact input encoding.

The generator and the retriever never share state beyond the secret key, so
every keyed random value must be reproducible from (key, logical input) alone.
The canonical serialization below is normative: version byte 0x01, uint32-BE
bit length of the prefix, prefix bits packed MSB-first and zero-padded to a
byte boundary, uint64-BE index, one symbol byte.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

from .errors import ConfigError

SUPPORTED_KEY_BITS = (64, 128, 256)

_VERSION = b"\x01"

# Symbol byte values. 0/1 are the code bits, 2 is the backspace symbol of the
# feedback code, 3 is the distinguished "no symbol" input used by the plain
# watermark and by bits that carry no code symbol.
SYMBOL_BYTES = {0: b"\x00", 1: b"\x01", 2: b"\x02", None: b"\x03"}


@dataclass(frozen=True)
class SecretKey:
    """Fixed-length secret key; all watermark/steg randomness derives from it."""

    bytes: bytes

    def __post_init__(self) -> None:
        if len(self.bytes) * 8 not in SUPPORTED_KEY_BITS:
            raise ConfigError(
                f"key must be one of {SUPPORTED_KEY_BITS} bits, got {len(self.bytes) * 8}"
            )

    @property
    def bits(self) -> int:
        return len(self.bytes) * 8


@dataclass(frozen=True)
class PrfInput:
    """Logical input of one keyed-random draw.

    prefix: bit sequence fixed by the entropy phase (empty for the one-query
    scheme), index: global bit position, symbol: 0, 1, 2 (backspace) or None.
    """

    prefix: tuple[int, ...]
    index: int
    symbol: Optional[int] = None

    @classmethod
    def of(cls, prefix: Optional[Sequence[int]], index: int, symbol: Optional[int]) -> "PrfInput":
        return cls(tuple(prefix) if prefix else (), index, symbol)


def pack_bits(bits: Sequence[int]) -> bytes:
    """Pack bits MSB-first, zero-padded to a byte boundary."""
    out = bytearray((len(bits) + 7) // 8)
    for i, b in enumerate(bits):
        if b:
            out[i >> 3] |= 0x80 >> (i & 7)
    return bytes(out)


def serialize_input(inp: PrfInput) -> bytes:
    """Canonical byte encoding; injective because every field is length-delimited."""
    if not 0 <= inp.index < 2**64:
        raise ConfigError(f"index out of uint64 range: {inp.index}")
    if inp.symbol not in SYMBOL_BYTES:
        raise ConfigError(f"unknown symbol {inp.symbol!r}")
    r = inp.prefix
    return (
        _VERSION
        + len(r).to_bytes(4, "big")
        + pack_bits(r)
        + inp.index.to_bytes(8, "big")
        + SYMBOL_BYTES[inp.symbol]
    )


def setup(lambda_bits: int, rng=None) -> SecretKey:
    """Generate a fresh key of lambda_bits bits.

    Uses the OS CSPRNG by default; a seeded `random.Random` may be passed for
    reproducible tests only.
    """
    if lambda_bits not in SUPPORTED_KEY_BITS:
        raise ConfigError(f"unsupported key size {lambda_bits}, expected one of {SUPPORTED_KEY_BITS}")
    n = lambda_bits // 8
    material = rng.randbytes(n) if rng is not None else secrets.token_bytes(n)
    return SecretKey(material)


class Prf:
    """HMAC-SHA256 based PRF mapping PrfInput to a uniform value in [0, 1).

    The value is the first 8 digest bytes read as a big-endian uint64, divided
    by 2^64. Instances precompute the HMAC pads once per key; `unit` is pure.
    """

    def __init__(self, key: SecretKey):
        self.key = key
        self._base = hmac.new(key.bytes, digestmod=hashlib.sha256)

    def unit(self, inp: PrfInput) -> float:
        h = self._base.copy()
        h.update(serialize_input(inp))
        return int.from_bytes(h.digest()[:8], "big") / 2.0**64


class PrefixPrf:
    """PRF with the prefix folded into the HMAC state up front.

    Digest-equal to Prf on inputs sharing that prefix, but each draw only
    hashes the 9 trailing bytes; retrieval loops, which try one prefix per
    candidate split, stay quadratic instead of cubic.
    """

    def __init__(self, key: SecretKey, prefix: Sequence[int]):
        prefix = tuple(prefix)
        base = hmac.new(key.bytes, digestmod=hashlib.sha256)
        base.update(_VERSION + len(prefix).to_bytes(4, "big") + pack_bits(prefix))
        self._base = base

    def unit(self, index: int, symbol: Optional[int]) -> float:
        h = self._base.copy()
        h.update(index.to_bytes(8, "big") + SYMBOL_BYTES[symbol])
        return int.from_bytes(h.digest()[:8], "big") / 2.0**64


def prf_unit(key: SecretKey, inp: PrfInput) -> float:
    """One-shot form of Prf(key).unit(inp)."""
    return Prf(key).unit(inp)


# Injectable PRF shape used by the generation/retrieval entry points; tests
# substitute logged-uniform mocks through it.
PrfFn = Callable[[SecretKey, PrfInput], float]


def bound_prf(
    key: SecretKey, prefix: Sequence[int], prf: Optional[PrfFn] = None
) -> Callable[[int, Optional[int]], float]:
    """(index, symbol) -> unit value with the prefix fixed.

    Takes the fast PrefixPrf path unless a custom prf override is supplied.
    """
    if prf is None:
        return PrefixPrf(key, prefix).unit
    r = tuple(prefix)
    return lambda index, symbol: prf(key, PrfInput(r, index, symbol))


def save_key(key: SecretKey, path: Path | str) -> None:
    Path(path).write_text(key.bytes.hex() + "\n")


def load_key(path: Path | str) -> SecretKey:
    text = Path(path).read_text().strip()
    try:
        material = bytes.fromhex(text)
    except ValueError as exc:
        raise ConfigError(f"key file {path} is not hex: {exc}") from None
    return SecretKey(material)
