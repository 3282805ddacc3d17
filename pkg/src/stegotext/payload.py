"""Byte payload framing.

Retrieval only ever guarantees a prefix of the transmitted bits, so the bit
stream starts with a 16-bit big-endian bit count.  That lets the extractor
decide whether it recovered the whole payload or only part of it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ConfigError

MAX_PAYLOAD_BITS = 2**16 - 1


def bytes_to_bits(data: bytes) -> tuple[int, ...]:
    return tuple((byte >> (7 - i)) & 1 for byte in data for i in range(8))


def bits_to_bytes(bits: Sequence[int]) -> bytes:
    out = bytearray()
    for i in range(0, len(bits) - len(bits) % 8, 8):
        val = 0
        for b in bits[i : i + 8]:
            val = (val << 1) | (1 if b else 0)
        out.append(val)
    return bytes(out)


def frame_payload(data: bytes) -> tuple[int, ...]:
    """Length-prefixed bit stream for a byte payload."""
    body = bytes_to_bits(data)
    if len(body) > MAX_PAYLOAD_BITS:
        raise ConfigError(f"payload of {len(body)} bits exceeds {MAX_PAYLOAD_BITS}")
    if not body:
        raise ConfigError("payload is empty")
    header = tuple((len(body) >> (15 - i)) & 1 for i in range(16))
    return header + body


@dataclass(frozen=True)
class RecoveredPayload:
    data: Optional[bytes]  # full payload bytes when complete, else None
    complete: bool
    declared_bits: Optional[int]  # None when even the header is partial
    body_bits: tuple[int, ...]


def unframe_payload(bits: Sequence[int]) -> RecoveredPayload:
    """Interpret retrieved bits under the length-prefix framing."""
    bits = tuple(bits)
    if len(bits) < 16:
        return RecoveredPayload(None, False, None, ())
    declared = 0
    for b in bits[:16]:
        declared = (declared << 1) | (1 if b else 0)
    body = bits[16 : 16 + declared]
    complete = declared > 0 and len(body) == declared
    data = bits_to_bytes(body) if complete and declared % 8 == 0 else None
    if complete and declared % 8 != 0:
        # Non-byte payloads are legal at the bit level; report bits only.
        data = None
    return RecoveredPayload(data, complete, declared, body)
