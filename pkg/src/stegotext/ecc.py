"""Dynamic error-correcting code over {0, 1, <-} with noiseless feedback.

The sender always knows what the receiver decoded so far (feedback is free
here: the embedder can emulate the retriever).  Decoding treats 0/1 as
appended bits and the backspace symbol as "delete the last decoded bit".
The transmission rule is: send a backspace while the decoded string carries a
wrong suffix, otherwise send the next unconfirmed message bit.  Every correct
delivery raises the potential last - suff by exactly 1 and every corrupted
delivery lowers it by at most 1, which is what makes e errors cost at most
2e confirmed bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from math import ceil
from typing import Iterable, Optional, Sequence

from .errors import ConfigError, TransmissionComplete


class CodeSymbol(IntEnum):
    ZERO = 0
    ONE = 1
    BACK = 2

    def __str__(self) -> str:  # diagnostics only
        return {CodeSymbol.ZERO: "0", CodeSymbol.ONE: "1", CodeSymbol.BACK: "←"}[self]


SYMBOL_ORDER = (CodeSymbol.ZERO, CodeSymbol.ONE, CodeSymbol.BACK)


def decode(received: Sequence[CodeSymbol | int]) -> tuple[int, ...]:
    """Evaluate the received stream: bits append, BACK deletes (no-op on empty)."""
    out: list[int] = []
    for s in received:
        if s == CodeSymbol.BACK:
            if out:
                out.pop()
        else:
            out.append(int(s))
    return tuple(out)


def last_agree(message: Sequence[int], received: Sequence[CodeSymbol | int]) -> int:
    """Length of the longest prefix on which message and decode(received) agree."""
    decoded = decode(received)
    n = 0
    for m, d in zip(message, decoded):
        if m != d:
            break
        n += 1
    return n


def suffix_len(message: Sequence[int], received: Sequence[CodeSymbol | int]) -> int:
    """Number of wrong trailing bits in decode(received)."""
    return len(decode(received)) - last_agree(message, received)


def potential(message: Sequence[int], received: Sequence[CodeSymbol | int]) -> int:
    return last_agree(message, received) - suffix_len(message, received)


def next_symbol(message: Sequence[int], received: Sequence[CodeSymbol | int]) -> CodeSymbol:
    """Symbol the sender should transmit given what the receiver holds.

    Raises TransmissionComplete once decode(received) equals the whole message.
    """
    decoded = decode(received)
    agree = 0
    for m, d in zip(message, decoded):
        if m != d:
            break
        agree += 1
    if len(decoded) > agree:
        return CodeSymbol.BACK
    if agree == len(message):
        raise TransmissionComplete("message fully delivered")
    return CodeSymbol(message[agree])


def required_length(k: int, epsilon: float | Fraction) -> int:
    """Symbols needed to guarantee the first k bits despite an epsilon error fraction."""
    eps = Fraction(str(epsilon)) if isinstance(epsilon, float) else Fraction(epsilon)
    if not 0 <= eps < Fraction(1, 2):
        raise ConfigError(f"epsilon must lie in [0, 0.5), got {epsilon}")
    return ceil(Fraction(k) / (1 - 2 * eps))


@dataclass
class EccState:
    """Incremental sender state: message plus everything received so far.

    Maintains decode, last and suff in O(1) per symbol; the pure functions
    above are the definitional reference and the tests check both agree.
    """

    message: tuple[int, ...]
    received: list[CodeSymbol] = field(default_factory=list)
    decoded: list[int] = field(default_factory=list)
    last: int = 0
    suff: int = 0

    def __init__(self, message: Sequence[int], received: Iterable[CodeSymbol | int] = ()):
        self.message = tuple(message)
        self.received = []
        self.decoded = []
        self.last = 0
        self.suff = 0
        for s in received:
            self.push(CodeSymbol(s))

    def push(self, symbol: CodeSymbol) -> None:
        self.received.append(symbol)
        if symbol == CodeSymbol.BACK:
            if self.decoded:
                self.decoded.pop()
                if self.suff > 0:
                    self.suff -= 1
                else:
                    self.last -= 1
        else:
            bit = int(symbol)
            self.decoded.append(bit)
            if self.suff == 0 and self.last < len(self.message) and self.message[self.last] == bit:
                self.last += 1
            else:
                self.suff += 1

    @property
    def potential(self) -> int:
        return self.last - self.suff

    def complete(self) -> bool:
        return self.suff == 0 and self.last == len(self.message)

    def next_symbol(self) -> Optional[CodeSymbol]:
        """Next symbol to send, or None once the message is fully delivered."""
        if self.suff > 0:
            return CodeSymbol.BACK
        if self.last == len(self.message):
            return None
        return CodeSymbol(self.message[self.last])

    def clone(self) -> "EccState":
        twin = EccState.__new__(EccState)
        twin.message = self.message
        twin.received = list(self.received)
        twin.decoded = list(self.decoded)
        twin.last = self.last
        twin.suff = self.suff
        return twin


@dataclass(frozen=True)
class ChannelStep:
    step: int
    sent: CodeSymbol
    received: CodeSymbol
    potential: int
    decoded: tuple[int, ...]


def simulate_channel(
    message: Sequence[int],
    corrupt: dict[int, CodeSymbol],
    n: int,
) -> list[ChannelStep]:
    """Run the feedback protocol for n symbols, corrupting the listed steps.

    corrupt maps 0-based step -> the symbol the receiver gets instead of the
    sent one.  A corrupt entry equal to the sent symbol is a protocol-use bug.
    """
    state = EccState(message)
    steps: list[ChannelStep] = []
    for i in range(n):
        sent = state.next_symbol()
        if sent is None:
            break
        got = corrupt.get(i, sent)
        state.push(got)
        steps.append(ChannelStep(i, sent, got, state.potential, tuple(state.decoded)))
    return steps


_DUMP_CHARS = {CodeSymbol.ZERO: "0", CodeSymbol.ONE: "1", CodeSymbol.BACK: "<"}


def format_trace(steps: Sequence[ChannelStep]) -> str:
    """Tab-separated debug dump: step, sent, received, potential, decode-so-far."""
    lines = []
    for s in steps:
        lines.append(
            "\t".join(
                [
                    str(s.step),
                    _DUMP_CHARS[s.sent],
                    _DUMP_CHARS[s.received],
                    str(s.potential),
                    "".join(str(b) for b in s.decoded),
                ]
            )
        )
    return "\n".join(lines)
