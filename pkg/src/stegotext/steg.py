"""Payload embedding and retrieval over the bit-level view of a token model.

The payload travels through the feedback code of `ecc`: the embedder samples
every bit with a keyed unit value tied to the code symbol currently being
transmitted, while simultaneously emulating the retriever.  Both sides run
the same chunk engine: per bit, each of the three candidate symbols gets a
score update, and the first symbol whose normalized score crosses the
threshold ends the chunk.  Because the embedder sees the same chunk stream
the retriever will see, it always knows which symbol actually landed
(noiseless feedback), including when one landed wrong.

The full scheme wraps this in three phases so that many responses may be
generated under one key: a true-randomness phase that fixes a high-entropy
prefix, a plain-watermark phase that lets the retriever verify that prefix,
and the payload phase proper.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .ecc import CodeSymbol, EccState, SYMBOL_ORDER
from .errors import ConfigError
from .keys import PrfFn, SecretKey, bound_prf
from .models import BinaryReduction, BitDistribution, EntropyLedger, Model, sample_bit
from .transcript import BitRecord, Transcript
from .watermark import bit_score

# Verification window per candidate prefix, in bits, as a multiple of
# lambda_bits.  Bounds retrieval at O(L * window) with a small constant.
VERIFY_WINDOW_FACTOR = 64


@dataclass
class StegConfig:
    lambda_bits: int = 16
    threshold_t: float = 2.0
    # Error-fraction margin the feedback code is provisioned for; recorded for
    # capacity planning only, encoding itself needs no epsilon.
    epsilon: float = 0.25
    scored_bits_per_token: Optional[int] = None
    max_payload_bits: Optional[int] = None

    def __post_init__(self) -> None:
        if self.lambda_bits < 1:
            raise ConfigError("lambda_bits must be positive")
        if self.threshold_t <= 0:
            raise ConfigError("threshold_t must be positive")
        if self.scored_bits_per_token is not None and self.scored_bits_per_token < 1:
            raise ConfigError("scored_bits_per_token must be >= 1 when set")

    @classmethod
    def from_file(cls, path: Path | str) -> "StegConfig":
        data = json.loads(Path(path).read_text())
        allowed = {"lambda_bits", "threshold_t", "epsilon",
                   "scored_bits_per_token", "max_payload_bits"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class ScoreState:
    """Per-symbol running scores since the last chunk boundary."""

    by_symbol: dict[CodeSymbol, float] = field(
        default_factory=lambda: {s: 0.0 for s in SYMBOL_ORDER}
    )
    length: int = 0


class SymbolScorer:
    """Chunk engine shared verbatim by embedder and retriever.

    Feeding it the same bits with the same keyed values always yields the
    same code stream; that equality is the noiseless feedback the embedder
    relies on.  Symbols are checked in the fixed order 0, 1, backspace, so a
    simultaneous crossing resolves identically on both sides.
    """

    def __init__(
        self,
        score_prf: Callable[[int, int], float],
        threshold_t: float,
        max_payload_bits: Optional[int] = None,
    ):
        self.score_prf = score_prf
        self.threshold_t = threshold_t
        self.max_payload_bits = max_payload_bits
        self.state = ScoreState()
        self.code: list[CodeSymbol] = []
        self.decoded: list[int] = []
        self.halted = False

    def observe(self, index: int, bit: int) -> Optional[CodeSymbol]:
        """Score one response bit; returns the symbol if a chunk just closed."""
        if self.halted:
            return None
        st = self.state
        st.length += 1
        sqrt_len = math.sqrt(st.length)
        for sym in SYMBOL_ORDER:
            st.by_symbol[sym] += bit_score(bit, self.score_prf(index, int(sym)))
            if (st.by_symbol[sym] - st.length) / sqrt_len > self.threshold_t:
                self.code.append(sym)
                if sym == CodeSymbol.BACK:
                    if self.decoded:
                        self.decoded.pop()
                else:
                    self.decoded.append(int(sym))
                self.state = ScoreState()
                if (
                    self.max_payload_bits is not None
                    and len(self.decoded) >= self.max_payload_bits
                ):
                    self.halted = True
                return sym
        return None


def _scored_position(index: int, width: int, m: Optional[int]) -> bool:
    # With partial-bit scoring only the first m bits of every token take part
    # in chunk scores and symbol-tied sampling.
    return m is None or (index % width) < m


def _check_payload(payload: Sequence[int]) -> tuple[int, ...]:
    payload = tuple(int(b) for b in payload)
    if not payload:
        raise ConfigError("payload bit sequence is empty")
    if any(b not in (0, 1) for b in payload):
        raise ConfigError("payload must consist of bits")
    return payload


class Phase(Enum):
    ENTROPY = "entropy"
    MARK = "mark"
    PAYLOAD = "payload"


@dataclass
class StegSession:
    """Mutable state of one three-phase embedding session.

    Phase transitions are monotone ENTROPY -> MARK -> PAYLOAD: the prefix is
    fixed at the first bit where cumulative entropy reaches lambda, and the
    payload phase starts once the mark score surplus clears the verification
    threshold.
    """

    payload: tuple[int, ...]
    phase: Phase = Phase.ENTROPY
    prefix_r: Optional[tuple[int, ...]] = None
    entropy_ledger: EntropyLedger = field(default_factory=EntropyLedger)
    r_score: float = 0.0
    r_score_len: int = 0
    ecc: EccState = None
    scorer: Optional[SymbolScorer] = None
    mark_boundary: Optional[int] = None

    def __post_init__(self) -> None:
        self.ecc = EccState(self.payload)

    @property
    def code(self) -> list[CodeSymbol]:
        return self.scorer.code if self.scorer is not None else []

    def next_sample_symbol(self) -> Optional[int]:
        if self.scorer is None or self.scorer.halted:
            return None
        nxt = self.ecc.next_symbol()
        return None if nxt is None else int(nxt)


def steg_generate_one(
    key: SecretKey,
    model: Model,
    prompt,
    payload: Sequence[int],
    config: StegConfig,
    prf: Optional[PrfFn] = None,
    debug: bool = False,
) -> Transcript:
    """Single-response embedding: keyed values depend on the current code
    symbol from the very first bit; no true-randomness prefix."""
    payload = _check_payload(payload)
    keyed = bound_prf(key, (), prf)
    reduction = BinaryReduction(model, prompt)
    m = config.scored_bits_per_token
    scorer = SymbolScorer(keyed, config.threshold_t, config.max_payload_bits)
    ecc = EccState(payload)
    bits: list[int] = []
    records: list[BitRecord] = []

    while not reduction.finished():
        i = reduction.bit_index
        p_one = reduction.p_one()
        in_scored = _scored_position(i, reduction.width, m)
        next_sym = None if scorer.halted else ecc.next_symbol()
        sample_sym = int(next_sym) if (in_scored and next_sym is not None) else None
        u = keyed(i, sample_sym)
        bit, entropy = sample_bit(BitDistribution(p_one), u)
        bits.append(bit)
        records.append(BitRecord(p_one, entropy, u if debug else None))
        reduction.push(bit)
        if in_scored:
            fired = scorer.observe(i, bit)
            if fired is not None:
                ecc.push(fired)

    return Transcript(
        bits=bits,
        tokens=list(reduction.tokens),
        width=reduction.width,
        per_bit=records,
        model_config_digest=model.config_digest(),
        payload_started=True,
        code=[int(s) for s in scorer.code] if debug else None,
    )


@dataclass(frozen=True)
class RetrievalDetail:
    bits: tuple[int, ...]
    code: tuple[int, ...]
    # Full scheme only: verified prefix length and the bit index where the
    # verification score crossed.
    prefix_len: Optional[int] = None
    verified_at: Optional[int] = None


def retrieve_one_detail(
    key: SecretKey,
    bits: Sequence[int],
    config: StegConfig,
    width: int = 1,
    prf: Optional[PrfFn] = None,
) -> RetrievalDetail:
    keyed = bound_prf(key, (), prf)
    m = config.scored_bits_per_token
    scorer = SymbolScorer(keyed, config.threshold_t, config.max_payload_bits)
    for i, bit in enumerate(bits):
        if _scored_position(i, width, m):
            scorer.observe(i, bit)
    return RetrievalDetail(tuple(scorer.decoded), tuple(int(s) for s in scorer.code))


def steg_retrieve_one(
    key: SecretKey,
    bits: Sequence[int],
    config: StegConfig,
    width: int = 1,
    prf: Optional[PrfFn] = None,
) -> tuple[int, ...]:
    """Replay the chunk engine over a bare bit sequence; linear time."""
    return retrieve_one_detail(key, bits, config, width, prf).bits


def steg_generate(
    key: SecretKey,
    model: Model,
    prompt,
    payload: Sequence[int],
    config: StegConfig,
    rng: Optional[random.Random] = None,
    prf: Optional[PrfFn] = None,
    debug: bool = False,
) -> Transcript:
    """Three-phase embedding usable across many queries under one key.

    Phase 1 samples with true randomness until the ledger holds lambda_bits
    of empirical entropy, fixing the prefix.  Phase 2 embeds a plain
    watermark against that prefix until its score surplus clears
    lambda * sqrt(length), giving the retriever a verifiable signal.  Phase 3
    runs the single-response scheme with the prefix folded into every keyed
    value.
    """
    payload = _check_payload(payload)
    rng = rng or random.SystemRandom()
    lam = config.lambda_bits
    m = config.scored_bits_per_token
    reduction = BinaryReduction(model, prompt)
    session = StegSession(payload)
    keyed = None

    bits: list[int] = []
    records: list[BitRecord] = []

    while not reduction.finished():
        i = reduction.bit_index
        p_one = reduction.p_one()
        if session.phase is Phase.ENTROPY:
            # spend true randomness, count entropy
            u = rng.random()
            bit, entropy = sample_bit(BitDistribution(p_one), u)
        elif session.phase is Phase.MARK:
            # plain watermark against the fixed prefix
            u = keyed(i, None)
            bit, entropy = sample_bit(BitDistribution(p_one), u)
            session.r_score += bit_score(bit, u)
            session.r_score_len += 1
        else:
            # payload chunks
            in_scored = _scored_position(i, reduction.width, m)
            sample_sym = session.next_sample_symbol() if in_scored else None
            u = keyed(i, sample_sym)
            bit, entropy = sample_bit(BitDistribution(p_one), u)
        bits.append(bit)
        session.entropy_ledger.record(entropy)
        records.append(BitRecord(p_one, entropy, u if debug else None))
        reduction.push(bit)
        if session.scorer is not None and _scored_position(i, reduction.width, m):
            fired = session.scorer.observe(i, bit)
            if fired is not None:
                session.ecc.push(fired)
        # phase transitions, each taking effect from the next bit on
        if session.phase is Phase.ENTROPY and session.entropy_ledger.cumulative >= lam:
            session.phase = Phase.MARK
            session.prefix_r = tuple(bits)
            keyed = bound_prf(key, session.prefix_r, prf)
        elif (
            session.phase is Phase.MARK
            and not reduction.finished()  # the payload phase needs a next bit
            and session.r_score - session.r_score_len
            > lam * math.sqrt(session.r_score_len)
        ):
            session.phase = Phase.PAYLOAD
            session.mark_boundary = reduction.bit_index
            session.scorer = SymbolScorer(keyed, config.threshold_t,
                                          config.max_payload_bits)

    return Transcript(
        bits=bits,
        tokens=list(reduction.tokens),
        width=reduction.width,
        per_bit=records,
        model_config_digest=model.config_digest(),
        phase_boundary=len(session.prefix_r) if session.prefix_r is not None else None,
        mark_boundary=session.mark_boundary,
        low_entropy=session.phase is Phase.ENTROPY,
        payload_started=session.phase is Phase.PAYLOAD,
        code=[int(s) for s in session.code] if (debug and session.scorer is not None) else None,
    )


def retrieve_detail(
    key: SecretKey,
    bits: Sequence[int],
    config: StegConfig,
    width: int = 1,
    prf: Optional[PrfFn] = None,
) -> Optional[RetrievalDetail]:
    """Full-scheme retrieval with diagnostics; quadratic in the worst case.

    For every candidate prefix length j the verification score is grown until
    it clears lambda * sqrt(length) (candidate accepted) or the window is
    exhausted (candidate rejected).  The first candidate whose payload phase
    decodes a non-empty bit string wins.
    """
    lam = config.lambda_bits
    m = config.scored_bits_per_token
    window = VERIFY_WINDOW_FACTOR * lam
    bits = list(bits)
    L = len(bits)
    for j in range(1, L):
        keyed = bound_prf(key, bits[:j], prf)
        r_score = 0.0
        r_len = 0
        scorer: Optional[SymbolScorer] = None
        verified_at: Optional[int] = None
        for i in range(j, L):
            if scorer is None:
                if r_len >= window:
                    break
                r_score += bit_score(bits[i], keyed(i, None))
                r_len += 1
                if r_score - r_len > lam * math.sqrt(r_len):
                    verified_at = i
                    scorer = SymbolScorer(keyed, config.threshold_t, config.max_payload_bits)
            elif _scored_position(i, width, m):
                scorer.observe(i, bits[i])
        if scorer is not None and scorer.decoded:
            return RetrievalDetail(
                tuple(scorer.decoded),
                tuple(int(s) for s in scorer.code),
                prefix_len=j,
                verified_at=verified_at,
            )
    return None


def steg_retrieve(
    key: SecretKey,
    bits: Sequence[int],
    config: StegConfig,
    width: int = 1,
    prf: Optional[PrfFn] = None,
) -> Optional[tuple[int, ...]]:
    """Retrieve the payload bits from a bare bit sequence, or None."""
    detail = retrieve_detail(key, bits, config, width, prf)
    return None if detail is None else detail.bits


@dataclass(frozen=True)
class SaturationReport:
    saturated: bool
    # First violating window as (start index, window length), scanning window
    # lengths upward from r0 and starts left to right.
    violation: Optional[tuple[int, int]] = None


def saturation_check(ledger: EntropyLedger | Sequence[float], r0: int) -> SaturationReport:
    """Check that every window of length r >= r0 holds at least
    10 * sqrt(r) * ln(r) bits of empirical entropy."""
    if r0 < 2:
        raise ConfigError("r0 must be at least 2")
    series = ledger.per_bit if isinstance(ledger, EntropyLedger) else list(ledger)
    L = len(series)
    prefix = np.concatenate(([0.0], np.cumsum(np.asarray(series, dtype=float))))
    for r in range(r0, L + 1):
        bound = 10.0 * math.sqrt(r) * math.log(r)
        sums = prefix[r:] - prefix[:-r]
        bad = np.nonzero(sums < bound)[0]
        if bad.size:
            return SaturationReport(False, (int(bad[0]), r))
    return SaturationReport(True, None)
