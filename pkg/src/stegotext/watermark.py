"""Zero-bit watermark: key-correlated sampling plus a score-based detector.

Generation spends true randomness until the response prefix has accumulated
lambda bits of empirical entropy, then switches to keyed pseudorandom values
so that every later bit is correlated with the key.  Detection knows neither
the prompt nor the model: it scans candidate prefixes and looks for a score
surplus that unrelated text cannot produce.

For key-independent text each per-bit score is exponential with mean 1, so
the centered sum (score - length) is a mean-zero walk; key-correlated bits
shift it up by ln 2 per bit of empirical entropy.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ConfigError
from .keys import PrfFn, SecretKey, bound_prf
from .models import BinaryReduction, BitDistribution, EntropyLedger, Model, sample_bit
from .transcript import BitRecord, Transcript

# Scores clamp the unit value away from {0, 1} before taking logs; the bias
# is far below anything observable at float resolution.
_CLAMP = 2.0**-64


def bit_score(bit: int, prf_value: float) -> float:
    """ln(1/v) where v is the probability weight the key assigns to this bit."""
    v = prf_value if bit else 1.0 - prf_value
    if v < _CLAMP:
        v = _CLAMP
    elif v > 1.0 - _CLAMP:
        v = 1.0 - _CLAMP
    return -math.log(v)


@dataclass
class Score:
    """Running total (nats) over a number of scored bits."""

    total: float = 0.0
    length: int = 0

    def add(self, value: float) -> None:
        self.total += value
        self.length += 1

    @property
    def normalized(self) -> float:
        if self.length < 1:
            raise ConfigError("normalized score undefined on zero bits")
        return (self.total - self.length) / math.sqrt(self.length)


@dataclass(frozen=True)
class WatermarkVerdict:
    detected: bool
    split_index: Optional[int] = None


def wat_generate(
    key: SecretKey,
    model: Model,
    prompt,
    lambda_bits: int,
    rng: Optional[random.Random] = None,
    prf: Optional[PrfFn] = None,
    debug: bool = False,
) -> Transcript:
    """Generate a watermarked response.

    Phase A samples with true randomness until the ledger reaches lambda_bits
    of empirical entropy (fixing the prefix); phase B flips each bit by
    comparing the keyed unit value against the conditional probability.
    """
    if lambda_bits < 1:
        raise ConfigError("lambda_bits must be positive")
    rng = rng or random.SystemRandom()
    reduction = BinaryReduction(model, prompt)
    ledger = EntropyLedger()
    bits: list[int] = []
    records: list[BitRecord] = []
    prefix: Optional[tuple[int, ...]] = None
    boundary: Optional[int] = None
    keyed = None

    while not reduction.finished():
        i = reduction.bit_index
        p_one = reduction.p_one()
        if keyed is None:
            u = rng.random()
        else:
            u = keyed(i, None)
        bit, entropy = sample_bit(BitDistribution(p_one), u)
        bits.append(bit)
        ledger.record(entropy)
        records.append(BitRecord(p_one, entropy, u if debug else None))
        reduction.push(bit)
        if keyed is None and ledger.cumulative >= lambda_bits:
            prefix = tuple(bits)
            boundary = len(bits)
            keyed = bound_prf(key, prefix, prf)

    return Transcript(
        bits=bits,
        tokens=list(reduction.tokens),
        width=reduction.width,
        per_bit=records,
        model_config_digest=model.config_digest(),
        phase_boundary=boundary,
        low_entropy=prefix is None,
    )


def plain_generate(
    model: Model,
    prompt,
    uniforms,
    debug: bool = False,
) -> Transcript:
    """Sample the model directly, drawing one unit value per bit.

    This is the unwatermarked reference process: feeding it the same unit
    values a keyed generator consumed must reproduce that generator's output
    bit for bit.  `uniforms` is any zero-argument callable returning floats
    in [0, 1), e.g. random.Random(seed).random.
    """
    reduction = BinaryReduction(model, prompt)
    bits: list[int] = []
    records: list[BitRecord] = []
    while not reduction.finished():
        p_one = reduction.p_one()
        u = uniforms()
        bit, entropy = sample_bit(BitDistribution(p_one), u)
        bits.append(bit)
        records.append(BitRecord(p_one, entropy, u if debug else None))
        reduction.push(bit)
    return Transcript(
        bits=bits,
        tokens=list(reduction.tokens),
        width=reduction.width,
        per_bit=records,
        model_config_digest=model.config_digest(),
    )


def wat_detect(
    key: SecretKey,
    bits: Sequence[int],
    lambda_bits: int,
    prf: Optional[PrfFn] = None,
) -> WatermarkVerdict:
    """Scan candidate prefix lengths; fire when the post-prefix score surplus
    exceeds lambda * sqrt(scored length).  Quadratic in the input length."""
    L = len(bits)
    for i in range(1, L):
        keyed = bound_prf(key, bits[:i], prf)
        total = 0.0
        n = L - i
        threshold = n + lambda_bits * math.sqrt(n)
        for j in range(i, L):
            total += bit_score(bits[j], keyed(j, None))
            # Per-bit scores are strictly positive, so the running sum beating
            # the final threshold early already decides this candidate.
            if total > threshold:
                return WatermarkVerdict(True, i)
    return WatermarkVerdict(False, None)
