"""Generation transcripts: bits plus per-bit metadata for analysis and tests."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .models import EntropyLedger


@dataclass
class BitRecord:
    p_one: float
    entropy: float
    # Uniform value that decided this bit; key material, recorded in debug
    # transcripts only.
    prf_value: Optional[float] = None


@dataclass
class Transcript:
    bits: list[int]
    tokens: list[int]
    width: int
    per_bit: list[BitRecord]
    model_config_digest: str
    # First bit index driven by keyed randomness (end of the true-random
    # prefix); None when the entropy phase never completed.
    phase_boundary: Optional[int] = None
    # First bit index of the payload section (full scheme only).
    mark_boundary: Optional[int] = None
    low_entropy: bool = False
    payload_started: bool = False
    code: Optional[list[int]] = None  # debug only: emitted code symbols

    @property
    def prefix(self) -> tuple[int, ...]:
        if self.phase_boundary is None:
            return ()
        return tuple(self.bits[: self.phase_boundary])

    def ledger(self) -> EntropyLedger:
        led = EntropyLedger()
        for rec in self.per_bit:
            led.record(rec.entropy)
        return led

    def to_json(self) -> dict:
        per_bit = []
        for rec in self.per_bit:
            entry = {"p_one": rec.p_one, "entropy": rec.entropy}
            if rec.prf_value is not None:
                entry["prf_value"] = rec.prf_value
            per_bit.append(entry)
        out = {
            "bits": list(self.bits),
            "tokens": list(self.tokens),
            "width": self.width,
            "phase_boundary": self.phase_boundary,
            "per_bit": per_bit,
            "model_config_digest": self.model_config_digest,
            "low_entropy": self.low_entropy,
            "payload_started": self.payload_started,
        }
        if self.mark_boundary is not None:
            out["mark_boundary"] = self.mark_boundary
        if self.code is not None:
            out["code"] = list(self.code)
        return out

    def save(self, path: Path | str) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def from_json(cls, data: dict) -> "Transcript":
        per_bit = [
            BitRecord(e["p_one"], e["entropy"], e.get("prf_value"))
            for e in data.get("per_bit", [])
        ]
        return cls(
            bits=list(data["bits"]),
            tokens=list(data.get("tokens", [])),
            width=int(data.get("width", 1)),
            per_bit=per_bit,
            model_config_digest=data.get("model_config_digest", ""),
            phase_boundary=data.get("phase_boundary"),
            mark_boundary=data.get("mark_boundary"),
            low_entropy=bool(data.get("low_entropy", False)),
            payload_started=bool(data.get("payload_started", False)),
            code=data.get("code"),
        )

    @classmethod
    def load(cls, path: Path | str) -> "Transcript":
        return cls.from_json(json.loads(Path(path).read_text()))
