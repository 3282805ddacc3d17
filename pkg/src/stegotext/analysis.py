"""Measurement tooling: capacity curves and entropy profiles.

Capacity is measured as the longest matching prefix between the payload fed
to the embedder and the bits the retriever got back, averaged over fresh-key
trials at each response length.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, ModelUnavailableError
from .keys import SecretKey, setup
from .models import Model, model_from_config, token_width
from .steg import StegConfig, steg_generate, steg_generate_one, steg_retrieve, steg_retrieve_one
from .transcript import Transcript
from .steg import SaturationReport, saturation_check


@dataclass(frozen=True)
class CapacityPoint:
    response_len_tokens: int
    mean_recovered_bits: float
    trials: int
    stderr: float

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError("a capacity point needs at least one trial")
        if self.mean_recovered_bits < 0:
            raise ConfigError("mean recovered bits cannot be negative")


@dataclass
class CapacityResult:
    points: list[CapacityPoint] = field(default_factory=list)
    # length -> error note for lengths that could not be measured
    errors: dict[int, str] = field(default_factory=dict)


class LengthCappedModel:
    """View of a model with max_len overridden; used to sweep response lengths."""

    def __init__(self, inner: Model, max_len: int):
        self.inner = inner
        self.vocab_size = inner.vocab_size
        self.done_token = inner.done_token
        self.max_len = max_len

    def next_token_dist(self, prompt, generated):
        return self.inner.next_token_dist(prompt, generated)

    def config_digest(self) -> str:
        return self.inner.config_digest()


def matched_prefix_len(expected: Sequence[int], got: Optional[Sequence[int]]) -> int:
    if got is None:
        return 0
    n = 0
    for a, b in zip(expected, got):
        if a != b:
            break
        n += 1
    return n


def _run_trial(
    model_config: Optional[dict],
    model: Optional[Model],
    prompt,
    length: int,
    key_bytes: bytes,
    payload: tuple[int, ...],
    config: StegConfig,
    scheme: str,
    part1_seed: Optional[int],
) -> int:
    if model is None:
        model = model_from_config(model_config)
    if hasattr(model, "reset_session"):
        model.reset_session()  # remote caches are per generation session
    capped = LengthCappedModel(model, length)
    key = SecretKey(key_bytes)
    width = token_width(capped.vocab_size)
    if scheme == "one-query":
        transcript = steg_generate_one(key, capped, prompt, payload, config)
        got = steg_retrieve_one(key, transcript.bits, config, width=width)
    elif scheme == "full":
        rng = random.Random(part1_seed)
        transcript = steg_generate(key, capped, prompt, payload, config, rng=rng)
        got = steg_retrieve(key, transcript.bits, config, width=width)
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")
    return matched_prefix_len(payload, got)


def capacity_sweep(
    key_source: Optional[Callable[[], SecretKey]],
    model: Model | dict,
    prompt,
    lengths: Sequence[int],
    trials_per_length: int,
    config: StegConfig,
    scheme: str = "one-query",
    workers: int = 1,
    seed: Optional[int] = None,
) -> CapacityResult:
    """Measure recovered payload bits against response length.

    Each trial runs with a fresh key and a random payload long enough never
    to be exhausted.  `model` may be a live model or a config dict; a config
    dict is required for workers > 1 because trials then run in separate
    processes.
    """
    if trials_per_length < 1:
        raise ConfigError("trials_per_length must be >= 1")
    meta_rng = random.Random(seed)
    if key_source is None:
        # fresh key per trial; seeded sweeps derive keys from the meta rng so
        # the whole measurement is reproducible
        key_source = (lambda: setup(128, rng=meta_rng)) if seed is not None else (lambda: setup(128))
    model_config = model if isinstance(model, dict) else None
    live_model = None if isinstance(model, dict) else model
    if workers > 1 and model_config is None:
        raise ConfigError("parallel sweeps need a model config dict")
    result = CapacityResult()
    try:
        if live_model is None and workers <= 1:
            # serial sweeps build the model once; remote bridges in particular
            # must not be respawned per trial
            live_model = model_from_config(model_config)
        vocab = (
            live_model.vocab_size
            if live_model is not None
            else model_from_config(model_config).vocab_size
        )
    except ModelUnavailableError as exc:
        result.errors.update({length: str(exc) for length in lengths})
        return result
    width = token_width(vocab)
    for length in lengths:
        jobs = []
        for _ in range(trials_per_length):
            payload = tuple(meta_rng.randrange(2) for _ in range(max(8, length * width)))
            jobs.append(
                (
                    model_config,
                    live_model,
                    prompt,
                    length,
                    key_source().bytes,
                    payload,
                    config,
                    scheme,
                    meta_rng.randrange(2**63),
                )
            )
        try:
            if workers > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    recovered = list(pool.map(_run_trial_star, jobs))
            else:
                recovered = [_run_trial(*job) for job in jobs]
        except ModelUnavailableError as exc:
            result.errors[length] = str(exc)
            continue
        arr = np.asarray(recovered, dtype=float)
        stderr = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
        result.points.append(
            CapacityPoint(length, float(arr.mean()), len(arr), stderr)
        )
    return result


def _run_trial_star(job):
    return _run_trial(*job)


CSV_HEADER = "length,trials,mean_bits,stderr"


def write_capacity_csv(points: Sequence[CapacityPoint], path: Path | str) -> None:
    lines = [CSV_HEADER]
    for p in points:
        lines.append(
            f"{p.response_len_tokens},{p.trials},{p.mean_recovered_bits!r},{p.stderr!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_capacity_csv(path: Path | str) -> list[CapacityPoint]:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"unexpected capacity CSV header in {path}")
    out = []
    for line in lines[1:]:
        length, trials, mean_bits, stderr = line.split(",")
        out.append(CapacityPoint(int(length), float(mean_bits), int(trials), float(stderr)))
    return out


GNUPLOT_TEMPLATE = """set datafile separator ','
set xlabel 'Response length, tokens'
set ylabel 'Recovered payload bits'
set key off
set grid ytics
plot '{csv}' skip 1 using 1:3:4 with yerrorlines pt 7
"""


def write_capacity_gnuplot(csv_path: Path | str, out_path: Path | str) -> None:
    Path(out_path).write_text(GNUPLOT_TEMPLATE.format(csv=csv_path))


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares slope, intercept, and R^2."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


DEFAULT_SATURATION_R0 = (8, 32, 128)


@dataclass
class EntropyProfile:
    per_bit: list[float]
    per_token: list[float]
    total: float
    # window length -> smallest entropy sum over all windows of that length
    window_mins: dict[int, float]
    saturation: dict[int, SaturationReport]


def entropy_profile(
    transcript: Transcript,
    saturation_r0: Sequence[int] = DEFAULT_SATURATION_R0,
    window_lengths: Sequence[int] = (8, 32, 128),
) -> EntropyProfile:
    """Windowed entropy statistics and saturation verdicts for a transcript."""
    per_bit = [rec.entropy for rec in transcript.per_bit]
    width = transcript.width
    per_token = [
        sum(per_bit[i : i + width]) for i in range(0, len(per_bit) - width + 1, width)
    ]
    prefix = np.concatenate(([0.0], np.cumsum(per_bit)))
    window_mins = {}
    for r in window_lengths:
        if r <= len(per_bit):
            window_mins[r] = float((prefix[r:] - prefix[:-r]).min())
    saturation = {r0: saturation_check(per_bit, r0) for r0 in saturation_r0}
    return EntropyProfile(
        per_bit=per_bit,
        per_token=per_token,
        total=float(prefix[-1]),
        window_mins=window_mins,
        saturation=saturation,
    )
