#!/usr/bin/env python3
"""Calibration oracle for the statistical expectations frozen into the tests.

Runs Monte Carlo measurements of every registered round-trip / detection /
chunk statistic and prints them.  Test thresholds in tests/ were registered
from this script's output (larger N than the tests use, margins noted
inline); re-run it after any change to scoring, thresholds, or the PRF.
"""

from __future__ import annotations

import argparse
import math
import random
import statistics
import sys

from stegotext import (
    CoinModel,
    DeterministicModel,
    StegConfig,
    frame_payload,
    setup,
    steg_generate,
    steg_generate_one,
    steg_retrieve,
    steg_retrieve_one,
    wat_detect,
    wat_generate,
)
from stegotext.analysis import capacity_sweep, linear_fit, matched_prefix_len


def _fresh_key(seed: int):
    return setup(128, rng=random.Random(seed))


def roundtrip_full(n_seeds: int, length_bits: int, lambda_bits: int = 16) -> dict:
    cfg = StegConfig(lambda_bits=lambda_bits, threshold_t=2.0)
    model = CoinModel(0.5, max_len=length_bits)
    meta = random.Random(20_000 + length_bits)
    prefix_ge8 = full = part3 = 0
    prefixes = []
    for s in range(n_seeds):
        key = _fresh_key(meta.randrange(2**62))
        payload = frame_payload(meta.randrange(2**32).to_bytes(4, "big"))
        t = steg_generate(key, model, (), payload, cfg, rng=random.Random(meta.randrange(2**62)))
        got = steg_retrieve(key, t.bits, cfg)
        n = matched_prefix_len(payload, got)
        prefixes.append(n)
        part3 += t.payload_started
        prefix_ge8 += n >= 8
        full += n >= len(payload)
    return {
        "seeds": n_seeds,
        "bits": length_bits,
        "part3_reached": part3 / n_seeds,
        "mean_prefix": statistics.mean(prefixes),
        "p_prefix_ge8": prefix_ge8 / n_seeds,
        "p_full_framed": full / n_seeds,
    }


def roundtrip_one_query(n_seeds: int, length_bits: int, payload_bits: int = 10) -> dict:
    cfg = StegConfig(threshold_t=2.0)
    model = CoinModel(0.5, max_len=length_bits)
    meta = random.Random(31_000 + length_bits)
    prefixes, wrong_key_prefixes = [], []
    for s in range(n_seeds):
        key = _fresh_key(meta.randrange(2**62))
        payload = tuple(meta.randrange(2) for _ in range(payload_bits))
        t = steg_generate_one(key, model, (), payload, cfg)
        got = steg_retrieve_one(key, t.bits, cfg)
        prefixes.append(matched_prefix_len(payload, got))
        other = _fresh_key(meta.randrange(2**62))
        wrong = steg_retrieve_one(other, t.bits, cfg)
        wrong_key_prefixes.append(matched_prefix_len(payload, wrong))
    return {
        "seeds": n_seeds,
        "bits": length_bits,
        "payload_bits": payload_bits,
        "mean_prefix": statistics.mean(prefixes),
        "p_prefix_ge8": sum(p >= 8 for p in prefixes) / n_seeds,
        "wrong_key_mean_prefix": statistics.mean(wrong_key_prefixes),
    }


def deterministic_no_fire(n_seeds: int, length_bits: int = 50) -> dict:
    cfg = StegConfig(threshold_t=2.0)
    model = DeterministicModel([1] * length_bits, vocab_size=2)
    meta = random.Random(777)
    empty = 0
    code_lens = []
    for s in range(n_seeds):
        key = _fresh_key(meta.randrange(2**62))
        t = steg_generate_one(key, model, (), (1, 0, 1, 1), cfg, debug=True)
        code_lens.append(len(t.code))
        empty += not t.code
    return {
        "seeds": n_seeds,
        "bits": length_bits,
        "p_code_empty": empty / n_seeds,
        "mean_code_len": statistics.mean(code_lens),
    }


def watermark_detection(n_seeds: int, total_bits: int, lambda_bits: int = 16) -> dict:
    model = CoinModel(0.5, max_len=total_bits)
    meta = random.Random(555)
    detected = 0
    for s in range(n_seeds):
        key = _fresh_key(meta.randrange(2**62))
        t = wat_generate(key, model, (), lambda_bits, rng=random.Random(meta.randrange(2**62)))
        v = wat_detect(key, t.bits, lambda_bits)
        detected += v.detected
    return {"seeds": n_seeds, "bits": total_bits, "p_detected": detected / n_seeds}


def capacity(n_trials: int) -> dict:
    cfg = StegConfig(threshold_t=2.0)
    res = capacity_sweep(
        None,
        {"type": "coin", "params": {"p": 0.5}},
        (),
        [100, 200, 300, 400, 500],
        n_trials,
        cfg,
        scheme="one-query",
        seed=4242,
    )
    xs = [p.response_len_tokens for p in res.points]
    ys = [p.mean_recovered_bits for p in res.points]
    slope, intercept, r2 = linear_fit(xs, ys)
    return {
        "trials": n_trials,
        "means": dict(zip(xs, [round(y, 2) for y in ys])),
        "slope": round(slope, 4),
        "r2": round(r2, 4),
    }


def chunk_error_rate(n_chunks: int, threshold_t: float, length_cap: int) -> dict:
    """Fraction of chunks where a wrong symbol fires first, on a p=0.5 stream
    with a fixed intended symbol."""
    from stegotext.ecc import CodeSymbol
    from stegotext.keys import PrfInput, Prf
    from stegotext.steg import SymbolScorer
    from stegotext.models import BitDistribution, sample_bit

    meta = random.Random(808)
    wrong = 0
    lengths = []
    timeouts = 0
    index = 0
    key = _fresh_key(3)
    prf = Prf(key)
    keyed = lambda i, sym: prf.unit(PrfInput((), i, sym))
    for c in range(n_chunks):
        intended = CodeSymbol(meta.randrange(2))
        scorer = SymbolScorer(keyed, threshold_t)
        fired = None
        start = index
        while fired is None and index - start < length_cap:
            u = keyed(index, int(intended))
            bit, _ = sample_bit(BitDistribution(0.5), u)
            fired = scorer.observe(index, bit)
            index += 1
        if fired is None:
            timeouts += 1
        elif fired != intended:
            wrong += 1
        lengths.append(index - start)
    return {
        "chunks": n_chunks,
        "threshold_t": threshold_t,
        "wrong_rate": wrong / n_chunks,
        "timeout_rate": timeouts / n_chunks,
        "mean_chunk_bits": statistics.mean(lengths),
    }


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--section", default="all")
    args = ap.parse_args()
    run = lambda name: args.section in ("all", name)

    if run("full600"):
        print("full-scheme round trip, stated desk params (600 bits, lambda=16):")
        print(" ", roundtrip_full(args.seeds, 600))
    if run("full2400"):
        print("full-scheme round trip, 2400 bits, lambda=16:")
        print(" ", roundtrip_full(args.seeds, 2400))
    if run("one100"):
        print("one-query round trip, 100 bits, 10-bit payload:")
        print(" ", roundtrip_one_query(args.seeds, 100))
    if run("one600"):
        print("one-query round trip, 600 bits, 48-bit payload:")
        print(" ", roundtrip_one_query(args.seeds, 600, payload_bits=48))
    if run("det"):
        print("deterministic model, 50 bits, chance of empty code:")
        print(" ", deterministic_no_fire(args.seeds))
    if run("wat400"):
        print("watermark detection rate at 400 bits (lambda=16):")
        print(" ", watermark_detection(min(args.seeds, 100), 400))
    if run("wat800"):
        print("watermark detection rate at 800 bits (lambda=16):")
        print(" ", watermark_detection(min(args.seeds, 100), 800))
    if run("capacity"):
        print("one-query capacity sweep (coin 0.5, t=2):")
        print(" ", capacity(50))
    if run("chunks"):
        t_theory = 5 * math.log(8130)
        print(f"chunk error rate at t=2 (cap 2000):")
        print(" ", chunk_error_rate(min(args.seeds * 5, 1000), 2.0, 2000))
        print(f"chunk error rate at t=5*ln(b)={t_theory:.1f} runs in the slow suite")
    return 0


if __name__ == "__main__":
    sys.exit(main())
