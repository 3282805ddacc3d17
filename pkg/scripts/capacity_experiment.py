#!/usr/bin/env python3
"""Capacity experiment: recovered payload bits vs response length.

Runs the single-response scheme with fresh keys and long random payloads at
each length, then writes a CSV (and a gnuplot script) with the measured
curve.  Defaults reproduce the fair-coin desk experiment; point --model at a
bridge config (type "http" or "stdio") to measure a real language model.
"""

import argparse
import json
import sys
from pathlib import Path

from stegotext.analysis import (
    capacity_sweep,
    linear_fit,
    write_capacity_csv,
    write_capacity_gnuplot,
)
from stegotext.steg import StegConfig


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--model", help="model config JSON (default: fair coin)")
    ap.add_argument("--lengths", default="100,200,300,400,500")
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--threshold", type=float, default=2.0)
    ap.add_argument("--scheme", choices=["one-query", "full"], default="one-query")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default="capacity.csv")
    args = ap.parse_args()

    if args.model:
        model_config = json.loads(Path(args.model).read_text())
    else:
        model_config = {"type": "coin", "params": {"p": 0.5}}
    lengths = [int(x) for x in args.lengths.split(",")]
    cfg = StegConfig(threshold_t=args.threshold)

    result = capacity_sweep(
        None, model_config, (), lengths, args.trials, cfg,
        scheme=args.scheme, workers=args.workers, seed=args.seed,
    )
    for p in result.points:
        print(f"length={p.response_len_tokens:5d}  mean_bits={p.mean_recovered_bits:7.2f}"
              f"  stderr={p.stderr:5.2f}  trials={p.trials}")
    for length, err in result.errors.items():
        print(f"length={length}: {err}", file=sys.stderr)
    if len(result.points) >= 2:
        xs = [p.response_len_tokens for p in result.points]
        ys = [p.mean_recovered_bits for p in result.points]
        slope, intercept, r2 = linear_fit(xs, ys)
        print(f"linear fit: {slope:.4f} bits/token + {intercept:.2f}  (R^2={r2:.4f})")
    write_capacity_csv(result.points, args.out)
    write_capacity_gnuplot(args.out, args.out + ".gp")
    print(f"wrote {args.out} and {args.out}.gp")
    return 0 if not result.errors else 1


if __name__ == "__main__":
    sys.exit(main())
