"""Command-line surface: key generation, embedding, extraction, detection,
and capacity simulation.

Exit codes: 0 success, 1 not-found/clean, 2 usage or config error,
3 invalid input.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .analysis import capacity_sweep, write_capacity_csv, write_capacity_gnuplot
from .errors import StegotextError
from .keys import SUPPORTED_KEY_BITS, SecretKey, load_key, save_key, setup
from .models import Model, load_model_config, token_width, tokens_to_bits
from .payload import frame_payload, unframe_payload
from .steg import StegConfig, steg_generate, steg_generate_one, steg_retrieve, steg_retrieve_one
from .transcript import Transcript
from .watermark import wat_detect

EXIT_OK = 0
EXIT_NOT_FOUND = 1
EXIT_CONFIG = 2
EXIT_INVALID_INPUT = 3


class CliFailure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class CliConfig:
    """Validated handles to the files a command needs; everything is loaded
    and parsed before any generation starts."""

    key: Optional[SecretKey] = None
    model: Optional[Model] = None
    steg: Optional[StegConfig] = None
    output_format: str = "transcript-json"


def _load_cli_config(args, need_key=True, need_model=True) -> CliConfig:
    cfg = CliConfig()
    try:
        if need_key:
            if not args.key:
                raise CliFailure(EXIT_CONFIG, "--key is required")
            cfg.key = load_key(args.key)
        if need_model:
            if not args.model:
                raise CliFailure(EXIT_CONFIG, "--model is required")
            cfg.model = load_model_config(args.model)
        cfg.steg = StegConfig.from_file(args.config) if getattr(args, "config", None) else StegConfig()
    except CliFailure:
        raise
    except (StegotextError, OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CliFailure(EXIT_CONFIG, f"bad configuration: {exc}") from None
    if getattr(args, "threshold", None) is not None:
        cfg.steg.threshold_t = args.threshold
    if getattr(args, "lambda_bits", None) is not None:
        cfg.steg.lambda_bits = args.lambda_bits
    cfg.output_format = getattr(args, "format", None) or "transcript-json"
    return cfg


def _read_payload(args) -> bytes:
    if args.payload_hex is not None:
        try:
            data = bytes.fromhex(args.payload_hex)
        except ValueError as exc:
            raise CliFailure(EXIT_INVALID_INPUT, f"payload hex: {exc}") from None
    elif args.payload_file is not None:
        try:
            data = Path(args.payload_file).read_bytes()
        except OSError as exc:
            raise CliFailure(EXIT_CONFIG, f"payload file: {exc}") from None
    else:
        raise CliFailure(EXIT_CONFIG, "provide --payload-hex or --payload-file")
    if not data:
        raise CliFailure(EXIT_INVALID_INPUT, "payload is empty")
    return data


def _read_tokens(args, model: Optional[Model]) -> list[int]:
    raw = sys.stdin.read() if args.input == "-" else None
    if raw is None:
        try:
            raw = Path(args.input).read_text()
        except OSError as exc:
            raise CliFailure(EXIT_CONFIG, f"input file: {exc}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CliFailure(EXIT_INVALID_INPUT, f"input is not JSON: {exc}") from None
    if isinstance(data, dict) and "tokens" in data:
        tokens = data["tokens"]
    elif isinstance(data, dict) and "text" in data:
        if model is None or not hasattr(model, "encode"):
            raise CliFailure(
                EXIT_CONFIG, "text input needs a model config with a tokenizer bridge"
            )
        tokens = model.encode(data["text"])
    elif isinstance(data, list):
        tokens = data
    else:
        raise CliFailure(EXIT_INVALID_INPUT, 'expected {"tokens": [...]} or a token list')
    if not all(isinstance(t, int) and t >= 0 for t in tokens):
        raise CliFailure(EXIT_INVALID_INPUT, "tokens must be non-negative integers")
    return tokens


def _parse_prompt(args, model) -> object:
    if getattr(args, "prompt_tokens", None):
        try:
            return json.loads(args.prompt_tokens)
        except json.JSONDecodeError as exc:
            raise CliFailure(EXIT_INVALID_INPUT, f"--prompt-tokens: {exc}") from None
    if getattr(args, "prompt", None) is not None:
        return args.prompt
    return ""


def cmd_keygen(args) -> int:
    out = Path(args.out)
    if out.exists() and not args.force:
        raise CliFailure(EXIT_CONFIG, f"{out} exists; pass --force to overwrite")
    key = setup(args.lambda_bits)
    save_key(key, out)
    print(f"wrote {key.bits}-bit key to {out}")
    return EXIT_OK


def cmd_embed(args) -> int:
    cfg = _load_cli_config(args)
    payload = _read_payload(args)
    bits = frame_payload(payload)
    prompt = _parse_prompt(args, cfg.model)
    rng = random.Random(args.seed) if args.seed is not None else None
    if args.scheme == "one-query":
        transcript = steg_generate_one(cfg.key, cfg.model, prompt, bits, cfg.steg,
                                       debug=args.debug)
    else:
        transcript = steg_generate(cfg.key, cfg.model, prompt, bits, cfg.steg,
                                   rng=rng, debug=args.debug)
    if transcript.low_entropy or not transcript.payload_started:
        print("warning: low entropy: payload not embedded", file=sys.stderr)
    _emit_transcript(transcript, cfg, args)
    return EXIT_OK


def _emit_transcript(transcript: Transcript, cfg: CliConfig, args) -> None:
    fmt = cfg.output_format
    if fmt == "tokens-json":
        payload = json.dumps({"tokens": transcript.tokens})
    elif fmt == "text":
        if not hasattr(cfg.model, "decode"):
            raise CliFailure(EXIT_CONFIG, "model has no detokenizer; use a token format")
        payload = cfg.model.decode(transcript.tokens)
    elif fmt == "transcript-json":
        payload = json.dumps(transcript.to_json(), indent=2)
    else:
        raise CliFailure(EXIT_CONFIG, f"unknown format {fmt!r}")
    if args.out:
        Path(args.out).write_text(payload + "\n")
    else:
        print(payload)


def cmd_extract(args) -> int:
    cfg = _load_cli_config(args)
    tokens = _read_tokens(args, cfg.model)
    width = token_width(cfg.model.vocab_size)
    try:
        bits = tokens_to_bits(tokens, width)
    except StegotextError as exc:
        raise CliFailure(EXIT_INVALID_INPUT, str(exc)) from None
    if args.scheme == "one-query":
        recovered = steg_retrieve_one(cfg.key, bits, cfg.steg, width=width)
        recovered = recovered or None
    else:
        recovered = steg_retrieve(cfg.key, bits, cfg.steg, width=width)
    if recovered is None:
        print("none")
        return EXIT_NOT_FOUND
    report = unframe_payload(recovered)
    if report.data is not None:
        print(report.data.hex())
        return EXIT_OK
    if report.body_bits:
        print("partial:" + "".join(str(b) for b in report.body_bits))
        return EXIT_OK
    print("none")
    return EXIT_NOT_FOUND


def cmd_detect(args) -> int:
    cfg = _load_cli_config(args)
    tokens = _read_tokens(args, cfg.model)
    width = token_width(cfg.model.vocab_size)
    try:
        bits = tokens_to_bits(tokens, width)
    except StegotextError as exc:
        raise CliFailure(EXIT_INVALID_INPUT, str(exc)) from None
    verdict = wat_detect(cfg.key, bits, cfg.steg.lambda_bits)
    if verdict.detected:
        print(f"WATERMARKED at split {verdict.split_index}")
        return EXIT_OK
    print("clean")
    return EXIT_NOT_FOUND


def cmd_simulate_capacity(args) -> int:
    try:
        model_config = json.loads(Path(args.model).read_text())
        steg = StegConfig.from_file(args.config) if args.config else StegConfig()
    except (StegotextError, OSError, json.JSONDecodeError) as exc:
        raise CliFailure(EXIT_CONFIG, f"bad configuration: {exc}") from None
    if args.threshold is not None:
        steg.threshold_t = args.threshold
    if args.lambda_bits is not None:
        steg.lambda_bits = args.lambda_bits
    try:
        lengths = [int(x) for x in args.lengths.split(",") if x]
    except ValueError as exc:
        raise CliFailure(EXIT_CONFIG, f"--lengths: {exc}") from None
    result = capacity_sweep(
        None,
        model_config,
        args.prompt,
        lengths,
        args.trials,
        steg,
        scheme=args.scheme,
        workers=args.workers,
        seed=args.seed,
    )
    for p in result.points:
        print(
            f"length={p.response_len_tokens} trials={p.trials} "
            f"mean_bits={p.mean_recovered_bits:.2f} stderr={p.stderr:.2f}"
        )
    for length, err in result.errors.items():
        print(f"length={length} error={err}", file=sys.stderr)
    if args.out:
        write_capacity_csv(result.points, args.out)
        if args.gnuplot:
            write_capacity_gnuplot(args.out, str(args.out) + ".gp")
    return EXIT_OK if not result.errors else EXIT_NOT_FOUND


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stegotext")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate a key file (hex, one line)")
    p.add_argument("--lambda", dest="lambda_bits", type=int, default=128,
                   choices=SUPPORTED_KEY_BITS)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("embed", help="embed a payload into a generated response")
    _common_flags(p)
    p.add_argument("--payload-hex")
    p.add_argument("--payload-file")
    p.add_argument("--prompt")
    p.add_argument("--prompt-tokens")
    p.add_argument("--seed", type=int, help="seeds the true-randomness phase only")
    p.add_argument("--out")
    p.add_argument("--format", choices=["transcript-json", "tokens-json", "text"])
    p.add_argument("--scheme", choices=["full", "one-query"], default="full")
    p.add_argument("--debug", action="store_true")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="retrieve a payload from tokens")
    _common_flags(p)
    p.add_argument("input", help='JSON file with {"tokens": [...]} or - for stdin')
    p.add_argument("--scheme", choices=["full", "one-query"], default="full")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("detect", help="test tokens for the zero-bit watermark")
    _common_flags(p)
    p.add_argument("input", help='JSON file with {"tokens": [...]} or - for stdin')
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("simulate-capacity", help="recovered bits vs response length")
    p.add_argument("--model", required=True)
    p.add_argument("--config")
    p.add_argument("--prompt", default="")
    p.add_argument("--lengths", required=True, help="comma-separated token counts")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--threshold", type=float)
    p.add_argument("--lambda", dest="lambda_bits", type=int)
    p.add_argument("--scheme", choices=["full", "one-query"], default="one-query")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--gnuplot", action="store_true")
    p.set_defaults(func=cmd_simulate_capacity)

    return parser


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--key")
    p.add_argument("--model")
    p.add_argument("--config")
    p.add_argument("--threshold", type=float)
    p.add_argument("--lambda", dest="lambda_bits", type=int)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except CliFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except StegotextError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
