"""Command-line entry point: serve the scorer or generate candidates."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import load_config
from .generate import SamplingConfig, generate_candidates
from .model import ModelLoadError
from .service import build_app


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fcm-adapter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the /score service")
    p_serve.add_argument("--config", help="JSON config file")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, help="overrides config/env")
    p_serve.add_argument("--model", help="overrides config/env")
    p_serve.add_argument("--max-batch", type=int, dest="max_batch")

    p_gen = sub.add_parser("generate", help="write candidate JSONL for a corpus")
    p_gen.add_argument("--instances", required=True)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--n", type=int, default=4, help="candidates per instance")
    p_gen.add_argument("--seed", type=int, default=0)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)

    if args.command == "generate":
        try:
            count = generate_candidates(
                args.instances, args.out, SamplingConfig(n_candidates=args.n, seed=args.seed)
            )
        except OSError as exc:
            print(f"fcm-adapter generate: {exc}", file=sys.stderr)
            return 2
        print(f"wrote {count} candidates to {args.out}")
        return 0

    try:
        config = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"fcm-adapter serve: {exc}", file=sys.stderr)
        return 2
    if args.port is not None:
        config = replace(config, port=args.port)
    if args.model:
        config = replace(config, model=args.model)
    if args.max_batch is not None:
        config = replace(config, max_batch=args.max_batch)
    try:
        app = build_app(config)
    except ModelLoadError as exc:
        print(f"fcm-adapter serve: {exc}", file=sys.stderr)
        return 1

    import uvicorn

    uvicorn.run(app, host=args.host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
