"""Run the scorer bridge: TCP by default, stdio with --stdio."""

from __future__ import annotations

import argparse
import sys
import threading

from .model import load_model
from .server import Bridge, serve_stdio, serve_tcp


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="slicebridge", description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=9000)
    parser.add_argument("--model", default="tiny:0", help='"tiny[:SEED]" or a state-dict path')
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--stdio", action="store_true", help="serve on stdin/stdout instead of TCP")
    args = parser.parse_args(argv)

    bridge = Bridge(load_model(args.model, args.device), args.device)
    if args.stdio:
        serve_stdio(bridge)
        return 0
    done = threading.Event()
    serve_tcp(
        bridge,
        args.host,
        args.port,
        announce=lambda p: print(f"listening on {args.host}:{p}", file=sys.stderr, flush=True),
    )
    try:
        done.wait()
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
