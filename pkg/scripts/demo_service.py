#!/usr/bin/env python3
"""Spin up a demo service: synthesize a probe-ready fixture, then serve it.

Useful for poking at the JSON API or developing the web UI. If the built
frontend exists (frontend/dist), it is served at the root URL.
"""

import argparse
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from vecprobe.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--workdir", default="demo_workdir")
    parser.add_argument("--seed", type=int, default=13)
    args = parser.parse_args()

    work = Path(args.workdir)
    fixture = work / "fixture"
    rc = cli_main(["synth", "--out", str(fixture), "--seed", str(args.seed),
                   "--dim", "16", "--train", "500", "--dev", "100", "--test", "400"])
    if rc != 0:
        return rc

    static = REPO / "frontend" / "dist"
    serve_args = [
        "serve", "--port", str(args.port),
        "--data-root", str(fixture),
        "--work-dir", str(work / "service"),
    ]
    if static.is_dir():
        serve_args += ["--static", str(static)]
        print(f"serving web UI from {static}")
    else:
        print("frontend/dist not found; serving JSON API only")
    print(f"upload fixture file: {fixture / 'embeddings.txt'}")
    print(f"http://127.0.0.1:{args.port}/  (Ctrl-C to stop)")
    return cli_main(serve_args)


if __name__ == "__main__":
    sys.exit(main())
