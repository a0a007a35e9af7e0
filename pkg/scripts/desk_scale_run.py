#!/usr/bin/env python3
"""Timed desk-scale probing run: 3 tasks x 2 snapshots, dim 300, 10k tokens.

Builds the whole fixture from scratch in a scratch directory, runs the
probe through the CLI code path, and prints per-cell metrics plus wall
time. Everything is deterministic in --seed.
"""

import argparse
import json
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from vecprobe.cli import main as cli_main
from vecprobe.embio import EmbeddingTable, write_embedding_text
from vecprobe.probing_data import SyntheticSpec, generate_synthetic, write_dataset

TASKS = (("TaskA", "a", 2), ("TaskB", "b", 3), ("TaskC", "c", 5))


def build_fixture(root: Path, seed: int, tokens: int, dim: int) -> tuple[Path, Path]:
    rng = np.random.default_rng(seed)
    merged = {}
    entries = []
    for name, prefix, classes in TASKS:
        ds, table = generate_synthetic(SyntheticSpec(
            classes=classes, dim=dim, seed=seed + classes,
            sizes={"train": 1000, "dev": 200, "test": 800},
            task_name=name, token_prefix=prefix,
        ))
        write_dataset(ds, root, "syn")
        merged.update(table.entries)
        entries.append({"name": name, "kind": "single_token"})
    for f in range(max(0, tokens - len(merged))):
        vec = rng.normal(size=dim).astype(np.float32)
        vec.setflags(write=False)
        merged[f"filler{f:05d}"] = vec

    snap_a = root / "snapshot_a.txt"
    with open(snap_a, "w", encoding="utf-8") as fh:
        write_embedding_text(EmbeddingTable(dim=dim, entries=merged), fh)
    jitter = {}
    for tok, vec in merged.items():
        moved = (vec + rng.normal(scale=0.01, size=dim)).astype(np.float32)
        moved.setflags(write=False)
        jitter[tok] = moved
    snap_b = root / "snapshot_b.txt"
    with open(snap_b, "w", encoding="utf-8") as fh:
        write_embedding_text(EmbeddingTable(dim=dim, entries=jitter), fh)

    (root / "registry.json").write_text(
        json.dumps({"syn": {"name": "Synthetic", "tasks": entries}})
    )
    return snap_a, snap_b


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=13)
    parser.add_argument("--tokens", type=int, default=10_000)
    parser.add_argument("--dim", type=int, default=300)
    parser.add_argument("--keep", metavar="DIR", help="build into DIR instead of a temp dir")
    args = parser.parse_args()

    scratch = Path(args.keep) if args.keep else Path(tempfile.mkdtemp(prefix="deskscale_"))
    scratch.mkdir(parents=True, exist_ok=True)
    print(f"building fixture under {scratch} ...")
    t0 = time.monotonic()
    snap_a, snap_b = build_fixture(scratch, args.seed, args.tokens, args.dim)
    print(f"fixture built in {time.monotonic() - t0:.1f}s")

    out = scratch / "result.json"
    t0 = time.monotonic()
    rc = cli_main([
        "probe",
        "--snapshot", f"epoch1={snap_a}", "--snapshot", f"epoch2={snap_b}",
        "--language", "syn", "--tasks", ",".join(n for n, _, _ in TASKS),
        "--data-root", str(scratch), "--seed", str(args.seed), "--out", str(out),
    ])
    elapsed = time.monotonic() - t0
    print(f"\nprobe exit code {rc}; wall time {elapsed:.1f}s "
          f"({'OK' if elapsed < 180 else 'OVER'} vs 3 min budget)")
    return rc


if __name__ == "__main__":
    sys.exit(main())
