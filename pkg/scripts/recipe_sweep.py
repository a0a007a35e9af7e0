#!/usr/bin/env python3
"""Sweep the training recipe over separable (K, d) grids and seeds.

Reports worst-case test accuracy, epochs run, and per-task wall time so
regressions in the optimizer defaults show up immediately.
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from vecprobe.classifier import TrainConfig, evaluate, train
from vecprobe.probing_data import SyntheticSpec, generate_synthetic


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--learning-rate", type=float, default=None,
                        help="override the TrainConfig default")
    args = parser.parse_args()

    grid = [(2, 4), (2, 50), (5, 50), (5, 5)]
    print(f"{'K':>3} {'d':>3} {'worst_acc':>10} {'mean_epochs':>12} {'max_s':>7}")
    exit_code = 0
    for classes, dim in grid:
        worst, epochs, slowest = 1.0, [], 0.0
        for seed in range(args.seeds):
            ds, table = generate_synthetic(SyntheticSpec(
                classes=classes, dim=dim, seed=1000 + seed,
                sizes={"train": 200, "dev": 50, "test": 200},
            ))
            overrides = {}
            if args.learning_rate is not None:
                overrides["learning_rate"] = args.learning_rate
            started = time.monotonic()
            clf, report = train(table, ds, TrainConfig(seed=seed, **overrides))
            result = evaluate(clf, table, ds.splits["test"])
            slowest = max(slowest, time.monotonic() - started)
            worst = min(worst, result.accuracy)
            epochs.append(report.epochs_run)
        flag = "" if worst >= 0.99 else "   <-- below 0.99"
        if worst < 0.99:
            exit_code = 1
        print(f"{classes:>3} {dim:>3} {worst:>10.4f} {sum(epochs)/len(epochs):>12.1f} "
              f"{slowest:>7.2f}{flag}")
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
