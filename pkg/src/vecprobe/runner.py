"""Orchestration of one probing job.

A job resolves 1-3 embedding snapshots (plain tables or one layer of a
bundle), loads the selected probing datasets, and trains/evaluates one
diagnostic classifier per (task, snapshot) cell. Source parsing reports
progress in exactly 30 evenly spaced steps; each probing cell announces
the task it is working on. Results are fully deterministic in the plan.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterator, Mapping, Optional

from . import embio
from .classifier import TrainConfig, evaluate, train
from .embio import EmbeddingTable, SourceInfo
from .errors import (
    InvalidSpec,
    JobFailed,
    LayerRequiredForBundle,
    MixedDimensions,
    NoSnapshots,
    TooManySnapshots,
    UnknownLayer,
    UnknownTask,
    UnknownUpload,
)
from .probing_data import (
    ProbingDataset,
    ProbingTaskSpec,
    TaskRegistry,
    intersect_vocab,
    load_dataset,
)

MAX_SNAPSHOTS = 3
LOADING_STEPS = 30

PHASES = ("loading", "probing", "done", "failed")

ProgressSink = Callable[["Progress"], None]


@dataclass(frozen=True)
class Progress:
    phase: str
    fraction: float
    current_task: Optional[str] = None


@dataclass
class PlanSource:
    """One resolved snapshot: where its embedding text lives and its shape."""

    snapshot_label: str
    path: Path
    kind: str  # "plain_table" | "layer_bundle"
    dim: int
    byte_size: int
    layer: Optional[str] = None


@dataclass
class JobPlan:
    language: str
    tasks: list[ProbingTaskSpec]
    sources: list[PlanSource]
    data_root: Path
    seed: int
    layer: Optional[str] = None


@dataclass
class CellResult:
    test_accuracy: float
    test_loss: float
    dev_best_accuracy: float
    epochs_run: int
    oov_rate: float

    def to_dict(self) -> dict:
        return {
            "test_accuracy": self.test_accuracy,
            "test_loss": self.test_loss,
            "dev_best_accuracy": self.dev_best_accuracy,
            "epochs_run": self.epochs_run,
            "oov_rate": self.oov_rate,
        }


@dataclass
class ProbeResult:
    language: str
    task_names: list[str]
    snapshot_labels: list[str]
    cells: dict[tuple[str, str], CellResult]  # (task, snapshot) -> metrics
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )

    def cell(self, task: str, snapshot: str) -> CellResult:
        return self.cells[(task, snapshot)]

    def to_dict(self) -> dict:
        return {
            "language": self.language,
            "tasks": self.task_names,
            "snapshots": self.snapshot_labels,
            "cells": [
                {"task": task, "snapshot": snapshot, **cell.to_dict()}
                for (task, snapshot), cell in self.cells.items()
            ],
            "chart": to_chart(self),
            "created_at": self.created_at,
        }


def derive_cell_seed(seed: int, task: str, snapshot: str) -> int:
    """Stable per-cell RNG seed: job seed xor a keyed hash of the cell id."""
    digest = hashlib.blake2b(
        f"{task}\x1f{snapshot}".encode("utf-8"), digest_size=8
    ).digest()
    return (seed ^ int.from_bytes(digest, "big")) & (2**63 - 1)


def plan_job(
    request: Mapping,
    registry: TaskRegistry,
    uploads: Mapping[str, SourceInfo],
) -> JobPlan:
    """Validate a raw job request against the registry and uploaded sources."""
    language = request.get("language", "")
    entry = registry.entry(language)

    by_name = {t.name: t for t in entry.tasks}
    task_names = list(request.get("tasks") or [])
    if not task_names:
        raise UnknownTask(f"no tasks selected for language {language!r}")
    tasks = []
    for name in task_names:
        if name not in by_name:
            raise UnknownTask(
                f"task {name!r} is not available for {language!r} "
                f"(menu: {sorted(by_name)})"
            )
        tasks.append(by_name[name])

    snapshots = list(request.get("snapshots") or [])
    if not snapshots:
        raise NoSnapshots("a job needs at least one snapshot")
    if len(snapshots) > MAX_SNAPSHOTS:
        raise TooManySnapshots(
            f"up to {MAX_SNAPSHOTS} snapshots may be probed, got {len(snapshots)}"
        )
    layer = request.get("layer") or None

    sources: list[PlanSource] = []
    labels: set[str] = set()
    for snap in snapshots:
        label, upload_id = str(snap["label"]), snap["upload_id"]
        if label in labels:
            raise InvalidSpec(f"duplicate snapshot label {label!r}")
        labels.add(label)
        if upload_id not in uploads:
            raise UnknownUpload(f"unknown upload {upload_id!r}")
        info = uploads[upload_id]
        if info.kind == "layer_bundle":
            if layer is None:
                raise LayerRequiredForBundle(
                    f"snapshot {label!r} is a layer bundle; pick a layer "
                    f"from {sorted(info.layers)}"
                )
            if layer not in info.layers:
                raise UnknownLayer(
                    f"bundle {label!r} has no layer {layer!r} "
                    f"(has {sorted(info.layers)})"
                )
            dim = info.layers[layer]
            byte_size = info.layer_nbytes.get(layer, info.byte_size)
            sources.append(
                PlanSource(
                    snapshot_label=label,
                    path=info.path,
                    kind="layer_bundle",
                    dim=dim,
                    byte_size=byte_size,
                    layer=layer,
                )
            )
        else:
            sources.append(
                PlanSource(
                    snapshot_label=label,
                    path=info.path,
                    kind="plain_table",
                    dim=int(info.dim or 0),
                    byte_size=info.byte_size,
                )
            )

    dims = {s.dim for s in sources}
    if len(dims) > 1:
        raise MixedDimensions(f"snapshots disagree on dimension: {sorted(dims)}")

    return JobPlan(
        language=language,
        tasks=tasks,
        sources=sources,
        data_root=Path(request.get("data_root", ".")),
        seed=int(request.get("seed", 13)),
        layer=layer,
    )


class _ByteProgress:
    """Emit the k/30 loading fractions as bytes are consumed across sources."""

    def __init__(self, total_bytes: int, sink: Optional[ProgressSink]):
        self.total = max(total_bytes, 1)
        self.consumed = 0
        self.emitted = 0
        self.sink = sink

    def lines(self, stream) -> Iterator[str]:
        for line in stream:
            self.consumed += len(line)
            target = min(LOADING_STEPS, int(LOADING_STEPS * self.consumed / self.total))
            while self.emitted < target:
                self.emitted += 1
                if self.sink:
                    self.sink(Progress("loading", self.emitted / LOADING_STEPS))
            yield line

    def finish(self) -> None:
        while self.emitted < LOADING_STEPS:
            self.emitted += 1
            if self.sink:
                self.sink(Progress("loading", self.emitted / LOADING_STEPS))


def _parse_sources(
    plan: JobPlan, sink: Optional[ProgressSink]
) -> list[tuple[str, EmbeddingTable]]:
    tracker = _ByteProgress(sum(s.byte_size for s in plan.sources), sink)
    tables: list[tuple[str, EmbeddingTable]] = []
    for source in plan.sources:
        if source.kind == "layer_bundle":
            with embio.open_bundle(source.path) as bundle:
                with bundle.open_payload(source.layer) as fh:
                    table, _ = embio.parse_embedding_text(
                        tracker.lines(fh),
                        expected_dim=source.dim,
                        source_label=f"{source.snapshot_label}/{source.layer}",
                    )
        else:
            with open(source.path, encoding="utf-8") as fh:
                table, _ = embio.parse_embedding_text(
                    tracker.lines(fh),
                    expected_dim=source.dim,
                    source_label=source.snapshot_label,
                )
        tables.append((source.snapshot_label, table))
    tracker.finish()
    return tables


def run_job(plan: JobPlan, progress: Optional[ProgressSink] = None) -> ProbeResult:
    """Execute a plan: parse sources, then train/evaluate every cell.

    Emits exactly 30 loading updates, announces each probing cell's task,
    ends with a terminal done/failed update. Any failing cell fails the
    whole job (raised as JobFailed with the cause).
    """
    try:
        tables = _parse_sources(plan, progress)

        datasets: dict[str, ProbingDataset] = {}
        cells: dict[tuple[str, str], CellResult] = {}
        for task in plan.tasks:
            if task.name not in datasets:
                datasets[task.name] = load_dataset(plan.data_root, plan.language, task)
            ds = datasets[task.name]
            for snapshot_label, table in tables:
                if progress:
                    progress(Progress("probing", 1.0, current_task=task.name))
                filtered, oov = intersect_vocab(ds, table)
                cfg = TrainConfig(
                    seed=derive_cell_seed(plan.seed, task.name, snapshot_label)
                )
                clf, report = train(table, filtered, cfg)
                result = evaluate(clf, table, filtered.splits["test"])
                cells[(task.name, snapshot_label)] = CellResult(
                    test_accuracy=result.accuracy,
                    test_loss=result.mean_loss,
                    dev_best_accuracy=report.dev_accuracy_per_epoch[report.best_epoch],
                    epochs_run=report.epochs_run,
                    oov_rate=oov.overall_rate,
                )
    except Exception as exc:
        if progress:
            progress(Progress("failed", 1.0))
        cause = getattr(exc, "message", None) or str(exc)
        code = getattr(exc, "code", exc.__class__.__name__)
        raise JobFailed(f"{code}: {cause}") from exc

    result = ProbeResult(
        language=plan.language,
        task_names=[t.name for t in plan.tasks],
        snapshot_labels=[s.snapshot_label for s in plan.sources],
        cells=cells,
    )
    if progress:
        progress(Progress("done", 1.0))
    return result


def to_chart(result: ProbeResult) -> dict:
    """Polar-chart document: one axis per task, one overlaid series per snapshot,
    plus a table block with accuracy and loss columns per snapshot."""
    axes = list(result.task_names)
    series = [
        {
            "label": snapshot,
            "values": [result.cell(task, snapshot).test_accuracy for task in axes],
        }
        for snapshot in result.snapshot_labels
    ]
    header = ["task"]
    for snapshot in result.snapshot_labels:
        header += [f"accuracy[{snapshot}]", f"loss[{snapshot}]"]
    rows = []
    for task in axes:
        row: list = [task]
        for snapshot in result.snapshot_labels:
            cell = result.cell(task, snapshot)
            row += [cell.test_accuracy, cell.test_loss]
        rows.append(row)
    return {"axes": axes, "series": series, "table": {"header": header, "rows": rows}}
