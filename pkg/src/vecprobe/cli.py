"""Command line interface.

Subcommands: ``probe`` (run one probing job offline), ``validate`` (clean /
inspect an embedding file), ``tasks`` (per-language task menu), ``synth``
(write a synthetic dataset + embeddings fixture), ``serve`` (start the web
service), ``purge`` (drop stored results).

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from . import embio
from .errors import JobFailed, VecprobeError
from .probing_data import (
    SPLITS,
    SyntheticSpec,
    default_registry,
    generate_synthetic,
    list_tasks,
    load_registry_file,
    write_dataset,
)
from .runner import Progress, plan_job, run_job

SYNTH_LANGUAGE = "syn"
SYNTH_TASK = "Synthetic"


def _registry_for(data_root: Optional[str], explicit: Optional[str] = None):
    """Explicit --registry wins; else a registry.json sitting at the data root;
    else the shipped default."""
    if explicit:
        return load_registry_file(explicit)
    if data_root:
        candidate = Path(data_root) / "registry.json"
        if candidate.is_file():
            return load_registry_file(candidate)
    return default_registry()


class _Bar:
    """Textual progress: a 30-slot bar while loading, task names while probing."""

    def __init__(self, stream=sys.stderr):
        self.stream = stream
        self._loading_done = False

    def __call__(self, p: Progress) -> None:
        if p.phase == "loading":
            filled = round(p.fraction * 30)
            self.stream.write(f"\rloading [{'#' * filled}{'.' * (30 - filled)}] {p.fraction:4.0%}")
            if p.fraction >= 1.0 and not self._loading_done:
                self.stream.write("\n")
                self._loading_done = True
        elif p.phase == "probing" and p.current_task:
            self.stream.write(f"probing {p.current_task}\n")
        elif p.phase in ("done", "failed"):
            self.stream.write(f"{p.phase}\n")
        self.stream.flush()


def cmd_probe(args) -> int:
    snapshots = []
    if args.embeddings and args.snapshot:
        print("use either --embeddings or --snapshot, not both", file=sys.stderr)
        return 1
    if args.embeddings:
        snapshots.append((Path(args.embeddings).stem, args.embeddings))
    for item in args.snapshot or []:
        label, sep, path = item.partition("=")
        if not sep or not label or not path:
            print(f"--snapshot wants LABEL=PATH, got {item!r}", file=sys.stderr)
            return 1
        snapshots.append((label, path))
    if not snapshots:
        print("no embedding source given (--embeddings or --snapshot)", file=sys.stderr)
        return 1

    try:
        registry = _registry_for(args.data_root)
        uploads = {path: embio.sniff_source(path) for _, path in snapshots}
        request = {
            "language": args.language,
            "tasks": [t.strip() for t in args.tasks.split(",") if t.strip()],
            "layer": args.layer,
            "snapshots": [
                {"label": label, "upload_id": path} for label, path in snapshots
            ],
            "seed": args.seed,
            "data_root": args.data_root,
        }
        plan = plan_job(request, registry, uploads)
    except VecprobeError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return 1

    try:
        result = run_job(plan, _Bar())
    except JobFailed as exc:
        print(f"job failed: {exc.message}", file=sys.stderr)
        return 2

    doc = {"state": "done", **result.to_dict()}
    out = Path(args.out)
    if args.format == "json":
        out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        out.write_text(_table_tsv(doc["chart"]), encoding="utf-8")
    print(_table_text(doc["chart"]))
    print(f"result written to {out}")
    return 0


def _table_tsv(chart: dict) -> str:
    lines = ["\t".join(map(str, chart["table"]["header"]))]
    for row in chart["table"]["rows"]:
        lines.append("\t".join(f"{v:.4f}" if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def _table_text(chart: dict) -> str:
    header = chart["table"]["header"]
    rows = [
        [f"{v:.4f}" if isinstance(v, float) else str(v) for v in row]
        for row in chart["table"]["rows"]
    ]
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    return "\n".join([fmt.format(*header)] + [fmt.format(*r) for r in rows])


def cmd_validate(args) -> int:
    try:
        with open(args.embeddings, encoding="utf-8") as fh:
            _, report = embio.parse_embedding_text(fh)
    except VecprobeError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return 1
    print(f"accepted           {report.accepted}")
    print(f"dropped_malformed  {report.dropped_malformed}")
    print(f"dropped_duplicate  {report.dropped_duplicate}")
    print(f"detected_dim       {report.detected_dim}")
    print(f"had_header         {str(report.had_header).lower()}")
    return 0


def cmd_tasks(args) -> int:
    try:
        registry = _registry_for(None, args.registry)
        tasks = list_tasks(registry, args.language)
    except VecprobeError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return 1
    for task in tasks:
        print(f"{task.name}\t{task.kind}\t{task.description}")
    return 0


def cmd_synth(args) -> int:
    kind = {"single": "single_token", "pair": "token_pair"}.get(args.kind)
    if kind is None:
        print(f"--kind must be single or pair, got {args.kind!r}", file=sys.stderr)
        return 1
    try:
        spec = SyntheticSpec(
            kind=kind,
            classes=args.classes,
            dim=args.dim,
            sizes={"train": args.train, "dev": args.dev, "test": args.test},
            separable=args.separable,
            seed=args.seed,
            task_name=SYNTH_TASK,
        )
        ds, table = generate_synthetic(spec)
    except VecprobeError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return 1

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(ds, out, SYNTH_LANGUAGE)
    with open(out / "embeddings.txt", "w", encoding="utf-8") as fh:
        embio.write_embedding_text(table, fh, with_header=True)
    registry_doc = {
        SYNTH_LANGUAGE: {
            "name": "Synthetic",
            "tasks": [{"name": SYNTH_TASK, "kind": kind}],
        }
    }
    (out / "registry.json").write_text(
        json.dumps(registry_doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    sizes = ds.split_sizes()
    print(f"wrote {out}/: embeddings.txt ({len(table)} tokens, dim {table.dim}), "
          f"registry.json, {SYNTH_LANGUAGE}/{SYNTH_TASK}/" +
          ",".join(f"{s}.tsv({sizes[s]})" for s in SPLITS))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ProbeService, ServiceConfig, create_app

    try:
        config = ServiceConfig(
            data_root=Path(args.data_root),
            work_dir=Path(args.work_dir),
            worker_count=args.workers,
            upload_quota_bytes=int(args.quota_gb * (1 << 30)),
            registry=_registry_for(args.data_root, args.registry),
            static_dir=Path(args.static) if args.static else None,
        )
        service = ProbeService(config)
    except VecprobeError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return 1
    app = create_app(service)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    except (OSError, SystemExit) as exc:
        print(f"error: could not serve on {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_purge(args) -> int:
    from .service import ProbeService, ServiceConfig

    service = ProbeService(
        ServiceConfig(data_root=Path("."), work_dir=Path(args.work_dir), worker_count=1)
    )
    try:
        n = service.purge_results(older_than_days=args.older_than_days)
    finally:
        service.close()
    print(f"purged {n} stored result(s)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vecprobe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("probe", help="run one probing job and write result + chart")
    p.add_argument("--embeddings", help="single plain embedding file")
    p.add_argument("--snapshot", action="append", metavar="LABEL=PATH",
                   help="labeled snapshot source, repeatable up to 3 times")
    p.add_argument("--layer", help="layer name (required for bundle snapshots)")
    p.add_argument("--language", required=True)
    p.add_argument("--tasks", required=True, help="comma-separated task names")
    p.add_argument("--data-root", required=True)
    p.add_argument("--seed", type=int, default=int(os.environ.get("VECPROBE_SEED", 13)))
    p.add_argument("--out", default="probe_result.json")
    p.add_argument("--format", choices=("json", "tsv"), default="json")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("validate", help="parse an embedding file and report drops")
    p.add_argument("--embeddings", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("tasks", help="list probing tasks for a language")
    p.add_argument("--language", required=True)
    p.add_argument("--registry", help="registry.json overriding the shipped one")
    p.set_defaults(func=cmd_tasks)

    p = sub.add_parser("synth", help="write a synthetic dataset + embeddings fixture")
    p.add_argument("--kind", default="single", help="single | pair")
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--train", type=int, default=200)
    p.add_argument("--dev", type=int, default=50)
    p.add_argument("--test", type=int, default=200)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--separable", type=lambda s: s.lower() in ("1", "true", "yes"),
                   default=True, metavar="BOOL")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="start the probing web service")
    p.add_argument("--host", default=os.environ.get("VECPROBE_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(os.environ.get("VECPROBE_PORT", 8000)))
    p.add_argument("--data-root", default=os.environ.get("VECPROBE_DATA_ROOT", "."))
    p.add_argument("--work-dir", default=os.environ.get("VECPROBE_WORK_DIR", "vecprobe_work"))
    p.add_argument("--workers", type=int, default=int(os.environ.get("VECPROBE_WORKERS", 2)))
    p.add_argument("--quota-gb", type=float, default=float(os.environ.get("VECPROBE_QUOTA_GB", 16)))
    p.add_argument("--registry", help="registry.json overriding the shipped one")
    p.add_argument("--static", help="directory with the built web UI")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("purge", help="delete stored results")
    p.add_argument("--work-dir", default="vecprobe_work")
    p.add_argument("--older-than-days", type=float, default=None)
    p.set_defaults(func=cmd_purge)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
