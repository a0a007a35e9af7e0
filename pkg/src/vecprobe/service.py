"""The online probing system.

Uploads land in a temp area and are sniffed (plain table vs layer bundle).
Jobs are enqueued to a bounded in-process worker pool, expose live progress
for polling, and persist their outcome in an embedded SQLite store keyed by
an unguessable public token, so results stay shareable after the uploads
are deleted and across service restarts. Upload files are removed as soon
as every job referencing them is terminal.
"""

from __future__ import annotations

import json
import logging
import secrets
import sqlite3
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Mapping, Optional

from fastapi import FastAPI, File, Request, UploadFile
from fastapi.responses import FileResponse, JSONResponse

from .embio import SourceInfo, sniff_source
from .errors import (
    JobFailed,
    JobNotFinished,
    StorageFull,
    UnknownJob,
    UnknownToken,
    UnknownUpload,
    VecprobeError,
)
from .probing_data import TaskRegistry, default_registry, list_tasks
from .runner import JobPlan, Progress, plan_job, run_job

log = logging.getLogger(__name__)

GiB = 1 << 30

STATE_ORDER = {"queued": 0, "loading": 1, "probing": 2, "done": 3, "failed": 3}
TERMINAL_STATES = ("done", "failed")


@dataclass
class ServiceConfig:
    data_root: Path
    work_dir: Path
    worker_count: int = 2
    upload_quota_bytes: int = 16 * GiB
    single_upload_cap_bytes: int = 8 * GiB
    registry: Optional[TaskRegistry] = None
    static_dir: Optional[Path] = None

    @property
    def db_path(self) -> Path:
        return Path(self.work_dir) / "results.sqlite3"

    @property
    def upload_dir(self) -> Path:
        return Path(self.work_dir) / "uploads"


@dataclass
class Upload:
    id: str
    kind: str
    detected_dim: int
    byte_size: int
    stored_at: Path
    detected_layers: Optional[list[dict]] = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "detected_dim": self.detected_dim,
            "byte_size": self.byte_size,
            "stored_at": self.stored_at.name,
            "detected_layers": self.detected_layers,
        }


@dataclass
class JobRecord:
    id: str
    public_token: str
    plan: JobPlan
    upload_ids: list[str]
    state: str = "queued"
    fraction: float = 0.0
    current_task: Optional[str] = None
    error: Optional[str] = None
    created_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    history: list[tuple[str, float]] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def snapshot(self) -> dict:
        with self.lock:
            return {
                "state": self.state,
                "fraction": self.fraction,
                "current_task": self.current_task,
            }


class ProbeService:
    """Upload store, FIFO job queue with a bounded worker pool, result store."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.registry = config.registry or default_registry()
        config.upload_dir.mkdir(parents=True, exist_ok=True)
        Path(config.work_dir).mkdir(parents=True, exist_ok=True)
        self._wipe_stale_uploads()
        self._init_db()
        self._uploads: dict[str, Upload] = {}
        self._sources: dict[str, SourceInfo] = {}
        self._upload_refs: dict[str, int] = {}
        self._jobs: dict[str, JobRecord] = {}
        self._jobs_by_token: dict[str, JobRecord] = {}
        self._registry_lock = threading.Lock()
        self._pool = ThreadPoolExecutor(
            max_workers=config.worker_count, thread_name_prefix="probe-worker"
        )

    # -- storage helpers ----------------------------------------------------

    def _wipe_stale_uploads(self) -> None:
        for stale in self.config.upload_dir.iterdir():
            try:
                stale.unlink()
            except OSError as exc:  # non-fatal: quota accounting skips it anyway
                log.warning("could not remove stale upload %s: %s", stale, exc)

    def _init_db(self) -> None:
        with sqlite3.connect(self.config.db_path) as conn:
            conn.execute(
                "CREATE TABLE IF NOT EXISTS results ("
                " public_token TEXT PRIMARY KEY,"
                " job_id TEXT NOT NULL,"
                " state TEXT NOT NULL,"
                " created_at TEXT NOT NULL,"
                " payload TEXT NOT NULL)"
            )

    def _stored_bytes(self) -> int:
        return sum(u.byte_size for u in self._uploads.values())

    # -- uploads --------------------------------------------------------------

    def create_upload(self, stream: IO[bytes]) -> Upload:
        """Persist an uploaded byte stream to the temp area and sniff it."""
        upload_id = secrets.token_hex(8)
        dest = self.config.upload_dir / upload_id
        written = 0
        with self._registry_lock:
            budget = min(
                self.config.single_upload_cap_bytes,
                self.config.upload_quota_bytes - self._stored_bytes(),
            )
        try:
            with open(dest, "wb") as out:
                while True:
                    chunk = stream.read(1 << 20)
                    if not chunk:
                        break
                    written += len(chunk)
                    if written > budget:
                        raise StorageFull(
                            f"upload exceeds the remaining storage budget ({budget} bytes)"
                        )
                    out.write(chunk)
            info = sniff_source(dest)
        except Exception:
            dest.unlink(missing_ok=True)
            raise
        upload = Upload(
            id=upload_id,
            kind=info.kind,
            detected_dim=int(info.dim or 0),
            byte_size=written,
            stored_at=dest,
            detected_layers=(
                [{"name": n, "dim": d} for n, d in info.layers.items()]
                if info.kind == "layer_bundle"
                else None
            ),
        )
        with self._registry_lock:
            self._uploads[upload_id] = upload
            self._sources[upload_id] = info
            self._upload_refs[upload_id] = 0
        return upload

    def get_upload(self, upload_id: str) -> Upload:
        if upload_id not in self._uploads:
            raise UnknownUpload(f"unknown upload {upload_id!r}")
        return self._uploads[upload_id]

    # -- jobs -------------------------------------------------------------------

    def create_job(self, request: Mapping) -> JobRecord:
        """Validate, enqueue, and immediately return a queued job."""
        request = {**request, "data_root": str(self.config.data_root)}
        with self._registry_lock:
            snapshots = request.get("snapshots") or []
            for snap in snapshots:
                if not isinstance(snap, Mapping) or snap.get("upload_id") not in self._sources:
                    raise UnknownUpload(f"unknown upload in snapshots: {snap!r}")
            plan = plan_job(request, self.registry, self._sources)
            upload_ids = [s["upload_id"] for s in snapshots]
            job = JobRecord(
                id=secrets.token_hex(8),
                public_token=secrets.token_urlsafe(16),  # 128 random bits
                plan=plan,
                upload_ids=upload_ids,
            )
            job.history.append(("queued", 0.0))
            for uid in upload_ids:
                self._upload_refs[uid] += 1
            self._jobs[job.id] = job
            self._jobs_by_token[job.public_token] = job
        self._pool.submit(self._execute, job)
        return job

    def _update_progress(self, job: JobRecord, update: Progress) -> None:
        with job.lock:
            state = update.phase
            if STATE_ORDER.get(state, 0) < STATE_ORDER[job.state]:
                return  # never move backwards
            job.state = state
            job.fraction = max(job.fraction, update.fraction)
            if update.current_task is not None:
                job.current_task = update.current_task
            job.history.append((job.state, job.fraction))

    def _execute(self, job: JobRecord) -> None:
        payload: dict
        try:
            result = run_job(job.plan, lambda p: self._update_progress(job, p))
            payload = {"state": "done", **result.to_dict()}
            state = "done"
        except JobFailed as exc:
            job.error = exc.message
            payload = {"state": "failed", "cause": exc.message}
            state = "failed"
        except Exception as exc:  # defensive: never lose a job silently
            log.exception("job %s crashed", job.id)
            job.error = str(exc)
            payload = {"state": "failed", "cause": str(exc)}
            state = "failed"
        with job.lock:
            job.state = state
            job.fraction = 1.0 if state == "done" else max(job.fraction, 0.0)
            job.history.append((job.state, job.fraction))
        self.finalize_job(job, payload)

    def finalize_job(self, job: JobRecord, payload: dict) -> None:
        """Persist the outcome and drop upload files nobody references anymore."""
        try:
            with sqlite3.connect(self.config.db_path) as conn:
                conn.execute(
                    "INSERT OR REPLACE INTO results VALUES (?, ?, ?, ?, ?)",
                    (
                        job.public_token,
                        job.id,
                        payload["state"],
                        job.created_at,
                        json.dumps(payload, sort_keys=True),
                    ),
                )
        except sqlite3.Error as exc:
            log.error("failed to persist result for job %s: %s", job.id, exc)
        with self._registry_lock:
            for uid in job.upload_ids:
                self._upload_refs[uid] -= 1
                if self._upload_refs[uid] <= 0:
                    upload = self._uploads.pop(uid, None)
                    self._sources.pop(uid, None)
                    self._upload_refs.pop(uid, None)
                    if upload is not None:
                        try:
                            upload.stored_at.unlink(missing_ok=True)
                        except OSError as exc:
                            log.warning("could not delete upload %s: %s", uid, exc)

    def get_progress(self, job_id: str) -> dict:
        if job_id not in self._jobs:
            raise UnknownJob(f"unknown job {job_id!r}")
        return self._jobs[job_id].snapshot()

    def get_result(self, public_token: str) -> dict:
        with sqlite3.connect(self.config.db_path) as conn:
            row = conn.execute(
                "SELECT payload FROM results WHERE public_token = ?", (public_token,)
            ).fetchone()
        if row is not None:
            return json.loads(row[0])
        job = self._jobs_by_token.get(public_token)
        if job is not None:
            raise JobNotFinished(f"job is still {job.state}")
        raise UnknownToken("no result under this token")

    # -- operations ---------------------------------------------------------------

    def purge_results(self, older_than_days: Optional[float] = None) -> int:
        """Operator maintenance: delete stored results, optionally by age."""
        with sqlite3.connect(self.config.db_path) as conn:
            if older_than_days is None:
                cur = conn.execute("DELETE FROM results")
            else:
                cutoff = datetime.now(timezone.utc).timestamp() - older_than_days * 86400
                cutoff_iso = datetime.fromtimestamp(cutoff, timezone.utc).isoformat()
                cur = conn.execute(
                    "DELETE FROM results WHERE created_at < ?", (cutoff_iso,)
                )
            return cur.rowcount

    def close(self, wait: bool = True) -> None:
        """Drain running jobs; queued-but-unstarted jobs are abandoned."""
        self._pool.shutdown(wait=wait, cancel_futures=True)


# --- HTTP layer -----------------------------------------------------------------

HTTP_STATUS = {
    "unknown_language": 404,
    "unknown_job": 404,
    "unknown_token": 404,
    "unknown_upload": 404,
    "unknown_layer": 404,
    "unknown_task": 404,
    "missing_split": 404,
    "unrecognized_format": 415,
    "storage_full": 413,
    "job_not_finished": 409,
}


def create_app(service: ProbeService) -> FastAPI:
    """FastAPI application exposing the JSON API (and optionally the web UI)."""

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        service.close(wait=True)  # drain running jobs on shutdown

    app = FastAPI(title="vecprobe", version="0.1.0", lifespan=lifespan)
    app.state.service = service

    @app.exception_handler(VecprobeError)
    async def domain_error(request: Request, exc: VecprobeError):
        status = HTTP_STATUS.get(exc.code, 400)
        return JSONResponse(
            status_code=status, content={"error": exc.code, "message": exc.message}
        )

    @app.post("/api/uploads")
    def create_upload(file: UploadFile = File(...)):
        return service.create_upload(file.file).to_dict()

    @app.get("/api/languages")
    def languages():
        return [
            {"code": code, "name": entry.display_name}
            for code, entry in service.registry.languages.items()
        ]

    @app.get("/api/languages/{code}/tasks")
    def language_tasks(code: str):
        return [
            {"name": t.name, "kind": t.kind, "description": t.description}
            for t in list_tasks(service.registry, code)
        ]

    @app.post("/api/jobs")
    def create_job(request: dict):
        job = service.create_job(request)
        return {"job_id": job.id, "public_token": job.public_token}

    @app.get("/api/jobs/{job_id}")
    def job_progress(job_id: str):
        return service.get_progress(job_id)

    @app.get("/api/results/{public_token}")
    def job_result(public_token: str):
        return service.get_result(public_token)

    static = service.config.static_dir
    if static is not None and Path(static).is_dir():
        from fastapi.staticfiles import StaticFiles

        index = Path(static) / "index.html"

        @app.get("/results/{public_token}")
        def results_page(public_token: str):
            return FileResponse(index)

        app.mount("/", StaticFiles(directory=static, html=True), name="ui")

    return app
