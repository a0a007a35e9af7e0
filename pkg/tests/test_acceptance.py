"""Acceptance suite: one test per release criterion, at pinned tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one
``[ACCEPTANCE] <criterion>: PASS/FAIL`` line per criterion.
"""

import json
import signal
import socket
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import make_fixture
from oracles import centroid_accuracy, finite_difference_grads, max_relative_error
from vecprobe.classifier import Classifier, TrainConfig, evaluate, loss_and_grad, train
from vecprobe.cli import main as cli_main
from vecprobe.embio import EmbeddingTable, parse_embedding_text, write_embedding_text
from vecprobe.errors import InvalidSpec
from vecprobe.probing_data import (
    SyntheticSpec,
    generate_synthetic,
    load_registry_file,
    majority_baseline,
    write_dataset,
)
from vecprobe.runner import plan_job, run_job
from vecprobe.embio import sniff_source


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"\n[ACCEPTANCE] {name}: FAIL")
        raise
    print(f"\n[ACCEPTANCE] {name}: PASS")


def test_a1_separable_oracle_equivalence():
    with criterion("separable-oracle equivalence"):
        sizes = {"train": 200, "dev": 50, "test": 200}
        for classes, dim in [(2, 4), (2, 50), (5, 50)]:
            ds, table = generate_synthetic(SyntheticSpec(
                classes=classes, dim=dim, sizes=sizes, seed=41 + classes + dim,
            ))
            assert centroid_accuracy(ds, table) == 1.0
            started = time.monotonic()
            clf, _ = train(table, ds, TrainConfig(seed=7))
            result = evaluate(clf, table, ds.splits["test"])
            elapsed = time.monotonic() - started
            assert result.accuracy >= 0.99, (classes, dim, result.accuracy)
            assert abs(result.accuracy - centroid_accuracy(ds, table)) <= 0.01
            assert elapsed < 10.0, f"task took {elapsed:.1f}s"
        # the remaining grid point (K=5, d=4) violates the generator's
        # d >= K precondition for separable data and must be rejected
        with pytest.raises(InvalidSpec):
            generate_synthetic(SyntheticSpec(classes=5, dim=4, sizes=sizes))


def test_a2_null_signal_sanity():
    with criterion("null-signal sanity"):
        for seed in (3, 17, 29):
            ds, table = generate_synthetic(SyntheticSpec(
                classes=2, dim=4, separable=False, seed=seed,
                sizes={"train": 2000, "dev": 500, "test": 2000},
            ))
            clf, _ = train(table, ds, TrainConfig(seed=seed))
            result = evaluate(clf, table, ds.splits["test"])
            baseline = majority_baseline(ds)
            assert abs(result.accuracy - baseline) <= 0.10, (seed, result.accuracy, baseline)


def test_a3_gradient_correctness():
    with criterion("gradient correctness (100 trials, rel err <= 1e-4)"):
        rng = np.random.default_rng(1234)
        worst = 0.0
        for _ in range(100):
            K = int(rng.integers(2, 7))
            D = int(rng.integers(1, 9))
            n = int(rng.integers(1, 17))
            W = rng.uniform(-2, 2, (K, D))
            b = rng.uniform(-2, 2, K)
            X = rng.normal(size=(n, D))
            y = rng.integers(0, K, n)
            clf = Classifier(
                W=W, b=b, input_dim=D,
                label_index={f"c{i}": i for i in range(K)}, kind="single_token",
            )
            _, grads = loss_and_grad(clf, list(zip(X, y)))
            gW, gb = finite_difference_grads(W, b, X, y)
            worst = max(worst, max_relative_error(grads.W, gW),
                        max_relative_error(grads.b, gb))
        assert worst <= 1e-4, worst


def test_a4_training_recipe_conformance():
    with criterion("training-recipe conformance (20 epochs, patience 5, clip 0.5)"):
        sizes = {"train": 200, "dev": 50, "test": 200}
        ds, table = generate_synthetic(SyntheticSpec(classes=2, dim=4, sizes=sizes, seed=2))

        # constant dev accuracy: a vanishing step freezes the boundary,
        # so early stopping must fire after exactly 1 + patience = 6 epochs
        _, report = train(table, ds, TrainConfig(seed=5, learning_rate=1e-300))
        assert len(set(report.dev_accuracy_per_epoch)) == 1
        assert report.stopped_early and report.epochs_run == 6

        # the epoch budget holds across separable and null-signal runs
        for separable in (True, False):
            for seed in range(4):
                ds2, table2 = generate_synthetic(SyntheticSpec(
                    classes=2, dim=4, sizes=sizes, separable=separable, seed=seed,
                ))
                _, rep = train(table2, ds2, TrainConfig(seed=seed))
                assert rep.epochs_run <= 20
                assert rep.epochs_run <= rep.best_epoch + 5 + 1

        # instrumented run: every post-clip component within [-0.5, 0.5],
        # and the bound is actually hit (batch size 1 produces raw
        # per-example gradients well past the bound)
        observed = []
        train(table, ds, TrainConfig(seed=5, batch_size=1, max_epochs=2),
              grad_hook=lambda g: observed.append((np.abs(g.W).max(), np.abs(g.b).max())))
        peak = max(w for w, _ in observed)
        assert all(w <= 0.5 and b <= 0.5 for w, b in observed)
        assert peak == 0.5, "clipping never engaged; instrumentation is vacuous"


def test_a5_parser_robustness(tmp_path):
    with criterion("parser robustness (drops, round-trip x1000, 1 GB streaming)"):
        # exact drop accounting on a known-dirty fixture
        dirty = "a 1 0\nb 0 1\nc 5\nd one 2\na 9 9\n"
        import io

        table, report = parse_embedding_text(io.StringIO(dirty))
        assert report.accepted == 2
        assert report.dropped_malformed == 2
        assert report.dropped_duplicate == 1
        assert report.data_lines == 5

        # parse . write identity over 1000 random tables
        rng = np.random.default_rng(99)
        for i in range(1000):
            dim = int(rng.integers(1, 9))
            n = int(rng.integers(1, 13))
            entries = {}
            for t in range(n):
                vec = rng.uniform(-1e6, 1e6, dim).astype(np.float32)
                vec.setflags(write=False)
                entries[f"tok{t}_{i}"] = vec
            original = EmbeddingTable(dim=dim, entries=entries)
            sink = io.StringIO()
            write_embedding_text(original, sink, with_header=bool(i % 2))
            reparsed, rep = parse_embedding_text(io.StringIO(sink.getvalue()))
            assert rep.dropped_malformed == 0 and rep.dropped_duplicate == 0
            assert reparsed.dim == original.dim
            assert list(reparsed.entries) == list(original.entries)
            assert all(
                np.array_equal(reparsed.entries[k], original.entries[k])
                for k in entries
            )

        # a 1 GB file parses with peak memory growth < 2x the table payload
        big = tmp_path / "big_embeddings.txt"
        _write_gigabyte_file(big)
        probe_script = tmp_path / "probe_memory.py"
        probe_script.write_text(
            "import json, resource, sys\n"
            "import numpy  # heavy imports before the baseline\n"
            "from vecprobe.embio import parse_embedding_text\n"
            "baseline = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss\n"
            "with open(sys.argv[1], encoding='utf-8') as fh:\n"
            "    table, report = parse_embedding_text(fh)\n"
            "peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss\n"
            "print(json.dumps({'grew_bytes': (peak - baseline) * 1024,\n"
            "                  'payload_bytes': table.payload_nbytes,\n"
            "                  'accepted': report.accepted}))\n"
        )
        try:
            out = subprocess.run(
                [sys.executable, str(probe_script), str(big)],
                capture_output=True, text=True, timeout=600, check=True,
            )
            stats = json.loads(out.stdout)
        finally:
            big.unlink(missing_ok=True)
        assert stats["accepted"] > 300_000
        assert stats["grew_bytes"] < 2 * stats["payload_bytes"], stats


def _write_gigabyte_file(path, target_bytes=1_050_000_000, dim=300):
    """~1 GB of valid embedding text; 64 distinct pre-formatted value rows
    keep generation cheap while the parser still does full numeric work."""
    rng = np.random.default_rng(0)
    rows = [" ".join(f"{v:.6f}" for v in rng.uniform(-1, 1, dim)) for _ in range(64)]
    written = 0
    i = 0
    with open(path, "w", encoding="utf-8") as fh:
        buf = []
        while written < target_bytes:
            line = f"t{i:07d} {rows[i % 64]}\n"
            written += len(line)
            buf.append(line)
            i += 1
            if len(buf) >= 4096:
                fh.write("".join(buf))
                buf.clear()
        fh.write("".join(buf))


def test_a6_determinism_cli_vs_service(tmp_path):
    with criterion("determinism: CLI and service agree byte-for-byte"):
        from fastapi.testclient import TestClient

        from vecprobe.service import ProbeService, ServiceConfig, create_app

        root = tmp_path / "root"
        make_fixture(root, seed=13)

        cli_out = tmp_path / "cli_result.json"
        rc = cli_main([
            "probe", "--embeddings", str(root / "embeddings.txt"),
            "--language", "syn", "--tasks", "Synthetic",
            "--data-root", str(root), "--seed", "123", "--out", str(cli_out),
        ])
        assert rc == 0
        cli_doc = json.loads(cli_out.read_text())
        cli_doc.pop("created_at")

        config = ServiceConfig(
            data_root=root, work_dir=tmp_path / "work",
            registry=load_registry_file(root / "registry.json"),
        )
        service = ProbeService(config)
        try:
            client = TestClient(create_app(service))
            up = client.post("/api/uploads", files={
                "file": ("emb.txt", (root / "embeddings.txt").read_bytes())
            }).json()
            job = client.post("/api/jobs", json={
                "language": "syn", "tasks": ["Synthetic"], "seed": 123,
                "snapshots": [{"label": "embeddings", "upload_id": up["id"]}],
            }).json()
            deadline = time.monotonic() + 60
            while time.monotonic() < deadline:
                if client.get(f"/api/jobs/{job['job_id']}").json()["state"] in ("done", "failed"):
                    break
                time.sleep(0.02)
            svc_doc = client.get(f"/api/results/{job['public_token']}").json()
        finally:
            service.close()
        svc_doc.pop("created_at")
        assert json.dumps(cli_doc, sort_keys=True) == json.dumps(svc_doc, sort_keys=True)


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def _wait_for_http(client, url, timeout=30.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        try:
            if client.get(url).status_code == 200:
                return True
        except Exception:
            pass
        time.sleep(0.1)
    return False


def test_a7_job_lifecycle(tmp_path):
    with criterion("job lifecycle (30 steps, forward-only, deletion, restart)"):
        import httpx

        from vecprobe.service import ProbeService, ServiceConfig, create_app
        from fastapi.testclient import TestClient

        root = tmp_path / "root"
        make_fixture(root, seed=13)
        registry_path = root / "registry.json"

        # exactly 30 loading-phase updates at multiples of 1/30
        registry = load_registry_file(registry_path)
        uploads = {"emb": sniff_source(root / "embeddings.txt")}
        plan = plan_job({
            "language": "syn", "tasks": ["Synthetic"], "seed": 13,
            "snapshots": [{"label": "e1", "upload_id": "emb"}],
            "data_root": str(root),
        }, registry, uploads)
        events = []
        run_job(plan, events.append)
        loading = [e for e in events if e.phase == "loading"]
        assert len(loading) == 30
        assert [e.fraction for e in loading] == [k / 30 for k in range(1, 31)]
        fractions = [e.fraction for e in events]
        assert all(b >= a for a, b in zip(fractions, fractions[1:]))

        # in-process service: forward-only state machine, monotone fractions,
        # upload files gone once the job is terminal
        service = ProbeService(ServiceConfig(
            data_root=root, work_dir=tmp_path / "work_inproc", registry=registry,
        ))
        try:
            client = TestClient(create_app(service))
            up = client.post("/api/uploads", files={
                "file": ("emb.txt", (root / "embeddings.txt").read_bytes())
            }).json()
            stored = service.config.upload_dir / up["stored_at"]
            assert stored.exists()
            job = client.post("/api/jobs", json={
                "language": "syn", "tasks": ["Synthetic"], "seed": 1,
                "snapshots": [{"label": "e1", "upload_id": up["id"]}],
            }).json()
            deadline = time.monotonic() + 60
            while time.monotonic() < deadline:
                if client.get(f"/api/jobs/{job['job_id']}").json()["state"] in ("done", "failed"):
                    break
                time.sleep(0.02)
            record = service._jobs[job["job_id"]]
            order = {"queued": 0, "loading": 1, "probing": 2, "done": 3, "failed": 3}
            ranks = [order[s] for s, _ in record.history]
            assert ranks == sorted(ranks), "state machine moved backwards"
            fr = [f for _, f in record.history]
            assert all(b >= a for a, b in zip(fr, fr[1:]))
            assert sum(1 for s, _ in record.history if s == "loading") == 30
            assert record.history[-1] == ("done", 1.0)
            deadline = time.monotonic() + 10
            while stored.exists() and time.monotonic() < deadline:
                time.sleep(0.05)
            assert not stored.exists(), "upload persisted past the terminal state"
        finally:
            service.close()

        # real process restart: the shared result link stays alive
        port = _free_port()
        work = tmp_path / "work_proc"
        cmd = [
            sys.executable, "-m", "vecprobe.cli", "serve",
            "--host", "127.0.0.1", "--port", str(port),
            "--data-root", str(root), "--work-dir", str(work),
            "--workers", "1", "--registry", str(registry_path),
        ]
        base = f"http://127.0.0.1:{port}"
        proc = subprocess.Popen(cmd, stdout=subprocess.PIPE, stderr=subprocess.STDOUT)
        try:
            with httpx.Client(timeout=5.0) as http:
                assert _wait_for_http(http, f"{base}/api/languages"), "server did not boot"
                up = http.post(f"{base}/api/uploads", files={
                    "file": ("emb.txt", (root / "embeddings.txt").read_bytes())
                }).json()
                job = http.post(f"{base}/api/jobs", json={
                    "language": "syn", "tasks": ["Synthetic"], "seed": 7,
                    "snapshots": [{"label": "e1", "upload_id": up["id"]}],
                }).json()
                deadline = time.monotonic() + 60
                while time.monotonic() < deadline:
                    if http.get(f"{base}/api/jobs/{job['job_id']}").json()["state"] in ("done", "failed"):
                        break
                    time.sleep(0.05)
                before = http.get(f"{base}/api/results/{job['public_token']}").json()
                assert before["state"] == "done"
                deadline = time.monotonic() + 10
                while any(work.joinpath("uploads").iterdir()) and time.monotonic() < deadline:
                    time.sleep(0.05)
                assert not any(work.joinpath("uploads").iterdir())
        finally:
            proc.send_signal(signal.SIGTERM)
            proc.wait(timeout=30)

        proc = subprocess.Popen(cmd, stdout=subprocess.PIPE, stderr=subprocess.STDOUT)
        try:
            with httpx.Client(timeout=5.0) as http:
                assert _wait_for_http(http, f"{base}/api/languages"), "restart did not boot"
                after = http.get(f"{base}/api/results/{job['public_token']}").json()
            assert after == before, "result changed across process restart"
        finally:
            proc.send_signal(signal.SIGTERM)
            proc.wait(timeout=30)


def test_a8_end_to_end_desk_scale(tmp_path):
    with criterion("end-to-end desk scale (3 tasks x 2 snapshots, dim 300, 10k tokens, < 3 min)"):
        root = tmp_path / "desk"
        root.mkdir()
        rng = np.random.default_rng(77)
        merged = {}
        task_entries = []
        for name, prefix, classes in (("TaskA", "a", 2), ("TaskB", "b", 3), ("TaskC", "c", 5)):
            ds, table = generate_synthetic(SyntheticSpec(
                classes=classes, dim=300, seed=len(prefix) + classes,
                sizes={"train": 1000, "dev": 200, "test": 800},
                task_name=name, token_prefix=prefix,
            ))
            write_dataset(ds, root, "syn")
            merged.update(table.entries)
            task_entries.append({"name": name, "kind": "single_token"})
        fillers = 10_000 - len(merged)
        assert fillers >= 0
        for f in range(fillers):
            vec = rng.normal(size=300).astype(np.float32)
            vec.setflags(write=False)
            merged[f"filler{f:05d}"] = vec
        assert len(merged) == 10_000

        snap_a = root / "snapshot_a.txt"
        with open(snap_a, "w", encoding="utf-8") as fh:
            write_embedding_text(EmbeddingTable(dim=300, entries=merged), fh)
        jitter = {}
        for tok, vec in merged.items():
            moved = (vec + rng.normal(scale=0.01, size=300)).astype(np.float32)
            moved.setflags(write=False)
            jitter[tok] = moved
        snap_b = root / "snapshot_b.txt"
        with open(snap_b, "w", encoding="utf-8") as fh:
            write_embedding_text(EmbeddingTable(dim=300, entries=jitter), fh)

        (root / "registry.json").write_text(json.dumps({
            "syn": {"name": "Synthetic", "tasks": task_entries}
        }))

        out = tmp_path / "desk_result.json"
        started = time.monotonic()
        rc = cli_main([
            "probe",
            "--snapshot", f"epoch1={snap_a}", "--snapshot", f"epoch2={snap_b}",
            "--language", "syn", "--tasks", "TaskA,TaskB,TaskC",
            "--data-root", str(root), "--seed", "13", "--out", str(out),
        ])
        elapsed = time.monotonic() - started
        assert rc == 0
        assert elapsed < 180.0, f"desk-scale run took {elapsed:.1f}s"
        doc = json.loads(out.read_text())
        assert len(doc["cells"]) == 6
        assert len(doc["chart"]["series"]) == 2
        assert len(doc["chart"]["axes"]) == 3
        for cell in doc["cells"]:
            if cell["snapshot"] == "epoch1":
                assert cell["test_accuracy"] >= 0.99, cell
        print(f"\n  desk-scale run completed in {elapsed:.1f}s")
