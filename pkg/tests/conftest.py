import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

settings.register_profile(
    "vecprobe",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("vecprobe")

from vecprobe.cli import main as cli_main  # noqa: E402
from vecprobe.probing_data import SyntheticSpec, generate_synthetic, write_dataset  # noqa: E402
from vecprobe.embio import write_embedding_text  # noqa: E402


@pytest.fixture
def synth_fixture(tmp_path):
    """A ready-to-probe separable fixture on disk.

    Layout: <root>/{registry.json, embeddings.txt, syn/Synthetic/*.tsv},
    built through the CLI so the on-disk contract is exercised too.
    """
    root = tmp_path / "fixture"
    rc = cli_main(["synth", "--out", str(root), "--seed", "13"])
    assert rc == 0
    return root


def make_fixture(
    root: Path,
    kind: str = "single_token",
    classes: int = 2,
    dim: int = 4,
    sizes=None,
    separable: bool = True,
    seed: int = 13,
    language: str = "syn",
    task_name: str = "Synthetic",
):
    """Programmatic fixture writer for tests that want custom shapes."""
    import json

    spec = SyntheticSpec(
        kind=kind,
        classes=classes,
        dim=dim,
        sizes=sizes or {"train": 200, "dev": 50, "test": 200},
        separable=separable,
        seed=seed,
        task_name=task_name,
    )
    ds, table = generate_synthetic(spec)
    root.mkdir(parents=True, exist_ok=True)
    write_dataset(ds, root, language)
    with open(root / "embeddings.txt", "w", encoding="utf-8") as fh:
        write_embedding_text(table, fh, with_header=True)
    (root / "registry.json").write_text(
        json.dumps(
            {language: {"name": "Synthetic", "tasks": [{"name": task_name, "kind": kind}]}}
        ),
        encoding="utf-8",
    )
    return ds, table
