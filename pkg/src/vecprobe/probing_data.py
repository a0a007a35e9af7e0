"""Probing task registry, dataset loading, vocabulary filtering and baselines.

Datasets are type-level word lists stored as headerless UTF-8 TSV under
``<root>/<language>/<task>/{train,dev,test}.tsv``: one ``token<TAB>label``
row per instance (``token<TAB>token2<TAB>label`` for contrastive pair
tasks). A synthetic generator provides test oracles since the real
linguistic datasets are user-supplied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from .embio import EmbeddingTable
from .errors import (
    EmptyAfterFiltering,
    EmptyRegistry,
    EmptySplit,
    InvalidSpec,
    MalformedRow,
    MissingSplit,
    SingleClassDataset,
    UnknownLanguage,
    UnknownTaskKind,
)

SINGLE_TOKEN = "single_token"
TOKEN_PAIR = "token_pair"
TASK_KINDS = (SINGLE_TOKEN, TOKEN_PAIR)
SPLITS = ("train", "dev", "test")

# One-line glosses for the shipped task inventory; tasks added through a
# custom registry config simply get an empty description.
TASK_DESCRIPTIONS = {
    "Case": "grammatical case of a noun form",
    "Gender": "grammatical gender of a noun form",
    "Mood": "verbal mood of an inflected verb",
    "Number": "singular/plural (or dual) marking",
    "Person": "person agreement of an inflected verb",
    "Polarity": "morphologically marked negation",
    "Possession": "possessive marking on a noun form",
    "Tense": "tense of an inflected verb",
    "Voice": "active/passive/causative voice",
    "Aspect": "perfective/imperfective aspect",
    "POS": "part-of-speech of the word",
    "TagCount": "number of morphological tags carried by the form",
    "WordLength": "binned character length of the word",
    "Pseudoword": "real word vs. synthetic pseudoword",
    "OddFeat": "the one morphological feature two words do not share",
    "SharedFeat": "the one morphological feature two words share",
}


@dataclass(frozen=True)
class ProbingTaskSpec:
    name: str
    kind: str
    description: str = ""

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise UnknownTaskKind(f"task {self.name!r} has unknown kind {self.kind!r}")

    @property
    def tokens_per_instance(self) -> int:
        return 2 if self.kind == TOKEN_PAIR else 1


@dataclass
class LanguageEntry:
    display_name: str
    tasks: list[ProbingTaskSpec]


@dataclass
class TaskRegistry:
    languages: dict[str, LanguageEntry]

    def codes(self) -> list[str]:
        return list(self.languages)

    def entry(self, language: str) -> LanguageEntry:
        if language not in self.languages:
            raise UnknownLanguage(f"no such language: {language!r}")
        return self.languages[language]


def load_registry(config: Mapping) -> TaskRegistry:
    """Build a registry from a parsed ``registry.json`` document."""
    if not config:
        raise EmptyRegistry("registry config lists no languages")
    languages: dict[str, LanguageEntry] = {}
    for code, entry in config.items():
        tasks = [
            ProbingTaskSpec(
                name=t["name"],
                kind=t["kind"],
                description=t.get("description", TASK_DESCRIPTIONS.get(t["name"], "")),
            )
            for t in entry.get("tasks", [])
        ]
        if not tasks:
            raise EmptyRegistry(f"language {code!r} has no tasks")
        languages[code] = LanguageEntry(display_name=entry.get("name", code), tasks=tasks)
    return TaskRegistry(languages=languages)


def load_registry_file(path: Union[str, Path]) -> TaskRegistry:
    with open(path, encoding="utf-8") as fh:
        return load_registry(json.load(fh))


def default_registry() -> TaskRegistry:
    """The shipped 28-language registry."""
    doc = resources.files("vecprobe.resources").joinpath("registry.json").read_text("utf-8")
    return load_registry(json.loads(doc))


def list_tasks(registry: TaskRegistry, language: str) -> list[ProbingTaskSpec]:
    """Task menu for one language, in registry order."""
    return list(registry.entry(language).tasks)


# --- datasets ---------------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    tokens: tuple[str, ...]
    label: str


@dataclass
class ProbingDataset:
    task: ProbingTaskSpec
    label_set: list[str]
    splits: dict[str, list[Instance]]

    def split_sizes(self) -> dict[str, int]:
        return {name: len(rows) for name, rows in self.splits.items()}


def _label_set(splits: Mapping[str, list[Instance]]) -> list[str]:
    return sorted({inst.label for rows in splits.values() for inst in rows})


def load_dataset(
    root: Union[str, Path], language: str, task: ProbingTaskSpec
) -> ProbingDataset:
    """Load train/dev/test TSVs for one task; rows validated against the task kind."""
    base = Path(root) / language / task.name
    want = task.tokens_per_instance + 1
    splits: dict[str, list[Instance]] = {}
    for split in SPLITS:
        path = base / f"{split}.tsv"
        if not path.is_file():
            raise MissingSplit(f"{path} does not exist")
        rows: list[Instance] = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n").rstrip("\r")
                if not line:
                    continue
                cols = line.split("\t")
                if len(cols) != want or any(not c for c in cols):
                    raise MalformedRow(
                        f"{path}:{lineno}: expected {want} non-empty columns, got {cols!r}"
                    )
                rows.append(Instance(tokens=tuple(cols[:-1]), label=cols[-1]))
        splits[split] = rows
    labels = _label_set(splits)
    if len(labels) < 2:
        raise SingleClassDataset(f"{base}: needs >= 2 distinct labels, found {labels}")
    return ProbingDataset(task=task, label_set=labels, splits=splits)


def write_dataset(ds: ProbingDataset, root: Union[str, Path], language: str) -> Path:
    """Write a dataset back out in the on-disk layout. Returns the task directory."""
    base = Path(root) / language / ds.task.name
    base.mkdir(parents=True, exist_ok=True)
    for split, rows in ds.splits.items():
        with open(base / f"{split}.tsv", "w", encoding="utf-8") as fh:
            for inst in rows:
                fh.write("\t".join((*inst.tokens, inst.label)) + "\n")
    return base


# --- vocabulary intersection -------------------------------------------------


@dataclass
class OOVReport:
    kept: dict[str, int] = field(default_factory=dict)
    dropped_oov: dict[str, int] = field(default_factory=dict)

    def oov_rate(self, split: str) -> float:
        total = self.kept.get(split, 0) + self.dropped_oov.get(split, 0)
        return self.dropped_oov.get(split, 0) / total if total else 0.0

    @property
    def overall_rate(self) -> float:
        kept = sum(self.kept.values())
        dropped = sum(self.dropped_oov.values())
        return dropped / (kept + dropped) if (kept + dropped) else 0.0


def intersect_vocab(
    ds: ProbingDataset, table: EmbeddingTable
) -> tuple[ProbingDataset, OOVReport]:
    """Drop instances containing any out-of-vocabulary token.

    Raises EmptyAfterFiltering / SingleClassDataset if any split ends up
    empty or with fewer than two distinct labels.
    """
    report = OOVReport()
    splits: dict[str, list[Instance]] = {}
    for split, rows in ds.splits.items():
        kept = [inst for inst in rows if all(t in table for t in inst.tokens)]
        splits[split] = kept
        report.kept[split] = len(kept)
        report.dropped_oov[split] = len(rows) - len(kept)
    for split, rows in splits.items():
        if not rows:
            raise EmptyAfterFiltering(
                f"split {split!r} is empty after OOV filtering "
                f"(dropped {report.dropped_oov[split]} of {len(ds.splits[split])})"
            )
        if len({inst.label for inst in rows}) < 2:
            raise SingleClassDataset(f"split {split!r} is single-class after OOV filtering")
    return (
        ProbingDataset(task=ds.task, label_set=_label_set(splits), splits=splits),
        report,
    )


def majority_baseline(ds: ProbingDataset) -> float:
    """Test-split frequency of the most frequent train label.

    Ties on train counts break toward the lexicographically first label.
    """
    test = ds.splits.get("test", [])
    if not test:
        raise EmptySplit("majority baseline needs a non-empty test split")
    counts: dict[str, int] = {}
    for inst in ds.splits.get("train", []):
        counts[inst.label] = counts.get(inst.label, 0) + 1
    if not counts:
        raise EmptySplit("majority baseline needs a non-empty train split")
    top = max(counts.values())
    winner = min(label for label, n in counts.items() if n == top)
    return sum(1 for inst in test if inst.label == winner) / len(test)


# --- synthetic data -----------------------------------------------------------


@dataclass
class SyntheticSpec:
    """Recipe for a deterministic synthetic dataset plus matching embeddings."""

    kind: str = SINGLE_TOKEN
    classes: int = 2
    dim: int = 4
    sizes: Mapping[str, int] = field(
        default_factory=lambda: {"train": 200, "dev": 50, "test": 200}
    )
    separable: bool = True
    seed: int = 13
    task_name: str = "Synthetic"
    token_prefix: str = "w"

    def validate(self) -> None:
        if self.kind not in TASK_KINDS:
            raise InvalidSpec(f"kind must be one of {TASK_KINDS}, got {self.kind!r}")
        if self.classes < 2:
            raise InvalidSpec("need at least 2 classes")
        if self.dim < 1:
            raise InvalidSpec("dim must be positive")
        if self.separable and self.dim < self.classes:
            raise InvalidSpec("separable mode needs dim >= classes")
        if set(self.sizes) != set(SPLITS) or any(self.sizes[s] < 1 for s in SPLITS):
            raise InvalidSpec(f"sizes must give positive {SPLITS}, got {dict(self.sizes)}")


def _ball_noise(rng: np.random.Generator, n: int, dim: int, radius: float) -> np.ndarray:
    """n points uniformly inside the open ball of the given radius."""
    g = rng.normal(size=(n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / dim)
    return g * r[:, None]


def generate_synthetic(spec: SyntheticSpec) -> tuple[ProbingDataset, EmbeddingTable]:
    """Deterministic synthetic dataset with a matching embedding table.

    Separable mode puts every token of a class-c instance at unit basis
    vector e_c plus noise of norm < 0.25, so classes are linearly separable
    by construction (also after concatenation for pair tasks).
    Non-separable mode draws vectors from an isotropic Gaussian and assigns
    labels independently of them.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    task = ProbingTaskSpec(name=spec.task_name, kind=spec.kind)
    width = len(str(spec.classes - 1))
    label_names = [f"c{c:0{width}d}" for c in range(spec.classes)]
    per_instance = task.tokens_per_instance

    entries: dict[str, np.ndarray] = {}
    splits: dict[str, list[Instance]] = {}
    counter = 0
    for split in SPLITS:
        n = spec.sizes[split]
        classes = np.arange(n) % spec.classes  # balanced by construction
        rng.shuffle(classes)
        vecs = np.zeros((n * per_instance, spec.dim))
        if spec.separable:
            owner = np.repeat(classes, per_instance)
            vecs[np.arange(len(owner)), owner] = 1.0
            vecs += _ball_noise(rng, len(owner), spec.dim, 0.24)
        else:
            vecs = rng.normal(scale=0.5, size=(n * per_instance, spec.dim))
        rows: list[Instance] = []
        for i, c in enumerate(classes):
            tokens = []
            for j in range(per_instance):
                token = f"{spec.token_prefix}{counter:07d}"
                counter += 1
                vec = vecs[i * per_instance + j].astype(np.float32)
                vec.setflags(write=False)
                entries[token] = vec
                tokens.append(token)
            rows.append(Instance(tokens=tuple(tokens), label=label_names[c]))
        splits[split] = rows

    ds = ProbingDataset(task=task, label_set=list(label_names), splits=splits)
    table = EmbeddingTable(dim=spec.dim, entries=entries, source_label="synthetic")
    return ds, table
