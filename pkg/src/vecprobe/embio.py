"""Parsing, validation, cleaning and serialization of embedding files.

Two on-disk forms are understood:

* plain embedding text: UTF-8 lines ``token v1 v2 ... vd`` (space or tab
  separated), with an optional first header line ``count dim``;
* layer bundles: a zip archive holding ``manifest.json`` plus one embedding
  text file per named layer of a model snapshot.

Parsing is line-streaming: peak memory is bounded by the size of the
resulting table, never by the size of the input file.
"""

from __future__ import annotations

import io
import json
import os
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Optional, Union

import numpy as np

from .errors import (
    DanglingPayloadRef,
    DimensionConflict,
    DuplicateLayerName,
    EmptyInput,
    MalformedManifest,
    MissingManifest,
    UnknownLayer,
    UnrecognizedFormat,
)

MANIFEST_NAME = "manifest.json"

PathLike = Union[str, Path]


@dataclass
class EmbeddingTable:
    """Frozen token -> vector map of fixed dimension.

    Vectors are float32 arrays marked read-only; the table is never trained
    and may be shared freely across threads.
    """

    dim: int
    entries: dict[str, np.ndarray]
    source_label: str = ""

    def lookup(self, token: str) -> Optional[np.ndarray]:
        """Exact, case-sensitive lookup; ``None`` signals out-of-vocabulary."""
        return self.entries.get(token)

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def payload_nbytes(self) -> int:
        """Bytes held in vector data plus UTF-8 token text (used by memory checks)."""
        return sum(v.nbytes for v in self.entries.values()) + sum(
            len(t.encode("utf-8")) for t in self.entries
        )


@dataclass
class ParseReport:
    accepted: int = 0
    dropped_malformed: int = 0
    dropped_duplicate: int = 0
    detected_dim: int = 0
    had_header: bool = False

    @property
    def data_lines(self) -> int:
        return self.accepted + self.dropped_malformed + self.dropped_duplicate


def _try_header(line: str) -> Optional[tuple[int, int]]:
    """Return (count, dim) if the line is exactly two non-negative integers."""
    parts = line.split()
    if len(parts) != 2:
        return None
    try:
        count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        return None
    if count < 0 or dim < 1:
        return None
    return count, dim


def _parse_vector(parts: list[str]) -> Optional[np.ndarray]:
    """Parse numeric fields to a finite float32 vector, or None if malformed."""
    try:
        vec = np.asarray(parts, dtype=np.float32)
    except ValueError:
        return None
    if vec.ndim != 1 or vec.size < 1 or not np.isfinite(vec).all():
        return None
    return vec


def parse_embedding_text(
    stream: Union[IO[str], Iterable[str]],
    expected_dim: Optional[int] = None,
    source_label: str = "",
) -> tuple[EmbeddingTable, ParseReport]:
    """Stream-parse an embedding text file, dropping malformed lines.

    The dimension is ``expected_dim`` if given, else the header dim if a
    header is present, else the vector length of the first well-formed data
    line. Lines whose numeric fields do not match that dimension, contain
    unparseable or non-finite values, or lack a token are counted as
    malformed. Duplicate tokens keep the first occurrence.

    Raises EmptyInput if no well-formed line exists, and DimensionConflict
    if ``expected_dim`` disagrees with a header.
    """
    report = ParseReport()
    entries: dict[str, np.ndarray] = {}
    dim = expected_dim
    lines = iter(stream)

    first = next(lines, None)
    if first is not None:
        header = _try_header(first)
        if header is not None:
            report.had_header = True
            _, header_dim = header
            if expected_dim is not None and header_dim != expected_dim:
                raise DimensionConflict(
                    f"expected dim {expected_dim} but header declares {header_dim}"
                )
            dim = header_dim
        else:
            dim = _accept_line(first, dim, entries, report)

    for line in lines:
        dim = _accept_line(line, dim, entries, report)

    if not entries:
        raise EmptyInput("no well-formed embedding line found")
    report.detected_dim = dim  # type: ignore[assignment]
    for vec in entries.values():
        vec.setflags(write=False)
    return EmbeddingTable(dim=dim, entries=entries, source_label=source_label), report


def _accept_line(
    line: str,
    dim: Optional[int],
    entries: dict[str, np.ndarray],
    report: ParseReport,
) -> Optional[int]:
    """Classify one data line into accepted/malformed/duplicate. Returns the dim."""
    parts = line.split()
    if len(parts) < 2:
        report.dropped_malformed += 1
        return dim
    if dim is not None and len(parts) - 1 != dim:
        report.dropped_malformed += 1
        return dim
    vec = _parse_vector(parts[1:])
    if vec is None:
        report.dropped_malformed += 1
        return dim
    token = parts[0]
    if token in entries:
        report.dropped_duplicate += 1
        return dim
    entries[token] = vec
    report.accepted += 1
    return vec.size if dim is None else dim


def write_embedding_text(
    table: EmbeddingTable, sink: IO[str], with_header: bool = False
) -> None:
    """Serialize a table so that a re-parse yields an identical table, zero drops.

    Components are written via the shortest float64 repr of the stored
    float32 value, which round-trips bit-faithfully.
    """
    if with_header:
        sink.write(f"{len(table.entries)} {table.dim}\n")
    for token, vec in table.entries.items():
        sink.write(token)
        sink.write(" ")
        sink.write(" ".join(map(str, vec.tolist())))
        sink.write("\n")


# --- layer bundles ---------------------------------------------------------


@dataclass
class LayerDescriptor:
    name: str
    dim: int
    entry_count: int
    payload_ref: str
    payload_nbytes: int = 0


class LayerBundle:
    """Archive of named embedding tables for one model snapshot.

    Holds an open zip handle; payloads are only parsed on :func:`load_layer`.
    """

    def __init__(
        self,
        manifest: list[LayerDescriptor],
        snapshot_label: str,
        archive: zipfile.ZipFile,
    ):
        self.manifest = manifest
        self.snapshot_label = snapshot_label
        self._archive = archive

    def layer_names(self) -> list[str]:
        return [d.name for d in self.manifest]

    def descriptor(self, name: str) -> LayerDescriptor:
        for d in self.manifest:
            if d.name == name:
                return d
        raise UnknownLayer(f"layer {name!r} not in bundle (has {self.layer_names()})")

    def open_payload(self, name: str) -> IO[str]:
        ref = self.descriptor(name).payload_ref
        return io.TextIOWrapper(self._archive.open(ref), encoding="utf-8")

    def close(self) -> None:
        self._archive.close()

    def __enter__(self) -> "LayerBundle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _count_lines(zf: zipfile.ZipFile, ref: str) -> int:
    """Count data lines of a member by streaming it, without parsing."""
    count = 0
    ends_with_newline = True
    with zf.open(ref) as fh:
        while True:
            chunk = fh.read(1 << 20)
            if not chunk:
                break
            count += chunk.count(b"\n")
            ends_with_newline = chunk.endswith(b"\n")
    if not ends_with_newline:
        count += 1
    return count


def open_bundle(archive: Union[PathLike, IO[bytes]]) -> LayerBundle:
    """Open a layer-bundle archive and validate its manifest.

    Payloads are not parsed here; descriptors carry declared dims and a
    streamed line count.
    """
    try:
        zf = zipfile.ZipFile(archive)
    except zipfile.BadZipFile as exc:
        raise MalformedManifest(f"not a readable zip archive: {exc}")
    names = set(zf.namelist())
    if MANIFEST_NAME not in names:
        zf.close()
        raise MissingManifest(f"archive has no {MANIFEST_NAME}")
    try:
        doc = json.loads(zf.read(MANIFEST_NAME).decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        zf.close()
        raise MalformedManifest(f"manifest is not valid JSON: {exc}")

    if not isinstance(doc, dict) or not isinstance(doc.get("layers"), list):
        zf.close()
        raise MalformedManifest("manifest must be an object with a 'layers' list")
    snapshot_label = str(doc.get("snapshot_label", ""))

    descriptors: list[LayerDescriptor] = []
    seen: set[str] = set()
    for entry in doc["layers"]:
        if (
            not isinstance(entry, dict)
            or not isinstance(entry.get("name"), str)
            or not entry["name"]
            or not isinstance(entry.get("dim"), int)
            or entry["dim"] < 1
            or not isinstance(entry.get("file"), str)
        ):
            zf.close()
            raise MalformedManifest(f"bad layer entry: {entry!r}")
        name, ref = entry["name"], entry["file"]
        if name in seen:
            zf.close()
            raise DuplicateLayerName(f"layer {name!r} declared twice")
        seen.add(name)
        if ref not in names:
            zf.close()
            raise DanglingPayloadRef(f"layer {name!r} references missing file {ref!r}")
        descriptors.append(
            LayerDescriptor(
                name=name,
                dim=entry["dim"],
                entry_count=_count_lines(zf, ref),
                payload_ref=ref,
                payload_nbytes=zf.getinfo(ref).file_size,
            )
        )
    return LayerBundle(descriptors, snapshot_label, zf)


def load_layer(bundle: LayerBundle, name: str) -> tuple[EmbeddingTable, ParseReport]:
    """Parse one layer's payload, enforcing the manifest-declared dimension."""
    desc = bundle.descriptor(name)
    with bundle.open_payload(name) as fh:
        try:
            return parse_embedding_text(fh, expected_dim=desc.dim, source_label=name)
        except EmptyInput:
            # Distinguish a genuinely empty payload from one whose lines all
            # carry a different dimension than the manifest declares.
            with bundle.open_payload(name) as probe:
                for i, line in enumerate(probe):
                    if i >= 100:
                        break
                    parts = line.split()
                    if len(parts) >= 2 and _parse_vector(parts[1:]) is not None:
                        raise DimensionConflict(
                            f"layer {name!r} declares dim {desc.dim} but payload "
                            f"lines have dim {len(parts) - 1}"
                        )
            raise


# --- source sniffing --------------------------------------------------------


@dataclass
class SourceInfo:
    """What an on-disk embedding source is, discovered without a full parse."""

    kind: str  # "plain_table" | "layer_bundle"
    path: Path
    byte_size: int
    dim: Optional[int] = None
    layers: dict[str, int] = field(default_factory=dict)
    layer_nbytes: dict[str, int] = field(default_factory=dict)
    snapshot_label: str = ""


def detect_plain_dim(stream: Iterable[str], max_lines: int = 200) -> Optional[int]:
    """Dimension of the first well-formed line within a bounded prefix scan."""
    for i, line in enumerate(stream):
        if i == 0:
            header = _try_header(line)
            if header is not None:
                return header[1]
        if i >= max_lines:
            return None
        parts = line.split()
        if len(parts) >= 2 and _parse_vector(parts[1:]) is not None:
            return len(parts) - 1
    return None


def sniff_source(path: PathLike) -> SourceInfo:
    """Classify a file as a layer bundle or a plain embedding table.

    Raises UnrecognizedFormat when it is neither.
    """
    path = Path(path)
    size = os.path.getsize(path)
    if zipfile.is_zipfile(path):
        try:
            with open_bundle(path) as bundle:
                layers = {d.name: d.dim for d in bundle.manifest}
                first_dim = next(iter(layers.values()), None)
                return SourceInfo(
                    kind="layer_bundle",
                    path=path,
                    byte_size=size,
                    dim=first_dim,
                    layers=layers,
                    layer_nbytes={d.name: d.payload_nbytes for d in bundle.manifest},
                    snapshot_label=bundle.snapshot_label,
                )
        except (MissingManifest, MalformedManifest):
            pass  # a zip that is not a bundle cannot be a text table either
    else:
        try:
            with open(path, encoding="utf-8", errors="strict") as fh:
                dim = detect_plain_dim(fh)
        except (UnicodeDecodeError, OSError):
            dim = None
        if dim is not None:
            return SourceInfo(kind="plain_table", path=path, byte_size=size, dim=dim)
    raise UnrecognizedFormat(f"{path.name}: neither a layer bundle nor an embedding table")
