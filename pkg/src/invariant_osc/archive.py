"""Named-tensor archive: a JSON manifest followed by raw float64 payloads.

Layout::

    [8 bytes big-endian: manifest length][manifest JSON][payload]

The manifest lists every tensor with its name, namespace, shape, element
offset and element count into the payload, which is the concatenation of all
tensors as little-endian float64. Checkpoints and replay logs share this
layout.
"""

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from invariant_osc.errors import CheckpointError

FORMAT_VERSION = 1

_LE_FLOAT64 = np.dtype("<f8")


@dataclass
class Archive:
    """Decoded archive contents."""

    tensors: dict[str, np.ndarray] = field(default_factory=dict)
    namespaces: dict[str, str] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION


def encode_archive(
    tensors: dict[str, np.ndarray],
    *,
    namespaces: dict[str, str] | None = None,
    meta: dict[str, Any] | None = None,
) -> bytes:
    """Serialise tensors in name order."""
    namespaces = namespaces or {}
    entries = []
    chunks = []
    offset = 0
    for name in sorted(tensors):
        array = np.ascontiguousarray(tensors[name], dtype=_LE_FLOAT64)
        entries.append(
            {
                "name": name,
                "namespace": namespaces.get(name, name.split("/", 1)[0]),
                "shape": list(array.shape),
                "offset": offset,
                "count": int(array.size),
            }
        )
        chunks.append(array.tobytes(order="C"))
        offset += array.size
    manifest = {
        "format_version": FORMAT_VERSION,
        "tensors": entries,
        "meta": meta or {},
    }
    header = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return len(header).to_bytes(8, byteorder="big") + header + b"".join(chunks)


def decode_archive(data: bytes) -> Archive:
    """Parse archive bytes; rejects truncated data and unknown versions."""
    if len(data) < 8:
        raise CheckpointError("archive is truncated (no manifest length)")
    length = int.from_bytes(data[:8], byteorder="big")
    if len(data) < 8 + length:
        raise CheckpointError("archive is truncated (manifest)")
    try:
        manifest = json.loads(data[8 : 8 + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"archive manifest is not valid JSON: {exc}") from exc

    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported archive format_version {version!r}, expected {FORMAT_VERSION}"
        )

    payload = np.frombuffer(data, dtype=_LE_FLOAT64, offset=8 + length)
    archive = Archive(meta=manifest.get("meta", {}), format_version=version)
    for entry in manifest["tensors"]:
        start, count = entry["offset"], entry["count"]
        if start + count > payload.size:
            raise CheckpointError(f"archive payload too short for tensor '{entry['name']}'")
        values = payload[start : start + count].astype(np.float64)
        archive.tensors[entry["name"]] = values.reshape(entry["shape"])
        archive.namespaces[entry["name"]] = entry["namespace"]
    return archive
