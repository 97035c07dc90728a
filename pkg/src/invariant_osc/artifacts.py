"""Artifact types passed between osc:* graph nodes."""

import csv
import hashlib
import io
import json
import math
from collections.abc import Iterable, Sequence
from io import BytesIO
from typing import Any, BinaryIO

import numpy as np
from PIL import Image
from invariant.protocol import ICacheable

from invariant_osc.archive import decode_archive, encode_archive

Cell = str | int | float


def _write_block(stream: BinaryIO, data: bytes) -> None:
    stream.write(len(data).to_bytes(8, byteorder="big"))
    stream.write(data)


def _read_block(stream: BinaryIO) -> bytes:
    length = int.from_bytes(stream.read(8), byteorder="big")
    return stream.read(length)


def _canonical_json(doc: Any) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _csv_cell(value: Cell) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


class ImageArtifact(ICacheable):
    """RGBA raster, serialized as canonical PNG."""

    def __init__(self, image: Image.Image) -> None:
        if image.mode != "RGBA":
            image = image.convert("RGBA")
        self.image = image

    @property
    def width(self) -> int:
        return self.image.width

    @property
    def height(self) -> int:
        return self.image.height

    def to_png(self) -> bytes:
        """Canonical PNG (level 1, no metadata)."""
        buffer = BytesIO()
        self.image.save(buffer, format="PNG", compress_level=1, optimize=False)
        return buffer.getvalue()

    def get_stable_hash(self) -> str:
        return hashlib.sha256(self.to_png()).hexdigest()

    def to_stream(self, stream: BinaryIO) -> None:
        _write_block(stream, self.to_png())

    @classmethod
    def from_stream(cls, stream: BinaryIO) -> "ImageArtifact":
        image = Image.open(BytesIO(_read_block(stream)))
        return cls(image.convert("RGBA"))


class CheckpointArtifact(ICacheable):
    """Named parameter tensors plus a metadata document.

    Serialized with the named-tensor archive layout, so the stream body is
    byte-identical to a ``.ckpt`` file on disk.
    """

    def __init__(self, state: dict[str, np.ndarray], meta: dict[str, Any] | None = None) -> None:
        self.state = {name: np.asarray(value, dtype=np.float64) for name, value in state.items()}
        self.meta = dict(meta or {})

    @property
    def namespaces(self) -> tuple[str, ...]:
        return tuple(sorted({name.split("/", 1)[0] for name in self.state}))

    def to_bytes(self) -> bytes:
        return encode_archive(self.state, meta=self.meta)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CheckpointArtifact":
        archive = decode_archive(data)
        return cls(archive.tensors, archive.meta)

    def get_stable_hash(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def to_stream(self, stream: BinaryIO) -> None:
        _write_block(stream, self.to_bytes())

    @classmethod
    def from_stream(cls, stream: BinaryIO) -> "CheckpointArtifact":
        return cls.from_bytes(_read_block(stream))


class TableArtifact(ICacheable):
    """Fixed-schema rows of str / int / float cells."""

    def __init__(self, columns: Sequence[str], rows: Iterable[Sequence[Cell]] = ()) -> None:
        self.columns = tuple(columns)
        self.rows: list[tuple[Cell, ...]] = []
        for row in rows:
            if len(row) != len(self.columns):
                raise ValueError(
                    f"row has {len(row)} cells, expected {len(self.columns)} ({self.columns})"
                )
            self.rows.append(tuple(row))

    @classmethod
    def from_records(
        cls, columns: Sequence[str], records: Iterable[dict[str, Cell]]
    ) -> "TableArtifact":
        return cls(columns, ([record[c] for c in columns] for record in records))

    def __len__(self) -> int:
        return len(self.rows)

    def records(self) -> list[dict[str, Cell]]:
        return [dict(zip(self.columns, row)) for row in self.rows]

    def column(self, name: str) -> list[Cell]:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]

    def to_csv(self) -> str:
        """Header plus one line per row; floats use repr so the text is bit-exact."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_csv_cell(v) for v in row])
        return buffer.getvalue()

    def to_dict(self) -> dict[str, Any]:
        return {"columns": list(self.columns), "rows": [list(row) for row in self.rows]}

    def get_stable_hash(self) -> str:
        return hashlib.sha256(_canonical_json(self.to_dict())).hexdigest()

    def to_stream(self, stream: BinaryIO) -> None:
        _write_block(stream, _canonical_json(self.to_dict()))

    @classmethod
    def from_stream(cls, stream: BinaryIO) -> "TableArtifact":
        doc = json.loads(_read_block(stream).decode("utf-8"))
        return cls(doc["columns"], doc["rows"])


class TrainingArtifact(ICacheable):
    """Result of a training phase: final weights and the per-round loss curve."""

    def __init__(self, checkpoint: CheckpointArtifact, curve: TableArtifact) -> None:
        self.checkpoint = checkpoint
        self.curve = curve

    def get_stable_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.checkpoint.get_stable_hash().encode("ascii"))
        digest.update(self.curve.get_stable_hash().encode("ascii"))
        return digest.hexdigest()

    def to_stream(self, stream: BinaryIO) -> None:
        self.checkpoint.to_stream(stream)
        self.curve.to_stream(stream)

    @classmethod
    def from_stream(cls, stream: BinaryIO) -> "TrainingArtifact":
        checkpoint = CheckpointArtifact.from_stream(stream)
        return cls(checkpoint, TableArtifact.from_stream(stream))


class GainTableArtifact(ICacheable):
    """Winning (kp, damping ratio) per controller kind, plus the full grid."""

    def __init__(self, gains: dict[str, dict[str, float]], grid: TableArtifact) -> None:
        self.gains = {kind: dict(values) for kind, values in gains.items()}
        self.grid = grid

    def gain_for(self, kind: str) -> tuple[float, float] | None:
        entry = self.gains.get(kind)
        if entry is None:
            return None
        return entry["kp"], entry["damping_ratio"]

    def to_dict(self) -> dict[str, Any]:
        return {"gains": self.gains, "grid": self.grid.to_dict()}

    def get_stable_hash(self) -> str:
        return hashlib.sha256(_canonical_json(self.to_dict())).hexdigest()

    def to_stream(self, stream: BinaryIO) -> None:
        _write_block(stream, _canonical_json(self.to_dict()))

    @classmethod
    def from_stream(cls, stream: BinaryIO) -> "GainTableArtifact":
        doc = json.loads(_read_block(stream).decode("utf-8"))
        grid = doc["grid"]
        return cls(doc["gains"], TableArtifact(grid["columns"], grid["rows"]))


class EvaluationArtifact(ICacheable):
    """Per-episode metrics for one regime cell and each controller's first episode.

    ``traces`` maps a controller name to the series of ``episode_arrays``
    (``x`` and ``x_d`` are ``(T, 2)``).
    """

    def __init__(
        self, metrics: TableArtifact, traces: dict[str, dict[str, np.ndarray]] | None = None
    ) -> None:
        self.metrics = metrics
        self.traces = {
            name: {key: np.asarray(value, dtype=np.float64) for key, value in series.items()}
            for name, series in (traces or {}).items()
        }

    def _trace_bytes(self) -> bytes:
        flat = {
            f"{name}/{key}": value
            for name, series in self.traces.items()
            for key, value in series.items()
        }
        return encode_archive(flat)

    def get_stable_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.metrics.get_stable_hash().encode("ascii"))
        digest.update(self._trace_bytes())
        return digest.hexdigest()

    def to_stream(self, stream: BinaryIO) -> None:
        self.metrics.to_stream(stream)
        _write_block(stream, self._trace_bytes())

    @classmethod
    def from_stream(cls, stream: BinaryIO) -> "EvaluationArtifact":
        metrics = TableArtifact.from_stream(stream)
        traces: dict[str, dict[str, np.ndarray]] = {}
        for flat, value in decode_archive(_read_block(stream)).tensors.items():
            name, key = flat.rsplit("/", 1)
            traces.setdefault(name, {})[key] = value
        return cls(metrics, traces)


class SummaryArtifact(ICacheable):
    """A JSON document (regime summary or ablation row)."""

    def __init__(self, doc: dict[str, Any]) -> None:
        self.doc = doc

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(_finite_or_none(self.doc), indent=indent, sort_keys=True)

    def get_stable_hash(self) -> str:
        return hashlib.sha256(_canonical_json(self.doc)).hexdigest()

    def to_stream(self, stream: BinaryIO) -> None:
        _write_block(stream, _canonical_json(self.doc))

    @classmethod
    def from_stream(cls, stream: BinaryIO) -> "SummaryArtifact":
        return cls(json.loads(_read_block(stream).decode("utf-8")))


def _finite_or_none(doc: Any) -> Any:
    """Strict JSON for files on disk: NaN and infinities become null."""
    if isinstance(doc, dict):
        return {key: _finite_or_none(value) for key, value in doc.items()}
    if isinstance(doc, list | tuple):
        return [_finite_or_none(value) for value in doc]
    if isinstance(doc, float) and not math.isfinite(doc):
        return None
    return doc
