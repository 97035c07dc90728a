"""Episode logs: per-step CSV and the binary replay archive.

Both writers work on the flat series of ``episode_arrays``, so traces kept in
an EvaluationArtifact are logged the same way as a live Episode.
"""

import csv
import io
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from invariant_osc.archive import decode_archive, encode_archive
from invariant_osc.sim.rollout import Episode

SERIES = ("t", "q", "qd", "qdd", "tau", "history", "x", "x_d", "error")

Series = Mapping[str, np.ndarray]


def episode_csv_header(n_dof: int) -> list[str]:
    header = ["t"]
    for name in ("q", "qd", "qdd", "tau"):
        header += [f"{name}_{i}" for i in range(n_dof)]
    return header + ["x_0", "x_1", "x_d_0", "x_d_1", "error"]


def episode_arrays(episode: Episode) -> dict[str, np.ndarray]:
    states = [tr.state for tr in episode.transitions]
    return {
        "t": np.array([s.t for s in states]),
        "q": np.array([s.q for s in states]),
        "qd": np.array([s.qd for s in states]),
        "qdd": np.array([s.qdd for s in states]),
        "tau": np.array([s.tau for s in states]),
        "history": np.array([tr.history for tr in episode.transitions]),
        "x": np.array(episode.x).reshape(-1, 2),
        "x_d": np.array(episode.x_d).reshape(-1, 2),
        "error": np.array(episode.errors),
    }


def series_csv(series: Series) -> str:
    """One row per control step; floats use repr so the text is bit-exact."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    q = np.asarray(series["q"])
    n = q.shape[1] if q.ndim == 2 else 0
    writer.writerow(episode_csv_header(n))
    for i in range(len(series["t"])):
        values = [
            series["t"][i],
            *series["q"][i],
            *series["qd"][i],
            *series["qdd"][i],
            *series["tau"][i],
            *series["x"][i],
            *series["x_d"][i],
            series["error"][i],
        ]
        writer.writerow([repr(float(v)) for v in values])
    return buffer.getvalue()


def episode_csv(episode: Episode) -> str:
    return series_csv(episode_arrays(episode))


def write_episode_csv(episode: Episode, path: Path | str) -> None:
    Path(path).write_text(episode_csv(episode), encoding="utf-8")


def encode_replay(records: Sequence[tuple[dict[str, Any], Series]]) -> bytes:
    """Archive of ``(info, series)`` pairs; series go under ``episode{i}/<name>``."""
    tensors: dict[str, np.ndarray] = {}
    infos = []
    for i, (info, series) in enumerate(records):
        for key in SERIES:
            tensors[f"episode{i}/{key}"] = np.asarray(series[key], dtype=np.float64)
        infos.append(dict(info))
    return encode_archive(tensors, meta={"episodes": infos})


def write_replay_archive(episodes: Sequence[Episode], path: Path | str) -> None:
    records = [
        (
            {
                "seed": episode.seed,
                "trajectory_kind": episode.trajectory_kind,
                "truncated": episode.truncated,
                "steps": len(episode),
            },
            episode_arrays(episode),
        )
        for episode in episodes
    ]
    Path(path).write_bytes(encode_replay(records))


def read_replay_archive(path: Path | str) -> list[dict[str, object]]:
    """Inverse of encode_replay: one dict of series plus metadata per episode."""
    archive = decode_archive(Path(path).read_bytes())
    episodes = []
    for i, info in enumerate(archive.meta.get("episodes", [])):
        record: dict[str, object] = dict(info)
        for key in SERIES:
            record[key] = archive.tensors[f"episode{i}/{key}"]
        episodes.append(record)
    return episodes
