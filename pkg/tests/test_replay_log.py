"""Tests for episode CSV logs and replay archives."""

import csv
import io

import numpy as np

from invariant_osc.control.controllers import build_controller
from invariant_osc.sim.environment import ArmEnv, RandomizationSpec, SimConfig
from invariant_osc.sim.replay_log import (
    encode_replay,
    episode_arrays,
    episode_csv,
    episode_csv_header,
    read_replay_archive,
    series_csv,
    write_episode_csv,
    write_replay_archive,
)
from invariant_osc.sim.rollout import rollout
from invariant_osc.sim.trajectory import sample_trajectory

SIM = SimConfig(sim_dt=0.005, control_dt=0.05, episode_horizon=5, history_steps=2)


def _episode(arm, seed):
    traj = sample_trajectory("circle", np.random.default_rng(seed), arm, 5, 0.05)
    env = ArmEnv(arm, SIM)
    return rollout(build_controller("analytical_osc", arm), traj, env, RandomizationSpec(), seed)


def test_header():
    """Per-joint columns for q, qd, qdd and tau, then the task-space columns."""
    header = episode_csv_header(2)
    assert header[:3] == ["t", "q_0", "q_1"]
    assert header[-5:] == ["x_0", "x_1", "x_d_0", "x_d_1", "error"]
    assert len(header) == 1 + 4 * 2 + 5


def test_episode_csv_is_exact(arm):
    """Every value is written with repr and reads back bit for bit."""
    episode = _episode(arm, 0)
    rows = list(csv.reader(io.StringIO(episode_csv(episode))))
    assert rows[0] == episode_csv_header(3)
    assert len(rows) == 1 + len(episode)
    tau_col = rows[0].index("tau_2")
    assert float(rows[3][tau_col]) == episode.transitions[2].state.tau[2]
    assert float(rows[1][-1]) == episode.errors[0]


def test_write_episode_csv(arm, tmp_path):
    """The file holds the same text."""
    episode = _episode(arm, 1)
    path = tmp_path / "episode.csv"
    write_episode_csv(episode, path)
    assert path.read_text(encoding="utf-8") == episode_csv(episode)


def test_replay_archive(arm, tmp_path):
    """Series and metadata of every episode come back in order."""
    episodes = [_episode(arm, 2), _episode(arm, 3)]
    path = tmp_path / "replay.bin"
    write_replay_archive(episodes, path)
    restored = read_replay_archive(path)
    assert [r["seed"] for r in restored] == [2, 3]
    assert restored[0]["steps"] == 5
    expected_q = [t.state.q for t in episodes[1].transitions]
    np.testing.assert_array_equal(restored[1]["q"], expected_q)
    assert restored[0]["history"].shape == (5, 2, 9)
    assert restored[0]["trajectory_kind"] == "circle"


def test_series_csv_matches_episode_csv(arm):
    """Logging the flat series gives the same text as logging the episode."""
    episode = _episode(arm, 4)
    assert series_csv(episode_arrays(episode)) == episode_csv(episode)


def test_encode_replay_keeps_info(arm, tmp_path):
    """Arbitrary per-episode info survives next to the series."""
    series = episode_arrays(_episode(arm, 5))
    path = tmp_path / "cell.replay"
    path.write_bytes(encode_replay([({"controller": "joint_pd"}, series)]))
    (restored,) = read_replay_archive(path)
    assert restored["controller"] == "joint_pd"
    np.testing.assert_array_equal(restored["x_d"], series["x_d"])
