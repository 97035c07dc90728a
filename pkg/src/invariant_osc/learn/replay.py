"""Episode replay buffer with uniform transition sampling."""

from collections import deque
from collections.abc import Iterable

import numpy as np

from invariant_osc.learn.losses import Batch
from invariant_osc.sim.rollout import Episode


class ReplayBuffer:
    """Keeps the most recent ``capacity_episodes`` episodes."""

    def __init__(self, capacity_episodes: int = 200) -> None:
        if capacity_episodes < 1:
            raise ValueError(f"capacity_episodes must be >= 1, got {capacity_episodes}")
        self.capacity_episodes = capacity_episodes
        self._episodes: deque[Batch] = deque(maxlen=capacity_episodes)
        self.payload_masses: deque[float] = deque(maxlen=capacity_episodes)
        self._cache: Batch | None = None

    def __len__(self) -> int:
        return sum(len(e) for e in self._episodes)

    @property
    def episode_count(self) -> int:
        return len(self._episodes)

    def extend(self, episodes: Iterable[Episode]) -> None:
        for episode in episodes:
            if not episode.transitions:
                continue
            self._episodes.append(Batch.from_transitions(episode.transitions))
            self._cache = None
            self.payload_masses.append(
                episode.params.payload_mass if episode.params is not None else 0.0
            )

    def sample(self, rng: np.random.Generator, batch_size: int) -> Batch:
        """Uniform over stored transitions, with replacement."""
        if not self._episodes:
            raise ValueError("cannot sample from an empty replay buffer")
        data = self._stacked()
        idx = rng.integers(0, len(data), size=batch_size)
        return Batch(
            q=data.q[idx],
            qd=data.qd[idx],
            qdd=data.qdd[idx],
            tau=data.tau[idx],
            history=data.history[idx],
        )

    def all(self) -> Batch:
        return self._stacked()

    def _stacked(self) -> Batch:
        if self._cache is not None:
            return self._cache
        parts = list(self._episodes)
        self._cache = Batch(
            q=np.concatenate([p.q for p in parts]),
            qd=np.concatenate([p.qd for p in parts]),
            qdd=np.concatenate([p.qdd for p in parts]),
            tau=np.concatenate([p.tau for p in parts]),
            history=np.concatenate([p.history for p in parts]),
        )
        return self._cache
