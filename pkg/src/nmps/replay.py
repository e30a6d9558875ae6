"""Replay storage with per-variant sharing between the two agents.

``Separate``      each agent has its own buffer, fed by its own actions.
``ExploitCommon`` one shared buffer (id ``"exploit"``) fed by every step and
                  sampled by both agents.
``ExplorCommon``  as above with buffer id ``"explor"``.

Raw observations are stored; every agent re-encodes them with its own
feature map at sample time. Each sampled batch records the id of the buffer
it came from.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .controller import Mode

__all__ = ["Batch", "ReplayBuffer", "ReplayBuffers", "ReplayConfig", "Sharing", "Transition", "push", "sample_for"]


class Sharing(str, Enum):
    SEPARATE = "Separate"
    EXPLOIT_COMMON = "ExploitCommon"
    EXPLOR_COMMON = "ExplorCommon"


@dataclass(frozen=True)
class ReplayConfig:
    capacity: int = 100_000
    sharing: Sharing = Sharing.SEPARATE
    batch_size: int = 64

    def __post_init__(self):
        if self.capacity < self.batch_size:
            raise ValueError("capacity must be >= batch_size")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class Transition:
    state: np.ndarray          # observation
    action: int
    next_state: np.ndarray     # observation
    task_w: np.ndarray
    actor: Mode
    step: int
    skill_index: int | None = None
    terminal: bool = False
    state_id: int = -1         # tabular index, -1 for continuous envs
    next_state_id: int = -1


@dataclass
class Batch:
    obs: np.ndarray
    actions: np.ndarray
    next_obs: np.ndarray
    ws: np.ndarray
    skills: np.ndarray
    terminals: np.ndarray
    actors: np.ndarray
    steps: np.ndarray
    state_ids: np.ndarray
    next_state_ids: np.ndarray
    source: str

    def __len__(self):
        return len(self.actions)

    @property
    def provenance(self) -> list[str]:
        return [self.source] * len(self)

    # agent-facing state handles: tabular ids when available, else observations
    @property
    def states(self):
        return self.state_ids if self.state_ids[0] >= 0 else self.obs

    @property
    def next_states(self):
        return self.next_state_ids if self.next_state_ids[0] >= 0 else self.next_obs


class ReplayBuffer:
    """FIFO ring buffer backed by numpy arrays that grow on demand up to capacity."""

    def __init__(self, capacity: int, buffer_id: str):
        self.capacity = capacity
        self.buffer_id = buffer_id
        self.size = 0
        self._next = 0
        self._arrays: dict[str, np.ndarray] | None = None

    def __len__(self):
        return self.size

    def _allocate(self, t: Transition, rows: int):
        spec = {
            "obs": (np.shape(t.state), float),
            "next_obs": (np.shape(t.next_state), float),
            "ws": (np.shape(t.task_w), float),
            "actions": ((), int),
            "skills": ((), int),
            "terminals": ((), bool),
            "actors": ((), "U7"),
            "steps": ((), int),
            "state_ids": ((), int),
            "next_state_ids": ((), int),
        }
        new = {k: np.zeros((rows,) + shape, dtype=dt) for k, (shape, dt) in spec.items()}
        if self._arrays is not None:
            for k, arr in self._arrays.items():
                new[k][: len(arr)] = arr
        self._arrays = new

    def push(self, t: Transition):
        if self._arrays is None:
            self._allocate(t, min(self.capacity, 1024))
        rows = len(self._arrays["actions"])
        if self._next >= rows and rows < self.capacity:
            self._allocate(t, min(self.capacity, rows * 2))
        i = self._next
        a = self._arrays
        a["obs"][i] = t.state
        a["next_obs"][i] = t.next_state
        a["ws"][i] = t.task_w
        a["actions"][i] = t.action
        a["skills"][i] = -1 if t.skill_index is None else t.skill_index
        a["terminals"][i] = t.terminal
        a["actors"][i] = Mode(t.actor).value
        a["steps"][i] = t.step
        a["state_ids"][i] = t.state_id
        a["next_state_ids"][i] = t.next_state_id
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _order(self) -> np.ndarray:
        """Physical row indices from oldest to newest."""
        if self.size < self.capacity:
            return np.arange(self.size)
        return (np.arange(self.size) + self._next) % self.capacity

    def column(self, name: str) -> np.ndarray:
        """A stored field for all live items, oldest first."""
        if self._arrays is None:
            return np.zeros(0)
        return self._arrays[name][self._order()]

    def take(self, rows) -> Batch:
        a = self._arrays
        return Batch(**{k: v[rows] for k, v in a.items()}, source=self.buffer_id)

    def sample(self, batch_size: int, rng) -> Batch | None:
        """Uniform sample with replacement, or None when fewer than ``batch_size`` items."""
        if self.size < batch_size:
            return None
        return self.take(rng.integers(0, self.size, size=batch_size))


class ReplayBuffers:
    """The buffer set for one run, routing pushes and samples per sharing mode.

    ``mirror_explor_to_exploit`` additionally files explorer transitions in
    the exploitation buffer (Separate mode only). Variants in which the
    explorer drives every action need it so the exploiter sees any data.
    """

    def __init__(self, cfg: ReplayConfig, mirror_explor_to_exploit: bool = False):
        self.cfg = cfg
        self.sharing = Sharing(cfg.sharing)
        self.mirror = mirror_explor_to_exploit and self.sharing is Sharing.SEPARATE
        if self.sharing is Sharing.SEPARATE:
            self.buffers = {"exploit": ReplayBuffer(cfg.capacity, "exploit"),
                            "explor": ReplayBuffer(cfg.capacity, "explor")}
        else:
            shared_id = "exploit" if self.sharing is Sharing.EXPLOIT_COMMON else "explor"
            self.buffers = {shared_id: ReplayBuffer(cfg.capacity, shared_id)}

    def buffer_for(self, role: Mode) -> ReplayBuffer:
        if self.sharing is Sharing.SEPARATE:
            return self.buffers["exploit" if Mode(role) is Mode.EXPLOIT else "explor"]
        return next(iter(self.buffers.values()))

    def push(self, t: Transition):
        if self.sharing is not Sharing.SEPARATE:
            next(iter(self.buffers.values())).push(t)
            return
        actor = Mode(t.actor)
        self.buffer_for(actor).push(t)
        if self.mirror and actor is Mode.EXPLOR:
            self.buffers["exploit"].push(t)

    def sample_for(self, role: Mode, rng, batch_size: int | None = None) -> Batch | None:
        return self.buffer_for(role).sample(batch_size or self.cfg.batch_size, rng)


def push(buffers: ReplayBuffers, transition: Transition):
    buffers.push(transition)


def sample_for(role: Mode, buffers: ReplayBuffers, cfg: ReplayConfig, rng) -> Batch | None:
    return buffers.sample_for(role, rng, cfg.batch_size)
