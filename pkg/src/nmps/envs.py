"""Deterministic toy MDPs used for pre-training and fine-tuning.

Two environments are provided:

``FourRooms``
    Grid world with 4 moves (0=up, 1=right, 2=down, 3=left). Moving into a
    wall leaves the agent in place. The ``classic`` layout is the usual 11x11
    four-room interior (104 open cells); ``open`` is a wall-free 5x5 room used
    by the dynamic-programming oracles. Observations are one-hot vectors over
    the open cells (row-major order), so ``obs_dim`` equals the cell count.

``PointMass2D``
    Continuous point in ``[-1, 1]^2`` driven by 8 unit-direction thrusts.
    Observation is ``(x, y, vx, vy)``. Velocity decays by 0.9 per step; the
    position is clamped at the box edges (the clamped velocity component is
    zeroed).

Both environments support reach tasks (``reach-goal-NE``, ``reach-goal-SW``)
that pay 1 when the goal is entered and end the episode there. With
``task_id=None`` the environment has no goal and never pays reward, which is
how the pre-training loop sees it (see :func:`reward_free`).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

__all__ = [
    "EnvKind",
    "EnvSpec",
    "EnvState",
    "FourRooms",
    "PointMass2D",
    "RewardFreeEnv",
    "UnsupportedOperation",
    "enumerate_states",
    "make_env",
    "reset",
    "reward_free",
    "step",
]

TASKS = ("reach-goal-NE", "reach-goal-SW")

CLASSIC_LAYOUT = (
    "     #     ",
    "     #     ",
    "           ",
    "     #     ",
    "     #     ",
    "# ####     ",
    "     ### ##",
    "     #     ",
    "     #     ",
    "           ",
    "     #     ",
)
OPEN_LAYOUT = ("     ",) * 5

MOVES = ((-1, 0), (0, 1), (1, 0), (0, -1))


class UnsupportedOperation(Exception):
    """Raised when an operation is not defined for an environment kind."""


class EnvKind(str, Enum):
    FOUR_ROOMS = "fourrooms"
    POINT_MASS = "pointmass"


@dataclass(frozen=True)
class EnvSpec:
    kind: EnvKind
    obs_dim: int
    num_actions: int
    horizon: int
    task_id: str | None = None
    layout: str = "classic"

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.num_actions < 1:
            raise ValueError("action set must be nonempty")
        if self.task_id is not None and self.task_id not in TASKS:
            raise ValueError(f"unknown task {self.task_id!r}; expected one of {TASKS}")

    @property
    def action_set(self) -> tuple[int, ...]:
        return tuple(range(self.num_actions))


@dataclass(frozen=True)
class EnvState:
    observation: np.ndarray
    step_index: int = 0
    episode_done: bool = False
    # True only when the episode ended by entering the goal (no bootstrap past it).
    terminal: bool = False
    # Grid cell (row, col) for FourRooms, continuous position for PointMass2D.
    position: tuple = ()


class FourRooms:
    """Four-room grid world; see module docstring for the dynamics."""

    def __init__(self, layout: str = "classic", horizon: int = 200,
                 task_id: str | None = None, start: tuple[int, int] | None = None,
                 random_start: bool = False):
        rows = {"classic": CLASSIC_LAYOUT, "open": OPEN_LAYOUT}.get(layout)
        if rows is None:
            raise ValueError(f"unknown FourRooms layout {layout!r}")
        self.layout = layout
        self.height = len(rows)
        self.width = len(rows[0])
        self.walls = {(r, c) for r, line in enumerate(rows) for c, ch in enumerate(line) if ch == "#"}
        self.cells = [(r, c) for r in range(self.height) for c in range(self.width)
                      if (r, c) not in self.walls]
        self.index = {cell: i for i, cell in enumerate(self.cells)}
        self.start = start if start is not None else (0, 0)
        if self.start not in self.index:
            raise ValueError(f"start cell {self.start} is a wall")
        self.random_start = random_start
        self.goal = None
        if task_id == "reach-goal-NE":
            self.goal = (0, self.width - 1)
        elif task_id == "reach-goal-SW":
            self.goal = (self.height - 1, 0)
        self.spec = EnvSpec(EnvKind.FOUR_ROOMS, len(self.cells), 4, horizon, task_id, layout)

    @property
    def num_states(self) -> int:
        return len(self.cells)

    @property
    def tabular(self) -> bool:
        return True

    def observe(self, cell) -> np.ndarray:
        obs = np.zeros(len(self.cells))
        obs[self.index[cell]] = 1.0
        return obs

    def state_index(self, observation) -> int:
        return int(np.argmax(observation))

    def coverage_key(self, state: EnvState):
        return state.position

    def reset(self, seed: int = 0) -> EnvState:
        cell = self.start
        if self.random_start:
            rng = np.random.default_rng(seed)
            cell = self.cells[int(rng.integers(len(self.cells)))]
        return EnvState(self.observe(cell), 0, False, False, cell)

    def move(self, cell, action: int):
        dr, dc = MOVES[action]
        r, c = cell[0] + dr, cell[1] + dc
        if not (0 <= r < self.height and 0 <= c < self.width) or (r, c) in self.walls:
            return cell
        return (r, c)

    def step(self, state: EnvState, action: int):
        if state.episode_done:
            raise RuntimeError("cannot step a finished episode; call reset()")
        if action not in range(4):
            raise ValueError(f"invalid action {action}")
        cell = self.move(state.position, action)
        t = state.step_index + 1
        at_goal = self.goal is not None and cell == self.goal
        reward = 1.0 if at_goal else 0.0
        done = at_goal or t >= self.spec.horizon
        return EnvState(self.observe(cell), t, done, at_goal, cell), reward, done

    def enumerate_states(self) -> list[np.ndarray]:
        return [self.observe(cell) for cell in self.cells]


class PointMass2D:
    """Damped point mass in the unit box with 8 thrust directions."""

    angles = np.arange(8) * (np.pi / 4)
    thrusts = np.stack([np.cos(angles), np.sin(angles)], axis=1)

    def __init__(self, horizon: int = 100, task_id: str | None = None,
                 decay: float = 0.9, accel: float = 0.01, goal_radius: float = 0.15):
        self.decay = decay
        self.accel = accel
        self.goal_radius = goal_radius
        self.goal = None
        if task_id == "reach-goal-NE":
            self.goal = np.array([0.8, 0.8])
        elif task_id == "reach-goal-SW":
            self.goal = np.array([-0.8, -0.8])
        self.spec = EnvSpec(EnvKind.POINT_MASS, 4, 8, horizon, task_id)

    @property
    def tabular(self) -> bool:
        return False

    def coverage_key(self, state: EnvState, bins: int = 20):
        p = np.asarray(state.position)
        cell = np.minimum(((p + 1.0) / 2.0 * bins).astype(int), bins - 1)
        return tuple(int(v) for v in cell)

    def reset(self, seed: int = 0) -> EnvState:
        rng = np.random.default_rng(seed)
        pos = rng.uniform(-0.1, 0.1, size=2)
        obs = np.concatenate([pos, np.zeros(2)])
        return EnvState(obs, 0, False, False, tuple(pos))

    def step(self, state: EnvState, action: int):
        if state.episode_done:
            raise RuntimeError("cannot step a finished episode; call reset()")
        if action not in range(8):
            raise ValueError(f"invalid action {action}")
        pos, vel = state.observation[:2], state.observation[2:]
        vel = self.decay * vel + self.accel * self.thrusts[action]
        pos = pos + vel
        hit = np.abs(pos) > 1.0
        pos = np.clip(pos, -1.0, 1.0)
        vel = np.where(hit, 0.0, vel)
        t = state.step_index + 1
        at_goal = self.goal is not None and float(np.linalg.norm(pos - self.goal)) <= self.goal_radius
        reward = 1.0 if at_goal else 0.0
        done = at_goal or t >= self.spec.horizon
        obs = np.concatenate([pos, vel])
        return EnvState(obs, t, done, at_goal, tuple(pos)), reward, done

    def enumerate_states(self):
        raise UnsupportedOperation("PointMass2D has a continuous state space")


class RewardFreeEnv:
    """Goal-free view of an environment whose ``step`` returns no reward.

    Pre-training code receives this wrapper, so extrinsic rewards cannot leak
    into the unsupervised phase.
    """

    def __init__(self, env):
        inner = copy.copy(env)
        inner.goal = None
        inner.spec = replace(env.spec, task_id=None)
        self._env = inner
        self.spec = inner.spec

    def __getattr__(self, name):
        return getattr(self._env, name)

    def reset(self, seed: int = 0) -> EnvState:
        return self._env.reset(seed)

    def step(self, state: EnvState, action: int):
        nxt, _, done = self._env.step(state, action)
        return nxt, done


def reward_free(env) -> RewardFreeEnv:
    return env if isinstance(env, RewardFreeEnv) else RewardFreeEnv(env)


def make_env(kind: str = "fourrooms", layout: str = "classic", horizon: int | None = None,
             task_id: str | None = None, **kwargs):
    kind = EnvKind(kind.lower())
    if kind is EnvKind.FOUR_ROOMS:
        return FourRooms(layout=layout, horizon=horizon or 200, task_id=task_id, **kwargs)
    return PointMass2D(horizon=horizon or 100, task_id=task_id, **kwargs)


def reset(env, seed: int = 0) -> EnvState:
    return env.reset(seed)


def step(env, state: EnvState, action: int):
    return env.step(state, action)


def enumerate_states(env) -> list[np.ndarray]:
    return env.enumerate_states()
