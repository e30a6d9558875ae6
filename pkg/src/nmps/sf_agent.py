"""Exploitation agent built on successor features.

``Q(s, a) = psi(s, a) @ w``. In tabular mode ``psi`` is a
``(num_states, num_actions, feature_dim)`` array indexed by state id; in
linear mode it is a ``(obs_dim + 1, num_actions, feature_dim)`` map applied
to the observation with a bias input appended.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PolicyConfig",
    "PromiseWindow",
    "SuccessorTable",
    "act",
    "action_probs",
    "boltzmann",
    "q_td_update_batch",
    "q_value",
    "q_values",
    "state_value",
    "td_update",
    "td_update_batch",
    "value_promise",
]


@dataclass(frozen=True)
class PolicyConfig:
    temperature: float = 0.1
    epsilon: float | None = None  # set to use epsilon-greedy instead of Boltzmann

    def __post_init__(self):
        if self.epsilon is None and self.temperature <= 0:
            raise ValueError("Boltzmann temperature must be > 0")
        if self.epsilon is not None and not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")


class SuccessorTable:
    def __init__(self, num_inputs: int, num_actions: int, feature_dim: int,
                 gamma: float = 0.99, learning_rate: float = 0.1, tabular: bool = True,
                 psi: np.ndarray | None = None):
        if not 0.0 < gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        self.tabular = tabular
        self.gamma = gamma
        self.learning_rate = learning_rate
        rows = num_inputs if tabular else num_inputs + 1
        if psi is None:
            psi = np.zeros((rows, num_actions, feature_dim))
        elif psi.shape != (rows, num_actions, feature_dim):
            raise ValueError(f"psi has shape {psi.shape}, expected {(rows, num_actions, feature_dim)}")
        self.psi = psi

    @property
    def num_actions(self) -> int:
        return self.psi.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.psi.shape[2]

    def copy(self) -> "SuccessorTable":
        n = self.psi.shape[0] if self.tabular else self.psi.shape[0] - 1
        return SuccessorTable(n, self.num_actions, self.feature_dim, self.gamma,
                              self.learning_rate, self.tabular, self.psi.copy())

    def inputs(self, states):
        """Batch of state ids (tabular) or bias-augmented observations (linear)."""
        if self.tabular:
            return np.asarray(states, dtype=int)
        x = np.atleast_2d(np.asarray(states, dtype=float))
        return np.hstack([x, np.ones((len(x), 1))])

    def sf(self, states) -> np.ndarray:
        """psi for a batch of states, shape (n, num_actions, feature_dim)."""
        x = self.inputs(states)
        if self.tabular:
            return self.psi[x]
        return np.einsum("ni,iad->nad", x, self.psi)

    def sf_one(self, state) -> np.ndarray:
        if self.tabular:
            return self.psi[int(state)]
        return self.sf([state])[0]


def q_values(table: SuccessorTable, state, w) -> np.ndarray:
    return table.sf_one(state) @ np.asarray(w, dtype=float)


def q_value(table: SuccessorTable, state, action: int, w) -> float:
    return float(table.sf_one(state)[action] @ np.asarray(w, dtype=float))


def state_value(table: SuccessorTable, state, w) -> float:
    return float(np.max(q_values(table, state, w)))


def boltzmann(q: np.ndarray, temperature: float) -> np.ndarray:
    z = (q - np.max(q)) / temperature
    p = np.exp(z)
    return p / p.sum()


def action_probs(q: np.ndarray, policy: PolicyConfig) -> np.ndarray:
    if policy.epsilon is None:
        return boltzmann(q, policy.temperature)
    p = np.full(len(q), policy.epsilon / len(q))
    p[int(np.argmax(q))] += 1.0 - policy.epsilon
    return p


def sample_action(probs: np.ndarray, rng) -> int:
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    return min(idx, len(probs) - 1)


def act(table: SuccessorTable, state, w, policy: PolicyConfig, rng) -> int:
    return sample_action(action_probs(q_values(table, state, w), policy), rng)


def _greedy_next(table: SuccessorTable, psi_next, w):
    """psi(s', a*) with a* = argmax_a psi(s', a) @ w (first index on ties)."""
    q_next = np.einsum("nad,nd->na", psi_next, w)
    a_star = np.argmax(q_next, axis=1)
    return psi_next[np.arange(len(a_star)), a_star]


def td_update(table: SuccessorTable, state, action: int, next_state, phi_next, w,
              terminal: bool = False, next_action_probs=None) -> SuccessorTable:
    """Single TD(0) step on psi(s, a) toward ``phi' + gamma * psi(s', a')``.

    ``a'`` is greedy under ``w`` unless ``next_action_probs`` is given, in which
    case the expectation of psi(s', .) under those probabilities is used
    (policy evaluation). Terminal transitions drop the bootstrap term.
    """
    probs = None if next_action_probs is None else np.asarray(next_action_probs, dtype=float)[None, :]
    return td_update_batch(table, [state], [action], [next_state], np.atleast_2d(phi_next),
                           np.atleast_2d(w), np.array([terminal]), probs)


def td_update_batch(table: SuccessorTable, states, actions, next_states, phi_next, ws,
                    terminals=None, next_action_probs=None, cumulants=None) -> SuccessorTable:
    """Batched TD step, modifying ``table`` in place and returning it.

    Tabular mode averages the TD errors of duplicate ``(s, a)`` pairs so every
    pair present in the batch moves by ``learning_rate`` times its mean error.
    Linear mode takes a mean-gradient step. ``cumulants`` overrides ``phi_next``
    as the per-step signal being accumulated.
    """
    actions = np.asarray(actions, dtype=int)
    phi_next = np.asarray(phi_next, dtype=float)
    ws = np.asarray(ws, dtype=float)
    n = len(actions)
    terminals = np.zeros(n, dtype=bool) if terminals is None else np.asarray(terminals, dtype=bool)
    psi_next = table.sf(next_states)
    if next_action_probs is None:
        boot = _greedy_next(table, psi_next, ws)
    else:
        boot = np.einsum("na,nad->nd", np.asarray(next_action_probs, dtype=float), psi_next)
    signal = phi_next if cumulants is None else np.asarray(cumulants, dtype=float)
    target = signal + table.gamma * np.where(terminals[:, None], 0.0, boot)
    x = table.inputs(states)
    if table.tabular:
        current = table.psi[x, actions]
        err = target - current
        keys = x * table.num_actions + actions
        uniq, inv, counts = np.unique(keys, return_inverse=True, return_counts=True)
        summed = np.zeros((len(uniq), table.feature_dim))
        np.add.at(summed, inv, err)
        s_idx, a_idx = np.divmod(uniq, table.num_actions)
        table.psi[s_idx, a_idx] += table.learning_rate * summed / counts[:, None]
    else:
        current = np.einsum("ni,nid->nd", x, table.psi[:, actions].transpose(1, 0, 2))
        err = target - current
        grad = np.zeros_like(table.psi)
        for a in np.unique(actions):
            m = actions == a
            grad[:, a] = x[m].T @ err[m]
        table.psi += table.learning_rate * grad / n
    if not np.all(np.isfinite(table.psi)):
        raise FloatingPointError("successor features became non-finite")
    return table


def q_td_update_batch(table: SuccessorTable, states, actions, next_states, rewards, w,
                      terminals=None) -> SuccessorTable:
    """Q-learning on a scalar reward through the ``Q = psi @ w`` parametrisation.

    Each ``psi(s, a)`` moves along ``w / |w|^2`` so that ``Q(s, a)`` moves by
    ``learning_rate`` times the TD error toward ``r + gamma * max_a' Q(s', a')``
    (tabular; duplicate pairs averaged). Linear mode takes the matching
    mean-gradient step. Used to fine-tune on extrinsic reward with ``w`` fixed.
    """
    w = np.asarray(w, dtype=float)
    wn = float(w @ w)
    if wn == 0.0:
        return table
    actions = np.asarray(actions, dtype=int)
    rewards = np.asarray(rewards, dtype=float)
    n = len(actions)
    terminals = np.zeros(n, dtype=bool) if terminals is None else np.asarray(terminals, dtype=bool)
    q_next = table.sf(next_states) @ w
    target = rewards + table.gamma * np.where(terminals, 0.0, q_next.max(axis=1))
    x = table.inputs(states)
    direction = w / wn
    if table.tabular:
        err = target - table.psi[x, actions] @ w
        keys = x * table.num_actions + actions
        uniq, inv, counts = np.unique(keys, return_inverse=True, return_counts=True)
        summed = np.zeros(len(uniq))
        np.add.at(summed, inv, err)
        s_idx, a_idx = np.divmod(uniq, table.num_actions)
        table.psi[s_idx, a_idx] += (table.learning_rate * summed / counts)[:, None] * direction
    else:
        current = np.einsum("ni,nid,d->n", x, table.psi[:, actions].transpose(1, 0, 2), w)
        err = target - current
        grad = np.zeros(table.psi.shape[:2])
        np.add.at(grad.T, actions, x * err[:, None])
        table.psi += table.learning_rate * (grad / n)[:, :, None] * direction
    if not np.all(np.isfinite(table.psi)):
        raise FloatingPointError("successor features became non-finite")
    return table


class PromiseWindow:
    """Rolling record of ``k + 1`` state values and the ``k`` rewards between them."""

    def __init__(self, k: int = 10):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.values = deque(maxlen=k + 1)
        self.rewards = deque(maxlen=k)

    def record(self, value: float, reward: float | None = None):
        """Append V(s_t); ``reward`` is the reward of the transition into s_t."""
        if reward is not None:
            self.rewards.append(reward)
        self.values.append(value)

    def clear(self):
        self.values.clear()
        self.rewards.clear()

    @property
    def full(self) -> bool:
        return len(self.values) == self.k + 1 and len(self.rewards) == self.k


def value_promise(window: PromiseWindow, gamma: float) -> float | None:
    """``|V(s_{t-k}) - sum_i gamma^i R_i - gamma^k V(s_t)|``, or None until the window is full.

    Rewards are discounted from the oldest (weight 1) to the newest
    (weight ``gamma^(k-1)``), so Bellman-consistent histories score 0.
    """
    if not window.full:
        return None
    k = window.k
    discounts = gamma ** np.arange(k)
    ret = float(discounts @ np.asarray(window.rewards, dtype=float))
    return abs(window.values[0] - ret - gamma**k * window.values[-1])
