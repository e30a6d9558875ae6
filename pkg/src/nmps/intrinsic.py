"""Intrinsic rewards.

* ``visr_reward``: task-alignment reward ``phi(s') @ w`` (exploitation term).
* ``apt_reward``: particle entropy estimate ``log(1 + mean_k ||h - h_j||_p^p)``
  over the k nearest neighbours of ``h`` in a feature memory (exploration term).
* ``aps_combined``: the sum of the two, used only by the monolithic baseline.
* ``diayn_reward``: ``log q(z | s) - log p(z)`` under a uniform skill prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "KnnConfig",
    "LOG_PROB_FLOOR",
    "apt_reward",
    "apt_rewards_batch",
    "aps_combined",
    "diayn_reward",
    "diayn_rewards_batch",
    "visr_reward",
    "visr_rewards_batch",
]

LOG_PROB_FLOOR = -30.0


@dataclass(frozen=True)
class KnnConfig:
    k: int = 12
    n_h: int = 2
    average_top_k: bool = True
    # extra log(r + 1) on the exploration term; off by default
    log_transform: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.n_h < 1:
            raise ValueError("n_h must be >= 1")


def visr_reward(phi_s, w) -> float:
    phi_s = np.asarray(phi_s, dtype=float)
    w = np.asarray(w, dtype=float)
    if phi_s.shape != w.shape:
        raise ValueError(f"feature dim {phi_s.shape} does not match task dim {w.shape}")
    return float(phi_s @ w)


def visr_rewards_batch(phis, ws) -> np.ndarray:
    return np.einsum("ij,ij->i", np.asarray(phis, dtype=float), np.asarray(ws, dtype=float))


def _reduce(dists_sorted, cfg: KnnConfig):
    """Turn (n, m) ascending neighbour distances into rewards."""
    m = dists_sorted.shape[1]
    k = min(cfg.k, m)
    if cfg.average_top_k:
        stat = dists_sorted[:, :k].sum(axis=1) / k
    else:
        stat = dists_sorted[:, k - 1]
    r = np.log1p(stat)
    if cfg.log_transform:
        r = np.log1p(r)
    return r


def _powered_distances(h, memory, n_h):
    diff = np.abs(h[:, None, :] - memory[None, :, :])
    return np.sum(diff**n_h, axis=-1)


def apt_reward(h, memory, cfg: KnnConfig = KnnConfig()) -> float:
    """Exploration reward of feature ``h`` against a memory of features.

    If the memory holds fewer than ``k`` points all of them are used and the
    mean is taken over the actual count.
    """
    h = np.asarray(h, dtype=float)
    memory = np.asarray(memory, dtype=float).reshape(-1, h.shape[-1])
    if len(memory) == 0:
        raise ValueError("empty k-NN memory")
    return float(apt_rewards_batch(h[None, :], memory, cfg)[0])


def apt_rewards_batch(hs, memory=None, cfg: KnnConfig = KnnConfig()) -> np.ndarray:
    """Rewards for every row of ``hs``; memory defaults to ``hs`` itself (the batch)."""
    hs = np.asarray(hs, dtype=float)
    memory = hs if memory is None else np.asarray(memory, dtype=float)
    d = _powered_distances(hs, memory, cfg.n_h)
    k = min(cfg.k, d.shape[1])
    if k < d.shape[1]:
        d = np.partition(d, k - 1, axis=1)[:, :k]
    d = np.sort(d, axis=1)
    return _reduce(d, cfg)


def aps_combined(phi_s, w, h, memory, cfg: KnnConfig = KnnConfig()) -> float:
    return visr_reward(phi_s, w) + apt_reward(h, memory, cfg)


def diayn_reward(disc, observation, skill_index: int) -> float:
    if not 0 <= skill_index < disc.num_skills:
        raise ValueError(f"skill index {skill_index} out of range for {disc.num_skills} skills")
    log_q = disc.log_probs(np.asarray(observation, dtype=float)[None, :])[0, skill_index]
    return float(max(log_q, LOG_PROB_FLOOR) + np.log(disc.num_skills))


def diayn_rewards_batch(disc, observations, skills) -> np.ndarray:
    log_q = disc.log_probs(observations)
    picked = log_q[np.arange(len(log_q)), np.asarray(skills, dtype=int)]
    return np.maximum(picked, LOG_PROB_FLOOR) + np.log(disc.num_skills)
