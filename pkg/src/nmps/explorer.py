"""Exploration agents: an APT-reward Q-learner and a DIAYN skill agent.

Both keep their own action-value table (tabular) or linear map (continuous)
and act by Boltzmann sampling at a temperature that is normally higher than
the exploitation agent's. The APT agent owns a feature encoder used to
compute its k-NN reward; the DIAYN agent owns a softmax skill discriminator.
Either representation is frozen at its initial value when
``feature_or_skill_trainable`` is False.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .features import FeatureMap, encode_batch, init_feature_map, train_feature
from .intrinsic import KnnConfig, apt_rewards_batch, diayn_rewards_batch
from .sf_agent import boltzmann, sample_action

__all__ = [
    "ExplorerAgent",
    "ExplorerKind",
    "SkillDiscriminator",
    "SkillSchedule",
    "discriminator_accuracy",
    "discriminator_update",
    "explorer_act",
    "explorer_rewards",
    "explorer_update",
    "make_explorer",
    "skill_prior_sample",
]


class ExplorerKind(str, Enum):
    APS = "ApsExplor"
    DIAYN = "Diayn"


@dataclass(frozen=True)
class SkillDiscriminator:
    """Linear softmax classifier ``q(z | s) = softmax(W s)``."""

    weights: np.ndarray  # (num_skills, obs_dim)
    learning_rate: float = 0.5

    @property
    def num_skills(self) -> int:
        return self.weights.shape[0]

    def logits(self, observations) -> np.ndarray:
        return np.atleast_2d(np.asarray(observations, dtype=float)) @ self.weights.T

    def log_probs(self, observations) -> np.ndarray:
        z = self.logits(observations)
        z = z - z.max(axis=1, keepdims=True)
        return z - np.log(np.exp(z).sum(axis=1, keepdims=True))

    def probs(self, observations) -> np.ndarray:
        return np.exp(self.log_probs(observations))


def init_discriminator(num_skills: int, obs_dim: int, rng=None, scale: float = 0.1,
                       learning_rate: float = 0.5) -> SkillDiscriminator:
    rng = np.random.default_rng(rng)
    return SkillDiscriminator(rng.normal(0.0, scale, size=(num_skills, obs_dim)), learning_rate)


def discriminator_loss(disc: SkillDiscriminator, observations, skills) -> float:
    lp = disc.log_probs(observations)
    return float(-lp[np.arange(len(lp)), np.asarray(skills, dtype=int)].mean())


def discriminator_update(disc: SkillDiscriminator, observations, skills) -> SkillDiscriminator:
    """One gradient step on the mean cross-entropy of the skill labels."""
    obs = np.atleast_2d(np.asarray(observations, dtype=float))
    skills = np.asarray(skills, dtype=int)
    p = disc.probs(obs)
    p[np.arange(len(skills)), skills] -= 1.0
    grad = p.T @ obs / len(obs)
    return replace(disc, weights=disc.weights - disc.learning_rate * grad)


def discriminator_accuracy(disc: SkillDiscriminator, observations, skills) -> float:
    pred = np.argmax(disc.logits(observations), axis=1)
    return float(np.mean(pred == np.asarray(skills, dtype=int)))


def skill_prior_sample(num_skills: int, rng) -> int:
    if num_skills < 2:
        raise ValueError("need at least 2 skills")
    return int(rng.integers(num_skills))


class SkillSchedule:
    """Uniform skill prior held fixed for ``resample_period`` steps.

    A new skill is drawn whenever the within-episode step index is a multiple
    of the period, so every episode starts with a fresh draw.
    """

    def __init__(self, num_skills: int, rng, resample_period: int = 50):
        if num_skills < 2:
            raise ValueError("need at least 2 skills")
        if resample_period < 1:
            raise ValueError("resample_period must be >= 1")
        self.num_skills = num_skills
        self.rng = rng
        self.resample_period = resample_period
        self.skill = 0

    def current(self, step_index: int) -> int:
        if step_index % self.resample_period == 0:
            self.skill = skill_prior_sample(self.num_skills, self.rng)
        return self.skill


class ExplorerAgent:
    def __init__(self, kind: ExplorerKind, num_inputs: int, num_actions: int, *,
                 tabular: bool = True, gamma: float = 0.99, learning_rate: float = 0.1,
                 temperature: float = 0.3, feature_or_skill_trainable: bool = True,
                 skill_dim: int | None = None, feature_map: FeatureMap | None = None,
                 discriminator: SkillDiscriminator | None = None,
                 knn: KnnConfig = KnnConfig(), q_init: float = 0.0):
        self.kind = ExplorerKind(kind)
        self.tabular = tabular
        self.gamma = gamma
        self.learning_rate = learning_rate
        self.temperature = temperature
        self.feature_or_skill_trainable = feature_or_skill_trainable
        self.knn = knn
        rows = num_inputs if tabular else num_inputs + 1
        if self.kind is ExplorerKind.DIAYN:
            if skill_dim is None or skill_dim < 2:
                raise ValueError("a DIAYN explorer needs skill_dim >= 2")
            if discriminator is None:
                raise ValueError("a DIAYN explorer needs a discriminator")
            self.q = np.zeros((skill_dim, rows, num_actions))
        else:
            if feature_map is None:
                raise ValueError("an APS explorer needs a feature map")
            self.q = np.zeros((rows, num_actions))
        # optimistic start: tabular values do not generalise to unseen states,
        # so with non-negative intrinsic rewards a zero table never leaves known ground
        if tabular:
            self.q += q_init
        else:
            self.q[..., -1, :] = q_init
        self.skill_dim = skill_dim
        self.feature_map = feature_map
        self.discriminator = discriminator

    @property
    def num_actions(self) -> int:
        return self.q.shape[-1]

    def _table(self, skills=None):
        """Per-sample value tables, shape (rows, A) or (n, rows, A)."""
        return self.q if self.kind is ExplorerKind.APS else self.q[np.asarray(skills, dtype=int)]

    def _inputs(self, states):
        if self.tabular:
            return np.asarray(states, dtype=int)
        x = np.atleast_2d(np.asarray(states, dtype=float))
        return np.hstack([x, np.ones((len(x), 1))])

    def q_batch(self, states, skills=None) -> np.ndarray:
        x = self._inputs(states)
        if self.kind is ExplorerKind.APS:
            return self.q[x] if self.tabular else x @ self.q
        z = np.asarray(skills, dtype=int)
        if self.tabular:
            return self.q[z, x]
        return np.einsum("ni,nia->na", x, self.q[z])

    def q_values(self, state, skill_or_w=None) -> np.ndarray:
        skills = None if self.kind is ExplorerKind.APS else [int(skill_or_w)]
        return self.q_batch([state], skills)[0]


def make_explorer(kind, obs_dim: int, num_inputs: int, num_actions: int, rng, *,
                  feature_dim: int = 10, skill_dim: int = 16, feature_lr: float = 0.01,
                  discriminator_lr: float = 0.5, trainable: bool = True, **kwargs) -> ExplorerAgent:
    kind = ExplorerKind(kind)
    if kind is ExplorerKind.APS:
        fmap = init_feature_map(obs_dim, feature_dim, rng, trainable=trainable, learning_rate=feature_lr)
        return ExplorerAgent(kind, num_inputs, num_actions, feature_map=fmap,
                             feature_or_skill_trainable=trainable, **kwargs)
    disc = init_discriminator(skill_dim, obs_dim, rng, learning_rate=discriminator_lr)
    return ExplorerAgent(kind, num_inputs, num_actions, skill_dim=skill_dim, discriminator=disc,
                         feature_or_skill_trainable=trainable, **kwargs)


def explorer_act(agent: ExplorerAgent, state, skill_or_w, rng, temperature: float | None = None) -> int:
    """Boltzmann action from the explorer; ``skill_or_w`` is a skill index for DIAYN.

    The APS explorer's values do not depend on the task vector, which is
    accepted only for interface symmetry.
    """
    if agent.kind is ExplorerKind.DIAYN and not 0 <= int(skill_or_w) < agent.skill_dim:
        raise ValueError(f"skill {skill_or_w} out of range")
    tau = agent.temperature if temperature is None else temperature
    return sample_action(boltzmann(agent.q_values(state, skill_or_w), tau), rng)


def explorer_rewards(agent: ExplorerAgent, batch) -> tuple[np.ndarray, str]:
    """Intrinsic rewards matching the agent kind, tagged with their source."""
    if agent.kind is ExplorerKind.APS:
        h = encode_batch(agent.feature_map, batch.next_obs)
        return apt_rewards_batch(h, None, agent.knn), "apt"
    return diayn_rewards_batch(agent.discriminator, batch.next_obs, batch.skills), "diayn"


def explorer_update(agent: ExplorerAgent, batch, rewards, reward_kind: str) -> ExplorerAgent:
    """Q-learning step on the explorer's own reward, then its representation update.

    The feature map (APS) or discriminator (DIAYN) is trained only when
    ``feature_or_skill_trainable`` is set; otherwise it is left untouched.
    """
    expected = "apt" if agent.kind is ExplorerKind.APS else "diayn"
    if reward_kind != expected:
        raise ValueError(f"{agent.kind.value} explorer cannot train on {reward_kind!r} rewards")
    rewards = np.asarray(rewards, dtype=float)
    actions = np.asarray(batch.actions, dtype=int)
    skills = None if agent.kind is ExplorerKind.APS else np.asarray(batch.skills, dtype=int)
    q_next = agent.q_batch(batch.next_states, skills)
    terminals = np.asarray(batch.terminals, dtype=bool)
    target = rewards + agent.gamma * np.where(terminals, 0.0, q_next.max(axis=1))
    n = len(actions)
    x = agent._inputs(batch.states)
    if agent.tabular:
        lead = (x,) if skills is None else (skills, x)
        err = target - agent.q[lead + (actions,)]
        shape = agent.q.shape
        keys = np.ravel_multi_index(lead + (actions,), shape)
        uniq, inv, counts = np.unique(keys, return_inverse=True, return_counts=True)
        summed = np.zeros(len(uniq))
        np.add.at(summed, inv, err)
        flat = agent.q.reshape(-1)
        flat[uniq] += agent.learning_rate * summed / counts
    else:
        current = agent.q_batch(batch.states, skills)[np.arange(n), actions]
        err = target - current
        grad = np.zeros_like(agent.q)
        if skills is None:
            np.add.at(grad.T, actions, (x * err[:, None]))
        else:
            for i in range(n):
                grad[skills[i], :, actions[i]] += x[i] * err[i]
        agent.q += agent.learning_rate * grad / n
    if not np.all(np.isfinite(agent.q)):
        raise FloatingPointError("explorer values became non-finite")
    if agent.feature_or_skill_trainable:
        if agent.kind is ExplorerKind.APS:
            agent.feature_map = train_feature(agent.feature_map, batch.next_obs, batch.ws)
        else:
            agent.discriminator = discriminator_update(agent.discriminator, batch.next_obs, batch.skills)
    return agent
