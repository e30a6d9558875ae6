"""State feature encoder, task-vector sampling and the discriminator-style feature update.

The encoder is ``phi(s) = normalize(g(W s))`` with ``g = tanh`` by default
(``"linear"`` is available for tests of scale invariance). Features live on the
unit sphere, so ``phi(s) @ w`` is the log-likelihood (up to constants) of a
von Mises-Fisher discriminator ``q(w | s)``. Training ascends the mean of that
quantity over a batch of ``(observation, w)`` pairs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "FeatureMap",
    "TaskVector",
    "encode",
    "encode_batch",
    "feature_gradient",
    "init_feature_map",
    "sample_task",
    "train_feature",
]


@dataclass(frozen=True)
class FeatureMap:
    weights: np.ndarray  # (feature_dim, obs_dim)
    trainable: bool = True
    learning_rate: float = 0.01
    nonlinearity: str = "tanh"

    def __post_init__(self):
        if self.nonlinearity not in ("tanh", "linear"):
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class TaskVector:
    w: np.ndarray
    origin: str = "sampled"  # or "regressed"

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.w, dtype=dtype)


def init_feature_map(obs_dim: int, feature_dim: int = 10, rng=None, scale: float = 1.0,
                     **kwargs) -> FeatureMap:
    rng = np.random.default_rng(rng)
    weights = rng.normal(0.0, scale, size=(feature_dim, obs_dim))
    return FeatureMap(weights, **kwargs)


def _activate(fmap: FeatureMap, pre):
    return np.tanh(pre) if fmap.nonlinearity == "tanh" else pre


def _normalize_rows(v):
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    out = np.divide(v, norms, out=np.zeros_like(v), where=norms > 0)
    # degenerate rows map to the first basis vector
    zero = norms[..., 0] == 0
    if np.any(zero):
        out[zero] = 0.0
        out[zero, 0] = 1.0
    return out, norms


def encode(fmap: FeatureMap, observation) -> np.ndarray:
    obs = np.asarray(observation, dtype=float)
    if obs.shape != (fmap.obs_dim,):
        raise ValueError(f"observation shape {obs.shape} does not match encoder input ({fmap.obs_dim},)")
    return encode_batch(fmap, obs[None, :])[0]


def encode_batch(fmap: FeatureMap, observations) -> np.ndarray:
    obs = np.asarray(observations, dtype=float)
    phi, _ = _normalize_rows(_activate(fmap, obs @ fmap.weights.T))
    return phi


def sample_task(feature_dim: int, rng) -> TaskVector:
    """Uniform draw from the unit sphere in ``feature_dim`` dimensions."""
    if feature_dim < 1:
        raise ValueError("feature_dim must be >= 1")
    while True:
        g = rng.standard_normal(feature_dim)
        n = np.linalg.norm(g)
        if n > 0:
            return TaskVector(g / n, "sampled")


def feature_gradient(fmap: FeatureMap, observations, ws) -> np.ndarray:
    """Gradient of ``mean_i phi(s_i) @ w_i`` with respect to the encoder weights."""
    obs = np.asarray(observations, dtype=float)
    ws = np.asarray(ws, dtype=float)
    pre = obs @ fmap.weights.T
    v = _activate(fmap, pre)
    phi, norms = _normalize_rows(v)
    safe = np.where(norms > 0, norms, 1.0)
    # d(phi.w)/dv = (w - phi (phi.w)) / |v|
    dv = (ws - phi * np.sum(phi * ws, axis=1, keepdims=True)) / safe
    dv = np.where(norms > 0, dv, 0.0)
    dpre = dv * (1.0 - v**2) if fmap.nonlinearity == "tanh" else dv
    return dpre.T @ obs / len(obs)


def train_feature(fmap: FeatureMap, observations, ws) -> FeatureMap:
    """One gradient-ascent step on the mean alignment ``phi(s) @ w``.

    Returns a new :class:`FeatureMap`; the input is never modified. A frozen
    map (``trainable=False``) is returned unchanged and a ``RuntimeWarning``
    is emitted.
    """
    if not fmap.trainable:
        warnings.warn("train_feature called on a frozen feature map; parameters left unchanged",
                      RuntimeWarning, stacklevel=2)
        return fmap
    obs = np.atleast_2d(np.asarray(observations, dtype=float))
    if len(obs) == 0:
        raise ValueError("empty batch")
    grad = feature_gradient(fmap, obs, np.atleast_2d(ws))
    weights = fmap.weights + fmap.learning_rate * grad
    if not np.all(np.isfinite(weights)):
        raise FloatingPointError("feature weights became non-finite")
    return replace(fmap, weights=weights)
