"""Mode switching between the exploitation and exploration agents.

The trigger is a homeostatic Bernoulli controller: the scalar signal is
standardised against running statistics, exponentiated, and divided by its
own running mean so that the long-run trigger frequency tracks the target
rate ``rho`` regardless of the signal's scale. A trigger opens an explore
window of fixed length; windows never overlap or get cut short.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

__all__ = [
    "HOMEO_EPS",
    "HomeoState",
    "Mode",
    "RHO_SWEEP",
    "SwitchState",
    "homeo_step",
    "select_mode",
    "switch_rate",
    "window_lengths",
]

RHO_SWEEP = (0.1, 0.01, 0.001, 0.0001)
HOMEO_EPS = 1e-8


class Mode(str, Enum):
    EXPLOIT = "Exploit"
    EXPLOR = "Explor"


@dataclass(frozen=True)
class HomeoState:
    rho: float
    mean: float = 0.0
    second_moment: float = 1.0
    transformed_mean: float = 1.0
    t: int = 0

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise ValueError("target rate must lie in (0, 1]")


def homeo_step(h: HomeoState, x: float, rng) -> tuple[bool, HomeoState, float]:
    """Advance the controller by one signal value.

    Returns ``(trigger, new_state, p)`` where ``p`` is the Bernoulli
    probability used for this step.
    """
    if not math.isfinite(x):
        raise ValueError("signal must be finite")
    t = h.t + 1
    tau = min(t, 100.0 / h.rho)
    a = 1.0 / tau
    mean = (1.0 - a) * h.mean + a * x
    # variance uses the freshly updated mean
    second = (1.0 - a) * h.second_moment + a * (x - mean) ** 2
    x_plus = math.exp((x - mean) / math.sqrt(second + HOMEO_EPS))
    transformed = (1.0 - a) * h.transformed_mean + a * x_plus
    p = min(1.0, h.rho * x_plus / transformed)
    trigger = bool(rng.random() < p)
    return trigger, replace(h, mean=mean, second_moment=second, transformed_mean=transformed, t=t), p


@dataclass(frozen=True)
class SwitchState:
    mode: Mode = Mode.EXPLOIT
    explore_steps_remaining: int = 0
    explore_duration: int = 100
    starting_mode_steps: int = 0
    always_explore: bool = False
    # set on the step a new explore window opened
    triggered: bool = False

    def __post_init__(self):
        if self.explore_duration < 1:
            raise ValueError("explore_duration must be >= 1")
        if self.explore_steps_remaining > 0 and self.mode is not Mode.EXPLOR:
            raise ValueError("mode must be Explor while an explore window is open")


def select_mode(sw: SwitchState, h: HomeoState, promise: float | None, step: int, rng):
    """Pick the acting agent for ``step``; returns ``(mode, sw, h)``.

    Order of precedence: always-explore variants, the starting-mode window,
    an open explore window, then the homeostatic trigger on the promise
    signal. With no signal available the exploiter acts and the controller
    is not advanced.
    """
    if sw.always_explore or step < sw.starting_mode_steps:
        return Mode.EXPLOR, replace(sw, mode=Mode.EXPLOR, triggered=False), h
    if sw.explore_steps_remaining > 0:
        left = sw.explore_steps_remaining - 1
        return Mode.EXPLOR, replace(sw, mode=Mode.EXPLOR, explore_steps_remaining=left, triggered=False), h
    if promise is None:
        return Mode.EXPLOIT, replace(sw, mode=Mode.EXPLOIT, triggered=False), h
    trigger, h, _ = homeo_step(h, promise, rng)
    if trigger:
        sw = replace(sw, mode=Mode.EXPLOR, explore_steps_remaining=sw.explore_duration - 1, triggered=True)
        return Mode.EXPLOR, sw, h
    return Mode.EXPLOIT, replace(sw, mode=Mode.EXPLOIT, triggered=False), h


def switch_rate(modes, window_starts=None) -> float:
    """Fraction of steps on which a new explore window began.

    ``window_starts`` (booleans) is authoritative when given; otherwise a
    start is any Explor step that follows an Exploit step (or opens the run).
    """
    if window_starts is not None:
        starts = np.asarray(window_starts, dtype=bool)
        if len(starts) == 0:
            raise ValueError("empty history")
        return float(starts.mean())
    explor = np.array([Mode(m) is Mode.EXPLOR for m in modes], dtype=bool)
    if len(explor) == 0:
        raise ValueError("empty history")
    prev = np.concatenate([[False], explor[:-1]])
    return float(np.mean(explor & ~prev))


def window_lengths(modes) -> list[int]:
    """Lengths of maximal runs of consecutive Explor modes."""
    out, run = [], 0
    for m in modes:
        if Mode(m) is Mode.EXPLOR:
            run += 1
        elif run:
            out.append(run)
            run = 0
    if run:
        out.append(run)
    return out
