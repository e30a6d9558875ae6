"""The twelve NMPS variants and their name grammar.

Names look like ``NMPS_<E>_<B>^<T>[_D[_A10]]``:

* ``E``, explorer reward: ``X`` (APT k-NN reward) or ``D`` (DIAYN).
* ``B``, replay sharing: ``sep`` (one buffer per agent), ``exploit`` (both
  agents train on the exploiter's buffer) or ``explor`` (both on the
  explorer's buffer).
* ``T``: ``ex`` when the explorer's feature/skill model is trained, ``e*``
  when it stays at its initial value. The exploiter's features are always
  trained.
* ``_D``: the DIAYN explorer chooses every action (no mode switching).
* ``_A10``: exploiter feature and explorer skill dimensions both 10
  (otherwise 10 and 16).

LaTeX-style spellings such as ``NMPS\\_X\\_sep^{ex}`` are accepted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .explorer import ExplorerKind
from .replay import Sharing

__all__ = [
    "ActionSource",
    "BASELINES",
    "VARIANT_NAMES",
    "VariantConfig",
    "VariantParseError",
    "parse_variant",
]


class ActionSource(str, Enum):
    HOMEO = "Homeo"
    ALWAYS_EXPLORER = "AlwaysExplorer"


class VariantParseError(ValueError):
    pass


VARIANT_NAMES = (
    "NMPS_X_sep^ex",
    "NMPS_X_sep^e*",
    "NMPS_X_exploit^ex",
    "NMPS_X_exploit^e*",
    "NMPS_X_explor^ex",
    "NMPS_X_explor^e*",
    "NMPS_D_sep^ex",
    "NMPS_D_sep^e*",
    "NMPS_D_sep^ex_D",
    "NMPS_D_sep^e*_D",
    "NMPS_D_sep^ex_D_A10",
    "NMPS_D_sep^e*_D_A10",
)
BASELINES = ("APS", "DIAYN")

_GRAMMAR = re.compile(r"^NMPS_(?P<r>[XD])_(?P<b>sep|exploit|explor)\^(?P<t>ex|e\*)(?P<d>_D)?(?P<a>_A10)?$")
_SHARING = {"sep": Sharing.SEPARATE, "exploit": Sharing.EXPLOIT_COMMON, "explor": Sharing.EXPLOR_COMMON}


@dataclass(frozen=True)
class VariantConfig:
    explorer_reward: ExplorerKind
    buffer_sharing: Sharing
    explorer_feature_trainable: bool
    action_source: ActionSource
    feature_dim: int
    skill_dim: int | None
    name: str

    def __post_init__(self):
        if self.action_source is ActionSource.ALWAYS_EXPLORER and self.explorer_reward is not ExplorerKind.DIAYN:
            raise ValueError("only DIAYN explorers can drive every action")

    def render(self) -> str:
        r = "X" if self.explorer_reward is ExplorerKind.APS else "D"
        b = {v: k for k, v in _SHARING.items()}[self.buffer_sharing]
        t = "ex" if self.explorer_feature_trainable else "e*"
        name = f"NMPS_{r}_{b}^{t}"
        if self.action_source is ActionSource.ALWAYS_EXPLORER:
            name += "_D"
            if self.skill_dim == 10:
                name += "_A10"
        return name


def _normalize(name: str) -> str:
    return name.strip().replace("\\", "").replace("{", "").replace("}", "").replace("$", "")


def parse_variant(name: str) -> VariantConfig:
    canonical = _normalize(name)
    m = _GRAMMAR.match(canonical)
    if m is None or canonical not in VARIANT_NAMES:
        raise VariantParseError(f"unknown variant {name!r}; valid names: {', '.join(VARIANT_NAMES)}")
    kind = ExplorerKind.APS if m["r"] == "X" else ExplorerKind.DIAYN
    always = m["d"] is not None
    skill_dim = None
    if kind is ExplorerKind.DIAYN:
        skill_dim = 10 if m["a"] else 16
    return VariantConfig(
        explorer_reward=kind,
        buffer_sharing=_SHARING[m["b"]],
        explorer_feature_trainable=m["t"] == "ex",
        action_source=ActionSource.ALWAYS_EXPLORER if always else ActionSource.HOMEO,
        feature_dim=10,
        skill_dim=skill_dim,
        name=canonical,
    )
