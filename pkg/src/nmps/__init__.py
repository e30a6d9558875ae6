"""Non-monolithic exploration for reward-free pre-training with successor features.

A tabular/linear numpy implementation of a two-agent pre-training scheme: an
exploitation agent learns successor features on its own intrinsic reward, a
separate exploration agent (k-NN particle entropy or skill discovery) is
switched in by a homeostatic trigger, and the exploiter alone is fine-tuned
on the downstream task by least-squares task inference.
"""

from .controller import HomeoState, Mode, SwitchState, homeo_step, select_mode
from .envs import FourRooms, PointMass2D, make_env, reward_free
from .features import FeatureMap, TaskVector, encode, encode_batch, init_feature_map, sample_task, train_feature
from .intrinsic import KnnConfig, apt_reward, diayn_reward, visr_reward
from .pipeline import (
    FinetuneConfig,
    PretrainConfig,
    finetune,
    pretrain,
    run_baseline,
    solve_w,
)
from .replay import ReplayBuffers, ReplayConfig, Sharing, Transition
from .sf_agent import PolicyConfig, PromiseWindow, SuccessorTable, td_update, td_update_batch, value_promise
from .snapshot import Snapshot
from .variants import BASELINES, VARIANT_NAMES, VariantConfig, parse_variant

__version__ = "0.1.0"

__all__ = [
    "BASELINES", "FeatureMap", "FinetuneConfig", "FourRooms", "HomeoState", "KnnConfig", "Mode",
    "PointMass2D", "PolicyConfig", "PretrainConfig", "PromiseWindow", "ReplayBuffers", "ReplayConfig",
    "Sharing", "Snapshot", "SuccessorTable", "SwitchState", "TaskVector", "Transition", "VARIANT_NAMES",
    "VariantConfig", "apt_reward", "diayn_reward", "encode", "encode_batch", "finetune", "homeo_step",
    "init_feature_map", "make_env", "parse_variant", "pretrain", "reward_free", "run_baseline",
    "sample_task", "select_mode", "solve_w", "td_update", "td_update_batch", "train_feature",
    "value_promise", "visr_reward",
]
