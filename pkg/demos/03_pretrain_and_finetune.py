"""
Two agents, one environment
===========================

The exploiter learns successor features on its own reward; the explorer
chases a k-NN novelty reward and takes over for 100-step windows whenever the
exploiter's value predictions break down. Afterwards only the exploiter is
kept and fine-tuned on an extrinsic goal.

Runs in about a minute.
"""

import numpy as np

from nmps.envs import make_env
from nmps.pipeline import FinetuneConfig, PretrainConfig, finetune, pretrain, run_baseline

env = make_env("fourrooms")
print("FourRooms open cells:", env.num_states)

steps = 20_000
cfg = PretrainConfig(total_steps=steps)

# %%
# Pre-training with and without the explorer
# ------------------------------------------
nmps = pretrain("NMPS_X_sep^ex", env, rho=0.01, seed=0, cfg=cfg)
alone = pretrain("NMPS_X_sep^ex", env, rho=0.01, seed=0, cfg=PretrainConfig(total_steps=steps, exploit_only=True))

print(f"cells visited  with explorer: {nmps.stats['coverage']:>3}   exploit only: {alone.stats['coverage']:>3}")
print(f"explore fraction {nmps.stats['explor_fraction']:.2%}")
print(f"policy entropy  exploiter {nmps.stats['exploit_policy_entropy']:.2f}  "
      f"explorer {nmps.stats['explor_policy_entropy']:.2f} nats")

cov = np.array(nmps.log["coverage"])
for t in (1000, 5000, 10_000, steps - 1):
    print(f"  step {t:>6}: {cov[t]:>3} cells")

# %%
# Where did the switches happen?
# ------------------------------
trig = np.flatnonzero(nmps.log["trigger"])
print("explore windows opened at steps:", trig[:10].tolist(), "..." if len(trig) > 10 else "")

# %%
# Fine-tuning on the north-east goal
# ----------------------------------
# w is regressed from extrinsic rewards on the frozen features; psi keeps
# learning through Q = psi @ w. The monolithic APS agent is the reference.
task = make_env("fourrooms", task_id="reach-goal-NE")
ft_cfg = FinetuneConfig(budget_steps=10_000)
aps = run_baseline("APS", env, steps, seed=0, cfg=cfg)
for name, snap in (("NMPS", nmps.snapshot), ("APS", aps.snapshot)):
    res = finetune(snap, task, ft_cfg, seed=0)
    curve = " ".join(f"{m:.1f}" for _, m, _ in res.curve)
    print(f"{name:<5} returns: {curve}")
