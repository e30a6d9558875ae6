"""
Skills that a classifier can tell apart
=======================================

The DIAYN explorer conditions its policy on a discrete skill and is rewarded
when a discriminator can recover the skill from the visited state.
"""

import numpy as np

from nmps.envs import make_env
from nmps.explorer import explorer_act
from nmps.pipeline import PretrainConfig, run_baseline

env = make_env("fourrooms")
res = run_baseline("DIAYN", env, 30_000, seed=0, cfg=PretrainConfig(total_steps=30_000), num_skills=4)
print(f"held-out discriminator accuracy: {res.stats['discriminator_accuracy']:.3f}")

# %%
# Where does each skill end up?
# -----------------------------
agent = res.explorer
rng = np.random.default_rng(5)
grid = np.full((env.height, env.width), "#", dtype="<U1")
for cell in env.cells:
    grid[cell] = "."
for z in range(4):
    ends = []
    for _ in range(5):
        state = env.reset()
        while not state.episode_done:
            state, _, _ = env.step(state, explorer_act(agent, env.state_index(state.observation), z, rng))
        ends.append(state.position)
    r, c = np.mean(ends, axis=0)
    print(f"skill {z}: mean final cell ({r:.1f}, {c:.1f})")
    grid[max(ends, key=ends.count)] = str(z)
print("\n".join("".join(row) for row in grid))
