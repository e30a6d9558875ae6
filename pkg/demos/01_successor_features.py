"""
Successor features on a small grid
==================================

A successor feature table stores, for every state and action, the discounted
sum of future features. Once it is learned, any reward that is linear in the
features gets its action values for free: Q = psi @ w.
"""

import numpy as np

from nmps.envs import make_env
from nmps.features import encode_batch, init_feature_map, sample_task
from nmps.sf_agent import SuccessorTable, td_update_batch

# A 5x5 room without walls; one-hot observations, four moves.
env = make_env("fourrooms", layout="open")
print("states:", env.num_states, "actions:", env.spec.num_actions)

# Random 6-dimensional features phi(s) = normalize(tanh(W x)).
rng = np.random.default_rng(0)
fmap = init_feature_map(env.spec.obs_dim, 6, rng)
phi = encode_batch(fmap, np.eye(env.num_states))
print("feature norms:", np.round(np.linalg.norm(phi, axis=1)[:5], 3))

# Deterministic successor cell for every (state, action).
nxt = np.array([[env.index[env.move(c, a)] for a in range(4)] for c in env.cells])

# %%
# Policy evaluation under the uniform random policy
# -------------------------------------------------
# The exact answer solves a linear system of size 100 (states x actions).
gamma = 0.9
P = np.zeros((100, 100))
for s in range(25):
    for a in range(4):
        P[s * 4 + a, nxt[s, a] * 4:(nxt[s, a] + 1) * 4] = 0.25
exact = np.linalg.solve(np.eye(100) - gamma * P, phi[nxt.reshape(-1)]).reshape(25, 4, 6)

table = SuccessorTable(25, 4, 6, gamma=gamma, learning_rate=0.5)
s_all, a_all = np.repeat(np.arange(25), 4), np.tile(np.arange(4), 25)
uniform = np.full((100, 4), 0.25)
for sweep in range(1, 401):
    td_update_batch(table, s_all, a_all, nxt[s_all, a_all], phi[nxt[s_all, a_all]],
                    np.zeros((100, 6)), next_action_probs=uniform)
    if sweep in (1, 10, 100, 400):
        print(f"sweep {sweep:>3}: sup error vs exact = {np.max(np.abs(table.psi - exact)):.2e}")

# %%
# One table, many tasks
# ---------------------
# Values for any task vector w are a dot product away. They match a direct
# policy evaluation of that reward.
for _ in range(3):
    w = sample_task(6, rng).w
    q_sf = table.psi @ w
    r = phi[nxt] @ w
    q = np.zeros((25, 4))
    for _ in range(500):
        q = r + gamma * q.mean(axis=1)[nxt]
    print("task", np.round(w[:3], 2), "... max |psi@w - Q| =", f"{np.max(np.abs(q_sf - q)):.1e}")
