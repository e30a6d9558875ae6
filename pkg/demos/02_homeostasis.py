"""
When to explore: the homeostasis trigger
========================================

The controller turns an arbitrary scalar signal into Bernoulli triggers whose
long-run frequency matches a target rate rho, whatever the signal's scale.
Each trigger opens an explore window of fixed length.
"""

import numpy as np

from nmps.controller import HomeoState, Mode, SwitchState, homeo_step, select_mode, switch_rate, window_lengths

rng = np.random.default_rng(1)

# %%
# Calibration against the target rate
# -----------------------------------
for scale in (1e-3, 1.0, 1e3):
    for rho in (0.1, 0.01):
        h, fired = HomeoState(rho), 0
        for x in (scale * rng.normal(size=50_000)).tolist():
            t, h, _ = homeo_step(h, x, rng)
            fired += t
        print(f"signal scale {scale:>6g}  rho={rho:<5}  trigger rate {fired / 50_000:.4f}")

# %%
# Informed triggering
# -------------------
# Spikes in the signal are much more likely to fire than quiet steps.
h = HomeoState(0.01)
quiet, spikes = [], []
for t in range(50_000):
    spike = t % 500 == 0
    x = 5.0 if spike else float(rng.normal(0.0, 0.3))
    fired, h, _ = homeo_step(h, x, rng)
    (spikes if spike else quiet).append(fired)
print(f"fire rate on spikes {np.mean(spikes):.2f}, on quiet steps {np.mean(quiet):.4f}")

# %%
# Mode switching
# --------------
# A 5% starting window of exploration, then 100-step windows on triggers.
sw = SwitchState(explore_duration=100, starting_mode_steps=1000)
h = HomeoState(0.001)
modes, starts = [], []
for t in range(20_000):
    m, sw, h = select_mode(sw, h, float(rng.normal()), t, rng)
    modes.append(m)
    starts.append(sw.triggered)
lengths = window_lengths(modes)
print("first window (starting mode):", lengths[0], "steps")
print("later windows:", sorted(set(lengths[1:])), "x", len(lengths) - 1)
print(f"switch rate {switch_rate(modes, starts):.5f}; explore fraction "
      f"{np.mean([m is Mode.EXPLOR for m in modes]):.3f}")
