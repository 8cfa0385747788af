# %% [markdown]
# # Random codes on the combinatorial binary symmetric channel
#
# The channel adds an error word drawn uniformly from a Hamming ball.  A
# random code with a bounded-distance decoder either returns the right
# message, reports failure, or (rarely) returns a wrong message.

# %%
import numpy as np

from robustkey import cbs

rng = np.random.default_rng(0)

# %% [markdown]
# ## The channel
#
# The weight of the error is drawn in proportion to the number of words of
# that weight, then the positions are uniform.

# %%
ch = cbs.CbsChannel(12, 0.3)
words = ch.sample(rng, size=100_000)
emp = np.bincount(np.bitwise_count(words), minlength=ch.radius + 1) / len(words)
print("weight law   ", np.round(ch.weight_law, 4))
print("empirical    ", np.round(emp, 4))

# %% [markdown]
# ## Failure rates as the block grows
#
# Correction failures need not fall monotonically at these tiny block
# lengths: the decoder radius and the code size jump in integer steps.

# %%
for n in (12, 16, 20, 24):
    for eps in (0.15, 0.4):
        est = cbs.estimate_failures_ensemble(n, 0.25, 0.2, cbs.CbsChannel(n, eps), 50_000, rng, codes=500)
        print(f"n={n} eps={eps}: p_correction={est.p_correction:.4f}  p_detection={est.p_detection:.4f}")
