# %% [markdown]
# # Closed-form key-rate bounds
#
# The two-round scheme with a detect-or-correct forward code against direct
# transmission, the multi-round recursion, and the large-scale random-attack
# bound as a function of the detection threshold.

# %%
import numpy as np

from robustkey import rates

# %% [markdown]
# ## Two rounds against direct transmission (n1 = n2 = 3, t = 1)
#
# Direct transmission ships one repetition-coded message each way, so the
# key has ``2m`` bits.  The two-round bound approaches ``3m``.

# %%
for m in (4, 8, 16, 32, 64):
    b = rates.theorem2_bound(m, 3, 3, 1)
    print(f"m={m:3d}  two-round={b.value:4d}  direct={2 * m:4d}  ratio={b.value / (2 * m):.3f}  best d={b.argmax_d}")

# %% [markdown]
# ## Which forward distance is best?

# %%
m, n1, n2, t = 8, 6, 7, 2
for d in range(t + 1, n1 + 1):
    clean, detect = rates.theorem2_terms(m, n1, n2, t, d)
    print(f"d={d}: no attack {clean:3d} bits, detection branch {detect}")
print("bound:", rates.theorem2_bound(m, n1, n2, t))

# %% [markdown]
# ## More rounds

# %%
for w in (1, 2, 3, 4):
    print(f"w={w}: {rates.theorem3_bound(w, [5] * w, 1, 8)} bits over {5 * w} links")

# %% [markdown]
# ## Large-scale bound and the detection threshold

# %%
p = rates.AsymParams(lambda1=0.5, lambda2=1.0, tau=0.3)
xs = np.linspace(0, p.xi_max, 11)
for x, v in zip(xs, rates.theorem4_objective(p, xs)):
    print(f"xi={x:.3f}  objective={v:.4f}")
print("max:", rates.theorem4_bound(p))
