# %% [markdown]
# # Key agreement when Eve only picks how many links to hit
#
# One bit per link.  Eve chooses the number of forward and backward links to
# flip, the positions are random.  Bob tells Alice whether he could decode
# via a majority-coded flag, then sends a key codeword sized for the attacks
# Eve can still afford.

# %%
from robustkey.protocol import EpsParams, simulate_eps_cell, sweep_count_pairs
from robustkey.rates import AsymParams, theorem4_bound

# %%
bound, xi_star = theorem4_bound(AsymParams(1.0, 1.0, 0.1))
print(f"large-scale rate bound {bound:.4f} at xi={xi_star:.4f}")

for r in (16, 24, 32):
    eps = EpsParams(1.0, 1.0, 0.1, r, 0.05)
    print(f"\nr={r}: n1={eps.n1} n2={eps.n2} t={eps.t}")
    for counts in sweep_count_pairs(eps.t):
        cell = simulate_eps_cell(eps, counts, 1000, seed=1)
        print(f"  attacks {counts}: disagreement={cell.disagreement_rate:.3f} "
              f"entropy={cell.key_entropy:.2f} rate={cell.mean_key_bits / r:.3f}")
