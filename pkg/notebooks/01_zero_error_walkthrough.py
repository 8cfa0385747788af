# %% [markdown]
# # Zero-error key agreement on three small link configurations
#
# Alice and Bob share ``n1`` forward and ``n2`` backward links, each carrying
# an ``m``-bit message.  Eve may overwrite up to ``t`` messages in total.
# This walkthrough runs the three preset configurations, checks them against
# every possible attack, and compares key sizes with the closed-form law.

# %%
from robustkey.adversary import StrategyFamily, verify_zero_error, worst_case_entropy
from robustkey.protocol import build_scheme, preset, run_theorem2
from robustkey.adversary import branch_forcing_attack
from robustkey.rates import omega

M = 2

# %% [markdown]
# ## Exhaustive verification
#
# Every Alice codeword, every Bob codeword and every attack within budget is
# tried; Eve's backward attack is chosen after she has seen both messages.

# %%
for name in ("example1", "example2", "example3"):
    scheme, p = preset(name, M)
    rep = verify_zero_error(p, scheme)
    print(f"{name:9s} {scheme:8s} cases={rep.total_cases:5d} disagreements={rep.disagreements} "
          f"branches={rep.branch_histogram} key bits={rep.key_bits_by_branch}")

# %% [markdown]
# ## What the forward distance buys
#
# With ``d = 2`` Bob cannot correct a forward attack but always detects it.
# He then tells Alice through the branch prefix, and because Eve's budget is
# spent the backward codeword arrives intact.

# %%
scheme_name, p = preset("example2", M)
built = build_scheme(scheme_name, p)
for branch in (0, 1):
    tr = run_theorem2(p, 3, branch_forcing_attack(p, branch), built)
    print(f"forced branch {branch}: Bob saw {tr.bob_branch}, agreed={tr.agreed}, "
          f"key bits={tr.key_bits}, omega={omega(p.m, p.n1, p.n2, p.t, p.d, tr.bob_branch)}")

# %% [markdown]
# ## Weakening the code breaks agreement
#
# A forward code of distance 1 cannot even detect one overwritten link.

# %%
from robustkey.protocol import SchemeParams

bad = verify_zero_error(SchemeParams(m=M, n1=3, n2=3, t=1, d=1))
print("weakened:", bad.disagreements, "of", bad.total_cases, "runs disagree")
print("first counterexample:", bad.to_record()["counterexample"])

# %% [markdown]
# ## Worst-case key entropy
#
# Eve cannot make the key less random than the smallest branch key space.

# %%
for name in ("example1", "example2", "example3"):
    scheme, p = preset(name, M)
    h = worst_case_entropy(p, scheme, StrategyFamily("constant-oblivious"))
    print(f"{name}: min entropy {h:.1f} bits (m={M})")
