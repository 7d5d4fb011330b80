# %% [markdown]
# # Private XOR and where it hides inside other functions
#
# A private two-party XOR protocol gives a leaky channel for free: feed it
# random inputs and compare outputs against the inputs.  And any function
# that is not monotone after relabeling contains a copy of XOR.

# %%
from leakamp import (
    TruthTable,
    agreement,
    check_eps_dp,
    dp_xor_to_channel,
    find_embedded_xor,
    is_monotone_under_relabeling,
    leakage,
    reduction_report,
)
from leakamp.constructions import rr_xor_functionality

# %%
for eps in (0.25, 0.5, 1.0):
    f = rr_xor_functionality(eps)
    dp = check_eps_dp(f)
    ch = dp_xor_to_channel(f)
    print(f"eps={eps}: measured eps={dp.eps_measured:.4f} beta={float(dp.avg_correctness_beta):.4f} "
          f"channel agreement={float(agreement(ch)):.4f} leakage={leakage(ch, 0).eps_max:.4f}")

# %% [markdown]
# AND is monotone, so it has no embedded XOR.  Parity on three bits per
# party does, and the witness differs in one bit on each side, so privacy
# carries over with no group-privacy loss.

# %%
AND = TruthTable(1, [[0, 0], [0, 1]])
print(is_monotone_under_relabeling(AND))

parity = TruthTable.from_function(3, lambda x, y: (x.count("1") + y.count("1")) % 2)
print(find_embedded_xor(parity))
print(reduction_report(parity, 0.1, 0.5))
