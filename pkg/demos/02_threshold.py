# %% [markdown]
# # Where the threshold sits
#
# Two things compete.  Randomized response builds, with no help at all,
# a channel whose agreement grows like eps^2.  Amplification turns a
# channel into something usable only when agreement is large compared to
# eps^2.  This script measures both sides.

# %%
import math

from leakamp import agreement, leakage, randomized_response_channel
from leakamp.amplify import sweep_threshold, sweep_to_csv

# %% [markdown]
# Plain randomized response.  Each party keeps its own flip, and that flip
# says whether the other flip probably matched, so the leakage comes out
# above eps.

# %%
for eps in (0.1, 0.25, 0.5, 1.0):
    c = randomized_response_channel(eps)
    leak = leakage(c, 0).eps_max
    print(f"eps={eps:<5} leak={leak:.4f} ln((1+e^2eps)/2)={math.log((1 + math.exp(2 * eps)) / 2):.4f} "
          f"agr/eps^2={float(agreement(c)) / eps**2:.4f}")

# %% [markdown]
# Lowering the flip rate until the leakage is exactly eps gives the
# calibrated variant.  Its agreement is still of order eps^2.

# %%
for eps in (0.1, 0.25, 0.5, 1.0):
    c = randomized_response_channel(eps, calibrated=True)
    print(f"eps={eps:<5} leak={leakage(c, 0).eps_max:.4f} agr/eps^2={float(agreement(c)) / eps**2:.4f}")

# %% [markdown]
# The sweep pairs that with the smallest grid agreement whose amplified
# channel passes the precondition.  At moderate eps nothing below 1/8
# passes; at very small eps a passing point appears, and its ratio to eps^2
# is a large constant.

# %%
grid = [1e-4 * (0.124 / 1e-4) ** (i / 49) for i in range(50)]
print(sweep_to_csv(sweep_threshold([1e-4, 3e-4, 1e-3, 0.1, 0.3], grid)))
