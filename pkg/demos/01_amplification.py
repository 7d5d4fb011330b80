# %% [markdown]
# # Amplifying a weakly correlated channel
#
# A channel hands each party a view and a bit.  Agreement is how far
# Pr[bits equal] sits above 1/2; leakage is how well a party's view tells
# agreement apart from disagreement.  Here we take a small example channel,
# amplify it with the repetition protocol, and check the numbers three ways:
# closed form, exact enumeration, and Monte Carlo.

# %%
from fractions import Fraction

from leakamp import agreement, leakage, noisy_example_channel
from leakamp.amplify import (
    bounded_output_distribution,
    delta_exact,
    delta_output_pairs,
    expected_calls_lambda,
    full_pipeline,
    lambda_simulate,
    predicted_agreement,
)
from leakamp.dist import statistical_distance

# B's bit is A's bit flipped with probability 2/5; each party also gets a
# hint of the other's bit that is right with probability 7/10.
c = noisy_example_channel(Fraction(1, 10), Fraction(1, 5))
print("agreement", agreement(c))
print("leakage  ", leakage(c, 0))

# %% [markdown]
# Repetition keeps only rounds where every call agreed or every call
# disagreed.  The exact transform enumerates those rounds.

# %%
for ell in (1, 2, 3, 4):
    exact = agreement(delta_exact(c, ell))
    print(ell, exact, exact == predicted_agreement(Fraction(1, 10), ell))

# %% [markdown]
# The recursive protocol reaches the statistics of four repetitions while
# paying for calls only as it goes.  Sampling it confirms both the agreement
# and the call count.

# %%
stats = lambda_simulate(c, depth=2, runs=100_000, seed=7)
print("sampled agreement", round(stats.agreement_estimate, 4))
print("exact agreement  ", float(predicted_agreement(Fraction(1, 10), 4)))
print("mean calls", stats.mean_channel_calls, "expected", float(expected_calls_lambda(Fraction(1, 10), 2)))

# %% [markdown]
# Capping the number of calls and falling back to coin flips barely moves
# the output distribution once the cap is a few times the expected cost.

# %%
exact_pairs = delta_output_pairs(c, 2)
for cap in (2, 4, 8, 16, 32):
    mixed, t = bounded_output_distribution(c, 2, cap)
    print(cap, f"truncation {float(t):.2e}", f"SD {float(statistical_distance(mixed, exact_pairs)):.2e}")

# %% [markdown]
# The full pipeline: balance, pick the repetition count from an upper bound
# on agreement, amplify, and evaluate the weak-OT precondition.  The
# precondition needs the amplified views to be nearly independent of
# agreement, which this leaky channel does not deliver.

# %%
rep = full_pipeline(c, Fraction(1, 10), delta_prime=Fraction(1, 100))
for name, stage in rep.stages().items():
    print(name, stage)
