# %% [markdown]
# # Shot budgets
#
# Testing a weight condition is a click / no-click experiment, so it needs
# ln(2/p) / (2 eps^2) runs.  Estimating an element needs
# 2 ln(2/p) / (eps^2 delta^2 e^{-(r + r')}) runs per axis: squeezing the
# window makes each click rarer and the budget grows as e^{r + r'}.

# %%
import math

import numpy as np

import cvtomo as ct

print("condition test, eps=0.01, p=0.05 :", ct.chernoff_condition_shots(0.01, 0.05))
for k in range(4):
    r = k * math.log(2)
    print(f"estimate, r = r' = {k} ln 2         :", ct.chernoff_estimate_shots(0.1, 0.05, 0.1, r, r))

# %% [markdown]
# ## Checking the bound empirically
#
# Repeat the ground-state estimate at the origin many times with the
# Chernoff budget and count how often it misses by more than 0.1.

# %%
ground = ct.OscillatorState(0)
s = ct.CircuitSettings(0.0, 0.0, 0.0, 0.0, 0.1)
M = ct.chernoff_estimate_shots(0.1, 0.05, s.delta)
exact = ct.exact_estimate(ground, s)
dx = ct.outcome_distribution(ground, s, "x")
dy = ct.outcome_distribution(ground, s, "y")

root = ct.RandomStream(7)
errors = []
for k in range(200):
    stream = root.substream(k)
    est = ct.estimate_from_tallies(ct.sample_shots(dx, M, stream), ct.sample_shots(dy, M, stream), s)
    errors.append(abs(est - exact))
errors = np.array(errors)
print("runs per axis     :", M)
print("largest error     :", errors.max())
print("misses (> 0.1)    :", int(np.sum(errors > 0.1)), "of", errors.size)
