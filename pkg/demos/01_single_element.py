# %% [markdown]
# # Measuring one density-matrix element
#
# The circuit reads rho(x, x') averaged along the diagonal of a small
# rectangle around (x, x').  The window is sized by halving it (raising the
# squeezing by ln 2 each time) until each branch carries at most epsilon / 2
# of click probability.

# %%
import math

import cvtomo as ct

state = ct.SqueezedCoherentState(mean_x=0.0, mean_p=0.5, sigma=0.1)
delta = 0.1

# %%
est = ct.estimate_element(state, 0.0, 0.05, delta=delta, epsilon=0.05)
print("window squeezings r, r':", est.r, est.rp)
print("window widths         :", math.exp(-est.r) * delta, math.exp(-est.rp) * delta)
print("exact-mode estimate   :", est.value)
print("true rho(0, 0.05)     :", ct.density(state, 0.0, 0.05))

# %% [markdown]
# Each halving step is logged: the tested squeezing, the click probability
# of that branch and its margin to epsilon / 2.

# %%
for d in est.diagnostics:
    print(f"branch {d['branch']}  r={d['r']:.3f}  p={d['probability']:.4f}  margin={d['margin']:+.4f}")

# %% [markdown]
# ## Sampling the same element
#
# In sampled mode both ancilla axes are measured with the Chernoff number of
# runs for uncertainty 0.1 at failure probability 0.05.

# %%
sampled = ct.estimate_element(state, 0.0, 0.05, delta=delta, epsilon=0.05, mode="sampled",
                              stream=ct.RandomStream(1))
print("runs per axis :", sampled.plan.shots)
print("sampled value :", sampled.value)
print("error         :", abs(sampled.value - est.value))
