# %% [markdown]
# Traveling fronts as the congestion parameter shrinks
#
# The pressure eps * (v - 1)**-gamma only matters close to v = 1.  As eps
# goes to zero the front splits into a congested plateau at v ~ 1 and a
# logistic free part.  Here we solve the profile ODE for a few eps and
# measure how far each front is from the limit.

# %%
import numpy as np

from congested_shocks import (LimitProfile, ModelParams, ValueAtZero,
                              limit_profile, min_shift_distance, shock_speed,
                              solve_profile)

gamma, v_plus = 2.0, 1.5

# %%
for eps in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]:
    p = ModelParams(eps, gamma, v_plus=v_plus)
    wave = solve_profile(p, ValueAtZero(1 + eps ** (1 / (gamma + 1))))
    lp = LimitProfile.from_params(p)
    d = min_shift_distance(wave, lp)
    print(f"eps={eps:7.0e}  v-={p.v_minus:.5f}  s={shock_speed(p):.5f}  "
          f"samples={wave.xi.size:5d}  residual={wave.meta['residual_max']:.1e}  "
          f"distance to limit={d:.4f}")

# %% [markdown]
# The distance drops by roughly sqrt(10) per decade: it is set by the
# plateau height eps**(1/gamma).

# %%
p = ModelParams(1e-4, gamma, v_plus=v_plus)
wave = solve_profile(p)
lp = LimitProfile.from_params(p)
xi = np.linspace(-2, 6, 9)
print("\n   xi     v_eps    v_limit")
for x, a, b in zip(xi, wave(xi), limit_profile(xi, lp)):
    print(f"{x:5.1f}  {a:.6f}  {b:.6f}")
