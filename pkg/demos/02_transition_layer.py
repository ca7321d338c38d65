# %% [markdown]
# Inner layer at the congestion front
#
# Near xi = 0 the profile leaves the plateau on the short scale
# eps**(1/gamma).  A corrector solved on that scale, glued to the logistic
# limit, approximates the front to O(eps**(1/(gamma+1))).

# %%
from congested_shocks import (LimitProfile, ModelParams, TransitionAnchor,
                              build_expansion, solve_profile, transition_error)
from congested_shocks.diagnostics import rate_fit
from congested_shocks.profile import matching_defect

# %%
for gamma in (1.0, 2.0):
    lp = LimitProfile.from_params(ModelParams(1e-3, gamma))
    pairs = []
    for eps in [1e-3, 1e-4, 1e-5, 1e-6, 1e-7]:
        p = ModelParams(eps, gamma)
        ex = build_expansion(p)
        wave = solve_profile(p, TransitionAnchor())
        te = transition_error(wave, ex, lp, R=1.0, M=1.0)
        dv, ds = matching_defect(ex, lp)
        pairs.append((eps, te.sup_error))
        print(f"gamma={gamma:g} eps={eps:.0e}  xi*={ex.xi_star:+.3e}  "
              f"sup error={te.sup_error:.3e}  glue defects {dv:.0e}, {ds:.0e}")
    fit = rate_fit(pairs)
    print(f"  fitted slope {fit.slope:.3f}, expected {1 / (gamma + 1):.3f}\n")

# %% [markdown]
# The weighted error on [xi_star + M eps**(1/gamma), 0] needs
# xi_star + M eps**(1/gamma) < 0.  With M of order 100 that window is
# empty for every eps reachable in double precision when gamma = 2;
# transition_error reports it through window_empty.
