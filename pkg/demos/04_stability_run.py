# %% [markdown]
# A small zero-mass kick to a partially congested front
#
# We perturb the front with the derivative of a Gaussian (so the
# perturbation has zero mass), run the Navier-Stokes scheme in the frame
# of the wave and follow the weighted energies.

# %%
import warnings

from congested_shocks import ModelParams, solve_profile
from congested_shocks.diagnostics import EnergyObserver, sup_norm_decay
from congested_shocks.pde_sim import (CFL, GaussianDipole, Grid,
                                      PerturbationSpec, SchemeConfig,
                                      init_state, run)

warnings.simplefilter("ignore")

p = ModelParams(1e-2, 2.0)
wave = solve_profile(p)
grid = Grid.with_spacing(-30.0, 8.0, 0.01)
amp = 0.1 * p.epsilon ** (5 / (2 * p.gamma))
state = init_state(wave, PerturbationSpec(GaussianDipole(0.0, 0.2), amp, ("v", "u")), grid)

# %%
obs = EnergyObserver(wave, p)
res = run(state, SchemeConfig(CFL(0.5)), p, 3.0, [obs], stride=10)
reports = res.observations[0]
for r in reports[::30] + [reports[-1]]:
    print(f"t={r.t:5.2f}  E0={r.E[0]:.3e}  X={r.x_norm_sq:.3e}  "
          f"sup|u-u_eps|={r.sup_norms[0]:.2e}  sup|v-v_eps|={r.sup_norms[1]:.2e}  "
          f"min v={r.min_v:.5f}")

# %%
du = sup_norm_decay([r.sup_norms[0] for r in reports])
dv = sup_norm_decay([r.sup_norms[1] for r in reports])
print(f"\n{res.n_steps} steps; final/peak: u {du.ratio:.3f}, v {dv.ratio:.3f}")
print("largest mass defect", max(abs(m) for r in reports for m in r.masses))
