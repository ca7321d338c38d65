# %% [markdown]
# Energy balance of the linearized system
#
# For the integrated perturbations (W, V) the weighted energy decays at the
# rate given by the profile slope and the viscosity.  The semi-discrete
# balance is exact, so the residual of the fully discrete run measures the
# time-stepping error alone and should halve with dt.

# %%
from congested_shocks import ModelParams, solve_profile
from congested_shocks.diagnostics import energy_identity_residual
from congested_shocks.pde_sim import (CompactBump, Grid, IntegratedState,
                                      run_linearized)

wave = solve_profile(ModelParams(1e-3, 2.0))
grid = Grid.with_spacing(-4.0, 4.0, 0.01)
bump = CompactBump(0.0, 1.0)
ws = IntegratedState(grid, 0.1 * bump.potential(grid.centers),
                     0.1 * bump.potential(grid.nodes))

# %%
prev = None
for dt in [4e-3, 2e-3, 1e-3, 5e-4]:
    seg = run_linearized(ws, wave, dt, 0.4)
    r = energy_identity_residual(seg)
    ratio = f"{prev / r:.3f}" if prev else "  -  "
    print(f"dt={dt:.0e}  E(0)={seg['E0'][0]:.5e}  E(T)={seg['E0'][-1]:.5e}  "
          f"residual={r:.3e}  ratio={ratio}")
    prev = r
