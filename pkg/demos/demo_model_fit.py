# %% [markdown]
# # Fitting the asymmetric jump multiplicative error model
#
# Deseasonalised realized volatility is modelled as mu * eps with a
# Gamma error and a conditional mean split into a persistent continuous
# component (varsigma) and a short-lived expected-jump component
# (kappa) that reacts to observed significant jumps.  Estimation is
# quasi-maximum likelihood over a reparameterised feasible set with
# multi-start L-BFGS and sandwich standard errors.
#
# Here we simulate from known coefficients and recover them, comparing
# the restricted (alpha2 = 0) and unrestricted variants.

# %%
import numpy as np

from jumpvol.ajm import AjmParams, persistence, simulate
from jumpvol.fit import FitOptions, fit

truth = AjmParams(omega=0.1173, alpha1=0.2589, alpha2=-0.2045, beta=0.8926,
                  gamma=0.0105, delta1=0.0081, delta2=-0.0304, phi=0.3509,
                  psi=0.2622, error_shape=5.6748)
truth.validate()
print(f"true persistence: {persistence(truth):.4f}")

sim = simulate(truth, days=1200, seed=99, jump_intensity=0.3, jump_scale=1.0,
               overnight_sigma=1.0)
print(f"simulated {sim.panel.n_days} days x {sim.panel.n_bins} bins, "
      f"mean volatility {sim.panel.rv.mean():.2f}, "
      f"{int(sim.panel.jump_flags.sum())} jump bins, "
      f"{sim.clamp_count} clamped draws")

# %%
results = {spec: fit(sim.panel, sim.overnight, spec=spec,
                     options=FitOptions(seed=1))
           for spec in ("restricted", "unrestricted")}

print("\ncoefficient   truth   restricted        unrestricted")
for name in results["unrestricted"].param_names:
    tru = getattr(truth, name)
    unres = results["unrestricted"]
    i_u = unres.param_names.index(name)
    u = f"{getattr(unres.params, name):8.4f} ({unres.se_robust[i_u]:.4f})"
    res = results["restricted"]
    if name in res.param_names:
        i_r = res.param_names.index(name)
        r = f"{getattr(res.params, name):8.4f} ({res.se_robust[i_r]:.4f})"
    else:
        r = "       -"
    print(f"{name:12s} {tru:7.4f}  {r:>18s}  {u:>18s}")

# %% [markdown]
# The richer model nests the restricted one, so its likelihood is never
# lower; residual autocorrelation diagnostics come with each fit.

# %%
for spec, res in results.items():
    lb = ", ".join(f"LB{r.lag}={r.p_value:.3f}" for r in res.diagnostics)
    print(f"{spec:12s}: loglik={res.loglik:10.2f}  persistence={res.persistence:.4f}"
          f"  converged={res.converged}  {lb}")
gap = results["unrestricted"].loglik - results["restricted"].loglik
print(f"\nloglik gap (unrestricted - restricted): {gap:.2f} >= 0")
