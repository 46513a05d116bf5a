# %% [markdown]
# # Removing the time-of-day volatility pattern
#
# Intraday volatility is systematically higher around the open and the
# close.  A stable seasonal filter on the bipower series (centered
# moving average of one trading day, per-bin means of the detrended
# ratios, normalised to average one) yields one multiplicative factor
# per bin; multiplying RV and BV by the factors flattens the pattern
# without touching RV/BV ratios or the jump flags.

# %%
import numpy as np

from jumpvol.diurnal import apply_profile, bin_diagnostics, estimate_profile
from jumpvol.ingest import SessionConfig, compute_returns
from jumpvol.measures import build_bin_measures
from jumpvol.synth import SynthSpec, gen_paths

session = SessionConfig()

# a U-shaped plant: the first bin runs far hotter than mid-day
shape = np.concatenate([np.linspace(1.9, 0.85, 7), np.linspace(0.85, 1.3, 6)])
shape /= shape.mean()

prices, _ = gen_paths(SynthSpec(days=750, seed=21, diurnal=shape), session)
panel = build_bin_measures(compute_returns(prices), m=session.m, days=prices.days)

# %%
profile = estimate_profile(panel, source="bv")
adjusted = apply_profile(panel, profile)

print("bin   planted  recovered   factor   raw BV mean  adj BV mean")
raw_means = panel.bv.mean(axis=0)
adj_means = adjusted.bv.mean(axis=0)
for i in range(session.n_bins):
    print(f"{i + 1:3d}   {shape[i]:7.3f}  {profile.seasonal_indices[i]:9.3f}"
          f"  {profile.factors[i]:7.3f}  {raw_means[i]:11.3f}  {adj_means[i]:11.3f}")

# %% [markdown]
# The first-bin excess disappears after adjustment, and the
# significant-jump flags are untouched because the statistic is
# scale-free bin by bin.

# %%
excess_before = raw_means[0] / raw_means[1:].mean() - 1.0
excess_after = adj_means[0] / adj_means[1:].mean() - 1.0
print(f"\nfirst-bin excess before: {excess_before:+.1%}, after: {excess_after:+.1%}")
print("flag sets identical:", bool(np.array_equal(adjusted.jump_flags, panel.jump_flags)))

diag = bin_diagnostics(adjusted)
print("\nadjacent-bin autocorrelations of adjusted RV:")
print(np.round(diag.rv_adjacent_corr, 3))
