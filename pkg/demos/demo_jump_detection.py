# %% [markdown]
# # Detecting significant intraday volatility jumps
#
# A synthetic five-minute price path is aggregated into thirty-minute
# bins; for each bin we compute realized volatility (RV), the
# jump-robust bipower variation (BV) and the tripower quarticity, then
# studentise the relative jump (RV - BV)/RV.  Bins where the statistic
# exceeds the 55% normal quantile (0.126) are split into a continuous
# part C and a significant jump SJ with C + SJ = RV.

# %%
import numpy as np

from jumpvol.ingest import SessionConfig, compute_returns
from jumpvol.measures import build_bin_measures, jump_threshold
from jumpvol.synth import SynthSpec, gen_paths, jump_detection_rates

session = SessionConfig()  # 9:30-16:00, 5-minute grid, 30-minute bins
print(f"{session.n_elementary} elementary returns/day, "
      f"{session.n_bins} bins of M={session.m}")

# %% [markdown]
# Plant one large jump (10 sigma at the bin scale) in bin 7 of every
# tenth day.  The remaining bins are pure diffusion, so they calibrate
# the null rate of the test while the planted bins measure its power.

# %%
days = 250
planted = [(d, 6) for d in range(0, days, 10)]
spec = SynthSpec(days=days, sigma=1.0, jump_times=planted, jump_size=10.0, seed=7)
prices, mask = gen_paths(spec, session)
panel = build_bin_measures(compute_returns(prices), m=session.m, days=prices.days)

print(f"\njump threshold Phi_0.55 = {jump_threshold(0.55):.4f}")
null_rate = panel.jump_flags[~mask].mean()
print(f"flag rate on diffusion bins : {null_rate:6.1%}  (45% expected under the null)")
rates = jump_detection_rates(mask, panel.jump_flags)
print(f"planted jumps detected      : {rates['recall']:6.1%}  of {rates['planted']}")

# %% [markdown]
# At a planted bin the bipower variation stays close to the diffusion
# level while RV absorbs the jump, which is exactly what the C/SJ split
# exploits.

# %%
rows = np.argwhere(mask)[:5]
print("\n day bin      rv      bv       j       c      sj")
for t, i in rows:
    print(f"{t:4d} {i + 1:3d} {panel.rv[t, i]:7.2f} {panel.bv[t, i]:7.2f}"
          f" {panel.j_stat[t, i]:7.2f} {panel.c[t, i]:7.2f} {panel.sj[t, i]:7.2f}")

identity_gap = np.abs(panel.c + panel.sj - panel.rv).max()
print(f"\nmax |C + SJ - RV| over all bins: {identity_gap:.1e}")
