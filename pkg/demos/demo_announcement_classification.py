# %% [markdown]
# # Classifying announcement effects on expected volatility jumps
#
# Each announcement is mapped to the first thirty-minute bin at or
# after its timestamp.  The local shape of the expected-jump path
# around that bin labels the event: UpwardSpike (local max),
# DownwardSpike (local min), Boost (increase) or Drop (decrease); the
# same rule applied to the jump surprise kappa - SJ gives a second
# labelling.  Cross-ticker agreement is summarised by the adjusted
# Rand index.

# %%
from datetime import time

import numpy as np

from jumpvol.ajm import AjmParams, filter_state, simulate
from jumpvol.classify import (ClassLabel, agreement_matrix,
                              classify_announcements)
from jumpvol.ingest import AnnouncementEvent, SessionConfig

session = SessionConfig()
truth = AjmParams(omega=0.1173, alpha1=0.2589, alpha2=-0.2045, beta=0.8926,
                  gamma=0.0105, delta1=0.0081, delta2=-0.0304, phi=0.3509,
                  psi=0.2622, error_shape=5.6748)

# %% [markdown]
# Build three synthetic tickers sharing a common announcement effect: a
# burst of significant jumps in the half hour before each 2pm release
# (anticipation common to the market) plus ticker-specific reactions in
# the release bin itself.

# %%
days = 500
ann_days = list(range(10, days - 1, 6))[:80]
rng = np.random.default_rng(2718)
common = np.where(rng.random(len(ann_days)) < 0.5, 0.0,
                  2.0 + rng.exponential(5.0, len(ann_days)))

tables = []
for k, ticker in enumerate(("AAA", "BBB", "CCC")):
    sim = simulate(truth, days=days, seed=40 + k, jump_intensity=0.25,
                   jump_scale=0.75, overnight_sigma=1.0)
    panel = sim.panel
    trng = np.random.default_rng(900 + k)
    for d, size in zip(ann_days, common):
        if size > 0:  # common anticipation, bin 13:30-14:00
            s = size * max(0.2, 1.0 + 0.15 * trng.standard_normal())
            panel.sj[d, 8] += s
            panel.rv[d, 8] += s
        if trng.random() < 0.35:  # idiosyncratic reaction, bin 14:00-14:30
            s = trng.exponential(2.5)
            panel.sj[d, 9] += s
            panel.rv[d, 9] += s
    state = filter_state(truth, panel, sim.overnight)
    events = [AnnouncementEvent(date=panel.days[d], time=time(14, 0),
                                forward_guidance=bool(i % 2))
              for i, d in enumerate(ann_days)]
    panel.ticker = ticker
    tables.append(classify_announcements(state, panel, events, session,
                                         ticker=ticker))

# %%
print("label counts on the expected-jump path (all / forward guidance):")
for table in tables:
    parts = [f"{label.value}={n_all}/{n_fg}"
             for label, (n_all, n_fg) in table.counts("kappa").items()]
    print(f"  {table.ticker}: " + ", ".join(parts))

# %% [markdown]
# Expected-jump labels agree across tickers more than jump-surprise
# labels (the surprise inherits the idiosyncratic reaction), and within
# a ticker the kappa labels track the surprise labels far better than
# the raw jump series.

# %%
res_kappa = agreement_matrix(tables, series="kappa")
res_surprise = agreement_matrix(tables, series="surprise")

print("\npairwise ARI on kappa labels:")
print(np.round(res_kappa.matrix, 3))
print("pairwise ARI on surprise labels:")
print(np.round(res_surprise.matrix, 3))
print("\nper ticker: ARI(kappa, surprise) vs ARI(kappa, raw SJ shape)")
for ticker in res_kappa.tickers:
    print(f"  {ticker}: {res_kappa.kappa_vs_surprise[ticker]:.3f} vs "
          f"{res_kappa.kappa_vs_sj[ticker]:.3f}")
