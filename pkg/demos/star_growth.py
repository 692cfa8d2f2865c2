"""How often a star started from its centre reaches lambda n / (8e) infected leaves."""

import math

from bipcp import contact

rates = contact.Rates(0.02, 0.02)
for n in (10_000, 30_000, 100_000):
    thr = math.ceil(rates.lambda1 * n / (8 * math.e))
    cfg = contact.SimConfig(t_max=1e3, max_events=10**9, escape_size=thr)
    trials = 500
    hits = sum(contact.run_star(n, rates, "centre", cfg, contact.trial_rng(1, i)).peak_infected >= thr
               for i in range(trials))
    med = contact.star_extinction_median(n, rates, 100, 200.0, 2)
    print(f"n={n:>6}  reach {thr:>3}: {hits / trials:.3f}  median extinction ~ {med.median:.3g} ({med.method})")
