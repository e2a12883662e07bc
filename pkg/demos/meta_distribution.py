"""Per-link reliability: the meta distribution of the received rate.

The average rate hides how unevenly it is spread over links.  This script
fits a beta law to the first two analytical moments of the conditional
received rate and compares its CCDF with the empirical one from simulated
topologies, for NOMA and for an even RSMA split, with a unit rate ladder.

Run: python demos/meta_distribution.py [topologies]
"""

import sys

import numpy as np

from uplink_rsma import PRESETS, SystemConfig
from uplink_rsma.analytic import fit_beta_meta, meta_scale, moment_crr_noma, moment_crr_rsma
from uplink_rsma.montecarlo import empirical_meta, simulate_success_tables

topologies = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
scheme = PRESETS["S2"].with_rates([1.0])
tables = simulate_success_tables(SystemConfig(), scheme.theta, topologies, 2000, 5, betas=[0.0, 0.5])

for access, k, beta, moment in (("noma", 0, 0.0, moment_crr_noma), ("rsma", 1, 0.5, moment_crr_rsma)):
    cfg = SystemConfig(beta=beta)
    scale = meta_scale(access, scheme)
    xi = np.linspace(0.0, scale, 9)
    samples = tables.crr(scheme, k)
    print(f"\n{access.upper()} (beta={beta}), CCDF P[rate > xi]")
    print("    xi " + " ".join(f"{x:6.2f}" for x in xi))
    for n in (1, 2):
        meta = fit_beta_meta(moment(1, cfg, scheme, n), moment(2, cfg, scheme, n), scale)
        print(f"fit  {n} " + " ".join(f"{p:6.3f}" for p in meta.ccdf(xi)))
        print(f"sim  {n} " + " ".join(f"{p:6.3f}" for p in empirical_meta(samples[:, n - 1], xi)))
