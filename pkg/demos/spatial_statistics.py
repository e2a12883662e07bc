"""What the interfering UEs look like from a base station.

Scheduled UEs of other cells are repelled from each BS (they associate with
their own nearest BS).  The script estimates the K-function of that field
from full Voronoi simulations and compares it with the pair-correlation
model, then contrasts the count variance of the two interferer models:
clusters of N co-located UEs (Model A) and independent points (Model B).

Run: python demos/spatial_statistics.py [topologies]
"""

import math
import sys

import numpy as np

from uplink_rsma.spatial import (
    Window, estimate_second_moment_measure, interferer_counts_all_cells, k_function,
    model_second_moment, sample_interferers_model_a, sample_interferers_model_b, sample_network,
)

topologies = int(sys.argv[1]) if len(sys.argv) > 1 else 100
lam = 1e-4
window = Window(1000.0)
r = np.array([20.0, 40.0, 80.0, 160.0, 320.0])
rng = np.random.default_rng(3)

print("K(r) of the interferer field, empirical / model")
print("   r[m]  lam*pi*r^2 " + " ".join(f"{'N=' + str(N):>8}" for N in (1, 2, 5)))
ratios = {}
for N in (1, 2, 5):
    counts = np.vstack([interferer_counts_all_cells(sample_network(lam, N, window, rng), r)
                        for _ in range(topologies)])
    ratios[N] = counts.mean(axis=0) / (N * lam) / k_function(r, lam)
for i, ri in enumerate(r):
    print(f"{ri:7.0f} {lam * math.pi * ri * ri:10.2f} " + " ".join(f"{ratios[N][i]:8.3f}" for N in (1, 2, 5)))

a = [sample_interferers_model_a(lam, 2, window, rng) for _ in range(5000)]
b = [sample_interferers_model_b(lam, 2, window, rng) for _ in range(5000)]
print("\nE[count^2] in b(o, r), N = 2: Model A (sim, theory) vs Model B (sim, theory)")
for ri, ea, ta, eb, tb in zip(r, estimate_second_moment_measure(a, r), model_second_moment(r, lam, 2, "A"),
                              estimate_second_moment_measure(b, r), model_second_moment(r, lam, 2, "B")):
    print(f"{ri:7.0f}  {ea:9.3f} {ta:9.3f}   {eb:9.3f} {tb:9.3f}")
