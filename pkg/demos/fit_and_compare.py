"""Fit two structures to the same data and compare them without composing anything.

With fitted networks the KL between them can be read off the fitted values
and residual variances of each node. The gap to the exact value closes as
the sample grows.
"""

import numpy as np

from bninfo import bundled_network, fit_mle, kl_gbn_empirical, kl_gbn_sparse, sample_network

truth = bundled_network("gbn_B")
dag = bundled_network("gbn_fitted_B").dag
dag2 = bundled_network("gbn_fitted_B_prime").dag
print("structure 1 arcs:", sorted(dag.arcs))
print("structure 2 arcs:", sorted(dag2.arcs))

for n in (10, 100, 1000, 10000):
    gaps = []
    for seed in range(20):
        data = sample_network(truth, n, seed=seed).dataset()
        f1, f2 = fit_mle(dag, data), fit_mle(dag2, data)
        approx = kl_gbn_empirical(f1, f2)
        exact = kl_gbn_sparse(f1.network, f2.network)
        gaps.append(abs(approx.value - exact.value))
    print(f"n={n:6d}  last run: empirical {approx.value:.4f} exact {exact.value:.4f}   median gap over 20 runs {np.median(gaps):.2e}")

print("\nper-node terms of the last run:")
for name, term in approx.diagnostics["per_node"].items():
    print(f"  {name}: {term:.4f}   squared distance {approx.diagnostics['squared_distance'][name]:.2f}")

# the fixture holds the parameters of one particular 10-row fit
print("\nstored 10-row fit, exact KL:", round(kl_gbn_sparse(bundled_network("gbn_fitted_B"),
                                                           bundled_network("gbn_fitted_B_prime")).value, 4))
