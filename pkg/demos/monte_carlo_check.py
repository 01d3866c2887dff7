"""Sampling-based estimates next to the exact values, for every kind of network."""

from bninfo import bundled_network, entropy_clgbn, entropy_discrete, entropy_gbn
from bninfo import kl_clgbn, kl_discrete, kl_gbn_sparse, mc_entropy, mc_kl

cases = [
    ("dbn_B", "dbn_B_prime", entropy_discrete, kl_discrete),
    ("gbn_B", "gbn_B_prime", entropy_gbn, kl_gbn_sparse),
    ("clgbn_B", "clgbn_B_prime", entropy_clgbn, kl_clgbn),
]
for first, second, entropy, kl in cases:
    b, b2 = bundled_network(first), bundled_network(second)
    for m in (1_000, 100_000):
        h = mc_entropy(b, m, seed=1)
        k = mc_kl(b, b2, m, seed=1)
        print(f"{first:8s} m={m:7d}  H {h.value:8.4f} ± {h.std_error:.4f} (exact {entropy(b).total:.4f})"
              f"   KL {k.value:9.4f} ± {k.std_error:.4f} (exact {kl(b, b2).value:.4f})")

# Same seed, same particles, whatever the worker count.
a = mc_kl(bundled_network("gbn_B"), bundled_network("gbn_B_prime"), 50_000, seed=3, workers=1)
c = mc_kl(bundled_network("gbn_B"), bundled_network("gbn_B_prime"), 50_000, seed=3, workers=4)
print("\nworkers 1 vs 4:", a.value, c.value)
