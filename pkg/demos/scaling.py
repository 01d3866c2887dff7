"""Time the KL routes on random sparse networks and fit log-log slopes.

Only orderings and slopes mean anything here; absolute times depend on
the machine.
"""

from bninfo.bench import compare, loglog_slope, run_bench

sizes = [50, 100, 200, 400]
glob = run_bench("kl-global", sizes, repetitions=9)
sparse = run_bench("kl-sparse", sizes, repetitions=9)
print("N      global (ms)  sparse (ms)")
for row in compare(glob, sparse):
    print(f"{row['N']:<6d} {row['kl-global'] * 1e3:10.2f} {row['kl-sparse'] * 1e3:12.2f}")
print(f"slopes: global {loglog_slope(glob, 'N'):.2f}, sparse {loglog_slope(sparse, 'N'):.2f}")

approx = run_bench("kl-approx", [100, 200, 400, 800, 1600])
print(f"\nbounds-only KL, slope in N: {loglog_slope(approx, 'N'):.2f}")

emp = run_bench("kl-empirical", [1_000, 10_000, 100_000, 1_000_000])
print(f"empirical KL on 10 nodes, slope in rows: {loglog_slope(emp, 'n'):.2f}")
