"""Exact-recovery rate of CS and RS reconciliation against mismatch weight.

Run with ``python3 demos/recovery_curve.py [trials]``. Prints one row per
mismatch weight S together with the effective threshold P(S).
"""

import sys

from h2b.analysis import benchmark_reconciliation
from h2b.reconcile import effective_threshold

N, M = 128, 50


def main(trials=100):
    print(f"{'S':>3} {'P(S)':>6} {'cs':>6} {'rs':>6}")
    for s in (2, 4, 8, 13, 17, 20, 26, 32, 40):
        cs = benchmark_reconciliation("cs", N, M, s / N, trials=trials, seed=s)
        rs = benchmark_reconciliation("rs", N, M, s / N, trials=trials, seed=s)
        print(f"{s:>3} {effective_threshold(s, N):6.1f} {cs.success_rate:6.2f} "
              f"{rs.success_rate:6.2f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 100)
