#!/usr/bin/env python3
"""Exercise the fast-vs-reference operator sweep and report worst errors.

    python3 scripts/equivalence_sweep.py --full --seed 0
"""

import argparse
import sys
import time

from logpolar.checks import equivalence_sweep, gradient_checks, sum_mean_identity_sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--full", action="store_true", help="run all 432 configurations")
    parser.add_argument("--verbose", action="store_true", help="print every configuration")
    args = parser.parse_args()

    start = time.time()
    groups = {
        "fast vs reference": equivalence_sweep(
            seed=args.seed, full=args.full, inputs_per_config=10 if args.full else 2
        ),
        "sum = mean * population": sum_mean_identity_sweep(seed=args.seed, full=args.full),
        "gradients vs finite differences": gradient_checks(seed=args.seed),
    }
    failed = 0
    for title, results in groups.items():
        worst = max(results, key=lambda r: r.value)
        print(f"{title}: {len(results)} checks, worst {worst.line()}")
        if args.verbose:
            for r in results:
                print(f"  {r.line()}")
        failed += sum(not r.passed for r in results)
    print(f"done in {time.time() - start:.1f}s, {failed} failures")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
