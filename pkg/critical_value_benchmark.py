#!/usr/bin/env python3
"""
Critical Value Benchmark
Regenerates the built-in table c(gamma, alpha) by simulating
sup_{0<u<=1} |W(u)| / u^gamma and compares every entry with the stored value.
For gamma = 0 the reflection-series quantile is reported as well.
"""
import argparse
import json
import sys
import time
from datetime import datetime

from seqmon.critical_values import (
    TABLE_ALPHAS,
    TABLE_GAMMAS,
    resolve_critical_value,
    sup_abs_wiener_quantile,
    table_value,
)


def run_benchmark(reps, grid_size, seed, workers):
    """Simulate every table cell and record the deviation from the stored value"""
    print("📐 Critical Value Benchmark")
    print(f"Replications: {reps:,}   grid: {grid_size:,}   seed: {seed}")
    print("=" * 60)
    print(f"{'gamma':<8} {'alpha':<8} {'table':<10} {'simulated':<10} {'diff':<9} {'s.e.':<8} {'time(s)'}")
    print("-" * 60)

    results = []
    for gamma in TABLE_GAMMAS:
        for alpha in TABLE_ALPHAS:
            start = time.time()
            cv = resolve_critical_value(gamma, alpha, "simulation", grid_size=grid_size,
                                        reps=reps, seed=seed, workers=workers)
            elapsed = time.time() - start
            stored = table_value(gamma, alpha)
            row = {
                'gamma': gamma,
                'alpha': alpha,
                'table': stored,
                'simulated': cv.value,
                'difference': cv.value - stored,
                'standard_error': cv.standard_error,
                'seconds': elapsed,
            }
            if gamma == 0.0:
                row['analytic'] = sup_abs_wiener_quantile(1.0 - alpha)
            results.append(row)
            print(f"{gamma:<8.2f} {alpha:<8.2f} {stored:<10.4f} {cv.value:<10.4f} "
                  f"{cv.value - stored:<+9.4f} {cv.standard_error:<8.4f} {elapsed:.1f}")

    worst = max(results, key=lambda r: abs(r['difference']))
    print(f"\nLargest deviation: {worst['difference']:+.4f} at gamma={worst['gamma']}, alpha={worst['alpha']}")
    return results


def main():
    parser = argparse.ArgumentParser(description="Regenerate the critical value table by simulation")
    parser.add_argument("--reps", type=int, default=50_000, help="Replications per gamma")
    parser.add_argument("--grid-size", type=int, default=10_000, help="Grid points on (0, 1]")
    parser.add_argument("--seed", type=int, default=0, help="Master seed")
    parser.add_argument("--workers", type=int, default=1, help="Threads")
    args = parser.parse_args()

    try:
        results = run_benchmark(args.reps, args.grid_size, args.seed, args.workers)
    except Exception as e:
        print(f"Error: {e}")
        return 1

    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    filename = f"critical_value_benchmark_{timestamp}.json"
    with open(filename, 'w') as f:
        json.dump({
            'timestamp': datetime.now().isoformat(),
            'reps': args.reps,
            'grid_size': args.grid_size,
            'seed': args.seed,
            'results': results,
        }, f, indent=2)
    print(f"\n💾 Benchmark data saved: {filename}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
