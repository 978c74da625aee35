"""Abort rate of the Bell protocol against the number of decoy photons.

Eve intercepts and resends every qubit; only the decoy check guarding the
returned sequence is active (no checking pairs), so the abort rate should
follow 1 - (3/4)^k for k decoys.
"""

import argparse

from qdsim.analysis import detection_stats


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--max-decoys", type=int, default=12)
    args = parser.parse_args()
    print(f"{'decoys':>6s} {'abort':>8s} {'expected':>9s} {'95% CI':>19s}  3-sigma")
    for k in range(args.max_decoys + 1):
        stats = detection_stats(
            "bell", "intercept_resend", 1, seed=args.seed + k, units=(), run_trials=args.runs,
            run_params={"n": 1, "delta1": 0, "delta2": 0, "delta3": k}, workers=args.workers,
        )
        expected = 1 - 0.75**k
        low, high = stats.abort.ci()
        ok = "ok" if stats.abort.within(expected) else "OUT"
        print(f"{k:6d} {stats.abort.rate:8.4f} {expected:9.4f}   [{low:.4f}, {high:.4f}]  {ok}")


if __name__ == "__main__":
    main()
