"""Repetitions needed before the modal consensus settles, low vs high in-degree.

    python3 scripts/robustness_by_degree.py --reps 30 --window 5
"""

import argparse
import statistics

from pbconsensus.harness import Cell, ExperimentConfig, load_histories, robustness_study


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--synthetic", type=int, default=1)
    ap.add_argument("--reps", type=int, default=30)
    ap.add_argument("--window", type=int, default=5)
    ap.add_argument("--low", type=int, default=2)
    ap.add_argument("--high", type=int, default=16)
    args = ap.parse_args()
    cfg = ExperimentConfig(
        synthetic_seed=args.synthetic, repetitions=args.reps, confirmation_window=args.window
    )
    (name, history), = load_histories(cfg).items()
    totals = {args.low: [], args.high: []}
    print("agents bundles  degree  R  unstable  distinct outcomes")
    for agents in (30, 50):
        for bundles in (5, 10, 20, 40, 80):
            for degree in totals:
                res = robustness_study(cfg, Cell(name, agents, degree, bundles), history)
                totals[degree].append(res.repetitions_to_stability)
                print(f"{agents:>6} {bundles:>7} {degree:>7} {res.repetitions_to_stability:>2} "
                      f"{str(res.unstable):>9}  {len(set(res.outcomes))}")
    for degree, rs in totals.items():
        print(f"in-degree {degree}: mean R {statistics.fmean(rs):.2f} over {len(rs)} cells")


if __name__ == "__main__":
    main()
