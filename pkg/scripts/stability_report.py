"""Adjacent-day subspace overlap for a dataset directory or a synthetic generator.

    python scripts/stability_report.py --data data/beijing --k 10
    python scripts/stability_report.py --theta 0.1 --days 7
"""

import argparse

from satoris.harness import load_dataset
from satoris.subspace import stability_series, write_stability_csv
from satoris.synthetic import SyntheticGenerator, generate_synthetic_days


def main():
    ap = argparse.ArgumentParser(description="adjacent-day subspace overlap")
    ap.add_argument("--data", help="directory of day_<i>.csv files")
    ap.add_argument("--theta", type=float, default=0.1)
    ap.add_argument("--days", type=int, default=7)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--out", default="stability")
    args = ap.parse_args()

    if args.data:
        days = load_dataset(args.data)
    else:
        days = generate_synthetic_days(SyntheticGenerator(theta=args.theta), args.days)
    for side in ("left", "right"):
        series = stability_series(days, args.k, side)
        write_stability_csv(f"{args.out}_{side}.csv", series)
        print(side)
        for i, (mean, std) in enumerate(series):
            print(f"  days {i}->{i + 1}: mean {mean:.4f}  std {std:.4f}")


if __name__ == "__main__":
    main()
