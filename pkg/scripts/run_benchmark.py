"""Run a benchmark grid from a TOML config and print the per-level ranking.

    python scripts/run_benchmark.py scripts/synthetic_benchmark.toml --jobs 4
"""

import argparse
import logging

from satoris.config import load_config
from satoris.harness import run, summarize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--fresh", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    spec = load_config(args.config)
    result = run(spec, jobs=args.jobs, resume=not args.fresh)
    paths = summarize(result, spec.output_dir)
    print(paths["ranking"].read_text())
    bad = [r for r in result.records if r.status not in ("ok", "converged")]
    for r in bad:
        print(f"note: day {r.day} level {r.level} {r.method}: {r.status}")
    print(f"wrote {', '.join(str(p) for p in paths.values())}")


if __name__ == "__main__":
    main()
