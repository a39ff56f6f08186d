#!/usr/bin/env python3
"""Generate a synthetic workload and benchmark the three subscription-indexing
modes against it at increasing database sizes.

Writes one CSV row per (mode, size) and prints the average-filtering-time
ordering report; all modes must produce the same notification multiset, so a
disagreement aborts the run.
"""
from __future__ import annotations

import argparse
import gc
import sys
import time

from ftpubsub.bench import parse_workload, run_benchmark, write_csv
from ftpubsub.workload import WorkloadSpec, generate_documents, generate_subscriptions


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--subs", type=int, default=100_000,
                        help="subscriptions to generate (the largest usable size)")
    parser.add_argument("--docs", type=int, default=10_000,
                        help="documents to publish per mode and size")
    parser.add_argument("--vocab", type=int, default=2_000)
    parser.add_argument("--zipf", type=float, default=1.0, help="keyword skew")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--modes", default="det,metrics,reorg",
                        help="comma-separated: det, metrics, reorg")
    parser.add_argument("--sizes", default=None,
                        help="comma-separated database sizes (default: --subs)")
    parser.add_argument("-o", "--out", default="results.csv", help="CSV output path")
    args = parser.parse_args(argv)

    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    if args.sizes:
        try:
            sizes = [int(s) for s in args.sizes.split(",")]
        except ValueError:
            parser.error(f"bad --sizes value {args.sizes!r}")
    else:
        sizes = [args.subs]

    spec = WorkloadSpec(
        num_subscriptions=args.subs,
        vocabulary_size=args.vocab,
        zipf_skew=args.zipf,
        seed=args.seed,
    )
    print(f"generating {args.subs} subscriptions and {args.docs} documents", file=sys.stderr)
    t0 = time.perf_counter()
    subs, docs = parse_workload(
        generate_subscriptions(spec), generate_documents(args.docs, spec)
    )
    print(f"workload ready in {time.perf_counter() - t0:.1f}s", file=sys.stderr)

    gc.disable()  # the indexes are permanently live; skip full-heap GC scans
    results, report = run_benchmark(
        subs, docs, modes, sizes, progress=lambda msg: print(msg, file=sys.stderr)
    )
    write_csv(results, args.out)
    print(f"wrote {len(results)} rows to {args.out}", file=sys.stderr)
    for line in report:
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
