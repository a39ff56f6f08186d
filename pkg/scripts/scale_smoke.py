#!/usr/bin/env python3
"""Scale smoke test: subscribe a large generated workload, publish a stream of
documents, audit every index, and report peak memory against a budget.

Exit status is 0 when all audits pass, the subscription count matches the
request, and peak RSS stays within the budget; 2 otherwise.
"""
from __future__ import annotations

import argparse
import gc
import json
import resource
import sys
import time

from ftpubsub.engine import MODE_ALIASES, EngineConfig, FilterEngine
from ftpubsub.rdf import iter_documents
from ftpubsub.workload import WorkloadSpec, iter_document_blocks, iter_subscription_blocks


def peak_rss_bytes() -> int:
    # ru_maxrss is kilobytes on Linux.
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--subs", type=int, default=1_000_000,
                        help="number of subscriptions to generate and index")
    parser.add_argument("--docs", type=int, default=1_000,
                        help="number of documents to generate and publish")
    parser.add_argument("--mode", default="metrics",
                        choices=sorted(MODE_ALIASES),
                        help="subscription indexing mode")
    parser.add_argument("--vocab", type=int, default=2_000,
                        help="vocabulary size for the Zipf sampler")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--budget-gib", type=float, default=5.0,
                        help="peak RSS budget in GiB")
    parser.add_argument("--json", action="store_true",
                        help="print the report as JSON instead of text")
    args = parser.parse_args(argv)

    spec = WorkloadSpec(
        num_subscriptions=args.subs,
        vocabulary_size=args.vocab,
        seed=args.seed,
    )
    engine = FilterEngine(EngineConfig(index_mode=MODE_ALIASES[args.mode]))

    # The index is one huge, permanently live object graph; cycle collection
    # over it buys nothing and costs full-heap scans, so leave reclamation to
    # reference counting for the duration of the run.
    gc.disable()

    t0 = time.perf_counter()
    for i, block in enumerate(iter_subscription_blocks(spec)):
        engine.subscribe(block)
        if (i + 1) % 100_000 == 0:
            print(f"subscribed {i + 1}/{args.subs}", file=sys.stderr)
    subscribe_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    notifications = 0
    published = 0
    for block in iter_document_blocks(args.docs, spec):
        for doc in iter_documents(block):
            notifications += len(engine.publish(doc))
            published += 1
        if published % 200 == 0:
            print(f"published {published}/{args.docs}", file=sys.stderr)
    publish_s = time.perf_counter() - t0

    problems = engine.audit()
    stats = engine.stats()
    peak_gib = peak_rss_bytes() / (1024**3)
    report = {
        "mode": MODE_ALIASES[args.mode],
        "subscriptions": stats.subscriptions,
        "clauses": stats.clauses,
        "predicates": stats.predicates,
        "trie_nodes": stats.total_trie_nodes,
        "documents": published,
        "notifications": notifications,
        "audit_problems": problems,
        "subscribe_s": round(subscribe_s, 2),
        "publish_s": round(publish_s, 2),
        "avg_publish_ms": round(1000 * publish_s / published, 3) if published else 0.0,
        "peak_rss_gib": round(peak_gib, 3),
        "budget_gib": args.budget_gib,
    }
    ok = (
        not problems
        and stats.subscriptions == args.subs
        and published == args.docs
        and peak_gib <= args.budget_gib
    )
    report["ok"] = ok

    if args.json:
        print(json.dumps(report, indent=2))
    else:
        for key, value in report.items():
            print(f"{key}: {value}")
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
