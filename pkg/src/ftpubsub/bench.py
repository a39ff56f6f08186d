"""Benchmark harness comparing the three indexing modes on one workload.

Every (mode, database size) cell rebuilds the engine, replays the same
documents, and records wall-clock publish times; notification multisets are
compared across modes before any timing is reported.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

from . import engine as engine_mod
from .engine import EngineConfig, MODE_ALIASES
from .query import Subscription, parse_subscription, split_subscription_blocks
from .rdf import Document, format_term, iter_documents

CSV_HEADER = "mode,db_size,avg_ms,p50_ms,p95_ms,build_ms,trie_nodes"

ORDERING_MARGIN = 0.05  # each mode should beat the previous by at least 5%


class OracleMismatch(RuntimeError):
    """Two index modes produced different notification multisets."""


@dataclass(frozen=True)
class BenchResult:
    mode: str
    db_size: int
    avg_ms: float
    p50_ms: float
    p95_ms: float
    build_ms: float
    trie_nodes: int

    def csv_row(self) -> str:
        return (
            f"{self.mode},{self.db_size},{self.avg_ms:.4f},{self.p50_ms:.4f},"
            f"{self.p95_ms:.4f},{self.build_ms:.2f},{self.trie_nodes}"
        )


def _percentile(sorted_times: list[float], fraction: float) -> float:
    if not sorted_times:
        return 0.0
    rank = max(1, -(-len(sorted_times) * fraction // 1))  # ceil, nearest-rank
    return sorted_times[int(rank) - 1]


def _config_for(mode: str) -> EngineConfig:
    canonical = MODE_ALIASES.get(mode)
    if canonical is None:
        raise ValueError(f"unknown mode {mode!r}; expected det, metrics, or reorg")
    return EngineConfig(index_mode=canonical)  # type: ignore[arg-type]


class _Digest:
    """Order-insensitive multiset fingerprint of notifications."""

    __slots__ = ("count", "acc")

    def __init__(self):
        self.count = 0
        self.acc = 0

    def add(self, notification) -> None:
        self.count += 1
        key = (
            notification.sub_id,
            notification.doc_id,
            tuple((n, format_term(t)) for n, t in notification.bindings),
        )
        self.acc = (self.acc + hash(key)) & ((1 << 127) - 1)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, _Digest)
            and self.count == other.count
            and self.acc == other.acc
        )


def parse_workload(
    subs_text: str,
    docs_text: str | None,
    *,
    default_ns: str | None = None,
    documents: list[Document] | None = None,
    max_subscriptions: int | None = None,
) -> tuple[list[Subscription], list[Document]]:
    kwargs = {"default_ns": default_ns} if default_ns else {}
    blocks = split_subscription_blocks(subs_text)
    if max_subscriptions is not None:
        blocks = blocks[:max_subscriptions]
    subs = [parse_subscription(block, **kwargs) for block in blocks]
    if documents is None:
        documents = list(iter_documents(docs_text or ""))
    return subs, documents


def run_benchmark(
    subs: list[Subscription],
    documents: list[Document],
    modes: list[str],
    sizes: list[int],
    *,
    progress=None,
) -> tuple[list[BenchResult], list[str]]:
    """Returns (results, ordering report lines).

    Raises OracleMismatch if any two modes disagree on the notification
    multiset for the same database size.
    """
    for size in sizes:
        if size > len(subs):
            raise ValueError(f"size {size} exceeds the {len(subs)} parsed subscriptions")
    results: list[BenchResult] = []
    report: list[str] = []
    for size in sizes:
        digests: dict[str, _Digest] = {}
        by_mode: dict[str, BenchResult] = {}
        for mode in modes:
            if progress:
                progress(f"mode={mode} db_size={size}: building")
            eng = engine_mod.FilterEngine(_config_for(mode))
            t0 = time.perf_counter()
            for sub in subs[:size]:
                eng.subscribe_parsed(sub)
            build_ms = (time.perf_counter() - t0) * 1000.0
            digest = _Digest()
            times: list[float] = []
            for doc in documents:
                t1 = time.perf_counter()
                notes = eng.publish(doc)
                times.append((time.perf_counter() - t1) * 1000.0)
                for n in notes:
                    digest.add(n)
            times.sort()
            stats = eng.stats()
            result = BenchResult(
                mode=mode,
                db_size=size,
                avg_ms=sum(times) / len(times) if times else 0.0,
                p50_ms=_percentile(times, 0.5),
                p95_ms=_percentile(times, 0.95),
                build_ms=build_ms,
                trie_nodes=stats.total_trie_nodes,
            )
            results.append(result)
            by_mode[MODE_ALIASES[mode]] = result
            digests[mode] = digest
            if progress:
                progress(
                    f"mode={mode} db_size={size}: avg={result.avg_ms:.3f}ms "
                    f"nodes={result.trie_nodes} notifications={digest.count}"
                )
        first_mode = modes[0]
        for mode in modes[1:]:
            if digests[mode] != digests[first_mode]:
                raise OracleMismatch(
                    f"db_size={size}: mode {mode} produced "
                    f"{digests[mode].count} notifications vs "
                    f"{digests[first_mode].count} for {first_mode}"
                )
        report.extend(_ordering_report(by_mode, size))
    return results, report


def _ordering_report(by_mode: dict[str, BenchResult], size: int) -> list[str]:
    """Soft check: metrics+reorg <= metrics <= deterministic average publish
    time, each with a margin; violations are warnings, never failures."""
    chain = [m for m in ("metrics+reorg", "metrics", "deterministic") if m in by_mode]
    lines = []
    for faster, slower in zip(chain, chain[1:]):
        a, b = by_mode[faster].avg_ms, by_mode[slower].avg_ms
        if a <= b * (1.0 - ORDERING_MARGIN):
            lines.append(
                f"PASS db_size={size}: avg({faster})={a:.3f}ms <= "
                f"avg({slower})={b:.3f}ms with >={ORDERING_MARGIN:.0%} margin"
            )
        else:
            lines.append(
                f"WARN db_size={size}: avg({faster})={a:.3f}ms vs "
                f"avg({slower})={b:.3f}ms misses the {ORDERING_MARGIN:.0%} margin"
            )
    return lines


def write_csv(results: list[BenchResult], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in results:
            fh.write(r.csv_row() + "\n")
