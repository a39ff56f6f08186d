"""Statistics-guided re-placement of recently indexed clauses.

Clauses inserted since the last reorganization are removed and re-inserted
best-fit in descending score order, so frequently shared word sets get
placed first and attract the rest; match results are unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

from .ftexpr import ConjunctiveClause
from .trie import ClauseKey, TrieForest

ScoreVariant = Literal["freq", "hits"]


@dataclass(frozen=True)
class ReorgPolicy:
    mode: Literal["every_k", "explicit"] = "every_k"
    every_k: int = 10000

    def __post_init__(self):
        if self.mode == "every_k" and self.every_k < 1:
            raise ValueError("every_k must be >= 1")


def maybe_trigger(policy: ReorgPolicy, insertions_since_last: int) -> bool:
    return policy.mode == "every_k" and insertions_since_last >= policy.every_k


class InsertionLog:
    """Clauses inserted into one forest since its last reorganization, in
    insertion order; entries leave the log when the clause is removed."""

    def __init__(self):
        self._entries: dict[ClauseKey, ConjunctiveClause] = {}

    def record(self, key: ClauseKey, clause: ConjunctiveClause) -> None:
        self._entries[key] = clause

    def discard(self, key: ClauseKey) -> None:
        self._entries.pop(key, None)

    def clear(self) -> None:
        self._entries.clear()

    def items(self) -> list[tuple[ClauseKey, ConjunctiveClause]]:
        return list(self._entries.items())

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: ClauseKey) -> bool:
        return key in self._entries


@dataclass
class WordStats:
    clause_freq: dict[str, int] = field(default_factory=dict)
    node_count: dict[str, int] = field(default_factory=dict)
    probe_hits: dict[str, int] = field(default_factory=dict)


def collect_stats(forest: TrieForest) -> WordStats:
    """Snapshot word statistics over the forest's live clauses and nodes."""
    stats = WordStats()
    freq = stats.clause_freq
    for clause in forest.clauses().values():
        for w in clause.positive_words:
            freq[w] = freq.get(w, 0) + 1
    for word, by_depth in forest.keyword_table.items():
        nodes = [n for ns in by_depth.values() for n in ns]
        stats.node_count[word] = len(nodes)
        stats.probe_hits[word] = sum(n.hits for n in nodes)
    return stats


def score_clause(clause: ConjunctiveClause, stats: WordStats, variant: ScoreVariant = "freq") -> int:
    """Sharing potential of a clause: the sum over its positive words of how
    often each word occurs across clauses (or of accumulated probe hits)."""
    table = stats.clause_freq if variant == "freq" else stats.probe_hits
    return sum(table.get(w, 0) for w in clause.positive_words)


def _replay_order(entries, stats: WordStats, variant: ScoreVariant):
    def sort_key(item):
        key, clause = item
        return (
            -score_clause(clause, stats, variant),
            -len(clause.positive_words),
            tuple(sorted(clause.positive_words)),
            key,
        )

    return sorted(entries, key=sort_key)


def reorganize(
    forest: TrieForest,
    log: InsertionLog,
    stats: WordStats | None = None,
    variant: ScoreVariant = "freq",
) -> None:
    """Re-place all logged clauses best-fit in descending score order.

    Scores come from a stats snapshot taken before any removal (or a caller
    supplied one).  Restores the empty log afterwards; the registered clause
    set, and therefore every match result, is unchanged.
    """
    entries = log.items()
    if not entries:
        return
    if stats is None:
        stats = collect_stats(forest)
    nodes_before = forest.node_count
    replay = _replay_order(entries, stats, variant)
    for key, _ in entries:
        forest.remove_clause(key)
    for key, clause in replay:
        forest.insert_clause_bestfit(clause, key)
    log.clear()
    budget = sum(len(c.positive_words) for _, c in entries)
    if forest.node_count > nodes_before + budget:
        raise AssertionError(
            f"reorganization grew the forest past its bound: "
            f"{forest.node_count} > {nodes_before} + {budget}"
        )
