"""The publish/subscribe engine: indexes subscriptions, matches documents,
emits notifications.

Single-writer discipline: subscribe/unsubscribe/reorganize must not run
concurrently with each other or with publish; within one thread every
operation leaves the indexes consistent before returning.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass
from operator import itemgetter
from typing import Literal as TypingLiteral

from .ftexpr import ConjunctiveClause
from .query import (
    DEFAULT_NAMESPACE,
    Subscription,
    Var,
    parse_subscription,
)
from .rdf import Document, Iri, Literal, Term, Triple, format_term, tokenize
from .reorg import InsertionLog, ReorgPolicy, maybe_trigger, reorganize
from .semantic import (
    ClauseRef,
    DuplicateSubscription,
    SemanticIndex,
    UnknownSubscription,
    evaluate_joins,
)
from .trie import ClauseKey, PropertyTable, TrieForest

IndexMode = TypingLiteral["deterministic", "metrics", "metrics+reorg"]

MODE_ALIASES = {
    "det": "deterministic",
    "deterministic": "deterministic",
    "metrics": "metrics",
    "reorg": "metrics+reorg",
    "metrics+reorg": "metrics+reorg",
}


class IndexingConflict(ValueError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    index_mode: IndexMode = "metrics"
    reorg_policy: TypingLiteral["every_k", "explicit"] = "every_k"
    reorg_every: int = 10000
    reorg_score: TypingLiteral["freq", "hits"] = "freq"
    default_namespace: str = DEFAULT_NAMESPACE
    dnf_cap: int = 64


@dataclass(frozen=True)
class Notification:
    sub_id: str
    doc_id: str
    bindings: tuple[tuple[str, Term], ...]  # sorted by variable name

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "sub": self.sub_id,
                "doc": self.doc_id,
                "bindings": {name: format_term(term) for name, term in self.bindings},
            },
            ensure_ascii=False,
            sort_keys=False,
        )


@dataclass(frozen=True)
class EngineStats:
    subscriptions: int
    clauses: int
    predicates: int
    trie_nodes: dict[str, int]
    publish_count: int
    last_publish_ms: float
    total_publish_ms: float

    @property
    def total_trie_nodes(self) -> int:
        return sum(self.trie_nodes.values())


def _term_sort_key(term: Term):
    if isinstance(term, Iri):
        return ("i", term.value, "")
    return ("l", term.lexical, term.datatype.value if term.datatype else "")


_EMPTY_REFS: frozenset[ClauseRef] = frozenset()
_sid_of_key = itemgetter(0)


@dataclass(slots=True)
class _Compiled:
    # per pattern: (subject IRI value, predicate IRI value, object term);
    # None = variable slot.  Subjects/predicates are always IRIs, so their
    # raw strings compare cheaply and predicates can bucket the document.
    const_slots: tuple[tuple[str | None, str | None, Term | None], ...]
    # per pattern: every clause key of the filters hosted on the pattern
    hosted_keys: tuple[frozenset[ClauseKey], ...]
    # per pattern: per hosted filter whose host predicate is constant (so the
    # trie phase is guaranteed to have seen the literal), the clause keys of
    # which at least one must have matched the triple
    prune_keys: tuple[tuple[frozenset[ClauseKey], ...], ...]
    # per filter: its (filter, clause) refs for the final per-row check
    filter_refsets: tuple[frozenset[ClauseRef], ...]
    select_names: tuple[str, ...]


@dataclass(slots=True)
class _SubRecord:
    sub: Subscription
    compiled: _Compiled | None = None


def _placements(sub: Subscription) -> list[tuple[str, ClauseKey, ConjunctiveClause]]:
    """Where each clause of each filter is indexed: one placement per
    (hosting constant predicate, clause).  Deterministic for a given
    subscription, so it is recomputed at unsubscribe rather than stored."""
    placements: list[tuple[str, ClauseKey, ConjunctiveClause]] = []
    for f_idx, f in enumerate(sub.filters):
        host_preds = {
            p.predicate.value
            for p in sub.patterns
            if p.object == f.variable and isinstance(p.predicate, Iri)
        }
        if not host_preds:
            raise IndexingConflict(
                f"?{f.variable.name} is only the object of variable-predicate patterns; "
                "the filter cannot be indexed under a property"
            )
        for pred in sorted(host_preds):
            for c_idx, clause in enumerate(f.clauses):
                placements.append((pred, (sub.sub_id, f_idx, c_idx), clause))
    return placements


def _compile(sub: Subscription) -> _Compiled:
    sid = sub.sub_id
    refsets = [
        frozenset((f_idx, c) for c in range(len(f.clauses)))
        for f_idx, f in enumerate(sub.filters)
    ]
    keysets = [
        frozenset((sid, f_idx, c) for c in range(len(f.clauses)))
        for f_idx, f in enumerate(sub.filters)
    ]
    const_slots = []
    hosted_keys = []
    prune_keys = []
    for p in sub.patterns:
        const_slots.append(
            (
                p.subject.value if isinstance(p.subject, Iri) else None,
                p.predicate.value if isinstance(p.predicate, Iri) else None,
                None if isinstance(p.object, Var) else p.object,
            )
        )
        hosted = [
            f_idx
            for f_idx, f in enumerate(sub.filters)
            if isinstance(p.object, Var) and f.variable == p.object
        ]
        hosted_keys.append(
            frozenset().union(*(keysets[f] for f in hosted)) if hosted else frozenset()
        )
        if hosted and isinstance(p.predicate, Iri):
            prune_keys.append(tuple(keysets[f] for f in hosted))
        else:
            prune_keys.append(())
    return _Compiled(
        tuple(const_slots),
        tuple(hosted_keys),
        tuple(prune_keys),
        tuple(refsets),
        tuple(sorted({v.name for v in sub.select_vars})),
    )


class FilterEngine:
    def __init__(self, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        if self.config.index_mode not in ("deterministic", "metrics", "metrics+reorg"):
            raise ValueError(f"unknown index mode: {self.config.index_mode}")
        self._semantic = SemanticIndex()
        self._properties = PropertyTable()
        self._subs: dict[str, _SubRecord] = {}
        self._logs: dict[str, InsertionLog] = {}
        self._policy = ReorgPolicy(self.config.reorg_policy, self.config.reorg_every)
        self._insertions_since_reorg = 0
        self._publish_count = 0
        self._last_publish_ms = 0.0
        self._total_publish_ms = 0.0

    # -- subscription management -------------------------------------------------

    def subscribe(self, text: str) -> str:
        sub = parse_subscription(
            text,
            default_ns=self.config.default_namespace,
            dnf_cap=self.config.dnf_cap,
        )
        return self.subscribe_parsed(sub)

    def subscribe_parsed(self, sub: Subscription) -> str:
        """Index an already parsed subscription; all validation happens before
        any index is touched, so a failure leaves no partial state."""
        if sub.sub_id in self._subs:
            raise DuplicateSubscription(sub.sub_id)
        placements = _placements(sub)
        self._semantic.index_subscription(sub)
        deterministic = self.config.index_mode == "deterministic"
        log_inserts = self.config.index_mode == "metrics+reorg"
        for pred, key, clause in placements:
            forest = self._properties.forest(pred, create=True)
            if deterministic:
                forest.insert_clause_deterministic(clause, key)
            else:
                forest.insert_clause_bestfit(clause, key)
            if log_inserts:
                self._logs.setdefault(pred, InsertionLog()).record(key, clause)
                self._insertions_since_reorg += 1
        # Compiled matching state is built lazily on first candidacy; eager
        # compilation at this point would cost ~1 KiB per subscription that
        # never matches anything, which adds up at millions of subscriptions.
        self._subs[sub.sub_id] = _SubRecord(sub, None)
        if log_inserts and maybe_trigger(self._policy, self._insertions_since_reorg):
            self.reorganize_now()
        return sub.sub_id

    def unsubscribe(self, sub_id: str) -> None:
        record = self._subs.pop(sub_id, None)
        if record is None:
            raise UnknownSubscription(sub_id)
        self._semantic.remove_subscription(sub_id)
        for pred, key, _ in _placements(record.sub):
            forest = self._properties.forest(pred)
            if forest is not None:
                forest.remove_clause(key)
                self._properties.drop_if_empty(pred)
            log = self._logs.get(pred)
            if log is not None:
                log.discard(key)
                if not log:
                    del self._logs[pred]

    def subscription(self, sub_id: str) -> Subscription:
        return self._subs[sub_id].sub

    def subscription_ids(self) -> list[str]:
        return list(self._subs)

    # -- reorganization ------------------------------------------------------------

    def reorganize_now(self) -> None:
        """Re-place, per forest, every clause inserted since the last
        reorganization, in descending statistics score order."""
        for pred, log in list(self._logs.items()):
            forest = self._properties.forest(pred)
            if forest is not None and len(log):
                reorganize(forest, log, variant=self.config.reorg_score)
        self._insertions_since_reorg = 0

    # -- publishing -----------------------------------------------------------------

    def publish(self, doc: Document) -> list[Notification]:
        """Match one document against every live subscription.

        Pipeline: tokenize literal objects under indexed predicates and walk
        the tries; intersect the subscriptions those clause hits belong to
        with the ones whose every pattern has a matching triple (filterless
        subscriptions come straight from the latter shortlist); run the join
        chain; emit one notification per distinct projected row, ordered by
        subscription id then row content.
        """
        start = time.perf_counter()
        notifications = self._match(doc)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        self._publish_count += 1
        self._last_publish_ms = elapsed_ms
        self._total_publish_ms += elapsed_ms
        return notifications

    def _match(self, doc: Document) -> list[Notification]:
        triples = doc.triples
        # Full-text phase: per literal-object triple, the keys of every
        # clause its tokens satisfy, plus every subscription hit anywhere.
        matched_by_triple: dict[int, set[ClauseKey]] = {}
        hit_sids: set[str] = set()
        properties = self._properties
        for t_idx, t in enumerate(triples):
            if not isinstance(t.object, Literal):
                continue
            forest = properties.forest(t.predicate.value)
            if forest is None:
                continue
            matched = forest.match_tokens(tokenize(t.object))
            if matched:
                matched_by_triple[t_idx] = matched
                hit_sids.update(map(_sid_of_key, matched))

        semantic = self._semantic
        filtered_ids, filterless_ids = semantic.shortlist_split(
            semantic.signature(triples)
        )

        by_pred: dict[str, list[tuple[int, Triple]]] = {}
        for t_idx, t in enumerate(triples):
            by_pred.setdefault(t.predicate.value, []).append((t_idx, t))
        all_pairs = list(enumerate(triples))

        results: list[tuple[str, tuple, Notification]] = []
        subs_map = self._subs
        doc_id = doc.doc_id
        collect = self._collect_matches
        # Subscriptions with filters need at least one clause hit; the rest
        # are candidates on structure alone.
        for sid in list(hit_sids & filtered_ids) + list(filterless_ids):
            record = subs_map.get(sid)
            if record is None:
                continue
            compiled = record.compiled
            if compiled is None:
                compiled = record.compiled = _compile(record.sub)
            matches = collect(compiled, by_pred, all_pairs, matched_by_triple)
            if matches is None:
                continue
            rows = evaluate_joins(record.sub, matches, compiled.filter_refsets)
            if not rows:
                continue
            seen: set[tuple] = set()
            for row in rows:
                projected = tuple((name, row[name]) for name in compiled.select_names)
                if projected not in seen:
                    seen.add(projected)
                    sort_key = tuple((name, _term_sort_key(term)) for name, term in projected)
                    results.append((sid, sort_key, Notification(sid, doc_id, projected)))
        # Deterministic output order: subscription id, then row content.
        results.sort(key=lambda item: (item[0], item[1]))
        return [n for _, _, n in results]

    def _collect_matches(self, compiled, by_pred, all_pairs, matched_by_triple):
        matches: dict[int, list[tuple[Triple, frozenset[ClauseRef]]]] = {}
        for i, (s_value, p_value, o_const) in enumerate(compiled.const_slots):
            hosted = compiled.hosted_keys[i]
            prune = compiled.prune_keys[i]
            candidates = by_pred.get(p_value) if p_value is not None else all_pairs
            if not candidates:
                return None
            pairs = []
            for t_idx, t in candidates:
                if s_value is not None and s_value != t.subject.value:
                    continue
                if o_const is not None and o_const != t.object:
                    continue
                refs = _EMPTY_REFS
                if hosted:
                    mt = matched_by_triple.get(t_idx)
                    inter = (mt & hosted) if mt else None
                    if prune:
                        if not inter or any(inter.isdisjoint(needed) for needed in prune):
                            continue
                    if inter:
                        refs = frozenset((k[1], k[2]) for k in inter)
                pairs.append((t, refs))
            if not pairs:
                return None
            matches[i] = pairs
        return matches

    # -- introspection -----------------------------------------------------------------

    def stats(self) -> EngineStats:
        return EngineStats(
            subscriptions=len(self._subs),
            clauses=self._properties.total_clauses(),
            predicates=len(self._properties),
            trie_nodes=self._properties.node_counts(),
            publish_count=self._publish_count,
            last_publish_ms=self._last_publish_ms,
            total_publish_ms=self._total_publish_ms,
        )

    def audit(self) -> list[str]:
        """Structural audit of every forest; empty list means healthy."""
        problems = []
        for pred, forest in self._properties.items():
            for issue in forest.audit():
                problems.append(f"{pred}: {issue}")
        return problems

    def forests(self) -> list[tuple[str, TrieForest]]:
        return list(self._properties.items())
