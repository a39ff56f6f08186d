"""Two-level hash index over triple patterns, plus join-chain evaluation.

Level 1 is keyed by the constant predicate (or a wildcard), level 2 by the
(subject, object) constants (each possibly wildcard), so a lookup for one
triple probes at most eight keys.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .query import Subscription, TriplePattern, Var
from .rdf import Iri, Literal, Term, Triple

ClauseRef = tuple[int, int]  # (filter index, clause index) within one subscription
BindingRow = dict[str, Term]


class DuplicateSubscription(ValueError):
    pass


class UnknownSubscription(KeyError):
    pass


def term_key(term: Term):
    """Flat hashable key; literals compare by (lexical, datatype) exactly."""
    if isinstance(term, Iri):
        return ("i", term.value)
    return ("l", term.lexical, term.datatype.value if term.datatype else None)


def pattern_key(pattern: TriplePattern):
    """(level1, (level2-subject, level2-object)); None marks a variable slot."""
    l1 = None if isinstance(pattern.predicate, Var) else term_key(pattern.predicate)
    l2s = None if isinstance(pattern.subject, Var) else term_key(pattern.subject)
    l2o = None if isinstance(pattern.object, Var) else term_key(pattern.object)
    return (l1, (l2s, l2o))


def candidate_keys(t: Triple):
    """The eight keys a triple can be indexed under."""
    p = term_key(t.predicate)
    s = term_key(t.subject)
    o = term_key(t.object)
    return (
        (p, (s, o)),
        (p, (s, None)),
        (p, (None, o)),
        (p, (None, None)),
        (None, (s, o)),
        (None, (s, None)),
        (None, (None, o)),
        (None, (None, None)),
    )


@dataclass(frozen=True, slots=True)
class PatternEntry:
    sub_id: str
    pattern_index: int
    pattern: TriplePattern
    # (filter_index, clause indexes) for every filter whose variable is this
    # pattern's object.
    hosted_filters: tuple[tuple[int, tuple[int, ...]], ...]


@dataclass(slots=True)
class _SubState:
    sub: Subscription
    keys: tuple
    full_mask: int


def unify(pattern: TriplePattern, t: Triple, bindings: BindingRow) -> BindingRow | None:
    """Extend bindings so pattern matches t, or None if impossible."""
    out = dict(bindings)
    for pterm, tterm in ((pattern.subject, t.subject), (pattern.predicate, t.predicate), (pattern.object, t.object)):
        if isinstance(pterm, Var):
            bound = out.get(pterm.name)
            if bound is None:
                out[pterm.name] = tterm
            elif bound != tterm:
                return None
        elif pterm != tterm:
            return None
    return out


class SemanticIndex:
    def __init__(self):
        self._table: dict = {}  # level1 -> level2 -> list[PatternEntry]
        self._subs: dict[str, _SubState] = {}
        self._complete: set[str] = set()
        self._indexed: dict[str, set[int]] = {}
        self._shortlist_cache: dict[frozenset, tuple[str, ...]] = {}
        self._split_cache: dict[frozenset, tuple[frozenset[str], tuple[str, ...]]] = {}
        self._cache_cap = 4096

    # -- mutation ------------------------------------------------------------

    def _entry_for(self, sub: Subscription, i: int) -> PatternEntry:
        pattern = sub.patterns[i]
        hosted = []
        if isinstance(pattern.object, Var):
            for f_idx, f in enumerate(sub.filters):
                if f.variable == pattern.object:
                    hosted.append((f_idx, tuple(range(len(f.clauses)))))
        return PatternEntry(sub.sub_id, i, pattern, tuple(hosted))

    def index_pattern(self, sub: Subscription, i: int) -> None:
        if sub.sub_id in self._complete:
            raise DuplicateSubscription(sub.sub_id)
        done = self._indexed.setdefault(sub.sub_id, set())
        if i in done:
            return
        if sub.sub_id not in self._subs:
            self._subs[sub.sub_id] = _SubState(
                sub,
                tuple(pattern_key(p) for p in sub.patterns),
                (1 << len(sub.patterns)) - 1,
            )
        l1, l2 = pattern_key(sub.patterns[i])
        self._table.setdefault(l1, {}).setdefault(l2, []).append(self._entry_for(sub, i))
        done.add(i)
        self._shortlist_cache.clear()
        self._split_cache.clear()
        if len(done) == len(sub.patterns):
            self._complete.add(sub.sub_id)
            # The under-construction tracker is dead weight once complete
            # (re-registration is rejected above), so free it.
            del self._indexed[sub.sub_id]

    def index_subscription(self, sub: Subscription) -> None:
        if sub.sub_id in self._complete:
            raise DuplicateSubscription(sub.sub_id)
        for i in range(len(sub.patterns)):
            self.index_pattern(sub, i)

    def remove_subscription(self, sub_id: str) -> None:
        state = self._subs.pop(sub_id, None)
        if state is None:
            raise UnknownSubscription(sub_id)
        self._complete.discard(sub_id)
        self._indexed.pop(sub_id, None)
        for l1, l2 in set(state.keys):
            level2 = self._table.get(l1)
            if level2 is None:
                continue
            bucket = level2.get(l2)
            if bucket is None:
                continue
            bucket[:] = [e for e in bucket if e.sub_id != sub_id]
            if not bucket:
                del level2[l2]
                if not level2:
                    del self._table[l1]
        self._shortlist_cache.clear()
        self._split_cache.clear()

    # -- lookup ----------------------------------------------------------------

    def lookup_candidates(self, t: Triple) -> list[PatternEntry]:
        out: list[PatternEntry] = []
        for l1, l2 in candidate_keys(t):
            level2 = self._table.get(l1)
            if level2 is not None:
                bucket = level2.get(l2)
                if bucket is not None:
                    out.extend(bucket)
        return out

    def signature(self, triples: Iterable[Triple]) -> frozenset:
        """The set of non-empty index keys the document's triples probe."""
        hit = set()
        for t in triples:
            for key in candidate_keys(t):
                if key not in hit:
                    level2 = self._table.get(key[0])
                    if level2 is not None and key[1] in level2:
                        hit.add(key)
        return frozenset(hit)

    def shortlist(self, signature: frozenset) -> tuple[str, ...]:
        """Ids of subscriptions whose every pattern key occurs in signature.

        A pattern key is probed by a triple exactly when the pattern's
        constants match that triple, so this is precisely the set of
        subscriptions for which every pattern has at least one matching
        triple in the document.
        """
        cached = self._shortlist_cache.get(signature)
        if cached is not None:
            return cached
        masks: dict[str, int] = {}
        for l1, l2 in signature:
            for entry in self._table[l1][l2]:
                masks[entry.sub_id] = masks.get(entry.sub_id, 0) | (1 << entry.pattern_index)
        subs = self._subs
        result = tuple(
            sid for sid, m in masks.items() if sid in subs and m == subs[sid].full_mask
        )
        if len(self._shortlist_cache) >= self._cache_cap:
            self._shortlist_cache.clear()
        self._shortlist_cache[signature] = result
        return result

    def shortlist_split(self, signature: frozenset) -> tuple[frozenset, tuple[str, ...]]:
        """shortlist() partitioned into (ids with filters, ids without).

        The first half comes back as a frozenset so the caller can intersect
        it with the subscription ids the full-text phase actually hit; only
        filterless subscriptions must be considered unconditionally.
        """
        cached = self._split_cache.get(signature)
        if cached is not None:
            return cached
        subs = self._subs
        filtered = []
        filterless = []
        for sid in self.shortlist(signature):
            (filtered if subs[sid].sub.filters else filterless).append(sid)
        split = (frozenset(filtered), tuple(filterless))
        if len(self._split_cache) >= self._cache_cap:
            self._split_cache.clear()
        self._split_cache[signature] = split
        return split

    def subscription(self, sub_id: str) -> Subscription:
        return self._subs[sub_id].sub

    def __contains__(self, sub_id: str) -> bool:
        return sub_id in self._subs

    def __len__(self) -> int:
        return len(self._subs)


def evaluate_joins(
    sub: Subscription,
    matches: Mapping[int, list[tuple[Triple, frozenset[ClauseRef]]]],
    filter_refsets: Sequence[frozenset[ClauseRef]] | None = None,
) -> list[BindingRow]:
    """Left-deep join over the subscription's patterns, in pattern order.

    matches maps pattern index -> (triple, satisfied clause refs) pairs.  A
    row survives when its shared variables bind consistently and every
    filter has at least one satisfied clause among the refs collected along
    the row's chain.  filter_refsets (one refset per filter) may be passed in
    precomputed; otherwise it is derived from the subscription.
    """
    rows: list[tuple[BindingRow, frozenset[ClauseRef]]] = [({}, frozenset())]
    for i, pattern in enumerate(sub.patterns):
        pairs = matches.get(i)
        if not pairs:
            return []
        extended: list[tuple[BindingRow, frozenset[ClauseRef]]] = []
        for bindings, refs in rows:
            for t, t_refs in pairs:
                nb = unify(pattern, t, bindings)
                if nb is not None:
                    extended.append((nb, refs | t_refs))
        if not extended:
            return []
        rows = extended
    out: list[BindingRow] = []
    if filter_refsets is None:
        filter_refsets = [
            frozenset((f_idx, c) for c in range(len(f.clauses)))
            for f_idx, f in enumerate(sub.filters)
        ]
    for bindings, refs in rows:
        if all(refs & needed for needed in filter_refsets):
            out.append(bindings)
    return out
