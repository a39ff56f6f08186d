"""Keyword-set tries shared across subscriptions, one forest per predicate.

A clause is registered at the node whose root-to-node word set equals the
clause's positive words, so matching a token stream is a forest walk that
only descends into nodes whose word occurs in the stream.
"""
from __future__ import annotations

from typing import Iterator

from .ftexpr import ConjunctiveClause, eval_clause
from .rdf import TokenStream

ClauseKey = tuple[str, int, int]  # (subscription id, filter index, clause index)


class UnknownClause(KeyError):
    pass


class TrieNode:
    __slots__ = (
        "word",
        "parent",
        "children",
        "plain_ending",
        "residual_ending",
        "population",
        "depth",
        "hits",
    )

    def __init__(self, word: str, parent: "TrieNode | None"):
        self.word = word
        self.parent = parent
        self.children: dict[str, TrieNode] | None = None
        # The clauses ending here, partitioned for the matching hot path:
        # keys whose clause is a pure keyword conjunction (emitted wholesale
        # on a path hit) vs. keys whose clause still has positional or
        # negative atoms to verify (kept with their clause to skip a lookup
        # per hit).
        self.plain_ending: set[ClauseKey] | None = None
        self.residual_ending: dict[ClauseKey, ConjunctiveClause] | None = None
        self.population = 0  # clauses registered in this subtree
        self.depth = 1 if parent is None else parent.depth + 1
        self.hits = 0

    def path(self) -> tuple[str, ...]:
        words = []
        node: TrieNode | None = self
        while node is not None:
            words.append(node.word)
            node = node.parent
        return tuple(reversed(words))

    def path_word_set(self) -> frozenset[str]:
        return frozenset(self.path())

    def ending_count(self) -> int:
        return (len(self.plain_ending) if self.plain_ending else 0) + (
            len(self.residual_ending) if self.residual_ending else 0
        )

    def ending_keys(self) -> set[ClauseKey]:
        out = set(self.plain_ending or ())
        if self.residual_ending:
            out.update(self.residual_ending)
        return out


class TrieForest:
    def __init__(self):
        self.roots: dict[str, TrieNode] = {}
        # word -> depth -> nodes labeled with that word at that depth; the
        # depth buckets let candidate probes skip nodes that are already too
        # deep to have a path inside the clause's word set.
        self.keyword_table: dict[str, dict[int, list[TrieNode]]] = {}
        self._clauses: dict[ClauseKey, ConjunctiveClause] = {}
        self._terminals: dict[ClauseKey, TrieNode] = {}
        self.node_count = 0

    # -- bookkeeping -----------------------------------------------------------

    def clause_count(self) -> int:
        return len(self._clauses)

    def clauses(self) -> dict[ClauseKey, ConjunctiveClause]:
        return self._clauses

    def terminal(self, key: ClauseKey) -> TrieNode:
        return self._terminals[key]

    def _add_node(self, word: str, parent: TrieNode | None) -> TrieNode:
        node = TrieNode(word, parent)
        if parent is None:
            assert word not in self.roots
            self.roots[word] = node
        else:
            if parent.children is None:
                parent.children = {}
            assert word not in parent.children
            parent.children[word] = node
        self.keyword_table.setdefault(word, {}).setdefault(node.depth, []).append(node)
        self.node_count += 1
        return node

    def _drop_node(self, node: TrieNode) -> None:
        if node.parent is None:
            del self.roots[node.word]
        else:
            del node.parent.children[node.word]  # type: ignore[index]
            if not node.parent.children:
                node.parent.children = None
        by_depth = self.keyword_table[node.word]
        by_depth[node.depth].remove(node)
        if not by_depth[node.depth]:
            del by_depth[node.depth]
            if not by_depth:
                del self.keyword_table[node.word]
        self.node_count -= 1

    def _register(self, node: TrieNode, clause: ConjunctiveClause, key: ClauseKey) -> None:
        if clause.has_residual_atoms:
            if node.residual_ending is None:
                node.residual_ending = {}
            node.residual_ending[key] = clause
        else:
            if node.plain_ending is None:
                node.plain_ending = set()
            node.plain_ending.add(key)
        self._clauses[key] = clause
        self._terminals[key] = node
        walk: TrieNode | None = node
        while walk is not None:
            walk.population += 1
            walk = walk.parent

    def _append_chain(self, node: TrieNode | None, words: list[str]) -> TrieNode:
        for w in words:
            node = self._add_node(w, node)
        assert node is not None
        return node

    # -- insertion ---------------------------------------------------------------

    def insert_clause_deterministic(self, clause: ConjunctiveClause, key: ClauseKey) -> tuple[str, ...]:
        """Place the clause along the path of its lexicographically sorted
        words, creating nodes as needed; independent of forest contents."""
        if key in self._clauses:
            raise ValueError(f"clause key already registered: {key}")
        seq = sorted(clause.positive_words)
        node = self.roots.get(seq[0])
        if node is None:
            node = self._add_node(seq[0], None)
        for w in seq[1:]:
            child = node.children.get(w) if node.children else None
            node = child if child is not None else self._add_node(w, node)
        self._register(node, clause, key)
        return node.path()

    def _candidates(self, clause_words: frozenset[str]):
        max_depth = len(clause_words)
        for w in clause_words:
            by_depth = self.keyword_table.get(w)
            if not by_depth:
                continue
            for depth, nodes in by_depth.items():
                if depth > max_depth:
                    continue
                for node in nodes:
                    walk = node.parent
                    while walk is not None and walk.word in clause_words:
                        walk = walk.parent
                    if walk is None:
                        yield node

    def insert_clause_bestfit(self, clause: ConjunctiveClause, key: ClauseKey) -> tuple[str, ...]:
        """Place the clause under the candidate node sharing the most words.

        Candidates are nodes whose path words are a subset of the clause's
        positive words.  Score is (overlap, depth, subtree population), ties
        broken toward the lexicographically smallest residual chain, then
        the smallest path; remaining words extend the winner as a chain in
        lexicographic order.  A clause sharing nothing starts a new root.
        """
        if key in self._clauses:
            raise ValueError(f"clause key already registered: {key}")
        cw = clause.positive_words
        best = None
        best_rank = None
        for node in self._candidates(cw):
            overlap = node.depth  # path words are inside cw, so overlap == depth
            rank = (-overlap, -node.depth, -node.population)
            if best is None or rank < best_rank or (
                rank == best_rank
                and (sorted(cw - best.path_word_set()), best.path())
                > (sorted(cw - node.path_word_set()), node.path())
            ):
                best = node
                best_rank = rank
        if best is None:
            node = self._append_chain(None, sorted(cw))
        else:
            node = self._append_chain(best, sorted(cw - best.path_word_set()))
        self._register(node, clause, key)
        return node.path()

    # -- matching -------------------------------------------------------------

    def match_tokens(self, ts: TokenStream) -> set[ClauseKey]:
        """Keys of clauses fully satisfied by the stream: forest walk over
        nodes labeled with stream words, then positional/negative atoms of
        collected clauses verified directly."""
        present = ts.word_set
        roots = self.roots
        stack = [roots[w] for w in roots.keys() & present]
        out: set[ClauseKey] = set()
        out_add = out.add
        out_update = out.update
        pop = stack.pop
        push = stack.append
        while stack:
            node = pop()
            node.hits += 1
            plain = node.plain_ending
            if plain is not None:
                out_update(plain)
            residual = node.residual_ending
            if residual is not None:
                for key, clause in residual.items():
                    if eval_clause(clause, ts):
                        out_add(key)
            children = node.children
            if children is not None:
                if len(children) > 6:
                    for w in children.keys() & present:
                        push(children[w])
                else:
                    for w, child in children.items():
                        if w in present:
                            push(child)
        return out

    # -- removal ---------------------------------------------------------------

    def remove_clause(self, key: ClauseKey) -> None:
        node = self._terminals.pop(key, None)
        if node is None:
            raise UnknownClause(key)
        clause = self._clauses.pop(key)
        if clause.has_residual_atoms:
            node.residual_ending.pop(key, None)  # type: ignore[union-attr]
            if not node.residual_ending:
                node.residual_ending = None
        else:
            node.plain_ending.discard(key)  # type: ignore[union-attr]
            if not node.plain_ending:
                node.plain_ending = None
        walk: TrieNode | None = node
        while walk is not None:
            walk.population -= 1
            walk = walk.parent
        while node is not None and node.population == 0:
            assert not node.children
            parent = node.parent
            self._drop_node(node)
            node = parent

    # -- auditing and serialization ---------------------------------------------

    def _iter_nodes(self) -> Iterator[TrieNode]:
        for word in sorted(self.roots):
            stack = [self.roots[word]]
            while stack:
                node = stack.pop()
                yield node
                if node.children:
                    for w in sorted(node.children, reverse=True):
                        stack.append(node.children[w])

    def audit(self) -> list[str]:
        """Check every structural invariant; returns violations (empty = healthy)."""
        problems: list[str] = []
        seen_terminal_keys: set[ClauseKey] = set()
        observed: dict[str, dict[int, set[int]]] = {}
        count = 0
        for node in self._iter_nodes():
            count += 1
            path = node.path()
            if len(set(path)) != len(path):
                problems.append(f"duplicate word on path {path}")
            if node.depth != len(path):
                problems.append(f"depth {node.depth} != path length at {path}")
            observed.setdefault(node.word, {}).setdefault(node.depth, set()).add(id(node))
            child_pop = sum(c.population for c in (node.children or {}).values())
            own = node.ending_count()
            if node.population != child_pop + own:
                problems.append(f"population {node.population} != {child_pop}+{own} at {path}")
            if node.population == 0:
                problems.append(f"empty-subtree node not pruned at {path}")
            for w, child in (node.children or {}).items():
                if child.word != w or child.parent is not node:
                    problems.append(f"broken child link {w} at {path}")
            for key in node.ending_keys():
                seen_terminal_keys.add(key)
                clause = self._clauses.get(key)
                if clause is None:
                    problems.append(f"unregistered clause {key} at {path}")
                elif clause.positive_words != frozenset(path):
                    problems.append(f"clause {key} words {sorted(clause.positive_words)} != path {path}")
                if self._terminals.get(key) is not node:
                    problems.append(f"terminal map does not point at {path} for {key}")
            for key in node.plain_ending or ():
                clause = self._clauses.get(key)
                if clause is not None and clause.has_residual_atoms:
                    problems.append(f"keyword-only partition holds residual clause {key} at {path}")
            for key, clause in (node.residual_ending or {}).items():
                if not clause.has_residual_atoms:
                    problems.append(f"residual partition holds keyword-only clause {key} at {path}")
                if self._clauses.get(key) is not clause:
                    problems.append(f"residual partition clause diverges from registry for {key} at {path}")
        table: dict[str, dict[int, set[int]]] = {}
        for word, by_depth in self.keyword_table.items():
            for depth, nodes in by_depth.items():
                table.setdefault(word, {}).setdefault(depth, set()).update(map(id, nodes))
                for n in nodes:
                    if n.word != word or n.depth != depth:
                        problems.append(f"keyword table misfiles node {n.path()}")
        if table != observed:
            problems.append("keyword table is not the exact inverted node-label map")
        if seen_terminal_keys != set(self._terminals):
            problems.append("terminal keys diverge from clauses ending at nodes")
        if set(self._clauses) != set(self._terminals):
            problems.append("clause registry diverges from terminal map")
        if count != self.node_count:
            problems.append(f"node_count {self.node_count} != walked {count}")
        return problems

    def canonical_lines(self) -> list[str]:
        """One line per node in depth-first order with sorted siblings:
        depth, word, and the number of clauses ending at the node."""
        return [
            f"{node.depth}\t{node.word}\t{node.ending_count()}"
            for node in self._iter_nodes()
        ]

    def canonical_serialization(self) -> str:
        return "\n".join(self.canonical_lines())


class PropertyTable:
    """Forest per constant predicate; a predicate is present only while at
    least one live clause is indexed under it."""

    def __init__(self):
        self._forests: dict[str, TrieForest] = {}

    def forest(self, predicate_iri: str, create: bool = False) -> TrieForest | None:
        forest = self._forests.get(predicate_iri)
        if forest is None and create:
            forest = TrieForest()
            self._forests[predicate_iri] = forest
        return forest

    def drop_if_empty(self, predicate_iri: str) -> None:
        forest = self._forests.get(predicate_iri)
        if forest is not None and forest.clause_count() == 0:
            del self._forests[predicate_iri]

    def __contains__(self, predicate_iri: str) -> bool:
        return predicate_iri in self._forests

    def __len__(self) -> int:
        return len(self._forests)

    def items(self):
        return self._forests.items()

    def node_counts(self) -> dict[str, int]:
        return {p: f.node_count for p, f in self._forests.items()}

    def total_nodes(self) -> int:
        return sum(f.node_count for f in self._forests.values())

    def total_clauses(self) -> int:
        return sum(f.clause_count() for f in self._forests.values())
