"""Full-text filter expressions: AST, disjunctive normal form, clause evaluation."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from .rdf import TokenStream

DEFAULT_CLAUSE_CAP = 64

_TOKEN_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


def _check_word(word: str) -> None:
    if not _TOKEN_WORD_RE.fullmatch(word) or word != word.lower():
        raise ValueError(f"not a tokenized word: {word!r}")


class FullTextError(ValueError):
    pass


class PurelyNegativeClause(FullTextError):
    pass


class ClauseExplosion(FullTextError):
    pass


@dataclass(frozen=True, slots=True)
class Keyword:
    word: str

    def __post_init__(self):
        _check_word(self.word)


@dataclass(frozen=True, slots=True)
class Phrase:
    words: tuple[str, ...]

    def __post_init__(self):
        if len(self.words) < 2:
            raise ValueError("a phrase needs at least two words")
        for w in self.words:
            _check_word(w)


@dataclass(frozen=True, slots=True)
class Near:
    words: tuple[str, ...]
    max_gap: int

    def __post_init__(self):
        if len(self.words) < 2:
            raise ValueError("proximity needs at least two words")
        if self.max_gap < 1:
            raise ValueError("max_gap must be >= 1")
        for w in self.words:
            _check_word(w)


Atom = Union[Keyword, Phrase, Near]


@dataclass(frozen=True, slots=True)
class FtAnd:
    children: tuple["FullTextExpr", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("ftand needs at least two operands")


@dataclass(frozen=True, slots=True)
class FtOr:
    children: tuple["FullTextExpr", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("ftor needs at least two operands")


@dataclass(frozen=True, slots=True)
class FtNot:
    child: Atom

    def __post_init__(self):
        # Negation applies to keyword/phrase/near atoms only, never to
        # nested boolean expressions.
        if not isinstance(self.child, (Keyword, Phrase, Near)):
            raise ValueError("ftnot applies only to keyword, phrase, or near atoms")


FullTextExpr = Union[Keyword, Phrase, Near, FtAnd, FtOr, FtNot]


def atom_words(atom: Atom) -> tuple[str, ...]:
    return (atom.word,) if isinstance(atom, Keyword) else atom.words


def _atom_sort_key(atom: Atom):
    if isinstance(atom, Keyword):
        return (0, (atom.word,), 0)
    if isinstance(atom, Phrase):
        return (1, atom.words, 0)
    return (2, atom.words, atom.max_gap)


@dataclass(frozen=True, slots=True)
class ConjunctiveClause:
    """One conjunct of a DNF filter.

    positive_words is the union of the words of all positive atoms, and is
    what the full-text index stores; positional_atoms (phrases/proximities)
    and negative_atoms are re-verified against the token stream after index
    lookup.
    """

    positive_words: frozenset[str]
    positional_atoms: tuple[Atom, ...] = ()
    negative_atoms: tuple[Atom, ...] = ()
    # precomputed because it is read on every index hit of the clause
    has_residual_atoms: bool = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if not self.positive_words:
            raise PurelyNegativeClause("clause has no positive atom")
        for atom in self.positional_atoms:
            if not set(atom_words(atom)) <= self.positive_words:
                raise ValueError("positional atom words must be positive words")
        object.__setattr__(
            self,
            "has_residual_atoms",
            bool(self.positional_atoms or self.negative_atoms),
        )


def _make_clause(pos_atoms: frozenset[Atom], neg_atoms: frozenset[Atom]) -> ConjunctiveClause:
    if not pos_atoms:
        raise PurelyNegativeClause(f"purely negative conjunct: {sorted(map(str, neg_atoms))}")
    words: set[str] = set()
    positional: list[Atom] = []
    for atom in pos_atoms:
        words.update(atom_words(atom))
        if not isinstance(atom, Keyword):
            positional.append(atom)
    return ConjunctiveClause(
        frozenset(words),
        tuple(sorted(positional, key=_atom_sort_key)),
        tuple(sorted(neg_atoms, key=_atom_sort_key)),
    )


_LiteralSets = tuple[frozenset, frozenset]  # (positive atoms, negative atoms)


def _dedup_capped(clauses: list[_LiteralSets], cap: int) -> list[_LiteralSets]:
    out: list[_LiteralSets] = []
    seen: set[_LiteralSets] = set()
    for c in clauses:
        if c not in seen:
            seen.add(c)
            out.append(c)
            if len(out) > cap:
                raise ClauseExplosion(f"normal form exceeds {cap} clauses")
    return out


def _distribute(expr: FullTextExpr, cap: int) -> list[_LiteralSets]:
    if isinstance(expr, (Keyword, Phrase, Near)):
        return [(frozenset((expr,)), frozenset())]
    if isinstance(expr, FtNot):
        return [(frozenset(), frozenset((expr.child,)))]
    if isinstance(expr, FtOr):
        acc: list[_LiteralSets] = []
        for child in expr.children:
            acc.extend(_distribute(child, cap))
        return _dedup_capped(acc, cap)
    if isinstance(expr, FtAnd):
        acc = [(frozenset(), frozenset())]
        for child in expr.children:
            branches = _distribute(child, cap)
            acc = [(p | bp, n | bn) for p, n in acc for bp, bn in branches]
            acc = _dedup_capped(acc, cap)
        return acc
    raise TypeError(f"not a full-text expression: {expr!r}")


def to_dnf(expr: FullTextExpr, cap: int = DEFAULT_CLAUSE_CAP) -> list[ConjunctiveClause]:
    """Normalize to a disjunction of conjunctive clauses.

    ftand distributes over ftor; duplicate clauses merge (first occurrence
    kept).  Raises PurelyNegativeClause if any conjunct lacks a positive
    atom and ClauseExplosion if the clause count would exceed `cap`.
    """
    clauses = [_make_clause(p, n) for p, n in _distribute(expr, cap)]
    out: list[ConjunctiveClause] = []
    seen: set[ConjunctiveClause] = set()
    for c in clauses:
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out


def _phrase_holds(words: tuple[str, ...], ts: TokenStream) -> bool:
    stream = ts.words
    n = len(stream)
    span = len(words)
    for start in ts.positions(words[0]):
        if start + span <= n and all(stream[start + i] == words[i] for i in range(1, span)):
            return True
    return False


def _near_holds(words: tuple[str, ...], max_gap: int, ts: TokenStream) -> bool:
    """One occurrence per listed word, distinct positions, every gap between
    position-adjacent chosen occurrences at most max_gap; order is free."""
    need: dict[str, int] = {}
    for w in words:
        need[w] = need.get(w, 0) + 1
    for w in need:
        if len(ts.positions(w)) < need[w]:
            return False
    events = [(i, w) for i, w in enumerate(ts.words) if w in need]
    total = len(words)
    failed: set[tuple[int, tuple[tuple[str, int], ...]]] = set()

    def extend(last_idx: int, remaining: dict[str, int], left: int) -> bool:
        if left == 0:
            return True
        state = (last_idx, tuple(sorted(remaining.items())))
        if state in failed:
            return False
        limit = events[last_idx][0] + max_gap
        for idx in range(last_idx + 1, len(events)):
            pos, w = events[idx]
            if pos > limit:
                break
            if remaining.get(w, 0) > 0:
                remaining[w] -= 1
                if extend(idx, remaining, left - 1):
                    remaining[w] += 1
                    return True
                remaining[w] += 1
        failed.add(state)
        return False

    for start in range(len(events)):
        _, w = events[start]
        if need.get(w, 0) > 0:
            need[w] -= 1
            if extend(start, need, total - 1):
                return True
            need[w] += 1
    return False


def eval_atom(atom: Atom, ts: TokenStream) -> bool:
    if isinstance(atom, Keyword):
        return atom.word in ts.word_set
    if isinstance(atom, Phrase):
        return _phrase_holds(atom.words, ts)
    return _near_holds(atom.words, atom.max_gap, ts)


def eval_clause(clause: ConjunctiveClause, ts: TokenStream) -> bool:
    if not clause.positive_words <= ts.word_set:
        return False
    for atom in clause.positional_atoms:
        if not eval_atom(atom, ts):
            return False
    for atom in clause.negative_atoms:
        if eval_atom(atom, ts):
            return False
    return True
