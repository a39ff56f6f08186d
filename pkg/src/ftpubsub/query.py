"""Subscription queries: a SELECT/WHERE block of triple patterns plus
full-text filters of the form FILTER ftcontains(?var, expr)."""
from __future__ import annotations

import itertools
import re
import sys
from dataclasses import dataclass
from typing import Union

from .ftexpr import (
    ConjunctiveClause,
    DEFAULT_CLAUSE_CAP,
    FtAnd,
    FtNot,
    FtOr,
    FullTextExpr,
    Keyword,
    Near,
    Phrase,
    to_dnf,
)
from .rdf import Iri, Literal, RDF_NS, decode_escapes, intern_iri, tokenize_text

DEFAULT_NAMESPACE = "http://ftps.example/ns#"

PREFIXES = {"rdf": RDF_NS}


class QueryError(ValueError):
    pass


class QuerySyntaxError(QueryError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"offset {offset}: {message}")
        self.offset = offset


class UnboundSelectVar(QueryError):
    pass


class FilterVarNotObject(QueryError):
    pass


class DisconnectedPattern(QueryError):
    pass


_VAR_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


@dataclass(frozen=True, slots=True)
class Var:
    name: str  # without the leading '?'

    def __post_init__(self):
        if not _VAR_NAME_RE.fullmatch(self.name):
            raise ValueError(f"bad variable name: {self.name!r}")


PatternTerm = Union[Var, Iri, Literal]


@dataclass(frozen=True, slots=True)
class TriplePattern:
    subject: Var | Iri
    predicate: Var | Iri
    object: PatternTerm

    def __post_init__(self):
        if isinstance(self.subject, Literal) or isinstance(self.predicate, Literal):
            raise TypeError("literals are only allowed in object position")

    def variables(self) -> set[str]:
        out = set()
        for term in (self.subject, self.predicate, self.object):
            if isinstance(term, Var):
                out.add(term.name)
        return out


@dataclass(frozen=True, slots=True)
class FtFilter:
    variable: Var
    expr: FullTextExpr
    clauses: tuple[ConjunctiveClause, ...]


@dataclass(frozen=True, slots=True)
class Subscription:
    sub_id: str
    select_vars: tuple[Var, ...]
    patterns: tuple[TriplePattern, ...]
    filters: tuple[FtFilter, ...]

    def same_structure(self, other: "Subscription") -> bool:
        """Structural equality ignoring the engine-facing id."""
        return (
            self.select_vars == other.select_vars
            and self.patterns == other.patterns
            and self.filters == other.filters
        )


_sub_ids = itertools.count(1)


def fresh_sub_id() -> str:
    return f"s{next(_sub_ids)}"


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+|\#[^\n]*)
      | (?P<var>\?[A-Za-z][A-Za-z0-9_]*)
      | (?P<iri><[^<>\s]*>)
      | (?P<string>"(?:[^"\\]|\\.)*")
      | (?P<int>\d+)
      | (?P<name>[A-Za-z][A-Za-z0-9_]*(?::[A-Za-z_][A-Za-z0-9_]*)?)
      | (?P<punct>[{}().,/])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"select", "where", "filter", "ftand", "ftor", "ftnot", "ftcontains", "ftnear"}


def _lex(text: str) -> list[tuple[str, str, int]]:
    tokens: list[tuple[str, str, int]] = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise QuerySyntaxError(pos, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        value = m.group()
        if kind != "ws":
            if kind == "name" and value.lower() in _KEYWORDS:
                kind = value.lower()
            tokens.append((kind, value, pos))
        pos = m.end()
    tokens.append(("eof", "", n))
    return tokens


# Var and TriplePattern instances repeat heavily across subscriptions; share them.
_VAR_CACHE: dict[str, Var] = {}
_PATTERN_CACHE: dict[tuple, TriplePattern] = {}
_CACHE_CAP = 1 << 20


def _make_var(name: str) -> Var:
    v = _VAR_CACHE.get(name)
    if v is None:
        if len(_VAR_CACHE) >= _CACHE_CAP:
            _VAR_CACHE.clear()
        v = Var(sys.intern(name))
        _VAR_CACHE[name] = v
    return v


def _make_pattern(s: Var | Iri, p: Var | Iri, o: PatternTerm) -> TriplePattern:
    key = (s, p, o)
    pat = _PATTERN_CACHE.get(key)
    if pat is None:
        if len(_PATTERN_CACHE) >= _CACHE_CAP:
            _PATTERN_CACHE.clear()
        pat = TriplePattern(s, p, o)
        _PATTERN_CACHE[key] = pat
    return pat


class _Parser:
    def __init__(self, text: str, default_ns: str):
        self.text = text
        self.tokens = _lex(text)
        self.i = 0
        self.default_ns = default_ns

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def accept(self, kind: str, value: str | None = None) -> tuple[str, str, int] | None:
        k, v, off = self.tokens[self.i]
        if k == kind and (value is None or v == value):
            self.i += 1
            return (k, v, off)
        return None

    def expect(self, kind: str, what: str, value: str | None = None) -> tuple[str, str, int]:
        tok = self.accept(kind, value)
        if tok is None:
            k, v, off = self.peek()
            raise QuerySyntaxError(off, f"expected {what}, found {v!r}")
        return tok

    def fail(self, message: str):
        raise QuerySyntaxError(self.peek()[2], message)

    # -- terms -------------------------------------------------------------

    def resolve_name(self, value: str, offset: int) -> Iri:
        if ":" in value:
            prefix, local = value.split(":", 1)
            ns = PREFIXES.get(prefix)
            if ns is None:
                raise QuerySyntaxError(offset, f"unknown prefix {prefix!r}")
            return intern_iri(ns + local)
        return intern_iri(self.default_ns + value)

    def parse_pattern_term(self, slot: str) -> PatternTerm:
        kind, value, off = self.next()
        if kind == "var":
            return _make_var(value[1:])
        if kind == "iri":
            inner = value[1:-1]
            if not inner:
                raise QuerySyntaxError(off, "empty IRI")
            return intern_iri(inner)
        if kind == "name":
            return self.resolve_name(value, off)
        if kind == "string":
            if slot != "object":
                raise QuerySyntaxError(off, f"literal not allowed as {slot}")
            try:
                return Literal(decode_escapes(value[1:-1]))
            except Exception:
                raise QuerySyntaxError(off, "bad escape in literal") from None
        raise QuerySyntaxError(off, f"expected a term, found {value!r}")

    def parse_pattern(self) -> TriplePattern:
        s = self.parse_pattern_term("subject")
        p = self.parse_pattern_term("predicate")
        o = self.parse_pattern_term("object")
        self.expect("punct", "'.' after triple pattern", ".")
        return _make_pattern(s, p, o)  # type: ignore[arg-type]

    # -- full-text expressions ----------------------------------------------

    def parse_string_words(self) -> list[str]:
        kind, value, off = self.next()
        if kind != "string":
            raise QuerySyntaxError(off, f"expected a quoted term, found {value!r}")
        try:
            raw = decode_escapes(value[1:-1])
        except Exception:
            raise QuerySyntaxError(off, "bad escape in quoted term") from None
        words = tokenize_text(raw)
        if not words:
            raise QuerySyntaxError(off, "quoted term contains no words")
        return words

    def parse_atom(self):
        if self.peek()[0] == "ftnear":
            self.next()
            self.expect("punct", "'/' after ftnear", "/")
            kind, value, off = self.next()
            if kind != "int":
                raise QuerySyntaxError(off, "ftnear needs an integer gap")
            gap = int(value)
            if gap < 1:
                raise QuerySyntaxError(off, "ftnear gap must be >= 1")
            self.expect("punct", "'('", "(")
            words: list[str] = []
            while True:
                ws = self.parse_string_words()
                if len(ws) != 1:
                    self.fail("each ftnear argument must be a single word")
                words.extend(ws)
                if not self.accept("punct", ","):
                    break
            self.expect("punct", "')'", ")")
            if len(words) < 2:
                self.fail("ftnear needs at least two words")
            return Near(tuple(words), gap)
        words = self.parse_string_words()
        return Keyword(words[0]) if len(words) == 1 else Phrase(tuple(words))

    def parse_unary(self) -> FullTextExpr:
        if self.accept("ftnot"):
            return FtNot(self.parse_atom())
        if self.accept("punct", "("):
            expr = self.parse_or()
            self.expect("punct", "')'", ")")
            return expr
        return self.parse_atom()

    def parse_and(self) -> FullTextExpr:
        parts = [self.parse_unary()]
        while self.accept("ftand"):
            parts.append(self.parse_unary())
        return parts[0] if len(parts) == 1 else FtAnd(tuple(parts))

    def parse_or(self) -> FullTextExpr:
        parts = [self.parse_and()]
        while self.accept("ftor"):
            parts.append(self.parse_and())
        return parts[0] if len(parts) == 1 else FtOr(tuple(parts))

    def parse_filter(self, cap: int) -> FtFilter:
        self.expect("ftcontains", "ftcontains")
        self.expect("punct", "'('", "(")
        kind, value, off = self.next()
        if kind != "var":
            raise QuerySyntaxError(off, "first ftcontains argument must be a variable")
        var = _make_var(value[1:])
        self.expect("punct", "','", ",")
        expr = self.parse_or()
        self.expect("punct", "')'", ")")
        return FtFilter(var, expr, tuple(to_dnf(expr, cap)))

    # -- subscription --------------------------------------------------------

    def parse_subscription(self, cap: int) -> tuple[tuple[Var, ...], tuple[TriplePattern, ...], tuple[FtFilter, ...]]:
        self.expect("select", "SELECT")
        select_vars: list[Var] = []
        while True:
            tok = self.accept("var")
            if tok is None:
                break
            select_vars.append(_make_var(tok[1][1:]))
        if not select_vars:
            self.fail("SELECT needs at least one variable")
        self.expect("where", "WHERE")
        self.expect("punct", "'{'", "{")
        patterns: list[TriplePattern] = []
        filters: list[FtFilter] = []
        while not self.accept("punct", "}"):
            if self.accept("filter"):
                filters.append(self.parse_filter(cap))
            elif filters:
                self.fail("triple patterns must precede filters")
            else:
                patterns.append(self.parse_pattern())
        if not patterns:
            self.fail("subscription needs at least one triple pattern")
        self.expect("eof", "end of subscription")
        return tuple(select_vars), tuple(patterns), tuple(filters)


def _validate(select_vars, patterns, filters) -> None:
    pattern_vars: set[str] = set()
    object_vars: set[str] = set()
    for p in patterns:
        pattern_vars |= p.variables()
        if isinstance(p.object, Var):
            object_vars.add(p.object.name)
    for v in select_vars:
        if v.name not in pattern_vars:
            raise UnboundSelectVar(f"?{v.name} does not occur in any pattern")
    for f in filters:
        if f.variable.name not in object_vars:
            raise FilterVarNotObject(f"?{f.variable.name} is not the object of any pattern")
    # Patterns must form one component under shared variables.
    if len(patterns) > 1:
        reached = {0}
        frontier = [0]
        while frontier:
            i = frontier.pop()
            vi = patterns[i].variables()
            for j in range(len(patterns)):
                if j not in reached and vi & patterns[j].variables():
                    reached.add(j)
                    frontier.append(j)
        if len(reached) != len(patterns):
            raise DisconnectedPattern("patterns do not share variables with each other")


def parse_subscription(
    text: str,
    *,
    default_ns: str = DEFAULT_NAMESPACE,
    dnf_cap: int = DEFAULT_CLAUSE_CAP,
    sub_id: str | None = None,
) -> Subscription:
    parser = _Parser(text, default_ns)
    select_vars, patterns, filters = parser.parse_subscription(dnf_cap)
    _validate(select_vars, patterns, filters)
    return Subscription(sub_id or fresh_sub_id(), select_vars, patterns, filters)


def split_subscription_blocks(text: str) -> list[str]:
    """Split a subscription file into blocks separated by blank lines;
    '#' comment lines are dropped."""
    blocks: list[str] = []
    current: list[str] = []
    for raw in text.splitlines():
        line = raw.rstrip()
        if line.strip().startswith("#"):
            continue
        if not line.strip():
            if current:
                blocks.append("\n".join(current))
                current = []
        else:
            current.append(line)
    if current:
        blocks.append("\n".join(current))
    return blocks


# -- printing ----------------------------------------------------------------


def format_pattern_term(term: PatternTerm) -> str:
    if isinstance(term, Var):
        return f"?{term.name}"
    from .rdf import format_term

    return format_term(term)


def _quote(words: tuple[str, ...] | list[str]) -> str:
    return '"' + " ".join(words) + '"'


def format_expr(expr: FullTextExpr) -> str:
    if isinstance(expr, Keyword):
        return _quote((expr.word,))
    if isinstance(expr, Phrase):
        return _quote(expr.words)
    if isinstance(expr, Near):
        return f"ftnear/{expr.max_gap}(" + ", ".join(_quote((w,)) for w in expr.words) + ")"
    if isinstance(expr, FtNot):
        return "ftnot " + format_expr(expr.child)
    if isinstance(expr, (FtAnd, FtOr)):
        sep = " ftand " if isinstance(expr, FtAnd) else " ftor "
        parts = [
            f"({format_expr(c)})" if isinstance(c, (FtAnd, FtOr)) else format_expr(c)
            for c in expr.children
        ]
        return sep.join(parts)
    raise TypeError(f"not a full-text expression: {expr!r}")


def format_subscription(sub: Subscription) -> str:
    lines = ["SELECT " + " ".join(f"?{v.name}" for v in sub.select_vars) + " WHERE {"]
    for p in sub.patterns:
        lines.append(
            f"  {format_pattern_term(p.subject)} {format_pattern_term(p.predicate)}"
            f" {format_pattern_term(p.object)} ."
        )
    for f in sub.filters:
        lines.append(f"  FILTER ftcontains(?{f.variable.name}, {format_expr(f.expr)})")
    lines.append("}")
    return "\n".join(lines)
