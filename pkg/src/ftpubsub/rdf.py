"""RDF value types, an N-Triples line subset reader, and literal tokenization."""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass
from typing import Iterator, Union

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDF_TYPE_IRI = RDF_NS + "type"


class NTriplesError(ValueError):
    """Base for line-level ingestion errors; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class MalformedLine(NTriplesError):
    pass


class BadIri(NTriplesError):
    pass


@dataclass(frozen=True, slots=True)
class Iri:
    value: str

    def __post_init__(self):
        if not self.value or any(ch.isspace() for ch in self.value):
            raise ValueError(f"IRI must be non-empty and whitespace-free: {self.value!r}")


@dataclass(frozen=True, slots=True)
class Literal:
    lexical: str
    datatype: Iri | None = None


Term = Union[Iri, Literal]


@dataclass(frozen=True, slots=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term

    def __post_init__(self):
        # Literals are only legal in object position.
        if not isinstance(self.subject, Iri) or not isinstance(self.predicate, Iri):
            raise TypeError("triple subject and predicate must be IRIs")


@dataclass(frozen=True, slots=True)
class Document:
    doc_id: str
    triples: tuple[Triple, ...]


class TokenStream:
    """Lowercased word sequence; word i sits at position i."""

    __slots__ = ("words", "word_set", "_positions")

    def __init__(self, words: tuple[str, ...]):
        self.words = tuple(words)
        self.word_set = frozenset(self.words)
        self._positions: dict[str, tuple[int, ...]] | None = None

    def tokens(self) -> tuple[tuple[str, int], ...]:
        return tuple((w, i) for i, w in enumerate(self.words))

    def positions(self, word: str) -> tuple[int, ...]:
        if self._positions is None:
            acc: dict[str, list[int]] = {}
            for i, w in enumerate(self.words):
                acc.setdefault(w, []).append(i)
            self._positions = {w: tuple(ps) for w, ps in acc.items()}
        return self._positions.get(word, ())

    def __len__(self) -> int:
        return len(self.words)

    def __eq__(self, other) -> bool:
        return isinstance(other, TokenStream) and self.words == other.words

    def __hash__(self) -> int:
        return hash(self.words)

    def __repr__(self) -> str:
        return f"TokenStream({self.words!r})"


# \w minus underscore leaves exactly the alphanumeric characters.
_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize_text(text: str) -> list[str]:
    # Interning keeps one str per distinct word across millions of clauses,
    # trie nodes, and token streams.
    return [sys.intern(w.lower()) for w in _WORD_RE.findall(text)]


def tokenize(literal: Literal) -> TokenStream:
    """Split on non-alphanumeric runs and lowercase; no stemming, no stopwords."""
    return TokenStream(tuple(tokenize_text(literal.lexical)))


_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}
_UNESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}

_LANG_RE = re.compile(r"[A-Za-z]+(-[A-Za-z0-9]+)*")

# IRI objects are interned so repeated predicates/types share one instance.
_IRI_CACHE: dict[str, Iri] = {}
_IRI_CACHE_CAP = 1 << 20


def intern_iri(value: str) -> Iri:
    iri = _IRI_CACHE.get(value)
    if iri is None:
        if len(_IRI_CACHE) >= _IRI_CACHE_CAP:
            _IRI_CACHE.clear()
        iri = Iri(sys.intern(value))
        _IRI_CACHE[value] = iri
    return iri


def _scan_iri(line: str, i: int, line_no: int) -> tuple[Iri, int]:
    j = line.find(">", i + 1)
    if j < 0:
        raise MalformedLine(line_no, "unterminated IRI")
    value = line[i + 1 : j]
    if not value or any(ch.isspace() for ch in value):
        raise BadIri(line_no, f"bad IRI {value!r}")
    return intern_iri(value), j + 1


def decode_escapes(raw: str, line_no: int = 0) -> str:
    """Decode \\\" \\\\ \\n \\t \\r and \\uXXXX / \\UXXXXXXXX sequences."""
    if "\\" not in raw:
        return raw
    out: list[str] = []
    i = 0
    n = len(raw)
    while i < n:
        ch = raw[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= n:
            raise MalformedLine(line_no, "dangling backslash in literal")
        nxt = raw[i + 1]
        if nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt in ("u", "U"):
            width = 4 if nxt == "u" else 8
            hexpart = raw[i + 2 : i + 2 + width]
            if len(hexpart) != width:
                raise MalformedLine(line_no, "truncated unicode escape")
            try:
                out.append(chr(int(hexpart, 16)))
            except ValueError:
                raise MalformedLine(line_no, f"bad unicode escape \\{nxt}{hexpart}") from None
            i += 2 + width
        else:
            raise MalformedLine(line_no, f"unknown escape \\{nxt}")
    return "".join(out)


def _scan_literal(line: str, i: int, line_no: int) -> tuple[Literal, int]:
    j = i + 1
    n = len(line)
    while j < n:
        ch = line[j]
        if ch == "\\":
            j += 2
            continue
        if ch == '"':
            break
        j += 1
    if j >= n:
        raise MalformedLine(line_no, "unterminated literal")
    lexical = decode_escapes(line[i + 1 : j], line_no)
    j += 1
    datatype: Iri | None = None
    if line.startswith("^^", j):
        if j + 2 >= n or line[j + 2] != "<":
            raise MalformedLine(line_no, "datatype must be an IRI")
        datatype, j = _scan_iri(line, j + 2, line_no)
    elif line.startswith("@", j):
        # Language tags are accepted and discarded.
        m = _LANG_RE.match(line, j + 1)
        if not m:
            raise MalformedLine(line_no, "bad language tag")
        j = m.end()
    return Literal(lexical, datatype), j


def _skip_ws(line: str, i: int) -> int:
    n = len(line)
    while i < n and line[i] in " \t":
        i += 1
    return i


def _parse_line(line: str, line_no: int) -> Triple:
    i = _skip_ws(line, 0)
    terms: list[Term] = []
    for slot in ("subject", "predicate", "object"):
        if i >= len(line):
            raise MalformedLine(line_no, f"missing {slot}")
        ch = line[i]
        if ch == "<":
            term, i = _scan_iri(line, i, line_no)
        elif ch == '"':
            if slot != "object":
                raise MalformedLine(line_no, f"{slot} cannot be a literal")
            term, i = _scan_literal(line, i, line_no)
        elif line.startswith("_:", i):
            raise BadIri(line_no, "blank nodes are not supported")
        else:
            raise MalformedLine(line_no, f"unexpected character {ch!r} in {slot}")
        terms.append(term)
        i = _skip_ws(line, i)
    if i >= len(line) or line[i] != ".":
        raise MalformedLine(line_no, "missing terminating '.'")
    if line[i + 1 :].strip():
        raise MalformedLine(line_no, "trailing content after '.'")
    return Triple(terms[0], terms[1], terms[2])  # type: ignore[arg-type]


def _parse_numbered_lines(lines: list[tuple[int, str]], doc_id: str) -> Document:
    triples: list[Triple] = []
    seen: set[Triple] = set()
    for line_no, raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        t = _parse_line(line, line_no)
        if t not in seen:
            seen.add(t)
            triples.append(t)
    return Document(doc_id, tuple(triples))


def parse_ntriples(text: str, doc_id: str = "doc0") -> Document:
    """Parse N-Triples text into one Document, deduplicating repeated triples."""
    return _parse_numbered_lines(list(enumerate(text.splitlines(), 1)), doc_id)


_DOC_MARKER_RE = re.compile(r"^#\s*doc\s+(\S+)\s*$")


def iter_documents(text: str) -> Iterator[Document]:
    """Split a triple stream into documents at ``# doc <id>`` marker lines.

    Content before the first marker (or a file with no markers) becomes
    document ``doc0``.
    """
    doc_id = "doc0"
    pending: list[tuple[int, str]] = []
    started = False
    for line_no, raw in enumerate(text.splitlines(), 1):
        m = _DOC_MARKER_RE.match(raw.strip())
        if m:
            if started or any(ln.strip() and not ln.strip().startswith("#") for _, ln in pending):
                yield _parse_numbered_lines(pending, doc_id)
            doc_id = m.group(1)
            pending = []
            started = True
        else:
            pending.append((line_no, raw))
    if started or any(ln.strip() and not ln.strip().startswith("#") for _, ln in pending):
        yield _parse_numbered_lines(pending, doc_id)


def format_term(term: Term) -> str:
    if isinstance(term, Iri):
        return f"<{term.value}>"
    escaped = "".join(_UNESCAPES.get(ch, ch) for ch in term.lexical)
    if term.datatype is not None:
        return f'"{escaped}"^^<{term.datatype.value}>'
    return f'"{escaped}"'


def serialize_ntriples(doc: Document, include_marker: bool = False) -> str:
    lines = [f"# doc {doc.doc_id}"] if include_marker else []
    for t in doc.triples:
        lines.append(f"{format_term(t.subject)} {format_term(t.predicate)} {format_term(t.object)} .")
    return "\n".join(lines) + ("\n" if lines else "")
