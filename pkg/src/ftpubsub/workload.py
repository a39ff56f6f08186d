"""Synthetic subscription/document workloads with Zipf-distributed keywords,
plus a loader for real abstract dumps."""
from __future__ import annotations

import bisect
import random
from dataclasses import dataclass
from typing import Iterator

from .rdf import Document, Iri, RDF_TYPE_IRI, Triple, parse_ntriples

VOC_NS = "http://ftps.example/voc#"
ENTITY_NS = "http://ftps.example/entity/"

# Small pools shared by subscriptions and documents; sized together with the
# default spec below so that a default workload lands in a useful match-rate
# band (see tests/fixtures/match_rate.json).
NUM_TYPES = 4
NUM_LINK_PREDICATES = 4
NUM_TEXT_PREDICATES = 2

ABSTRACT_TOKENS_MIN = 50
ABSTRACT_TOKENS_MAX = 300


@dataclass(frozen=True)
class WorkloadSpec:
    num_subscriptions: int = 1000
    vocabulary_size: int = 2000
    zipf_skew: float = 1.0
    words_per_clause: tuple[int, int] = (2, 4)
    clauses_per_filter: tuple[int, int] = (1, 2)
    patterns_per_subscription: tuple[int, int] = (3, 3)
    seed: int = 0

    def __post_init__(self):
        if self.num_subscriptions < 1 or self.vocabulary_size < 1:
            raise ValueError("workload sizes must be positive")
        if self.zipf_skew < 0:
            raise ValueError("zipf_skew must be >= 0")
        for lo, hi in (
            self.words_per_clause,
            self.clauses_per_filter,
            self.patterns_per_subscription,
        ):
            if lo < 1 or hi < lo:
                raise ValueError("ranges must satisfy 1 <= lo <= hi")
        if self.patterns_per_subscription[0] < 2:
            raise ValueError("a subscription needs at least a type and a text pattern")


class ZipfSampler:
    """Ranked vocabulary where rank r is drawn with probability ~ 1/r^s."""

    def __init__(self, vocabulary_size: int, skew: float):
        self.words = [f"w{i}" for i in range(vocabulary_size)]
        weights = [1.0 / (r**skew) for r in range(1, vocabulary_size + 1)]
        total = sum(weights)
        acc = 0.0
        self.cumulative = []
        for w in weights:
            acc += w
            self.cumulative.append(acc / total)

    def sample(self, rng: random.Random) -> str:
        return self.words[bisect.bisect_left(self.cumulative, rng.random())]

    def sample_distinct(self, rng: random.Random, count: int) -> list[str]:
        out: list[str] = []
        seen: set[str] = set()
        while len(out) < count:
            w = self.sample(rng)
            if w not in seen:
                seen.add(w)
                out.append(w)
        return out


def _type_iri(i: int) -> str:
    return f"{VOC_NS}Type{i}"


def _link_iri(i: int) -> str:
    return f"{VOC_NS}links{i}"


def _text_iri(i: int) -> str:
    return f"{VOC_NS}text{i}"


def iter_subscription_blocks(spec: WorkloadSpec) -> Iterator[str]:
    """Subscription texts in the shape: a type pattern, a chain of link
    patterns, a text pattern, and one ftcontains filter over the text."""
    rng = random.Random(f"subs-{spec.seed}")
    sampler = ZipfSampler(spec.vocabulary_size, spec.zipf_skew)
    for _ in range(spec.num_subscriptions):
        n_patterns = rng.randint(*spec.patterns_per_subscription)
        hops = n_patterns - 2
        type_i = rng.randrange(NUM_TYPES)
        text_i = rng.randrange(NUM_TEXT_PREDICATES)
        lines = [
            f"SELECT ?e{hops} WHERE {{",
            f"  ?e0 rdf:type <{_type_iri(type_i)}> .",
        ]
        for hop in range(hops):
            link_i = rng.randrange(NUM_LINK_PREDICATES)
            lines.append(f"  ?e{hop} <{_link_iri(link_i)}> ?e{hop + 1} .")
        lines.append(f"  ?e{hops} <{_text_iri(text_i)}> ?txt .")
        n_clauses = rng.randint(*spec.clauses_per_filter)
        clause_texts = []
        for _ in range(n_clauses):
            words = sampler.sample_distinct(rng, rng.randint(*spec.words_per_clause))
            conj = " ftand ".join(f'"{w}"' for w in words)
            clause_texts.append(f"({conj})" if n_clauses > 1 and len(words) > 1 else conj)
        expr = " ftor ".join(clause_texts)
        lines.append(f"  FILTER ftcontains(?txt, {expr})")
        lines.append("}")
        yield "\n".join(lines)


def generate_subscriptions(spec: WorkloadSpec) -> str:
    """One subscription per block, blocks separated by a blank line;
    byte-identical for equal specs."""
    return "\n\n".join(iter_subscription_blocks(spec)) + "\n"


def iter_document_blocks(count: int, spec: WorkloadSpec) -> Iterator[str]:
    """Document texts mirroring the subscription shape: an entity with a type
    triple, a chain of link triples, and one abstract-like literal."""
    rng = random.Random(f"docs-{spec.seed}")
    sampler = ZipfSampler(spec.vocabulary_size, spec.zipf_skew)
    max_hops = spec.patterns_per_subscription[1] - 2
    min_hops = spec.patterns_per_subscription[0] - 2
    for d in range(count):
        doc_id = f"d{d}"
        hops = rng.randint(min_hops, max_hops)
        entities = [f"{ENTITY_NS}{doc_id}x{k}" for k in range(hops + 1)]
        type_i = rng.randrange(NUM_TYPES)
        text_i = rng.randrange(NUM_TEXT_PREDICATES)
        lines = [
            f"# doc {doc_id}",
            f"<{entities[0]}> <{RDF_TYPE_IRI}> <{_type_iri(type_i)}> .",
        ]
        for hop in range(hops):
            link_i = rng.randrange(NUM_LINK_PREDICATES)
            lines.append(f"<{entities[hop]}> <{_link_iri(link_i)}> <{entities[hop + 1]}> .")
        n_tokens = rng.randint(ABSTRACT_TOKENS_MIN, ABSTRACT_TOKENS_MAX)
        abstract = " ".join(sampler.sample(rng) for _ in range(n_tokens))
        lines.append(f'<{entities[-1]}> <{_text_iri(text_i)}> "{abstract}" .')
        yield "\n".join(lines)


def generate_documents(count: int, spec: WorkloadSpec) -> str:
    return "\n".join(iter_document_blocks(count, spec)) + "\n"


def load_abstract_dump(text: str) -> list[Document]:
    """Group an N-Triples dump (one abstract-style literal triple per line,
    e.g. a DBpedia abstracts file) into one document per subject."""
    parsed = parse_ntriples(text, doc_id="dump")
    by_subject: dict[Iri, list[Triple]] = {}
    order: list[Iri] = []
    for t in parsed.triples:
        if t.subject not in by_subject:
            by_subject[t.subject] = []
            order.append(t.subject)
        by_subject[t.subject].append(t)
    return [Document(s.value, tuple(by_subject[s])) for s in order]
