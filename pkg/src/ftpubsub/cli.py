"""Command-line front end.

Exit codes: 0 success, 1 input error (bad files, bad arguments), 2 internal
invariant violation (index audit failure or cross-mode disagreement).
"""
from __future__ import annotations

import argparse
import os
import sys
from typing import TextIO

from .bench import OracleMismatch, parse_workload, run_benchmark, write_csv
from .engine import EngineConfig, FilterEngine, MODE_ALIASES
from .ftexpr import FullTextError
from .query import DEFAULT_NAMESPACE, QueryError, split_subscription_blocks
from .rdf import NTriplesError, iter_documents
from .workload import WorkloadSpec, iter_document_blocks, iter_subscription_blocks, load_abstract_dump

ENV_DEFAULT_NS = "FTPS_DEFAULT_NS"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INVARIANT = 2


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # bad usage is an input error, not an internal one
        self.print_usage(sys.stderr)
        raise InputError(message)


def _default_ns() -> str:
    return os.environ.get(ENV_DEFAULT_NS, DEFAULT_NAMESPACE)


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _engine(args, mode: str | None = None) -> FilterEngine:
    canonical = MODE_ALIASES.get(mode or getattr(args, "mode", "metrics"))
    if canonical is None:
        raise InputError(f"unknown mode {mode!r}")
    return FilterEngine(
        EngineConfig(
            index_mode=canonical,  # type: ignore[arg-type]
            reorg_policy=getattr(args, "reorg_policy", "every_k"),
            reorg_every=getattr(args, "reorg_every", 10000),
            reorg_score=getattr(args, "reorg_score", "freq"),
            default_namespace=args.default_ns,
        )
    )


def _subscribe_file(engine: FilterEngine, path: str) -> list[str]:
    ids = []
    for idx, block in enumerate(split_subscription_blocks(_read(path)), 1):
        try:
            ids.append(engine.subscribe(block))
        except (QueryError, FullTextError) as exc:
            raise InputError(f"{path}, subscription block {idx}: {exc}") from exc
    return ids


def _publish_stream(engine: FilterEngine, docs_text: str, out: TextIO) -> tuple[int, int]:
    docs = 0
    notes = 0
    for doc in iter_documents(docs_text):
        docs += 1
        for n in engine.publish(doc):
            out.write(n.to_json_line() + "\n")
            notes += 1
    return docs, notes


def _write_stats_csv(engine: FilterEngine, path: str) -> None:
    s = engine.stats()
    avg = s.total_publish_ms / s.publish_count if s.publish_count else 0.0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("subscriptions,clauses,predicates,trie_nodes,documents,total_publish_ms,avg_publish_ms\n")
        fh.write(
            f"{s.subscriptions},{s.clauses},{s.predicates},{s.total_trie_nodes},"
            f"{s.publish_count},{s.total_publish_ms:.3f},{avg:.4f}\n"
        )


def _check_audit(engine: FilterEngine) -> None:
    problems = engine.audit()
    if problems:
        for p in problems:
            print(f"audit: {p}", file=sys.stderr)
        raise AssertionError(f"{len(problems)} index audit violations")


def cmd_subscribe(args) -> int:
    engine = _engine(args)
    ids = _subscribe_file(engine, args.file)
    s = engine.stats()
    print(f"indexed {len(ids)} subscriptions: {s.clauses} clauses under {s.predicates} predicates, "
          f"{s.total_trie_nodes} trie nodes")
    _check_audit(engine)
    return EXIT_OK


def cmd_publish(args) -> int:
    engine = _engine(args)
    if args.subs:
        _subscribe_file(engine, args.subs)
    out, close = _open_out(args.out)
    try:
        docs, notes = _publish_stream(engine, _read(args.file), out)
    finally:
        if close:
            out.close()
    print(f"published {docs} documents, {notes} notifications", file=sys.stderr)
    return EXIT_OK


def cmd_run(args) -> int:
    engine = _engine(args)
    ids = _subscribe_file(engine, args.subs)
    out, close = _open_out(args.out)
    try:
        docs, notes = _publish_stream(engine, _read(args.docs), out)
    finally:
        if close:
            out.close()
    if args.stats:
        _write_stats_csv(engine, args.stats)
    print(
        f"{len(ids)} subscriptions, {docs} documents, {notes} notifications",
        file=sys.stderr,
    )
    _check_audit(engine)
    return EXIT_OK


def cmd_reorg(args) -> int:
    engine = _engine(args, mode="reorg")
    ids = _subscribe_file(engine, args.subs)
    notes = 0
    if args.docs:
        out, close = _open_out(args.out)
        try:
            _, notes = _publish_stream(engine, _read(args.docs), out)
        finally:
            if close:
                out.close()
    before = engine.stats().total_trie_nodes
    engine.reorganize_now()
    after = engine.stats().total_trie_nodes
    print(f"{len(ids)} subscriptions, {notes} notifications, trie nodes {before} -> {after}")
    _check_audit(engine)
    return EXIT_OK


def cmd_gen_subs(args) -> int:
    spec = WorkloadSpec(
        num_subscriptions=args.n,
        vocabulary_size=args.vocab,
        zipf_skew=args.zipf,
        seed=args.seed,
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        first = True
        for block in iter_subscription_blocks(spec):
            if not first:
                fh.write("\n")
            fh.write(block + "\n")
            first = False
    print(f"wrote {args.n} subscriptions to {args.out}")
    return EXIT_OK


def cmd_gen_docs(args) -> int:
    spec = WorkloadSpec(vocabulary_size=args.vocab, zipf_skew=args.zipf, seed=args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        for block in iter_document_blocks(args.n, spec):
            fh.write(block + "\n")
    print(f"wrote {args.n} documents to {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    sizes = []
    for part in args.sizes.split(","):
        part = part.strip()
        if part:
            try:
                sizes.append(int(part))
            except ValueError:
                raise InputError(f"bad size {part!r}") from None
    if not modes or not sizes:
        raise InputError("need at least one mode and one size")
    documents = None
    if args.dbpedia_abstracts:
        documents = load_abstract_dump(_read(args.dbpedia_abstracts))
    elif not args.docs:
        raise InputError("either --docs or --dbpedia-abstracts is required")
    try:
        subs, documents = parse_workload(
            _read(args.subs),
            _read(args.docs) if args.docs and documents is None else None,
            default_ns=args.default_ns,
            documents=documents,
            max_subscriptions=max(sizes),
        )
    except (QueryError, FullTextError) as exc:
        raise InputError(str(exc)) from exc
    results, report = run_benchmark(
        subs,
        documents,
        modes,
        sizes,
        progress=lambda msg: print(msg, file=sys.stderr),
    )
    write_csv(results, args.out)
    for line in report:
        print(line)
    print(f"wrote {len(results)} rows to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ftpubsub", description=__doc__)
    parser.add_argument(
        "--default-ns",
        default=_default_ns(),
        help=f"namespace for bare names in queries (or ${ENV_DEFAULT_NS})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("subscribe", help="parse and index a subscription file")
    p.add_argument("-f", "--file", required=True)
    p.set_defaults(fn=cmd_subscribe)

    p = sub.add_parser("publish", help="publish documents, optionally against a subscription file")
    p.add_argument("-f", "--file", required=True)
    p.add_argument("--subs")
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(fn=cmd_publish)

    p = sub.add_parser("run", help="subscribe a file, publish a stream, write notifications")
    p.add_argument("--subs", required=True)
    p.add_argument("--docs", required=True)
    p.add_argument("--mode", default="metrics", choices=sorted(MODE_ALIASES))
    p.add_argument("--out", default="-")
    p.add_argument("--stats")
    p.add_argument("--reorg-every", type=int, default=10000)
    p.add_argument("--reorg-score", default="freq", choices=["freq", "hits"])
    p.add_argument("--reorg-policy", default="every_k", choices=["every_k", "explicit"])
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("reorg", help="force a reorganization over a subscription file")
    p.add_argument("when", choices=["now"])
    p.add_argument("--subs", required=True)
    p.add_argument("--docs", help="optional documents published first to gather statistics")
    p.add_argument("-o", "--out", default="-")
    p.add_argument("--reorg-score", default="freq", choices=["freq", "hits"])
    p.set_defaults(fn=cmd_reorg, reorg_policy="explicit")

    p = sub.add_parser("gen-subs", help="generate a synthetic subscription file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--vocab", type=int, default=WorkloadSpec.vocabulary_size)
    p.add_argument("--zipf", type=float, default=WorkloadSpec.zipf_skew)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(fn=cmd_gen_subs)

    p = sub.add_parser("gen-docs", help="generate a synthetic document stream")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--vocab", type=int, default=WorkloadSpec.vocabulary_size)
    p.add_argument("--zipf", type=float, default=WorkloadSpec.zipf_skew)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(fn=cmd_gen_docs)

    p = sub.add_parser("bench", help="compare index modes over one workload")
    p.add_argument("--subs", required=True)
    p.add_argument("--docs")
    p.add_argument("--dbpedia-abstracts", help="N-Triples abstract dump used as the document stream")
    p.add_argument("--modes", default="det,metrics,reorg")
    p.add_argument("--sizes", required=True)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(fn=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (QueryError, FullTextError, NTriplesError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OracleMismatch, AssertionError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
