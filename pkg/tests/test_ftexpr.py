"""Full-text expression AST, DNF normalization, and clause evaluation."""
from __future__ import annotations

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ftpubsub.ftexpr import (
    ClauseExplosion,
    ConjunctiveClause,
    FtAnd,
    FtNot,
    FtOr,
    FullTextError,
    Keyword,
    Near,
    Phrase,
    PurelyNegativeClause,
    atom_words,
    eval_atom,
    eval_clause,
    to_dnf,
)
from ftpubsub.rdf import TokenStream

from oracles import eval_expr_direct, near_holds_brute, phrase_holds_brute


def ts(text: str) -> TokenStream:
    return TokenStream(tuple(text.split()))


def kw(w: str) -> Keyword:
    return Keyword(w)


def positives(clauses) -> list[set[str]]:
    return [set(c.positive_words) for c in clauses]


class TestAstValidation:
    def test_keyword_must_be_tokenized_lowercase(self):
        assert Keyword("economic").word == "economic"
        assert Keyword("2008").word == "2008"
        for bad in ("", "Economic", "two words", "semi-colon", "under_score"):
            with pytest.raises(ValueError):
                Keyword(bad)

    def test_phrase_needs_two_words(self):
        assert Phrase(("economic", "crisis")).words == ("economic", "crisis")
        with pytest.raises(ValueError):
            Phrase(("economic",))
        with pytest.raises(ValueError):
            Phrase(("economic", "BIG"))

    def test_near_needs_two_words_and_positive_gap(self):
        assert Near(("debt", "default"), 2).max_gap == 2
        with pytest.raises(ValueError):
            Near(("debt",), 2)
        with pytest.raises(ValueError):
            Near(("debt", "default"), 0)

    def test_connectives_need_two_operands(self):
        with pytest.raises(ValueError):
            FtAnd((kw("a"),))
        with pytest.raises(ValueError):
            FtOr((kw("a"),))

    def test_negation_applies_to_atoms_only(self):
        assert FtNot(kw("war")).child == kw("war")
        assert FtNot(Phrase(("a", "b"))).child.words == ("a", "b")
        with pytest.raises(ValueError):
            FtNot(FtAnd((kw("a"), kw("b"))))
        with pytest.raises(ValueError):
            FtNot(FtOr((kw("a"), kw("b"))))

    def test_atom_words(self):
        assert atom_words(kw("a")) == ("a",)
        assert atom_words(Phrase(("a", "b"))) == ("a", "b")
        assert atom_words(Near(("a", "b", "c"), 1)) == ("a", "b", "c")


class TestConjunctiveClause:
    def test_requires_a_positive_word(self):
        with pytest.raises(PurelyNegativeClause):
            ConjunctiveClause(frozenset())

    def test_positional_words_must_be_positive(self):
        with pytest.raises(ValueError):
            ConjunctiveClause(frozenset({"a"}), (Phrase(("a", "b")),))

    def test_residual_atoms_flag(self):
        plain = ConjunctiveClause(frozenset({"a", "b"}))
        assert not plain.has_residual_atoms
        with_phrase = ConjunctiveClause(frozenset({"a", "b"}), (Phrase(("a", "b")),))
        assert with_phrase.has_residual_atoms
        with_neg = ConjunctiveClause(frozenset({"a"}), (), (kw("z"),))
        assert with_neg.has_residual_atoms


class TestToDnf:
    def test_single_atom(self):
        (clause,) = to_dnf(kw("economic"))
        assert clause.positive_words == frozenset({"economic"})
        assert not clause.has_residual_atoms

    def test_conjunction_distributes_over_disjunction(self):
        expr = FtAnd((kw("a"), FtOr((kw("b"), kw("c")))))
        assert positives(to_dnf(expr)) == [{"a", "b"}, {"a", "c"}]

    def test_duplicate_clauses_merge_keeping_first(self):
        # (a ftor b) ftand (a ftor b):  a.a, a.b, b.a (dup of a.b), b.b
        ab = FtOr((kw("a"), kw("b")))
        expr = FtAnd((ab, ab))
        assert positives(to_dnf(expr)) == [{"a"}, {"a", "b"}, {"b"}]

    def test_or_of_equal_atoms_collapses(self):
        assert positives(to_dnf(FtOr((kw("a"), kw("a"))))) == [{"a"}]

    def test_nary_flattening_order(self):
        expr = FtOr((kw("a"), kw("b"), kw("c")))
        assert positives(to_dnf(expr)) == [{"a"}, {"b"}, {"c"}]

    def test_phrase_words_enter_positive_words(self):
        (clause,) = to_dnf(Phrase(("economic", "crisis")))
        assert clause.positive_words == frozenset({"economic", "crisis"})
        assert clause.positional_atoms == (Phrase(("economic", "crisis")),)

    def test_negation_becomes_negative_atom(self):
        (clause,) = to_dnf(FtAnd((kw("crisis"), FtNot(kw("war")))))
        assert clause.positive_words == frozenset({"crisis"})
        assert clause.negative_atoms == (kw("war"),)
        # Negative words never join the positive set.
        assert "war" not in clause.positive_words

    def test_purely_negative_expression_rejected(self):
        with pytest.raises(PurelyNegativeClause):
            to_dnf(FtNot(kw("war")))
        # One disjunct purely negative poisons the whole filter.
        with pytest.raises(PurelyNegativeClause):
            to_dnf(FtOr((kw("a"), FtNot(kw("b")))))

    def test_clause_cap_boundary(self):
        expr = FtAnd((FtOr((kw("a"), kw("b"))), FtOr((kw("c"), kw("d")))))
        assert len(to_dnf(expr, cap=4)) == 4
        with pytest.raises(ClauseExplosion):
            to_dnf(expr, cap=3)

    def test_cap_applies_to_intermediate_products(self):
        ors = [FtOr((kw(f"a{i}"), kw(f"b{i}"))) for i in range(5)]
        with pytest.raises(ClauseExplosion):
            to_dnf(FtAnd(tuple(ors)), cap=16)  # full product would be 32

    def test_errors_share_a_base_class(self):
        assert issubclass(PurelyNegativeClause, FullTextError)
        assert issubclass(ClauseExplosion, FullTextError)

    def test_atoms_are_sorted_within_a_clause(self):
        expr = FtAnd(
            (
                Near(("x", "y"), 2),
                Phrase(("c", "d")),
                FtNot(kw("q")),
                FtNot(Phrase(("m", "n"))),
                kw("a"),
            )
        )
        (clause,) = to_dnf(expr)
        assert clause.positional_atoms == (Phrase(("c", "d")), Near(("x", "y"), 2))
        assert clause.negative_atoms == (kw("q"), Phrase(("m", "n")))


class TestAtomEvaluation:
    def test_keyword_membership(self):
        assert eval_atom(kw("crisis"), ts("economic crisis"))
        assert not eval_atom(kw("war"), ts("economic crisis"))

    def test_phrase_requires_adjacency_in_order(self):
        phrase = Phrase(("economic", "crisis"))
        assert eval_atom(phrase, ts("deep economic crisis now"))
        assert not eval_atom(phrase, ts("economic deep crisis"))
        assert not eval_atom(phrase, ts("crisis economic"))

    def test_phrase_at_stream_end_and_repeated_words(self):
        assert eval_atom(Phrase(("a", "b")), ts("x a b"))
        assert not eval_atom(Phrase(("a", "b")), ts("x a"))
        assert eval_atom(Phrase(("a", "a")), ts("b a a"))
        assert not eval_atom(Phrase(("a", "a")), ts("a b a"))

    def test_near_is_order_free_within_gap(self):
        near = Near(("debt", "default"), 2)
        assert eval_atom(near, ts("debt default"))
        assert eval_atom(near, ts("default x debt"))
        assert eval_atom(near, ts("debt x default"))
        assert not eval_atom(near, ts("debt x y default"))
        assert not eval_atom(near, ts("debt only"))

    def test_near_needs_distinct_positions_per_repeat(self):
        near = Near(("a", "a"), 1)
        assert not eval_atom(near, ts("a"))
        assert eval_atom(near, ts("a a"))
        assert not eval_atom(near, ts("a b a"))  # gap 2 > 1

    def test_near_chain_gaps_are_pairwise(self):
        # positions 0, 2, 4: adjacent gaps are 2 and 2 even though the
        # end-to-end spread is 4.
        near = Near(("a", "b", "c"), 2)
        assert eval_atom(near, ts("a x b x c"))
        assert not eval_atom(near, ts("a x x b c"))

    def test_clause_evaluation_combines_all_parts(self):
        clause = ConjunctiveClause(
            frozenset({"economic", "crisis"}),
            (Phrase(("economic", "crisis")),),
            (kw("war"),),
        )
        assert eval_clause(clause, ts("the economic crisis deepens"))
        assert not eval_clause(clause, ts("economic crisis war"))
        assert not eval_clause(clause, ts("crisis economic"))
        assert not eval_clause(clause, ts("economic slump"))


_WORDS = ["a", "b", "c", "d"]
_word = st.sampled_from(_WORDS)
_streams = st.lists(_word, max_size=10).map(lambda ws: TokenStream(tuple(ws)))

_atoms = st.one_of(
    _word.map(Keyword),
    st.lists(_word, min_size=2, max_size=3).map(lambda ws: Phrase(tuple(ws))),
    st.builds(
        Near,
        st.lists(_word, min_size=2, max_size=3).map(tuple),
        st.integers(1, 3),
    ),
)
_exprs = st.recursive(
    _atoms,
    lambda inner: st.one_of(
        _atoms.map(FtNot),
        st.lists(inner, min_size=2, max_size=3).map(lambda cs: FtAnd(tuple(cs))),
        st.lists(inner, min_size=2, max_size=3).map(lambda cs: FtOr(tuple(cs))),
    ),
    max_leaves=8,
)


@settings(max_examples=400)
@given(_exprs, _streams)
def test_dnf_preserves_expression_semantics(expr, stream):
    try:
        clauses = to_dnf(expr)
    except (PurelyNegativeClause, ClauseExplosion):
        assume(False)
    got = any(eval_clause(c, stream) for c in clauses)
    assert got == eval_expr_direct(expr, stream)


@settings(max_examples=400)
@given(st.lists(_word, min_size=2, max_size=4).map(tuple), st.integers(1, 4), _streams)
def test_near_matches_brute_force(words, max_gap, stream):
    assert eval_atom(Near(words, max_gap), stream) == near_holds_brute(
        words, max_gap, stream
    )


@settings(max_examples=300)
@given(st.lists(_word, min_size=2, max_size=4).map(tuple), _streams)
def test_phrase_matches_brute_force(words, stream):
    assert eval_atom(Phrase(words), stream) == phrase_holds_brute(words, stream)
