import pytest
from hypothesis import given, strategies as st

import tagnarx as tn
from tagnarx.errors import ExpressionSyntaxError, MalformedYield
from tagnarx.expressions import (
    Factor,
    NarxExpression,
    Term,
    format_expression,
    format_structure,
    format_term,
    parse_structure,
    parse_yield,
)


class TestFactor:
    def test_output_must_be_delayed(self):
        with pytest.raises(ValueError):
            Factor("y", 0)
        Factor("y", 1)
        Factor("u", 0)

    def test_validation(self):
        with pytest.raises(ValueError):
            Factor("z", 1)
        with pytest.raises(ValueError):
            Factor("u", -1)
        with pytest.raises(ValueError):
            Factor("u", 0, 0)


class TestTerm:
    def test_merges_repeated_pairs(self):
        term = Term.from_factors([Factor("u", 1), Factor("u", 1)])
        assert term.factors == (Factor("u", 1, 2),)

    def test_sorted_and_unique_enforced(self):
        with pytest.raises(ValueError):
            Term((Factor("y", 1), Factor("u", 0)))
        with pytest.raises(ValueError):
            Term((Factor("u", 1), Factor("u", 1)))
        with pytest.raises(ValueError):
            Term(())


class TestNarxExpression:
    def test_duplicate_terms_collapse(self):
        t = Term.from_factors([Factor("u", 1)])
        e = NarxExpression.from_terms([t, t])
        assert e.terms == (t,)

    def test_sorted_enforced(self):
        t1 = Term.from_factors([Factor("u", 0)])
        t2 = Term.from_factors([Factor("y", 1)])
        with pytest.raises(ValueError):
            NarxExpression((t2, t1))

    def test_max_delay(self):
        e = NarxExpression.from_terms(parse_structure("u[k] + y[k-3]*u[k-1]"))
        assert e.max_delay() == 3
        assert NarxExpression().max_delay() == 0


class TestParseYield:
    def test_bare_noise(self):
        e = parse_yield(["xi"])
        assert e.terms == ()
        assert e.noise_term

    def test_exponent_merge(self):
        e = parse_yield("xi + c * q^-1 u * q^-1 u".split())
        assert e.terms == (Term((Factor("u", 1, 2),)),)

    def test_cubic_output(self):
        e = parse_yield("xi + c * q^-1 y * q^-1 y * q^-1 y".split())
        assert e.terms == (Term((Factor("y", 1, 3),)),)

    def test_zero_delay_output_rejected(self):
        with pytest.raises(MalformedYield):
            parse_yield("xi + c * y".split())

    def test_duplicate_monomials_collapse(self):
        e = parse_yield("xi + c * u + c * u".split())
        assert len(e.terms) == 1

    def test_malformed_sequences(self):
        for bad in (
            [],
            ["u"],
            ["xi", "+"],
            ["xi", "+", "c"],
            ["xi", "+", "c", "*"],
            ["xi", "+", "c", "*", "q^-1"],
            ["xi", "+", "c", "*", "u", "u"],
            ["xi", "xi"],
            ["xi", "+", "c", "*", "c"],
        ):
            with pytest.raises(MalformedYield):
                parse_yield(bad)

    def test_accepts_symbols(self, grammar):
        base = grammar.elementary(tn.NOISE_SEED).tree
        assert parse_yield(tn.yield_of(base)) == NarxExpression()


class TestStructureText:
    def test_round_trip(self):
        text = "u[k] + u[k-1]^2*y[k-3] + y[k-1]^3"
        terms = parse_structure(text)
        e = NarxExpression.from_terms(terms)
        assert format_structure(e) == text

    def test_xi_token_skipped(self):
        assert parse_structure("u[k-1] + xi[k]") == (Term((Factor("u", 1),)),)

    def test_bad_factor(self):
        for bad in ("u[j-1]", "y[k-0]^", "u[k-1]^0", "q*u[k]", "y[k]"):
            with pytest.raises(ExpressionSyntaxError):
                parse_structure(bad)

    def test_format_with_parameters(self):
        e = NarxExpression.from_terms(parse_structure("u[k-1] + y[k-1]^3"))
        text = format_expression(e, [0.5, -1.25])
        assert text == "0.5*u[k-1] - 1.25*y[k-1]^3 + xi[k]"

    def test_format_empty(self):
        assert format_expression(NarxExpression()) == "xi[k]"

    def test_format_factor_notation(self):
        assert format_term(Term((Factor("y", 2, 3),))) == "y[k-2]^3"


@st.composite
def random_expression(draw):
    slots = [("u", 0), ("u", 1), ("u", 2), ("u", 3), ("y", 1), ("y", 2), ("y", 3)]
    n_terms = draw(st.integers(0, 4))
    terms = []
    for _ in range(n_terms):
        picks = draw(st.lists(st.sampled_from(slots), min_size=1, max_size=4))
        exps = draw(st.lists(st.integers(1, 3), min_size=len(picks), max_size=len(picks)))
        terms.append(Term.from_factors([Factor(s, d, e) for (s, d), e in zip(picks, exps)]))
    return NarxExpression.from_terms(terms)


class TestCanonicalizationProperties:
    @given(random_expression())
    def test_print_parse_round_trip(self, expression):
        if not expression.terms:
            assert parse_structure(format_structure(expression)) == ()
            return
        reparsed = NarxExpression.from_terms(parse_structure(format_structure(expression)))
        assert reparsed == expression

    @given(random_expression())
    def test_canonicalization_idempotent(self, expression):
        again = NarxExpression.from_terms(expression.terms, expression.noise_term)
        assert again == expression
