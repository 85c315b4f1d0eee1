"""Canonical sum-of-monomials expressions for delayed input-output models.

An expression is a sum of terms, each term a product of delayed signal
factors, plus an additive noise sample.  Values are canonical: factors within
a term are merged per (signal, delay) and sorted, terms are sorted and
deduplicated, and output factors are strictly delayed so every expression is
causal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ExpressionSyntaxError, MalformedYield
from .trees import Symbol

INPUT = "u"
OUTPUT = "y"

NOISE_TOKEN = "xi"
COEFFICIENT_TOKEN = "c"
PLUS_TOKEN = "+"
TIMES_TOKEN = "*"
DELAY_TOKEN = "q^-1"


@dataclass(frozen=True, order=True)
class Factor:
    """One signal raised to a power at a fixed delay: u[k-delay]^exponent."""

    signal: str
    delay: int
    exponent: int = 1

    def __post_init__(self):
        if self.signal not in (INPUT, OUTPUT):
            raise ValueError(f"unknown signal {self.signal!r}")
        if self.delay < 0:
            raise ValueError("delay must be nonnegative")
        if self.exponent < 1:
            raise ValueError("exponent must be positive")
        if self.signal == OUTPUT and self.delay < 1:
            raise ValueError("output factors must be strictly delayed")


@dataclass(frozen=True, order=True)
class Term:
    """A product of factors with distinct (signal, delay) pairs."""

    factors: tuple[Factor, ...]

    def __post_init__(self):
        if not self.factors:
            raise ValueError("a term needs at least one factor")
        keys = [(f.signal, f.delay) for f in self.factors]
        if keys != sorted(keys):
            raise ValueError("factors must be sorted by (signal, delay)")
        if len(set(keys)) != len(keys):
            raise ValueError("repeated (signal, delay) factors must be merged")

    @classmethod
    def from_factors(cls, factors: Iterable[Factor]) -> "Term":
        """Merge repeated (signal, delay) pairs into exponents and sort."""
        exponents: dict[tuple[str, int], int] = {}
        for factor in factors:
            key = (factor.signal, factor.delay)
            exponents[key] = exponents.get(key, 0) + factor.exponent
        merged = tuple(
            Factor(signal, delay, exponent)
            for (signal, delay), exponent in sorted(exponents.items())
        )
        return cls(merged)

    def max_delay(self) -> int:
        return max(f.delay for f in self.factors)


@dataclass(frozen=True)
class NarxExpression:
    """Canonical polynomial model structure; coefficients live elsewhere."""

    terms: tuple[Term, ...] = ()
    noise_term: bool = True

    def __post_init__(self):
        if list(self.terms) != sorted(self.terms):
            raise ValueError("terms must be sorted")
        if len(set(self.terms)) != len(self.terms):
            raise ValueError("duplicate terms must be collapsed")

    @classmethod
    def from_terms(cls, terms: Iterable[Term], noise_term: bool = True) -> "NarxExpression":
        unique = sorted(set(terms))
        return cls(tuple(unique), noise_term)

    def max_delay(self) -> int:
        return max((term.max_delay() for term in self.terms), default=0)


def parse_yield(leaves: Sequence[Symbol | str]) -> NarxExpression:
    """Parse the leaf string of a saturated derived tree into an expression.

    The accepted token language is
        xi ('+' 'c' '*' factor ('*' factor)*)*
    with factor = 'q^-1'* ('u' | 'y'); repeated factors merge into exponents,
    duplicate monomials collapse, and undelayed output factors are rejected.
    """
    names = [leaf.name if isinstance(leaf, Symbol) else str(leaf) for leaf in leaves]
    pos = 0

    def fail(message: str):
        raise MalformedYield(f"{message} at token {pos} of {names}")

    def peek() -> str | None:
        return names[pos] if pos < len(names) else None

    def take(expected: str):
        nonlocal pos
        if peek() != expected:
            fail(f"expected {expected!r}, found {peek()!r}")
        pos += 1

    take(NOISE_TOKEN)
    terms: list[Term] = []
    while pos < len(names):
        take(PLUS_TOKEN)
        take(COEFFICIENT_TOKEN)
        factors: list[Factor] = []
        while True:
            take(TIMES_TOKEN)
            delay = 0
            while peek() == DELAY_TOKEN:
                take(DELAY_TOKEN)
                delay += 1
            signal = peek()
            if signal not in (INPUT, OUTPUT):
                fail(f"expected a signal token, found {signal!r}")
            if signal == OUTPUT and delay == 0:
                fail("output factor with zero delay")
            take(signal)
            factors.append(Factor(signal, delay))
            if peek() != TIMES_TOKEN:
                break
        terms.append(Term.from_factors(factors))
    return NarxExpression.from_terms(terms, noise_term=True)


# --- textual form ---------------------------------------------------------
#
# Terms print as products like "u[k-1]^2*y[k-3]"; a full expression joins
# coefficient-scaled terms with +/- and ends in "xi[k]" when the noise sample
# is present.

_FACTOR_RE = re.compile(r"^([uy])\[k(?:-(\d+))?\](?:\^(\d+))?$")


def format_factor(factor: Factor) -> str:
    base = f"{factor.signal}[k]" if factor.delay == 0 else f"{factor.signal}[k-{factor.delay}]"
    return base if factor.exponent == 1 else f"{base}^{factor.exponent}"


def format_term(term: Term) -> str:
    return "*".join(format_factor(f) for f in term.factors)


def format_structure(expression: NarxExpression) -> str:
    """Coefficient-free structure text, e.g. "u[k] + y[k-1]^3"."""
    if not expression.terms:
        return ""
    return " + ".join(format_term(term) for term in expression.terms)


def format_expression(expression: NarxExpression, parameters: Sequence[float] | None = None) -> str:
    """Human-readable model text, optionally with per-term coefficients."""
    pieces: list[str] = []
    for index, term in enumerate(expression.terms):
        text = format_term(term)
        if parameters is None:
            pieces.append(("+ " if pieces else "") + text)
        else:
            value = float(parameters[index])
            sign = "- " if value < 0 else ("+ " if pieces else "")
            pieces.append(f"{sign}{abs(value):.6g}*{text}")
    if expression.noise_term:
        pieces.append(("+ " if pieces else "") + "xi[k]")
    return " ".join(pieces) if pieces else "0"


def parse_structure(text: str) -> tuple[Term, ...]:
    """Parse coefficient-free structure text into terms, preserving order.

    "xi[k]" entries are accepted and skipped; coefficients belong in a
    separate parameter vector, so minus signs are rejected here.
    """
    stripped = text.strip()
    if not stripped:
        return ()
    terms: list[Term] = []
    for chunk in stripped.split("+"):
        chunk = chunk.strip()
        if not chunk:
            raise ExpressionSyntaxError(f"empty term in {text!r}")
        if chunk == "xi[k]":
            continue
        factors: list[Factor] = []
        for part in chunk.split("*"):
            part = part.strip()
            match = _FACTOR_RE.match(part)
            if match is None:
                raise ExpressionSyntaxError(f"cannot parse factor {part!r} in {text!r}")
            signal, delay, exponent = match.groups()
            try:
                factors.append(Factor(signal, int(delay or 0), int(exponent or 1)))
            except ValueError as exc:
                raise ExpressionSyntaxError(f"invalid factor {part!r}: {exc}") from None
        terms.append(Term.from_factors(factors))
    return tuple(terms)
