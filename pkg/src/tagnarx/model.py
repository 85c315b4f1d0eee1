"""Executable models: regressor construction, least-squares estimation,
one-step-ahead prediction, and free-run simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import Dataset, as_records
from .errors import EmptySeries, NonFiniteRegressor, SeriesTooShort
from .expressions import NarxExpression, OUTPUT, Term, parse_structure

DIVERGENCE_FACTOR = 100.0


@dataclass(frozen=True, eq=False)
class SignalSeries:
    """A run of samples starting at a given sample index of its dataset."""

    samples: np.ndarray
    start_index: int = 0
    diverged: bool = False

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True, eq=False)
class NarxModel:
    """An expression plus its estimated per-term coefficients (volts per
    regressor unit)."""

    expression: NarxExpression
    parameters: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        params = np.asarray(self.parameters, dtype=float)
        if params.ndim != 1:
            raise ValueError("parameters must be a vector")
        if len(params) != len(self.expression.terms):
            raise ValueError(
                f"{len(params)} parameters for {len(self.expression.terms)} terms"
            )
        if not np.isfinite(params).all():
            raise ValueError("parameters must be finite")
        object.__setattr__(self, "parameters", params)

    @classmethod
    def from_structure(
        cls, structure: str | Sequence[str], coefficients: Sequence[float]
    ) -> "NarxModel":
        """Build a model from structure text plus aligned coefficients.

        Terms are canonicalized jointly with their coefficients; duplicate
        monomials have their coefficients summed.
        """
        if isinstance(structure, str):
            terms = parse_structure(structure)
        else:
            terms = tuple(t for text in structure for t in parse_structure(text))
        if len(terms) != len(coefficients):
            raise ValueError(
                f"{len(coefficients)} coefficients for {len(terms)} terms"
            )
        merged: dict[Term, float] = {}
        for term, value in zip(terms, coefficients):
            merged[term] = merged.get(term, 0.0) + float(value)
        ordered = sorted(merged)
        expression = NarxExpression(tuple(ordered))
        return cls(expression, np.array([merged[t] for t in ordered]))


def max_lag(expression: NarxExpression) -> int:
    """Largest delay used by any factor; zero for the empty expression."""
    return expression.max_delay()


def _series(values) -> np.ndarray:
    if isinstance(values, SignalSeries):
        return values.samples
    return np.asarray(values, dtype=float)


def regressor_matrix(expression: NarxExpression, u, y) -> np.ndarray:
    """Monomials of the expression evaluated on measured data.

    Row t (for sample k = max_lag .. N-1) and column i hold the product of the
    delayed signal powers of term i at time k.
    """
    u = _series(u)
    y = _series(y)
    if len(u) != len(y):
        raise ValueError(f"u has {len(u)} samples but y has {len(y)}")
    lag = max_lag(expression)
    n = len(u)
    if n <= lag:
        raise SeriesTooShort(f"{n} samples cannot cover lag {lag}")
    rows = n - lag
    signals = {"u": u, "y": y}
    matrix = np.empty((rows, len(expression.terms)))
    for col, term in enumerate(expression.terms):
        column = np.ones(rows)
        for factor in term.factors:
            shifted = signals[factor.signal][lag - factor.delay : n - factor.delay]
            column = column * shifted**factor.exponent
        matrix[:, col] = column
    return matrix


def estimate_ls(expression: NarxExpression, estimation) -> NarxModel:
    """Least-squares coefficients of the one-step-ahead predictor.

    Estimation data may span several records; per-record regressor blocks are
    stacked so no regressor straddles a record boundary.  Rank-deficient
    problems get the minimum-norm solution and a degeneracy flag.
    """
    records = as_records(estimation)
    if not records:
        raise SeriesTooShort("estimation split holds no records")
    lag = max_lag(expression)
    blocks = []
    targets = []
    for record in records:
        blocks.append(regressor_matrix(expression, record.u, record.y))
        targets.append(record.y[lag:])
    phi = np.vstack(blocks)
    target = np.concatenate(targets)
    if phi.size and not np.isfinite(phi).all():
        raise NonFiniteRegressor("regressor matrix holds non-finite entries")
    p = len(expression.terms)
    if p == 0:
        return NarxModel(expression, np.zeros(0))
    solution, _, rank, _ = np.linalg.lstsq(phi, target, rcond=None)
    return NarxModel(expression, solution, degenerate=rank < p)


def predict_one_step(model: NarxModel, dataset: Dataset) -> SignalSeries:
    """Model output from measured past inputs and outputs, for k >= max_lag."""
    lag = max_lag(model.expression)
    phi = regressor_matrix(model.expression, dataset.u, dataset.y)
    if len(model.parameters) == 0:
        return SignalSeries(np.zeros(len(phi)), start_index=lag)
    return SignalSeries(phi @ model.parameters, start_index=lag)


def _term_program(expression: NarxExpression):
    return [
        tuple((factor.signal == OUTPUT, factor.delay, factor.exponent) for factor in term.factors)
        for term in expression.terms
    ]


def _free_run(
    expression: NarxExpression,
    parameters: np.ndarray,
    u: np.ndarray,
    y_start: np.ndarray,
    noise: np.ndarray | None,
    bound: float,
) -> tuple[np.ndarray, bool]:
    """Iterate the model feeding back its own outputs.

    Returns the full-length output (warm-start prefix included) and whether
    the response left [-bound, bound]; after divergence remaining samples are
    zero.
    """
    lag = len(y_start)
    n = len(u)
    program = _term_program(expression)
    coefficients = [float(c) for c in parameters]
    u_list = [float(v) for v in u]
    y_list = [float(v) for v in y_start] + [0.0] * (n - lag)
    diverged = False
    for k in range(lag, n):
        value = 0.0
        for coefficient, factors in zip(coefficients, program):
            product = coefficient
            for is_output, delay, exponent in factors:
                sample = y_list[k - delay] if is_output else u_list[k - delay]
                product *= sample if exponent == 1 else sample**exponent
            value += product
        if noise is not None:
            value += float(noise[k - lag])
        if not math.isfinite(value) or abs(value) > bound:
            diverged = True
            break
        y_list[k] = value
    return np.array(y_list), diverged


def simulate(model: NarxModel, dataset: Dataset) -> SignalSeries:
    """Free-run simulation: measured inputs, fed-back outputs, noise at zero.

    The first max_lag outputs are taken from the measured data.  If the
    response exceeds 100x the measured output peak the series is marked
    diverged rather than raising; divergence later maps to infinite fitness.
    """
    lag = max_lag(model.expression)
    n = len(dataset)
    if n <= lag:
        raise SeriesTooShort(f"{n} samples cannot cover lag {lag}")
    bound = DIVERGENCE_FACTOR * float(np.abs(dataset.y).max())
    y, diverged = _free_run(
        model.expression, model.parameters, dataset.u, dataset.y[:lag], noise=None, bound=bound
    )
    return SignalSeries(y[lag:], start_index=lag, diverged=diverged)


def prediction_residuals(model: NarxModel, dataset: Dataset) -> SignalSeries:
    lag = max_lag(model.expression)
    predicted = predict_one_step(model, dataset)
    return SignalSeries(dataset.y[lag:] - predicted.samples, start_index=lag)


def simulation_residuals(model: NarxModel, dataset: Dataset) -> SignalSeries:
    lag = max_lag(model.expression)
    simulated = simulate(model, dataset)
    return SignalSeries(
        dataset.y[lag:] - simulated.samples, start_index=lag, diverged=simulated.diverged
    )


def rms(series) -> float:
    """Root mean square; infinite for diverged series, error when empty."""
    if isinstance(series, SignalSeries):
        if series.diverged:
            return math.inf
        values = series.samples
    else:
        values = np.asarray(series, dtype=float)
    if len(values) == 0:
        raise EmptySeries("rms of an empty series")
    if not np.isfinite(values).all():
        return math.inf
    return float(np.sqrt(np.mean(values**2)))
