"""Fitness of a candidate structure: prediction error, simulation error, and
parameter count, with coefficients fitted on the estimation split and errors
measured on the validation split."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import as_records
from .expressions import NarxExpression
from .model import (
    NarxModel,
    estimate_ls,
    prediction_residuals,
    simulation_residuals,
)


@dataclass(frozen=True)
class FitnessVector:
    """Objectives to minimize, in fixed order: (prediction, simulation,
    complexity).  RMS values are volts; +inf marks degenerate or diverged
    candidates."""

    rms_prediction: float
    rms_simulation: float
    complexity: int

    def __post_init__(self):
        if self.rms_prediction < 0 or self.rms_simulation < 0:
            raise ValueError("rms objectives must be nonnegative")
        if self.complexity < 0:
            raise ValueError("complexity must be nonnegative")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.rms_prediction, self.rms_simulation, float(self.complexity))


def complexity(expression: NarxExpression) -> int:
    """Number of real parameters: one per term, none for the noise sample."""
    return len(expression.terms)


def _stacked_rms(residual_blocks) -> float:
    total = 0.0
    count = 0
    for block in residual_blocks:
        if block.diverged:
            return math.inf
        values = block.samples
        if not np.isfinite(values).all():
            return math.inf
        total += float(np.sum(values**2))
        count += len(values)
    if count == 0:
        raise ValueError("no validation samples beyond the model lag")
    return math.sqrt(total / count)


def evaluate(
    expression: NarxExpression, estimation, validation
) -> tuple[NarxModel, FitnessVector]:
    """Fit on the estimation records, score on the validation records.

    Degenerate fits get +inf in both error objectives; diverged simulation
    gets +inf in the simulation objective only.
    """
    model = estimate_ls(expression, estimation)
    p = complexity(expression)
    if model.degenerate:
        return model, FitnessVector(math.inf, math.inf, p)
    records = as_records(validation)
    pred = _stacked_rms([prediction_residuals(model, r) for r in records])
    sim = _stacked_rms([simulation_residuals(model, r) for r in records])
    return model, FitnessVector(pred, sim, p)
