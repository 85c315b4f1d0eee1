"""Run artifacts: delimited outputs, model reports, and rendered figures."""

from __future__ import annotations

import csv
import json
import math
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .expressions import format_expression, format_term
from .model import NarxModel
from .moo import Individual, ParetoFront, dominates
from .objectives import FitnessVector


def build_model_report(
    model: NarxModel,
    rms_prediction: float,
    rms_simulation: float,
    identifier: int | None = None,
) -> dict:
    degenerate = bool(model.degenerate)
    diverged = math.isinf(rms_simulation) and not degenerate
    report = {
        "expression": format_expression(model.expression, model.parameters),
        "terms": [format_term(term) for term in model.expression.terms],
        "parameters": [float(p) for p in model.parameters],
        "complexity": len(model.expression.terms),
        "rms_prediction": float(rms_prediction),
        "rms_simulation": float(rms_simulation),
        "degenerate": degenerate,
        "diverged": diverged,
    }
    if identifier is not None:
        report["id"] = identifier
    return report


def model_report(individual: Individual) -> dict:
    fitness = individual.fitness
    return build_model_report(
        individual.model, fitness.rms_prediction, fitness.rms_simulation, individual.id
    )


def load_model_report(doc: dict) -> NarxModel:
    return NarxModel.from_structure(doc["terms"], doc["parameters"])


def _check_non_dominated(front: ParetoFront) -> None:
    for a in front.members:
        for b in front.members:
            if a is not b and dominates(a.fitness, b.fitness):
                raise ValueError("pareto export contains dominated rows")


def _fmt(value: float) -> str:
    return repr(float(value))


def write_pareto_csv(path, front: ParetoFront) -> None:
    _check_non_dominated(front)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", "complexity", "rms_prediction", "rms_simulation", "expression"])
        for member in front.members:
            fitness = member.fitness
            writer.writerow(
                [
                    member.id,
                    fitness.complexity,
                    _fmt(fitness.rms_prediction),
                    _fmt(fitness.rms_simulation),
                    format_expression(member.expression, member.model.parameters),
                ]
            )


def write_pareto_json(path, front: ParetoFront) -> None:
    reports = [model_report(member) for member in front.members]
    with open(path, "w") as handle:
        json.dump(reports, handle, indent=2)
        handle.write("\n")


def write_history_csv(path, history) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            [
                "iteration",
                "min_rms_prediction",
                "mean_rms_prediction",
                "min_rms_simulation",
                "mean_rms_simulation",
                "min_complexity",
                "mean_complexity",
                "front_size",
            ]
        )
        for stats in history:
            writer.writerow(
                [
                    stats.iteration,
                    _fmt(stats.min_rms_prediction),
                    _fmt(stats.mean_rms_prediction),
                    _fmt(stats.min_rms_simulation),
                    _fmt(stats.mean_rms_simulation),
                    stats.min_complexity,
                    _fmt(stats.mean_complexity),
                    stats.front_size,
                ]
            )


def write_manifest(path, doc: dict) -> None:
    with open(path, "w") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _finite(values):
    return [v for v in values if math.isfinite(v)]


def render_figures(
    plots_dir,
    history,
    front: ParetoFront,
    evaluated: Sequence[FitnessVector] = (),
) -> list:
    """Render the three run figures as SVG files and return their paths."""
    plots_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    iterations = [s.iteration for s in history]
    panels = [
        ("prediction RMS (V)", "min_rms_prediction", "mean_rms_prediction", "log"),
        ("simulation RMS (V)", "min_rms_simulation", "mean_rms_simulation", "log"),
        ("complexity", "min_complexity", "mean_complexity", "linear"),
    ]
    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
    for axis, (label, min_name, mean_name, scale) in zip(axes, panels):
        mins = [getattr(s, min_name) for s in history]
        means = [getattr(s, mean_name) for s in history]
        axis.plot(iterations, [v if math.isfinite(v) else float("nan") for v in mins], label="min")
        axis.plot(
            iterations,
            [v if math.isfinite(v) else float("nan") for v in means],
            label="mean",
            linestyle="--",
        )
        axis.set_ylabel(label)
        if scale == "log" and any(math.isfinite(v) and v > 0 for v in mins):
            axis.set_yscale("log")
        axis.legend(loc="upper right", fontsize="small")
    axes[-1].set_xlabel("iteration")
    fig.suptitle("Evolution of performance measures")
    fig.tight_layout()
    path = plots_dir / "fitness_evolution.svg"
    fig.savefig(path)
    plt.close(fig)
    paths.append(path)

    for objective, filename, label in (
        ("rms_simulation", "pareto_sim_vs_complexity.svg", "simulation RMS (V)"),
        ("rms_prediction", "pareto_pred_vs_complexity.svg", "prediction RMS (V)"),
    ):
        fig, axis = plt.subplots(figsize=(6, 4.5))
        cloud_x = []
        cloud_y = []
        for fitness in evaluated:
            value = getattr(fitness, objective)
            if math.isfinite(value):
                cloud_x.append(fitness.complexity)
                cloud_y.append(value)
        if cloud_x:
            axis.scatter(cloud_x, cloud_y, s=6, color="0.7", label="explored models")
        front_x = [m.fitness.complexity for m in front.members]
        front_y = [getattr(m.fitness, objective) for m in front.members]
        keep = [i for i, v in enumerate(front_y) if math.isfinite(v)]
        axis.scatter(
            [front_x[i] for i in keep],
            [front_y[i] for i in keep],
            s=40,
            color="k",
            zorder=3,
            label="pareto front",
        )
        if _finite(cloud_y + front_y):
            axis.set_yscale("log")
        axis.set_xlabel("complexity (number of parameters)")
        axis.set_ylabel(label)
        axis.legend(loc="upper right", fontsize="small")
        fig.tight_layout()
        path = plots_dir / filename
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)
    return paths
