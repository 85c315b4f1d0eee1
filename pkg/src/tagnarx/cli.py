"""Batch command-line front-end.

Subcommands: `identify` runs the full search from a JSON config and writes
Pareto reports, per-iteration history, and figures; `evaluate` scores a saved
model report on a CSV dataset; `validate-grammar` checks a grammar document;
`synthesize` writes synthetic benchmark CSVs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .data import Dataset, SplitSpec, build_input, load_csv, split, synthesize, write_csv
from .errors import ConfigError, TagNarxError
from .evolution import GpConfig, run
from .grammar import g_narx, restrict
from .model import NarxModel, prediction_residuals, simulation_residuals, rms
from .moo import Individual
from .reports import (
    build_model_report,
    load_model_report,
    render_figures,
    write_history_csv,
    write_manifest,
    write_pareto_csv,
    write_pareto_json,
)
from .trees import grammar_from_json, validate_grammar

ENV_OUTPUT_DIR = "TAGNARX_OUTPUT_DIR"

_GP_KEYS = {
    "population_size",
    "iterations",
    "max_adjunctions",
    "p_crossover",
    "p_mutation",
    "seed",
    "early_stop_simulation_rms",
}
_TOP_KEYS = _GP_KEYS | {"aux_subset", "data", "output_dir", "threads"}


@dataclass(frozen=True)
class RunConfig:
    gp: GpConfig
    data: dict
    output_dir: Path
    threads: int


def _default_output_dir() -> Path:
    return Path(os.environ.get(ENV_OUTPUT_DIR, "tagnarx-out"))


def parse_run_config(
    doc: dict,
    seed: int | None = None,
    output_dir: str | None = None,
    threads: int | None = None,
) -> RunConfig:
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "data" not in doc:
        raise ConfigError("config needs a 'data' section")
    data = doc["data"]
    if data.get("kind") not in ("csv", "synthetic"):
        raise ConfigError("data.kind must be 'csv' or 'synthetic'")

    grammar = g_narx()
    if "aux_subset" in doc:
        grammar = restrict(grammar, doc["aux_subset"])
    gp_fields = {key: doc[key] for key in _GP_KEYS if key in doc}
    if seed is not None:
        gp_fields["seed"] = seed
    gp = GpConfig(grammar=grammar, **gp_fields)

    out = Path(output_dir) if output_dir else Path(doc.get("output_dir", _default_output_dir()))
    effective_threads = threads if threads is not None else int(doc.get("threads", 1))
    if effective_threads < 1:
        raise ConfigError("threads must be at least 1")
    return RunConfig(gp=gp, data=data, output_dir=out, threads=effective_threads)


def _synthetic_records(doc: dict) -> list[Dataset]:
    generator = NarxModel.from_structure(doc["structure"], doc["coefficients"])
    noise_std = float(doc.get("noise_std", 0.0))
    base_seed = int(doc.get("seed", 0))
    count = int(doc.get("records", 1))
    input_doc = dict(doc["input"])
    input_seed = int(input_doc.get("seed", 0))
    name = str(doc.get("name", "synthetic"))
    records = []
    for index in range(count):
        input_doc["seed"] = input_seed + index
        u = build_input(input_doc)
        records.append(
            synthesize(
                generator,
                u,
                noise_std=noise_std,
                seed=base_seed + index,
                name=f"{name}_r{index:02d}" if count > 1 else name,
            )
        )
    return records


def build_datasets(data_doc: dict):
    """Materialize the configured data source and apply its split."""
    spec = SplitSpec.from_doc(data_doc.get("split", {}))
    if data_doc["kind"] == "csv":
        paths = data_doc.get("paths", [])
        if not paths:
            raise ConfigError("data.paths must name at least one csv file")
        columns = (data_doc.get("u_column", "u"), data_doc.get("y_column", "y"))
        rate = float(data_doc.get("sample_rate", 1.0))
        datasets = [load_csv(path, columns=columns, sample_rate=rate) for path in paths]
        source = datasets[0] if len(datasets) == 1 else datasets
        return split(source, spec)
    return split(_synthetic_records(data_doc), spec)


def _cmd_identify(args) -> int:
    with open(args.config) as handle:
        doc = json.load(handle)
    config = parse_run_config(
        doc, seed=args.seed, output_dir=args.output_dir, threads=args.threads
    )
    estimation, validation, _ = build_datasets(config.data)
    if not estimation:
        raise ConfigError("the split leaves no estimation records; cannot fit parameters")
    if not validation:
        raise ConfigError("the split leaves no validation records; cannot score fitness")

    explored: dict[int, Individual] = {}

    def observer(stats, population):
        for individual in population:
            explored.setdefault(individual.id, individual)
        print(
            f"iter {stats.iteration:4d}  front={stats.front_size:3d}  "
            f"min_pred={stats.min_rms_prediction:.6g}  "
            f"min_sim={stats.min_rms_simulation:.6g}  "
            f"min_cx={stats.min_complexity}"
        )

    front, history = run(
        config.gp, estimation, validation, observer=observer, threads=config.threads
    )

    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_pareto_csv(out / "pareto.csv", front)
    write_pareto_json(out / "pareto.json", front)
    write_history_csv(out / "history.csv", history)
    write_manifest(
        out / "run_manifest.json",
        {
            "config": doc,
            "effective": {
                "population_size": config.gp.population_size,
                "iterations": config.gp.iterations,
                "max_adjunctions": config.gp.max_adjunctions,
                "p_crossover": config.gp.p_crossover,
                "p_mutation": config.gp.p_mutation,
                "early_stop_simulation_rms": config.gp.early_stop_simulation_rms,
                "aux_subset": sorted(config.gp.grammar.auxiliary_ids),
                "threads": config.threads,
                "output_dir": str(out),
            },
            "seed": config.gp.seed,
            "versions": {
                "tagnarx": __version__,
                "numpy": np.__version__,
                "python": sys.version.split()[0],
            },
        },
    )
    render_figures(
        out / "plots",
        history,
        front,
        [ind.fitness for ind in explored.values()],
    )
    print(f"wrote {out / 'pareto.csv'}")
    return 0


def _cmd_evaluate(args) -> int:
    with open(args.model) as handle:
        report_doc = json.load(handle)
    model = load_model_report(report_doc)
    dataset = load_csv(args.data, columns=(args.u_column, args.y_column))
    rms_prediction = rms(prediction_residuals(model, dataset))
    rms_simulation = rms(simulation_residuals(model, dataset))
    print(f"rms_prediction_volts: {rms_prediction:.9g}")
    print(f"rms_simulation_volts: {rms_simulation:.9g}")
    if args.output:
        report = build_model_report(model, rms_prediction, rms_simulation)
        with open(args.output, "w") as handle:
            json.dump(report, handle, indent=2)
            handle.write("\n")
    return 0


def _cmd_validate_grammar(args) -> int:
    with open(args.grammar) as handle:
        doc = json.load(handle)
    grammar = grammar_from_json(doc)
    violations = validate_grammar(grammar)
    if violations:
        for violation in violations:
            print(violation)
        return 1
    trees = len(grammar.initial_trees) + len(grammar.auxiliary_trees)
    print(f"grammar valid: {trees} elementary trees")
    return 0


def _cmd_synthesize(args) -> int:
    with open(args.spec) as handle:
        doc = json.load(handle)
    records = _synthetic_records(doc)
    out = Path(args.output_dir) if args.output_dir else _default_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    for record in records:
        path = out / f"{record.name}.csv"
        write_csv(path, record)
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tagnarx",
        description="Grammar-based structure and parameter identification of "
        "polynomial input-output models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    identify = sub.add_parser("identify", help="run identification from a JSON config")
    identify.add_argument("config", help="path to the run configuration JSON")
    identify.add_argument("--seed", type=int, default=None, help="override the config seed")
    identify.add_argument("--output-dir", default=None, help="override the output directory")
    identify.add_argument("--threads", type=int, default=None, help="cap evaluation workers")
    identify.set_defaults(func=_cmd_identify)

    evaluate = sub.add_parser("evaluate", help="score a saved model report on a CSV dataset")
    evaluate.add_argument("model", help="model report JSON")
    evaluate.add_argument("data", help="CSV dataset")
    evaluate.add_argument("--u-column", default="u")
    evaluate.add_argument("--y-column", default="y")
    evaluate.add_argument("--output", default=None, help="write the evaluation report JSON here")
    evaluate.set_defaults(func=_cmd_evaluate)

    validate = sub.add_parser("validate-grammar", help="check a grammar JSON document")
    validate.add_argument("grammar", help="grammar JSON")
    validate.set_defaults(func=_cmd_validate_grammar)

    synth = sub.add_parser("synthesize", help="write synthetic benchmark CSVs")
    synth.add_argument("spec", help="synthetic data spec JSON")
    synth.add_argument("--output-dir", default=None)
    synth.set_defaults(func=_cmd_synthesize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TagNarxError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
