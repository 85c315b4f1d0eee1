"""Dataset ingestion, record-aware splitting, and synthetic benchmark data.

Multi-record data (several independent excitation realizations) is kept as a
tuple of datasets rather than one concatenated series, so lagged regressors
never straddle record boundaries.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    Diverged,
    MissingColumn,
    NonFiniteSample,
    RangeOutOfBounds,
    SplitOverlap,
)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Paired input/output samples in volts; sample_rate is metadata only."""

    u: np.ndarray
    y: np.ndarray
    name: str = "dataset"
    sample_rate: float = 1.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if u.ndim != 1 or y.ndim != 1:
            raise ValueError("signals must be one-dimensional")
        if len(u) != len(y):
            raise ValueError(f"u has {len(u)} samples but y has {len(y)}")
        if len(u) == 0:
            raise ValueError("a dataset needs at least one sample")
        if not (np.isfinite(u).all() and np.isfinite(y).all()):
            raise ValueError("datasets must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return len(self.u)


Records = tuple[Dataset, ...]


def as_records(data: Dataset | Sequence[Dataset]) -> Records:
    if isinstance(data, Dataset):
        return (data,)
    return tuple(data)


IndexRanges = tuple[tuple[int, int], ...]


def _normalize_ranges(ranges) -> IndexRanges:
    out = []
    for item in ranges:
        start, stop = int(item[0]), int(item[1])
        if start < 0 or stop < start:
            raise ValueError(f"bad index range ({start}, {stop})")
        out.append((start, stop))
    return tuple(out)


@dataclass(frozen=True)
class SplitSpec:
    """Half-open index ranges assigning data to the three roles.

    Ranges index records when splitting a record list, and samples when
    splitting a single dataset.  Estimation and validation must not overlap.
    """

    estimation: IndexRanges = ()
    validation: IndexRanges = ()
    test: IndexRanges = ()

    def __post_init__(self):
        object.__setattr__(self, "estimation", _normalize_ranges(self.estimation))
        object.__setattr__(self, "validation", _normalize_ranges(self.validation))
        object.__setattr__(self, "test", _normalize_ranges(self.test))

    @classmethod
    def from_doc(cls, doc: dict) -> "SplitSpec":
        return cls(
            estimation=tuple(doc.get("estimation", ())),
            validation=tuple(doc.get("validation", ())),
            test=tuple(doc.get("test", ())),
        )

    def to_doc(self) -> dict:
        return {
            "estimation": [list(r) for r in self.estimation],
            "validation": [list(r) for r in self.validation],
            "test": [list(r) for r in self.test],
        }


def load_csv(
    path,
    columns: tuple[str, str] = ("u", "y"),
    name: str | None = None,
    sample_rate: float = 1.0,
) -> Dataset:
    """Read a comma-separated file with a header row into a dataset.

    Rows holding non-finite or unparseable samples are rejected with their
    1-based file line number.
    """
    u_name, y_name = columns
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        for wanted in (u_name, y_name):
            if wanted not in header:
                raise MissingColumn(f"{path}: no column named {wanted!r} in {header}")
        u_col = header.index(u_name)
        y_col = header.index(y_name)

        u_values: list[float] = []
        y_values: list[float] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            for col in (u_col, y_col):
                if col >= len(row):
                    raise NonFiniteSample(line_no, f"{path}: row {line_no} is too short")
                try:
                    value = float(row[col])
                except ValueError:
                    raise NonFiniteSample(
                        line_no, f"{path}: row {line_no} holds non-numeric {row[col]!r}"
                    ) from None
                if not math.isfinite(value):
                    raise NonFiniteSample(
                        line_no, f"{path}: row {line_no} holds non-finite {row[col]!r}"
                    )
            u_values.append(float(row[u_col]))
            y_values.append(float(row[y_col]))
    return Dataset(
        np.array(u_values), np.array(y_values), name=name or str(path), sample_rate=sample_rate
    )


def write_csv(path, dataset: Dataset, columns: tuple[str, str] = ("u", "y")) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for u, y in zip(dataset.u, dataset.y):
            writer.writerow([repr(float(u)), repr(float(y))])


def _check_ranges(ranges: IndexRanges, upper: int, what: str) -> None:
    for start, stop in ranges:
        if stop > upper:
            raise RangeOutOfBounds(f"{what} range ({start}, {stop}) exceeds size {upper}")


def _indices(ranges: IndexRanges) -> set[int]:
    out: set[int] = set()
    for start, stop in ranges:
        out.update(range(start, stop))
    return out


def split(
    data: Dataset | Sequence[Dataset], spec: SplitSpec
) -> tuple[Records, Records, Records]:
    """Carve (estimation, validation, test) record tuples out of the data.

    A record list is indexed by record; a single dataset is indexed by sample
    and each contiguous range becomes one record of the result.
    """
    overlap = _indices(spec.estimation) & _indices(spec.validation)
    if overlap:
        raise SplitOverlap(
            f"estimation and validation ranges share indices (e.g. {min(overlap)})"
        )
    if isinstance(data, Dataset):
        upper = len(data)

        def cut(ranges: IndexRanges) -> Records:
            return tuple(
                Dataset(
                    data.u[start:stop],
                    data.y[start:stop],
                    name=f"{data.name}[{start}:{stop}]",
                    sample_rate=data.sample_rate,
                )
                for start, stop in ranges
                if stop > start
            )

    else:
        records = tuple(data)
        upper = len(records)

        def cut(ranges: IndexRanges) -> Records:
            return tuple(r for start, stop in ranges for r in records[start:stop])

    for ranges, what in (
        (spec.estimation, "estimation"),
        (spec.validation, "validation"),
        (spec.test, "test"),
    ):
        _check_ranges(ranges, upper, what)
    return cut(spec.estimation), cut(spec.validation), cut(spec.test)


# --- synthetic data -----------------------------------------------------------

_GENERATOR_GUARD = 1e12


def synthesize(
    generator,
    u: np.ndarray,
    noise_std: float = 0.0,
    seed: int = 0,
    name: str = "synthetic",
    sample_rate: float = 1.0,
) -> Dataset:
    """Drive a model with `u` and additive white Gaussian noise of the given
    standard deviation; deterministic per seed.

    The first max-lag outputs are initialized to zero.  Raises Diverged if the
    response leaves the admissible amplitude range.
    """
    from .model import _free_run, max_lag

    u = np.asarray(u, dtype=float)
    lag = max_lag(generator.expression)
    if len(u) <= lag:
        raise Diverged(f"input shorter than the generator lag {lag}")
    rng = np.random.default_rng(seed)
    noise = None
    if noise_std > 0:
        noise = noise_std * rng.standard_normal(len(u) - lag)
    y, diverged = _free_run(
        generator.expression,
        generator.parameters,
        u,
        np.zeros(lag),
        noise=noise,
        bound=_GENERATOR_GUARD,
    )
    if diverged:
        raise Diverged(f"generator response exceeded |y| = {_GENERATOR_GUARD:g}")
    return Dataset(u, y, name=name, sample_rate=sample_rate)


def gaussian_input(length: int, amplitude: float, seed: int, smooth: int = 8) -> np.ndarray:
    """Low-pass style excitation: moving-average smoothed white noise scaled
    to the requested peak amplitude."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal(length + max(smooth, 1) - 1)
    if smooth > 1:
        kernel = np.ones(smooth) / smooth
        raw = np.convolve(raw, kernel, mode="valid")
    raw = raw[:length]
    peak = np.abs(raw).max()
    if peak == 0:
        return np.zeros(length)
    return amplitude * raw / peak


def multisine_input(length: int, amplitude: float, seed: int, tones: int = 32) -> np.ndarray:
    """Random-phase multisine over the first `tones` harmonics of the window,
    scaled to the requested peak amplitude."""
    rng = np.random.default_rng(seed)
    k = np.arange(length)
    signal = np.zeros(length)
    for harmonic in range(1, tones + 1):
        phase = rng.uniform(0, 2 * np.pi)
        signal += np.cos(2 * np.pi * harmonic * k / length + phase)
    peak = np.abs(signal).max()
    if peak == 0:
        return np.zeros(length)
    return amplitude * signal / peak


def build_input(doc: dict) -> np.ndarray:
    """Input signal from a config document {kind, amplitude, length, seed, ...}."""
    kind = doc.get("kind", "gaussian")
    length = int(doc["length"])
    amplitude = float(doc["amplitude"])
    seed = int(doc.get("seed", 0))
    if kind == "gaussian":
        return gaussian_input(length, amplitude, seed, smooth=int(doc.get("smooth", 8)))
    if kind == "multisine":
        return multisine_input(length, amplitude, seed, tones=int(doc.get("tones", 32)))
    raise ValueError(f"unknown input kind {kind!r}")
