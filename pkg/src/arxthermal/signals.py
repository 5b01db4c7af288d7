"""Time-series containers, CSV ingestion and ambient-temperature preprocessing.

Every signal is uniformly sampled. A dataset bundles one or more input
signals (dissipated power, optionally extra measured temperatures) with the
output temperature and an ambient reference.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .errors import DataError, ParameterError, ParseError, SchemaError

AMBIENT_MODES = ("explicit", "mean-first-m", "per-sample")
DEFAULT_MEAN_SAMPLES = 10
UNIFORM_RTOL = 1e-6


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Signal:
    """Uniformly sampled real-valued time series.

    Parameters
    ----------
    samples : array_like
        Sample values, one per time step.
    dt : float
        Sampling step in seconds.
    """

    samples: np.ndarray
    dt: float

    def __post_init__(self):
        samples = _frozen_array(self.samples)
        dt = float(self.dt)
        if not (math.isfinite(dt) and dt > 0):
            raise ParameterError(f"dt must be positive and finite, got {self.dt!r}")
        if samples.size == 0:
            raise ParameterError("a signal needs at least one sample")
        bad = np.flatnonzero(~np.isfinite(samples))
        if bad.size:
            raise DataError(f"non-finite sample at index {bad[0]}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "dt", dt)

    def __len__(self):
        return self.samples.size

    @property
    def time(self) -> np.ndarray:
        return np.arange(len(self)) * self.dt

    def with_samples(self, samples) -> "Signal":
        return Signal(samples, self.dt)


@dataclass(frozen=True, eq=False)
class IdentDataset:
    """Aligned input/output signals used for identification or validation.

    ``inputs`` maps input names to signals in model order. ``ambient`` is a
    scalar reference temperature, a per-sample :class:`Signal`, or ``None``.
    """

    inputs: Mapping[str, Signal]
    output: Signal
    ambient: float | Signal | None = None
    label: str = ""
    output_name: str = "T"

    def __post_init__(self):
        inputs = dict(self.inputs)
        if not inputs:
            raise ParameterError("a dataset needs at least one input signal")
        n, dt = len(self.output), self.output.dt
        members = list(inputs.items()) + [(self.output_name, self.output)]
        if isinstance(self.ambient, Signal):
            members.append(("ambient", self.ambient))
        elif self.ambient is not None:
            ambient = float(self.ambient)
            if not math.isfinite(ambient):
                raise DataError("ambient temperature must be finite")
            object.__setattr__(self, "ambient", ambient)
        for name, sig in members:
            if not isinstance(sig, Signal):
                raise ParameterError(f"{name!r} is not a Signal")
            if len(sig) != n:
                raise ParameterError(
                    f"signal {name!r} has {len(sig)} samples, expected {n}"
                )
            if sig.dt != dt:
                raise ParameterError(f"signal {name!r} has dt={sig.dt}, expected {dt}")
        object.__setattr__(self, "inputs", inputs)

    def __len__(self):
        return len(self.output)

    @property
    def dt(self) -> float:
        return self.output.dt

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(self.inputs)

    def input_matrix(self) -> np.ndarray:
        """Inputs stacked as columns, shape ``(N, n_inputs)``."""
        return np.column_stack([s.samples for s in self.inputs.values()])


@dataclass(frozen=True)
class Preprocessing:
    """How the ambient temperature is removed from (and re-added to) the output.

    ``offset`` is ``None`` until resolved against a dataset by
    :func:`preprocess`. Once resolved, passing the same object to
    :func:`preprocess` for another dataset reuses the offset unchanged, which
    is how validation data gets the training offset.
    """

    mode: str = "explicit"
    offset: float | None = None
    m: int = DEFAULT_MEAN_SAMPLES

    def __post_init__(self):
        if self.mode not in AMBIENT_MODES:
            raise ParameterError(
                f"unknown ambient mode {self.mode!r}; expected one of {AMBIENT_MODES}"
            )
        if int(self.m) != self.m or self.m < 1:
            raise ParameterError(f"m must be a positive integer, got {self.m!r}")
        if self.offset is not None:
            object.__setattr__(self, "offset", float(self.offset))

    def _reference(self, n: int, ambient) -> np.ndarray | float:
        if self.mode == "per-sample":
            if not isinstance(ambient, Signal):
                raise ParameterError("per-sample ambient mode needs an ambient signal")
            if len(ambient) != n:
                raise ParameterError("ambient signal length does not match output")
            return ambient.samples
        if self.offset is None:
            raise ParameterError("preprocessing offset has not been resolved")
        return self.offset

    def apply(self, output: Signal, ambient: Signal | None = None) -> Signal:
        """Subtract the ambient reference from ``output``."""
        return output.with_samples(output.samples - self._reference(len(output), ambient))

    def invert(self, rise: Signal, ambient: Signal | None = None) -> Signal:
        """Re-add the ambient reference, undoing :meth:`apply`."""
        return rise.with_samples(rise.samples + self._reference(len(rise), ambient))


def preprocess(
    dataset: IdentDataset, mode: Preprocessing | None = None
) -> tuple[IdentDataset, Preprocessing]:
    """Turn the output temperature into a rise above ambient.

    Parameters
    ----------
    dataset : IdentDataset
        Raw dataset.
    mode : Preprocessing, optional
        Ambient handling. An unresolved ``explicit`` mode takes the offset
        from the dataset's scalar ambient. When omitted, the mode is inferred
        from the dataset: scalar ambient gives ``explicit``, an ambient
        signal gives ``per-sample``, no ambient gives ``mean-first-m``.

    Returns
    -------
    (IdentDataset, Preprocessing)
        The dataset with its output replaced by the rise, and the
        preprocessing with its offset resolved. Inputs are untouched.
    """
    if mode is None:
        if isinstance(dataset.ambient, Signal):
            mode = Preprocessing("per-sample")
        elif dataset.ambient is not None:
            mode = Preprocessing("explicit")
        else:
            mode = Preprocessing("mean-first-m")

    n = len(dataset)
    if mode.mode == "per-sample" and dataset.ambient is not None \
            and not isinstance(dataset.ambient, Signal):
        # a scalar ambient is a constant per-sample column
        dataset = replace(dataset, ambient=Signal(np.full(n, float(dataset.ambient)),
                                                  dataset.dt))
    offset = mode.offset
    if mode.mode == "explicit" and offset is None:
        if dataset.ambient is None or isinstance(dataset.ambient, Signal):
            raise ParameterError("explicit ambient mode needs a scalar ambient value")
        offset = dataset.ambient
    elif mode.mode == "mean-first-m" and offset is None:
        if mode.m > n:
            raise ParameterError(f"m={mode.m} exceeds the {n} available samples")
        offset = float(np.mean(dataset.output.samples[: mode.m]))
    elif mode.mode == "per-sample" and offset is None:
        if not isinstance(dataset.ambient, Signal):
            raise ParameterError("per-sample ambient mode needs an ambient signal")
        # nominal value, used only when re-adding ambient without a column
        offset = float(np.mean(dataset.ambient.samples))

    resolved = replace(mode, offset=offset)
    ambient = dataset.ambient if isinstance(dataset.ambient, Signal) else None
    rise = resolved.apply(dataset.output, ambient)
    return replace(dataset, output=rise), resolved


def restore(rise: Signal, prep: Preprocessing, ambient: Signal | float | None = None) -> Signal:
    """Inverse of the output preprocessing."""
    return prep.invert(rise, ambient if isinstance(ambient, Signal) else None)


# --------------------------------------------------------------------------
# CSV ingestion

@dataclass(frozen=True)
class DatasetSchema:
    """Mapping of CSV columns to dataset roles.

    ``ambient`` is either a column name or a scalar temperature.
    """

    output: str
    inputs: tuple[str, ...]
    time: str | None = None
    ambient: str | float | None = None

    def __post_init__(self):
        inputs = (self.inputs,) if isinstance(self.inputs, str) else tuple(self.inputs)
        if not inputs:
            raise ParameterError("schema needs at least one input column")
        object.__setattr__(self, "inputs", inputs)

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> "DatasetSchema":
        """Build a schema from ``{"input"|"inputs": ..., "output": ..., ...}``."""
        inputs = mapping.get("inputs", mapping.get("input"))
        if inputs is None or "output" not in mapping:
            raise ParameterError("schema must name an output and at least one input")
        return cls(
            output=mapping["output"],
            inputs=inputs,
            time=mapping.get("time"),
            ambient=mapping.get("ambient"),
        )


def read_columns(path) -> dict[str, np.ndarray]:
    """Read a numeric CSV with a header row into a dict of column arrays.

    Raises
    ------
    ParseError
        Ragged row or non-numeric cell; the message gives the line number.
    DataError
        NaN or infinite cell; the message gives the line and sample index.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise ParseError(f"{path}: duplicate column names in header")
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: line {line}: expected {len(header)} fields, got {len(row)}"
                )
            values = []
            for name, cell in zip(header, row):
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: line {line}: non-numeric value {cell.strip()!r} "
                        f"in column {name!r}"
                    ) from None
                if not math.isfinite(value):
                    raise DataError(
                        f"{path}: line {line} (sample {len(rows)}): non-finite "
                        f"value in column {name!r}"
                    )
                values.append(value)
            rows.append(values)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    table = np.array(rows, dtype=float)
    return {name: table[:, i] for i, name in enumerate(header)}


def check_uniform(time: np.ndarray, dt: float, rtol: float = UNIFORM_RTOL) -> None:
    """Raise :class:`DataError` unless ``time`` advances by ``dt`` every step."""
    steps = np.diff(np.asarray(time, dtype=float))
    bad = np.flatnonzero(np.abs(steps - dt) > rtol * dt)
    if bad.size:
        i = bad[0]
        raise DataError(
            f"non-uniform sampling between samples {i} and {i + 1}: "
            f"step {steps[i]!r}, expected {dt!r}"
        )


def infer_dt(time: np.ndarray) -> float:
    if len(time) < 2:
        raise DataError("cannot infer dt from fewer than two time stamps")
    return float(time[1] - time[0])


def load_dataset(path, schema: DatasetSchema | Mapping, dt: float, label: str = "") -> IdentDataset:
    """Load an identification dataset from CSV.

    Parameters
    ----------
    path : path-like
        Comma-separated file with one header row.
    schema : DatasetSchema or mapping
        Column roles. A mapping such as ``{"input": "P", "output": "T"}``
        is accepted.
    dt : float
        Sampling step in seconds. A time column, if named, is only checked
        for uniformity against it.
    """
    if not isinstance(schema, DatasetSchema):
        schema = DatasetSchema.from_mapping(schema)
    columns = read_columns(path)

    def column(name, role):
        if name not in columns:
            raise SchemaError(f"{role} column {name} not found in {path}")
        return columns[name]

    if schema.time is not None:
        check_uniform(column(schema.time, "time"), dt)
    inputs = {name: Signal(column(name, "input"), dt) for name in schema.inputs}
    output = Signal(column(schema.output, "output"), dt)
    ambient = schema.ambient
    if isinstance(ambient, str):
        ambient = Signal(column(ambient, "ambient"), dt)
    return IdentDataset(inputs, output, ambient, label=label or str(path),
                        output_name=schema.output)


def format_number(x: float) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def save_dataset(dataset: IdentDataset, path, time_name: str = "t",
                 ambient_name: str = "T_amb") -> DatasetSchema:
    """Write a dataset as CSV and return the schema that reads it back.

    A scalar ambient is written as a constant column so the file is
    self-contained.
    """
    n = len(dataset)
    header = [time_name, *dataset.input_names, dataset.output_name]
    cols = [dataset.output.time, *(s.samples for s in dataset.inputs.values()),
            dataset.output.samples]
    if dataset.ambient is not None:
        header.append(ambient_name)
        if isinstance(dataset.ambient, Signal):
            cols.append(dataset.ambient.samples)
        else:
            cols.append(np.full(n, dataset.ambient))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for k in range(n):
            writer.writerow([format_number(c[k]) for c in cols])
    return DatasetSchema(
        output=dataset.output_name,
        inputs=dataset.input_names,
        time=time_name,
        ambient=ambient_name if dataset.ambient is not None else None,
    )
