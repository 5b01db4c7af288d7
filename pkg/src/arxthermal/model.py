"""Identified ARX models: prediction, free-run simulation, stability, files."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.signal import lfilter, lfiltic

from .errors import DivergenceError, ParameterError, ParseError, ShapeError, VersionError
from .regression import ArxOrders, split_coefficients
from .signals import IdentDataset, Preprocessing, Signal

FORMAT_VERSION = 1


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ArxModel:
    """ARX model ``A(q) y = sum_j q^-(nk_j - 1) B_j(q) u_j``.

    ``a`` holds ``a_1..a_na`` with the sign convention of the difference
    equation, i.e. the recursion uses ``-a_i``. ``threshold`` and ``rank``
    record the SVD truncation the coefficients came from.
    """

    a: np.ndarray
    b: tuple[np.ndarray, ...]
    nk: tuple[int, ...]
    dt: float
    input_names: tuple[str, ...]
    preprocessing: Preprocessing | None = None
    threshold: float = 0.0
    rank: int | None = None

    def __post_init__(self):
        a = _frozen(self.a)
        b = tuple(_frozen(x) for x in self.b)
        nk = tuple(int(k) for k in self.nk)
        names = tuple(self.input_names)
        if not (len(b) == len(nk) == len(names)) or not b:
            raise ParameterError("b, nk and input_names need one entry per input")
        # validates orders
        ArxOrders(max(a.size, 1), tuple(x.size for x in b), nk)
        if a.size < 1:
            raise ParameterError("na must be >= 1")
        for arr in (a, *b):
            if not np.all(np.isfinite(arr)):
                raise ParameterError("model coefficients must be finite")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ParameterError(f"dt must be positive, got {self.dt!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "nk", nk)
        object.__setattr__(self, "input_names", names)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "threshold", float(self.threshold))

    @classmethod
    def from_theta(cls, theta, orders: ArxOrders, dt: float, input_names: Sequence[str],
                   preprocessing: Preprocessing | None = None, threshold: float = 0.0,
                   rank: int | None = None) -> "ArxModel":
        """Build a model from the stacked ``(-a, b_1, b_2, ...)`` vector."""
        a, b = split_coefficients(theta, orders)
        return cls(a, b, orders.nk, dt, tuple(input_names), preprocessing, threshold, rank)

    @property
    def na(self) -> int:
        return self.a.size

    @property
    def nb(self) -> tuple[int, ...]:
        return tuple(x.size for x in self.b)

    @property
    def orders(self) -> ArxOrders:
        return ArxOrders(self.na, self.nb, self.nk)

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([-self.a, *self.b])

    def denominator(self) -> np.ndarray:
        """``[1, a_1, ..., a_na]`` in powers of ``q^-1``."""
        return np.concatenate([[1.0], self.a])

    def numerator(self, j: int) -> np.ndarray:
        """Input ``j`` polynomial in powers of ``q^-1``; lag ``i`` sits at ``i + nk - 1``."""
        nk, b = self.nk[j], self.b[j]
        num = np.zeros(nk + b.size)
        num[nk : nk + b.size] = b
        return num

    def __eq__(self, other):
        if not isinstance(other, ArxModel):
            return NotImplemented
        return (
            np.array_equal(self.a, other.a)
            and len(self.b) == len(other.b)
            and all(np.array_equal(x, y) for x, y in zip(self.b, other.b))
            and self.nk == other.nk
            and self.dt == other.dt
            and self.input_names == other.input_names
            and self.preprocessing == other.preprocessing
            and self.threshold == other.threshold
            and self.rank == other.rank
        )

    __hash__ = None


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    spectral_radius: float


def check_stability(model: ArxModel) -> StabilityVerdict:
    """Largest root magnitude of ``z^na + a_1 z^(na-1) + ... + a_na``.

    Roots come from the companion-matrix eigenvalues. Stability is strict:
    a root on the unit circle counts as unstable.
    """
    roots = np.roots(model.denominator())
    radius = float(np.max(np.abs(roots))) if roots.size else 0.0
    return StabilityVerdict(radius < 1.0, radius)


def _input_arrays(model: ArxModel, inputs) -> list[np.ndarray]:
    """Line ``inputs`` up with ``model.input_names`` as float arrays."""
    if isinstance(inputs, IdentDataset):
        inputs = inputs.inputs
    if isinstance(inputs, Mapping):
        if len(inputs) != len(model.input_names):
            raise ShapeError(
                f"model expects {len(model.input_names)} inputs "
                f"{list(model.input_names)}, got {len(inputs)}"
            )
        missing = [n for n in model.input_names if n not in inputs]
        if missing:
            raise ShapeError(f"input {missing[0]!r} required by the model is missing")
        values = [inputs[n] for n in model.input_names]
    elif isinstance(inputs, Signal):
        values = [inputs]
    else:
        arr = inputs
        if isinstance(arr, np.ndarray) and arr.ndim == 2:
            values = list(arr.T)
        elif isinstance(arr, np.ndarray) and arr.ndim == 1:
            values = [arr]
        else:
            values = list(arr)
    arrays = [np.asarray(v.samples if isinstance(v, Signal) else v, dtype=float)
              for v in values]
    if len(arrays) != len(model.input_names):
        raise ShapeError(
            f"model expects {len(model.input_names)} inputs, got {len(arrays)}"
        )
    if len({a.size for a in arrays}) != 1:
        raise ShapeError("input signals differ in length")
    return arrays


def _first_nonfinite(y: np.ndarray) -> int | None:
    bad = np.flatnonzero(~np.isfinite(y))
    return int(bad[0]) if bad.size else None


def simulate_free_run(model: ArxModel, inputs, initial_outputs=None) -> Signal:
    """Free-run simulation: every past output is the model's own.

    Parameters
    ----------
    model : ArxModel
    inputs : IdentDataset, mapping, Signal or array
        Input signals, matched to ``model.input_names`` by name when a
        mapping or dataset is given, by position otherwise.
    initial_outputs : sequence of float, optional
        The ``na`` outputs before sample 0, oldest first. Defaults to zeros
        (system at ambient). Inputs before sample 0 are taken as zero.

    Raises
    ------
    DivergenceError
        A sample became non-finite; ``index`` is the first such sample.
    """
    arrays = _input_arrays(model, inputs)
    den = model.denominator()
    y = np.zeros(arrays[0].size)
    with np.errstate(over="ignore", invalid="ignore"):
        for j, u in enumerate(arrays):
            y += lfilter(model.numerator(j), den, u)
        if initial_outputs is not None:
            seeds = np.asarray(initial_outputs, dtype=float).reshape(-1)
            if seeds.size != model.na:
                raise ShapeError(f"need {model.na} initial outputs, got {seeds.size}")
            if np.any(seeds):
                zi = lfiltic([1.0], den, seeds[::-1])
                y += lfilter([1.0], den, np.zeros_like(y), zi=zi)[0]
    bad = _first_nonfinite(y)
    if bad is not None:
        raise DivergenceError(bad)
    return Signal(y, model.dt)


def predict_one_step(model: ArxModel, dataset: IdentDataset, add_ambient: bool = False) -> Signal:
    """One-step-ahead prediction from measured past outputs and inputs.

    Samples before ``k0`` are copied from the measurement. With
    ``add_ambient`` the model's ambient offset is re-added to the result.
    """
    arrays = _input_arrays(model, dataset)
    y = dataset.output.samples
    n, k0 = y.size, model.orders.k0
    if n <= k0:
        raise ShapeError(f"dataset has {n} samples, one-step prediction needs more than {k0}")
    pred = y.copy()
    acc = np.zeros(n - k0)
    for i, ai in enumerate(model.a, start=1):
        acc -= ai * y[k0 - i : n - i]
    for u, b, nk in zip(arrays, model.b, model.nk):
        for i, bi in enumerate(b, start=1):
            shift = i + nk - 1
            acc += bi * u[k0 - shift : n - shift]
    pred[k0:] = acc
    out = Signal(pred, dataset.dt)
    if add_ambient:
        out = readd_ambient(model, out, dataset.ambient)
    return out


def readd_ambient(model: ArxModel, rise: Signal, ambient=None) -> Signal:
    """Convert a predicted rise back to absolute temperature."""
    prep = model.preprocessing
    if prep is None:
        raise ParameterError("model carries no preprocessing to invert")
    if prep.mode == "per-sample" and isinstance(ambient, Signal):
        return prep.invert(rise, ambient)
    if prep.mode == "per-sample" and ambient is not None:
        return rise.with_samples(rise.samples + float(ambient))
    return rise.with_samples(rise.samples + prep.offset)


# --------------------------------------------------------------------------
# model files

def _model_to_dict(model: ArxModel) -> dict:
    prep = model.preprocessing
    return {
        "format_version": FORMAT_VERSION,
        "kind": "arx",
        "dt": model.dt,
        "na": model.na,
        "a": model.a.tolist(),
        "inputs": [
            {"name": name, "nb": int(b.size), "nk": nk, "b": b.tolist()}
            for name, b, nk in zip(model.input_names, model.b, model.nk)
        ],
        "preprocessing": None if prep is None else {
            "mode": prep.mode, "offset": prep.offset, "m": prep.m,
        },
        "regularization": {"threshold": model.threshold, "rank": model.rank},
    }


def dumps_model(model: ArxModel) -> str:
    # json writes floats with repr(), the shortest string that round-trips exactly
    return json.dumps(_model_to_dict(model), indent=2) + "\n"


def loads_model(text: str, source: str = "<string>") -> ArxModel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: malformed model file: {exc}") from None
    if not isinstance(data, dict) or "format_version" not in data:
        raise ParseError(f"{source}: not a model file (no format_version)")
    if data["format_version"] != FORMAT_VERSION:
        raise VersionError(
            f"{source}: unsupported model format version {data['format_version']!r} "
            f"(this library reads version {FORMAT_VERSION})"
        )
    try:
        inputs = data["inputs"]
        for spec in inputs:
            if len(spec["b"]) != spec["nb"]:
                raise ParseError(f"{source}: input {spec['name']!r} has nb={spec['nb']} "
                                 f"but {len(spec['b'])} coefficients")
        if len(data["a"]) != data["na"]:
            raise ParseError(f"{source}: na={data['na']} but {len(data['a'])} a-coefficients")
        prep = data.get("preprocessing")
        reg = data.get("regularization") or {}
        return ArxModel(
            a=data["a"],
            b=tuple(spec["b"] for spec in inputs),
            nk=tuple(spec["nk"] for spec in inputs),
            dt=data["dt"],
            input_names=tuple(spec["name"] for spec in inputs),
            preprocessing=None if prep is None else Preprocessing(
                prep["mode"], prep["offset"], prep["m"]),
            threshold=reg.get("threshold", 0.0),
            rank=reg.get("rank"),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{source}: malformed model file: missing or bad field {exc}") from None
    except ParameterError as exc:
        raise ParseError(f"{source}: invalid model: {exc}") from None


def save_model(model: ArxModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> ArxModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read(), str(path))
