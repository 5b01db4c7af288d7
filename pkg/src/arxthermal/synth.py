"""Synthetic ground truth: ARX processes, Foster RC networks, power profiles.

A Foster network of ``s`` parallel RC stages sampled with a zero-order hold
on the power is exactly an ARX model with ``na = nb = s`` and ``nk = 1``,
which makes it a convenient physical stand-in with a closed-form answer.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, ParameterError
from .model import ArxModel, check_stability, simulate_free_run
from .signals import IdentDataset, Signal

RNG_ALGORITHM = "PCG64"


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator; the bit generator is pinned so datasets regenerate identically."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class FosterNetwork:
    """Foster thermal network: ``stages`` is a sequence of ``(R [K/W], tau [s])``."""

    stages: tuple[tuple[float, float], ...]
    ambient: float = 25.0

    def __post_init__(self):
        stages = tuple((float(r), float(t)) for r, t in self.stages)
        if not stages:
            raise ParameterError("a Foster network needs at least one stage")
        for r, t in stages:
            if not (r > 0 and t > 0 and math.isfinite(r) and math.isfinite(t)):
                raise ParameterError(f"stage R and tau must be positive, got ({r}, {t})")
        object.__setattr__(self, "stages", stages)
        object.__setattr__(self, "ambient", float(self.ambient))

    @property
    def steady_state_gain(self) -> float:
        return sum(r for r, _ in self.stages)

    def poles(self, dt: float) -> np.ndarray:
        return np.array([math.exp(-dt / t) for _, t in self.stages])

    def equivalent_arx(self, dt: float, input_name: str = "P") -> ArxModel:
        """The ARX model that reproduces this network exactly at step ``dt``.

        Each stage is ``g_i q^-1 / (1 - p_i q^-1)`` with ``p_i = exp(-dt/tau_i)``
        and ``g_i = R_i (1 - p_i)``; putting the stages over a common
        denominator gives ``na = nb = s`` and ``nk = 1``.
        """
        poles = self.poles(dt)
        gains = [r * (1 - p) for (r, _), p in zip(self.stages, poles)]
        den = np.array([1.0])
        for p in poles:
            den = np.convolve(den, [1.0, -p])
        num = np.zeros(len(poles))
        for i, g in enumerate(gains):
            rest = np.array([1.0])
            for j, p in enumerate(poles):
                if j != i:
                    rest = np.convolve(rest, [1.0, -p])
            num += g * rest
        return ArxModel(den[1:], (num,), (1,), dt, (input_name,))


@dataclass(frozen=True)
class PowerProfile:
    """Piecewise-constant power: ``segments`` of ``(duration [s], level [W])``."""

    segments: tuple[tuple[float, float], ...]
    dt: float

    def __post_init__(self):
        object.__setattr__(self, "segments",
                           tuple((float(d), float(l)) for d, l in self.segments))
        if not self.segments:
            raise ParameterError("a power profile needs at least one segment")
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt!r}")


def build_profile(profile: PowerProfile) -> Signal:
    """Expand a profile into samples; every duration must be a multiple of dt."""
    pieces = []
    for duration, level in profile.segments:
        steps = duration / profile.dt
        n = round(steps)
        if duration <= 0 or abs(steps - n) > 1e-9 * max(1.0, steps):
            raise ParameterError(
                f"segment duration {duration} s is not a positive multiple of dt={profile.dt}"
            )
        pieces.append(np.full(n, level))
    return Signal(np.concatenate(pieces), profile.dt)


def simulate_foster(network: FosterNetwork, power: Signal, input_name: str = "P",
                    output_name: str = "T", label: str = "foster") -> IdentDataset:
    """Exact zero-order-hold response of ``network`` to ``power``, from ambient.

    Per stage ``x[k+1] = p x[k] + R (1 - p) P[k]`` with ``p = exp(-dt/tau)``;
    the temperature is ambient plus the sum of stage states.
    """
    dt = power.dt
    rise = np.zeros(len(power))
    for (r, _), p in zip(network.stages, network.poles(dt)):
        rise += lfilter([0.0, r * (1 - p)], [1.0, -p], power.samples)
    temp = Signal(network.ambient + rise, dt)
    return IdentDataset({input_name: power}, temp, network.ambient, label=label,
                        output_name=output_name)


def generate_arx(model: ArxModel, inputs, noise_std: float = 0.0, seed: int = 0,
                 output_name: str = "T", label: str = "") -> IdentDataset:
    """Sample an ARX process with white equation error ``e[k] ~ N(0, noise_std^2)``.

    The output starts from rest. With ``noise_std=0`` it equals
    :func:`simulate_free_run` exactly.
    """
    if not noise_std >= 0:
        raise ParameterError(f"noise_std must be non-negative, got {noise_std!r}")
    if not check_stability(model).stable:
        warnings.warn("generating data from an unstable ARX model", RuntimeWarning,
                      stacklevel=2)
    if isinstance(inputs, Signal):
        inputs = {model.input_names[0]: inputs}
    elif isinstance(inputs, IdentDataset):
        inputs = inputs.inputs
    elif not isinstance(inputs, Mapping):
        inputs = {n: (s if isinstance(s, Signal) else Signal(s, model.dt))
                  for n, s in zip(model.input_names, inputs)}
    y = simulate_free_run(model, inputs).samples
    if noise_std > 0:
        e = make_rng(seed).normal(0.0, noise_std, y.size)
        y = y + lfilter([1.0], model.denominator(), e)
    label = label or f"arx seed={seed} rng={RNG_ALGORITHM} noise_std={noise_std!r}"
    first = next(iter(inputs.values()))
    return IdentDataset(dict(inputs), Signal(y, first.dt), 0.0, label=label,
                        output_name=output_name)


def add_measurement_noise(dataset: IdentDataset, relative_std: float = 0.0,
                          seed: int = 0, noise_std: float | None = None,
                          rng: np.random.Generator | None = None) -> IdentDataset:
    """Add white sensor noise to the output.

    The standard deviation is ``noise_std`` if given, else ``relative_std``
    times the standard deviation of the clean output.
    """
    if noise_std is None:
        if not relative_std >= 0:
            raise ParameterError("relative_std must be non-negative")
        noise_std = relative_std * float(np.std(dataset.output.samples))
    if not noise_std >= 0:
        raise ParameterError("noise_std must be non-negative")
    if noise_std == 0:
        return dataset
    rng = rng if rng is not None else make_rng(seed)
    y = dataset.output.samples + rng.normal(0.0, noise_std, len(dataset))
    return IdentDataset(dataset.inputs, dataset.output.with_samples(y), dataset.ambient,
                        label=dataset.label, output_name=dataset.output_name)


# --------------------------------------------------------------------------
# scenarios

DEFAULT_STAGES = ((0.8, 2.0), (0.4, 30.0))
# heat to near steady state, then cool back to ambient
DEFAULT_TRAINING = ((10.0, 0.0), (200.0, 100.0), (200.0, 0.0))
# several operating points, short dwell
DEFAULT_VALIDATION = ((30.0, 20.0), (30.0, 60.0), (30.0, 100.0), (30.0, 40.0),
                      (30.0, 80.0), (30.0, 0.0), (60.0, 50.0), (60.0, 0.0))
# few operating points, long dwell
DEFAULT_VALIDATION_LONG = ((150.0, 70.0), (150.0, 30.0), (100.0, 0.0))


@dataclass(frozen=True)
class Scenario:
    """A synthetic bench: network, sampling, profiles and sensor noise.

    ``noise_std`` is absolute (K). ``noise_fraction`` is relative to each
    output's own standard deviation; both add up if both are set.
    """

    stages: tuple[tuple[float, float], ...] = DEFAULT_STAGES
    ambient: float = 25.0
    dt: float = 0.1
    training_profile: tuple[tuple[float, float], ...] = DEFAULT_TRAINING
    validation_profile: tuple[tuple[float, float], ...] = DEFAULT_VALIDATION
    noise_std: float = 0.0
    noise_fraction: float = 0.0
    seed: int = 42
    rng: str = field(default=RNG_ALGORITHM)

    def __post_init__(self):
        if not self.stages:
            raise ConfigError("scenario needs at least one Foster stage")
        if not (self.noise_std >= 0 and self.noise_fraction >= 0):
            raise ConfigError("noise levels must be non-negative")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt!r}")
        if self.rng != RNG_ALGORITHM:
            raise ConfigError(f"unsupported rng {self.rng!r}; only {RNG_ALGORITHM}")
        try:
            self.network
            build_profile(PowerProfile(self.training_profile, self.dt))
            build_profile(PowerProfile(self.validation_profile, self.dt))
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def network(self) -> FosterNetwork:
        return FosterNetwork(self.stages, self.ambient)

    def to_dict(self) -> dict:
        return {
            "stages": [list(s) for s in self.stages],
            "ambient": self.ambient,
            "dt": self.dt,
            "training_profile": [list(s) for s in self.training_profile],
            "validation_profile": [list(s) for s in self.validation_profile],
            "noise_std": self.noise_std,
            "noise_fraction": self.noise_fraction,
            "seed": self.seed,
            "rng": self.rng,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Scenario":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        kwargs = dict(data)
        try:
            for key in ("stages", "training_profile", "validation_profile"):
                if key in kwargs:
                    kwargs[key] = tuple((float(a), float(b)) for a, b in kwargs[key])
            for key in ("ambient", "dt", "noise_std", "noise_fraction"):
                if key in kwargs:
                    kwargs[key] = float(kwargs[key])
            if "seed" in kwargs:
                kwargs["seed"] = int(kwargs["seed"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad scenario value: {exc}") from None
        return cls(**kwargs)

    def generate(self) -> tuple[IdentDataset, IdentDataset]:
        """Training and validation datasets, deterministic in ``seed``."""
        net = self.network
        rng = make_rng(self.seed)
        out = []
        for name, segs in (("training", self.training_profile),
                           ("validation", self.validation_profile)):
            power = build_profile(PowerProfile(segs, self.dt))
            ds = simulate_foster(net, power, label=f"{name} seed={self.seed}")
            std = self.noise_std + self.noise_fraction * float(np.std(ds.output.samples))
            ds = add_measurement_noise(ds, noise_std=std, rng=rng)
            out.append(ds)
        return out[0], out[1]


def load_scenario(path) -> Scenario:
    """Read a JSON scenario file; any problem surfaces as :class:`ConfigError`."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed scenario: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: scenario must be a JSON object")
    return Scenario.from_dict(data)


def random_input(n: int, dt: float, seed: int = 0, levels: Sequence[float] = (0.0, 1.0),
                 min_hold: int = 5, max_hold: int = 40) -> Signal:
    """Random piecewise-constant excitation with random hold lengths."""
    rng = make_rng(seed)
    out = np.empty(n)
    k = 0
    while k < n:
        hold = int(rng.integers(min_hold, max_hold + 1))
        out[k : k + hold] = rng.uniform(min(levels), max(levels))
        k += hold
    return Signal(out, dt)
