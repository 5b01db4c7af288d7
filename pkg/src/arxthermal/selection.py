"""Order and threshold selection with a train/validate split.

For every order triple the regression is solved once per SVD threshold, the
threshold giving the best training free-run fit is kept, and triples are then
ranked by training fit or AIC. Validation data is only ever simulated, never
used to choose anything.
"""
from __future__ import annotations

import csv
import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateError,
    DivergenceError,
    ParameterError,
    RankError,
    SelectionError,
    ShapeError,
    SizeError,
)
from .model import ArxModel, StabilityVerdict, check_stability, simulate_free_run
from .regression import (
    DEFAULT_THRESHOLD_COUNT,
    ArxOrders,
    ThresholdGrid,
    build_regression,
    default_threshold_grid,
    solve_least_squares,
    svd,
    truncate,
)
from .signals import IdentDataset, Preprocessing, Signal, format_number

log = logging.getLogger(__name__)

CRITERIA = ("fit", "aic")


def _samples(x) -> np.ndarray:
    return np.asarray(x.samples if isinstance(x, Signal) else x, dtype=float)


def fit_metric(measured, predicted) -> float:
    """Normalized fit in percent: ``100 (1 - |y - yhat| / |y - mean(y)|)``.

    100 is a perfect match, 0 is no better than the mean, and the value is
    negative for predictions worse than the mean.
    """
    y, yhat = _samples(measured), _samples(predicted)
    if y.shape != yhat.shape:
        raise ShapeError(f"measured has {y.size} samples, predicted {yhat.size}")
    if y.size < 2:
        raise ParameterError("fit needs at least two samples")
    spread = np.linalg.norm(y - y.mean())
    if spread == 0:
        raise DegenerateError("measured signal is constant; fit is undefined")
    return float(100.0 * (1.0 - np.linalg.norm(y - yhat) / spread))


def aic(sse: float, n_samples: int, n_params: int) -> float:
    """``N ln(SSE/N) + 2k``, with SSE floored at ``eps * N`` so it stays finite."""
    if n_samples <= 0:
        raise ParameterError("n_samples must be positive")
    if sse < 0:
        raise ParameterError("sse must be non-negative")
    floor = np.finfo(float).eps * n_samples
    return float(n_samples * math.log(max(sse, floor) / n_samples) + 2 * n_params)


@dataclass(frozen=True)
class SearchSpace:
    """Candidate orders.

    The ranges are explicit sequences so sparse grids are possible;
    :meth:`bounded` gives the contiguous ``1..Na``, ``1..Nb``, ``0..Nk`` grid.
    ``regularize=False`` restricts the threshold search to 0.
    """

    na_range: tuple[int, ...]
    nb_range: tuple[int, ...]
    nk_range: tuple[int, ...]
    threshold_count: int = DEFAULT_THRESHOLD_COUNT
    shared_orders_across_inputs: bool = True
    regularize: bool = True

    def __post_init__(self):
        for name, lo in (("na_range", 1), ("nb_range", 1), ("nk_range", 0)):
            values = tuple(int(v) for v in getattr(self, name))
            if not values:
                raise ParameterError(f"{name} is empty")
            if min(values) < lo:
                raise ParameterError(f"{name} values must be >= {lo}, got {min(values)}")
            object.__setattr__(self, name, tuple(sorted(set(values))))
        if int(self.threshold_count) != self.threshold_count or self.threshold_count < 1:
            raise ParameterError("threshold_count must be a positive integer")

    @classmethod
    def bounded(cls, na_max: int, nb_max: int, nk_max: int, **kwargs) -> "SearchSpace":
        if na_max < 1 or nb_max < 1 or nk_max < 0:
            raise ParameterError(
                f"need Na >= 1, Nb >= 1, Nk >= 0; got {na_max}, {nb_max}, {nk_max}"
            )
        return cls(tuple(range(1, na_max + 1)), tuple(range(1, nb_max + 1)),
                   tuple(range(0, nk_max + 1)), **kwargs)

    def orders(self, n_inputs: int) -> list[ArxOrders]:
        """All candidates in iteration order: na outer, nb middle, nk inner."""
        out = []
        for na in self.na_range:
            if self.shared_orders_across_inputs or n_inputs == 1:
                for nb, nk in itertools.product(self.nb_range, self.nk_range):
                    out.append(ArxOrders.shared(na, nb, nk, n_inputs))
            else:
                for nbs in itertools.product(self.nb_range, repeat=n_inputs):
                    for nks in itertools.product(self.nk_range, repeat=n_inputs):
                        out.append(ArxOrders(na, nbs, nks))
        return out


@dataclass(frozen=True)
class FitReport:
    fit_percent: float
    rmse: float
    aic: float
    orders: ArxOrders
    threshold: float
    rank_used: int | None
    prediction_mode: str
    stability: StabilityVerdict
    n_samples: int

    def to_dict(self) -> dict:
        na, nb, nk = self.orders.label()
        return {
            "fit_percent": self.fit_percent,
            "rmse": self.rmse,
            "aic": self.aic,
            "orders": {"na": na, "nb": nb, "nk": nk},
            "threshold": self.threshold,
            "rank_used": self.rank_used,
            "prediction_mode": self.prediction_mode,
            "stable": self.stability.stable,
            "spectral_radius": self.stability.spectral_radius,
            "n_samples": self.n_samples,
        }

    def summary(self) -> str:
        return (
            f"fit {self.fit_percent:.4g}% ({self.prediction_mode}), rmse {self.rmse:.4g}, "
            f"AIC {self.aic:.4g}, orders {self.orders.label()}, "
            f"threshold {self.threshold:.4g} (rank {self.rank_used}), "
            f"spectral radius {self.stability.spectral_radius:.4g}"
        )


def make_report(model: ArxModel, measured: Signal, predicted: Signal,
                prediction_mode: str, stability: StabilityVerdict | None = None) -> FitReport:
    y, yhat = _samples(measured), _samples(predicted)
    sse = float(np.sum((y - yhat) ** 2))
    return FitReport(
        fit_percent=fit_metric(y, yhat),
        rmse=math.sqrt(sse / y.size),
        aic=aic(sse, y.size, model.orders.n_params),
        orders=model.orders,
        threshold=model.threshold,
        rank_used=model.rank,
        prediction_mode=prediction_mode,
        stability=stability or check_stability(model),
        n_samples=int(y.size),
    )


def validate_model(model: ArxModel, dataset: IdentDataset) -> FitReport:
    """Free-run the model over ``dataset`` inputs and score it against the output.

    ``dataset`` must already carry the model's preprocessing.
    """
    predicted = simulate_free_run(model, dataset)
    return make_report(model, dataset.output, predicted, "free-run")


# --------------------------------------------------------------------------
# threshold search for fixed orders

@dataclass(frozen=True)
class ThresholdTrial:
    threshold: float
    rank: int
    train_fit: float
    spectral_radius: float

    @property
    def stable(self) -> bool:
        return self.spectral_radius < 1.0


@dataclass(frozen=True)
class ThresholdSearch:
    """Outcome of the SVD threshold loop for one set of orders."""

    orders: ArxOrders
    model: ArxModel | None
    train_fit: float
    trials: tuple[ThresholdTrial, ...]


def threshold_search(train: IdentDataset, orders: ArxOrders,
                     grid: ThresholdGrid | Sequence[float] | None = None,
                     threshold_count: int = DEFAULT_THRESHOLD_COUNT,
                     preprocessing: Preprocessing | None = None) -> ThresholdSearch:
    """Pick the SVD truncation threshold that maximizes training free-run fit.

    Each threshold removes singular values below it, the truncated
    pseudoinverse gives coefficients, and the resulting model is simulated
    over the training inputs. Stable models beat unstable ones; among equals
    the first (smallest) threshold with the highest fit wins. Threshold 0 is
    always tried, so truncation is only chosen when it helps.
    """
    problem = build_regression(train, orders)
    factors = svd(problem.phi)
    if grid is None:
        grid = default_threshold_grid(factors, threshold_count)
    y = train.output.samples
    best, best_key, trials = None, None, []
    for theta in grid:
        reduced = truncate(factors, theta)
        if reduced.rank == 0:
            trials.append(ThresholdTrial(theta, 0, math.nan, math.nan))
            continue
        coeffs = solve_least_squares(problem, reduced)
        model = ArxModel.from_theta(coeffs, orders, train.dt, train.input_names,
                                    preprocessing, threshold=theta, rank=reduced.rank)
        verdict = check_stability(model)
        try:
            fit = fit_metric(y, simulate_free_run(model, train))
        except DivergenceError:
            fit = -math.inf
        trials.append(ThresholdTrial(theta, reduced.rank, fit, verdict.spectral_radius))
        key = (verdict.stable, fit)
        if best_key is None or key > best_key:
            best, best_key = model, key
    return ThresholdSearch(orders, best, best_key[1] if best_key else math.nan, tuple(trials))


# --------------------------------------------------------------------------
# grid search

@dataclass(frozen=True)
class Candidate:
    """One row of the candidate table."""

    orders: ArxOrders
    threshold: float
    rank: int
    train_fit: float
    val_fit: float
    aic: float
    spectral_radius: float
    stable: bool
    model: ArxModel | None = field(default=None, compare=False, repr=False)
    note: str = ""


@dataclass(frozen=True)
class SearchResult:
    model: ArxModel
    train_report: FitReport
    validation_report: FitReport
    candidates: tuple[Candidate, ...]
    criterion: str

    def __iter__(self):
        return iter((self.model, self.train_report, self.validation_report, self.candidates))


def _nan_candidate(orders, note):
    return Candidate(orders, math.nan, 0, math.nan, math.nan, math.nan, math.nan, False,
                     None, note)


def evaluate_candidate(orders: ArxOrders, train: IdentDataset, validate: IdentDataset,
                       threshold_count: int, regularize: bool,
                       preprocessing: Preprocessing | None) -> Candidate:
    """Threshold search on ``train`` then a free-run score on ``validate``."""
    try:
        search = threshold_search(train, orders,
                                  grid=None if regularize else (0.0,),
                                  threshold_count=threshold_count,
                                  preprocessing=preprocessing)
    except (SizeError, RankError) as exc:
        return _nan_candidate(orders, str(exc))
    model = search.model
    if model is None:
        return _nan_candidate(orders, "rank 0 at every threshold")
    verdict = check_stability(model)
    try:
        train_pred = simulate_free_run(model, train)
        report = make_report(model, train.output, train_pred, "free-run", verdict)
        train_fit, train_aic = report.fit_percent, report.aic
    except DivergenceError:
        train_fit, train_aic = -math.inf, math.inf
    try:
        val_fit = fit_metric(validate.output, simulate_free_run(model, validate))
    except DivergenceError:
        val_fit = -math.inf
    return Candidate(orders, model.threshold, model.rank, train_fit, val_fit, train_aic,
                     verdict.spectral_radius, verdict.stable, model)


def grid_search(train: IdentDataset, validate: IdentDataset, space: SearchSpace,
                criterion: str = "aic", preprocessing: Preprocessing | None = None,
                executor=None) -> SearchResult:
    """Select ARX orders and SVD threshold on training data, report validation fit.

    Parameters
    ----------
    train, validate : IdentDataset
        Both preprocessed with the same :class:`Preprocessing`.
    space : SearchSpace
    criterion : {"aic", "fit"}
        Ranking of order triples: lowest training AIC or highest training
        free-run fit. Unstable candidates never win.
    preprocessing : Preprocessing, optional
        Stored in the returned model so predictions can re-add ambient.
    executor : concurrent.futures.Executor, optional
        Evaluate candidates in parallel. The table order does not depend on
        completion order.

    Raises
    ------
    SelectionError
        Every candidate is unstable or unusable.
    """
    if criterion not in CRITERIA:
        raise ParameterError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    if train.input_names != validate.input_names:
        raise ShapeError(
            f"training inputs {train.input_names} differ from validation inputs "
            f"{validate.input_names}"
        )
    order_list = space.orders(len(train.input_names))
    work = partial(evaluate_candidate, train=train, validate=validate,
                   threshold_count=space.threshold_count, regularize=space.regularize,
                   preprocessing=preprocessing)
    mapper = executor.map if executor is not None else map
    candidates = tuple(mapper(work, order_list))

    best, best_score = None, None
    for cand in candidates:
        if not cand.stable or cand.model is None:
            continue
        score = -cand.train_fit if criterion == "fit" else cand.aic
        if math.isnan(score):
            continue
        if best_score is None or score < best_score:
            best, best_score = cand, score
    if best is None:
        raise SelectionError(
            f"all {len(candidates)} candidates are unstable or unusable; "
            "widen the search space (larger Na/Nb, more delays) or check the data"
        )
    log.debug("selected orders %s at threshold %g", best.orders.label(), best.threshold)
    model = best.model
    train_report = validate_model(model, train)
    validation_report = validate_model(model, validate)
    return SearchResult(model, train_report, validation_report, candidates, criterion)


CANDIDATE_COLUMNS = ("na", "nb", "nk", "theta", "rank", "train_fit", "val_fit", "aic",
                     "spectral_radius", "stable")


def _order_cell(v) -> str:
    return str(v) if np.ndim(v) == 0 else "|".join(str(x) for x in v)


def write_candidate_table(candidates: Iterable[Candidate], path) -> None:
    """CSV with one row per candidate; per-input orders are joined with ``|``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CANDIDATE_COLUMNS)
        for c in candidates:
            na, nb, nk = c.orders.label()
            writer.writerow([
                na, _order_cell(nb), _order_cell(nk),
                format_number(c.threshold), c.rank,
                format_number(c.train_fit), format_number(c.val_fit),
                format_number(c.aic), format_number(c.spectral_radius),
                str(c.stable).lower(),
            ])
