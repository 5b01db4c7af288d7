"""Regressor construction and SVD-based least squares for ARX estimation.

The ARX difference equation

    y[k] = -sum_{i=1..na} a_i y[k-i] + sum_j sum_{i=1..nb_j} b_ji u_j[k-i-nk_j+1] + e[k]

is stacked row by row into ``target = phi @ theta + e`` with
``theta = (-a_1, ..., -a_na, b_11, ..., b_1nb_1, b_21, ...)``.
The solve always goes through the pseudoinverse built from the SVD of
``phi``; optionally small singular values are discarded first.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, ParameterError, RankError, ShapeError, SizeError
from .signals import IdentDataset

RANK_RTOL = 1e-14
DEFAULT_THRESHOLD_COUNT = 20
TOP_MARGIN = 1e-12


@dataclass(frozen=True)
class ArxOrders:
    """Model orders: ``na`` output lags and, per input, ``nb`` lags after ``nk`` delay."""

    na: int
    nb: tuple[int, ...]
    nk: tuple[int, ...]

    def __post_init__(self):
        nb = (self.nb,) if np.ndim(self.nb) == 0 else tuple(self.nb)
        nk = (self.nk,) if np.ndim(self.nk) == 0 else tuple(self.nk)
        if len(nb) != len(nk) or not nb:
            raise ParameterError("nb and nk need one entry per input")
        for v in (self.na, *nb, *nk):
            if int(v) != v:
                raise ParameterError(f"orders must be integers, got {v!r}")
        if self.na < 1:
            raise ParameterError(f"na must be >= 1, got {self.na}")
        if any(v < 1 for v in nb):
            raise ParameterError(f"every nb must be >= 1, got {nb}")
        if any(v < 0 for v in nk):
            raise ParameterError(f"every nk must be >= 0, got {nk}")
        object.__setattr__(self, "na", int(self.na))
        object.__setattr__(self, "nb", tuple(int(v) for v in nb))
        object.__setattr__(self, "nk", tuple(int(v) for v in nk))

    @classmethod
    def shared(cls, na: int, nb: int, nk: int, n_inputs: int = 1) -> "ArxOrders":
        return cls(na, (nb,) * n_inputs, (nk,) * n_inputs)

    @property
    def n_inputs(self) -> int:
        return len(self.nb)

    @property
    def n_params(self) -> int:
        return self.na + sum(self.nb)

    @property
    def k0(self) -> int:
        """First sample index whose regressor row uses no pre-history.

        The oldest input sample in row ``k`` is ``u[k - nb - nk + 1]``, so
        ``k0 = max(na, max_j(nb_j + nk_j - 1))``.
        """
        return max(self.na, max(b + k - 1 for b, k in zip(self.nb, self.nk)))

    def label(self) -> tuple:
        """``(na, nb, nk)`` with scalars when all inputs share orders."""
        nb = self.nb[0] if len(set(self.nb)) == 1 else self.nb
        nk = self.nk[0] if len(set(self.nk)) == 1 else self.nk
        return (self.na, nb, nk)


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    """Stacked regressors.

    Row ``r`` explains ``y[k0 + r]``. ``column_map[c]`` is ``("y", i)`` for
    output lag ``i`` or ``(input_name, i)`` for input lag ``i``.
    """

    phi: np.ndarray
    target: np.ndarray
    k0: int
    column_map: tuple[tuple[str, int], ...]
    orders: ArxOrders

    def sample_index(self, col: int, row: int) -> int:
        """Index into the source signal that fills ``phi[row, col]``."""
        name, i = self.column_map[col]
        k = self.k0 + row
        if name == "y":
            return k - i
        names = list(dict.fromkeys(n for n, _ in self.column_map if n != "y"))
        return k - i - self.orders.nk[names.index(name)] + 1


def build_regression(dataset: IdentDataset, orders: ArxOrders) -> RegressionProblem:
    """Build the regressor matrix and target for ``orders``.

    Rows referencing samples before index 0 are dropped, so the first row
    predicts ``y[k0]`` with ``k0 = max(na, max_j(nb_j + nk_j - 1))``.

    Raises
    ------
    ShapeError
        The orders describe a different number of inputs than the dataset.
    SizeError
        Fewer usable rows than unknowns.
    """
    names = dataset.input_names
    if orders.n_inputs != len(names):
        raise ShapeError(
            f"orders describe {orders.n_inputs} inputs, dataset has {len(names)}"
        )
    y = dataset.output.samples
    n = y.size
    k0 = orders.k0
    rows = n - k0
    if rows < orders.n_params:
        raise SizeError(
            f"{n} samples give {max(rows, 0)} regression rows; orders {orders.label()} "
            f"need at least {k0 + orders.n_params} samples"
        )
    cols = [y[k0 - i : n - i] for i in range(1, orders.na + 1)]
    column_map = [("y", i) for i in range(1, orders.na + 1)]
    for name, nb, nk in zip(names, orders.nb, orders.nk):
        u = dataset.inputs[name].samples
        for i in range(1, nb + 1):
            shift = i + nk - 1
            cols.append(u[k0 - shift : n - shift])
            column_map.append((name, i))
    phi = np.column_stack(cols)
    return RegressionProblem(phi, y[k0:].copy(), k0, tuple(column_map), orders)


@dataclass(frozen=True, eq=False)
class SvdFactors:
    """Thin SVD ``M = u @ diag(singular_values) @ v.T`` restricted to nonzero σ."""

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return self.singular_values.size

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.singular_values) @ self.v.T


def svd(phi: np.ndarray) -> SvdFactors:
    """Singular value decomposition keeping only numerically nonzero σ.

    Singular values below ``1e-14 * σ_1`` are treated as zero and dropped
    together with their singular vectors.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 2:
        raise ParameterError(f"expected a matrix, got shape {phi.shape}")
    if not np.all(np.isfinite(phi)):
        r, c = np.argwhere(~np.isfinite(phi))[0]
        raise DataError(f"non-finite matrix entry at ({r}, {c})")
    u, s, vt = np.linalg.svd(phi, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        keep = 0
    else:
        keep = int(np.count_nonzero(s > RANK_RTOL * s[0]))
    return SvdFactors(u[:, :keep], s[:keep], vt[:keep].T)


def truncate(factors: SvdFactors, threshold: float) -> SvdFactors:
    """Discard singular values strictly below ``threshold``.

    A threshold of 0 returns the factors unchanged; one above ``σ_1`` leaves
    rank 0, which is legal here and rejected later by the solver.
    """
    if not threshold >= 0:
        raise ParameterError(f"threshold must be non-negative, got {threshold!r}")
    if threshold == 0:
        return factors
    keep = int(np.count_nonzero(factors.singular_values >= threshold))
    return SvdFactors(factors.u[:, :keep], factors.singular_values[:keep],
                      factors.v[:, :keep])


def solve_least_squares(problem: RegressionProblem | np.ndarray, factors: SvdFactors,
                        target: np.ndarray | None = None) -> np.ndarray:
    """Minimum-norm least-squares coefficients ``v @ diag(1/σ) @ u.T @ target``.

    ``problem`` may be a :class:`RegressionProblem` or, with ``target``
    given, the bare matrix the factors came from.
    """
    if target is None:
        target = problem.target
    if factors.rank == 0:
        raise RankError("no singular values left after truncation (rank 0)")
    coeffs = factors.u.T @ np.asarray(target, dtype=float)
    return factors.v @ (coeffs / factors.singular_values)


@dataclass(frozen=True)
class ThresholdGrid:
    thresholds: tuple[float, ...]

    def __post_init__(self):
        t = tuple(float(x) for x in self.thresholds)
        if not t or t[0] != 0 or any(b < a for a, b in zip(t, t[1:])):
            raise ParameterError("threshold grid must be ascending and start at 0")
        object.__setattr__(self, "thresholds", t)

    def __iter__(self):
        return iter(self.thresholds)

    def __len__(self):
        return len(self.thresholds)


def default_threshold_grid(factors: SvdFactors, n: int = DEFAULT_THRESHOLD_COUNT) -> ThresholdGrid:
    """``{0}`` plus ``n`` thresholds geometrically spaced over ``[σ_r, σ_1(1+1e-12)]``.

    The top value sits just above ``σ_1`` so the grid spans everything from
    no truncation to full truncation.
    """
    if int(n) != n or n < 1:
        raise ParameterError(f"threshold count must be a positive integer, got {n!r}")
    if factors.rank == 0:
        raise RankError("cannot build a threshold grid for a rank-0 matrix")
    s = factors.singular_values
    top = s[0] * (1 + TOP_MARGIN)
    if n == 1:
        values = [top]
    else:
        values = np.geomspace(s[-1], top, int(n))
    return ThresholdGrid((0.0, *values))


def normal_equation_solve(phi: np.ndarray, target: np.ndarray) -> np.ndarray:
    """``(phi.T phi)^-1 phi.T target``: squares the condition number.

    Kept as a reference for well-conditioned problems only.
    """
    phi = np.asarray(phi, dtype=float)
    return np.linalg.solve(phi.T @ phi, phi.T @ np.asarray(target, dtype=float))


def split_coefficients(theta: Sequence[float], orders: ArxOrders):
    """Unpack the stacked coefficient vector into ``a`` and per-input ``b``.

    The stacked vector holds ``-a_i``; the returned ``a`` has the sign
    resolved.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.size != orders.n_params:
        raise ShapeError(f"expected {orders.n_params} coefficients, got {theta.size}")
    a = -theta[: orders.na]
    b, pos = [], orders.na
    for nb in orders.nb:
        b.append(theta[pos : pos + nb].copy())
        pos += nb
    return a, tuple(b)
