"""Markov-chain cost model of a one-sided chart with a single observation per sampling.

The chain lives on sampling instants.  A state is the pair (distance level,
alarm flag) observed at a sampling.  Levels sit on a uniform grid
``0, step, 2*step, ..., v_max``; over one interval the distance moves up by
the accumulated shift, mapped onto the grid, with the top level absorbing
everything beyond ``v_max``.

Two mappings are available.  ``"nearest"`` (the default) rounds to the
closest level and reserves level 0 for "exactly on target", so any shift
from target leaves it; this converges at second order in the step.
``"floor"`` maps ``[m*step, (m+1)*step)`` to level ``m`` and converges at
first order.

Each state carries the cost per unit time of the interval that follows it:
sampling and alarm costs spread over ``h``, plus the expected out-of-control
cost of the next interval, which starts from the post-repair level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .distributions import MixtureShiftSpec, process_cdf
from .errors import ConvergenceError, GridTooSmallError, ParameterError
from .moments import IntervalCostInput, c2_mixture

__all__ = [
    "ProcessSpec",
    "CostSpec",
    "ChartParams",
    "ChartModel",
    "GRID_TAIL_TOL",
    "discretize",
    "increment_buckets",
    "alarm_probability",
    "repair_level_index",
    "off_target_fraction",
    "out_of_control_cost",
    "build_model",
    "stationary_distribution",
    "expected_cost",
]

GRID_TAIL_TOL = 1e-6


@dataclass(frozen=True)
class ProcessSpec:
    mu0: float
    sigma: float
    s: float
    repair_residual: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not self.s >= 0.0:
            raise ParameterError(f"s must be nonnegative, got {self.s}")
        if not 0.0 <= self.repair_residual < 1.0:
            raise ParameterError(f"repair_residual must lie in [0, 1), got {self.repair_residual}")


@dataclass(frozen=True)
class CostSpec:
    c_s: float = 0.0
    c_f: float = 0.0
    c_rb: float = 0.0
    c_rs: float = 0.0
    c_os: float = 0.0
    c_ob: float = 0.0

    def __post_init__(self):
        for name in ("c_s", "c_f", "c_rb", "c_rs", "c_os", "c_ob"):
            if not getattr(self, name) >= 0.0:
                raise ParameterError(f"{name} must be nonnegative, got {getattr(self, name)}")


@dataclass(frozen=True)
class ChartParams:
    h: float
    K: float

    def __post_init__(self):
        if not self.h > 0.0:
            raise ParameterError(f"h must be positive, got {self.h}")
        if math.isnan(self.K):
            raise ParameterError("K must not be NaN")


@dataclass
class ChartModel:
    """Discretised chain.  States are ordered ``[no-alarm levels..., alarm levels...]``."""

    grid_levels: np.ndarray
    transition_matrix: np.ndarray = field(repr=False)
    stationary: np.ndarray = field(repr=False)
    cost_vector: np.ndarray = field(repr=False)
    residual: float = 0.0

    @property
    def n_levels(self) -> int:
        return self.grid_levels.size

    def state_labels(self):
        """(level, alarm) per state, in matrix order."""
        return [(float(v), a) for a in (False, True) for v in self.grid_levels]

    @property
    def expected_cost(self) -> float:
        return expected_cost(self)


def _grid_size(step, v_max):
    if not step > 0.0:
        raise ParameterError(f"grid step must be positive, got {step}")
    n = v_max / step
    n_round = round(n)
    if n_round < 1 or abs(n - n_round) > 1e-9 * max(1.0, n):
        raise ParameterError(f"v_max={v_max} must be a positive multiple of the grid step {step}")
    return int(n_round)


def _bucket_offset(scheme):
    if scheme == "floor":
        return 1.0
    if scheme == "nearest":
        return 0.5
    raise ParameterError(f"unknown discretisation scheme {scheme!r}")


def increment_buckets(spec: MixtureShiftSpec, s, h, step, v_max, k_max=None, scheme="nearest") -> np.ndarray:
    """Probabilities that one interval's accumulated shift maps to ``m`` grid steps.

    With ``scheme="floor"`` bucket ``m`` is ``[m*step, (m+1)*step)``; with
    ``"nearest"`` it is ``[(m-1/2)*step, (m+1/2)*step)`` (bucket 0 starts at 0).
    The last of the ``L + 1`` entries, ``L = v_max/step``, absorbs the upper tail.
    """
    L = _grid_size(step, v_max)
    tail = 1.0 - float(process_cdf(v_max, h, s, spec, k_max=k_max, left=True))
    if tail > GRID_TAIL_TOL:
        raise GridTooSmallError(
            f"shift mass {tail:.2e} beyond v_max={v_max} exceeds {GRID_TAIL_TOL:.0e}; enlarge v_max"
        )
    if s == 0.0:
        out = np.zeros(L + 1)
        out[0] = 1.0
        return out
    edges = step * (np.arange(L, dtype=float) + _bucket_offset(scheme))
    below = np.asarray(process_cdf(edges, h, s, spec, k_max=k_max, left=True))
    cdf = np.concatenate([[0.0], below])
    out = np.empty(L + 1)
    out[:L] = np.maximum(np.diff(cdf), 0.0)
    out[L] = max(1.0 - cdf[-1], 0.0)
    return out


def discretize(spec: MixtureShiftSpec, s, h, step, v_max, k_max=None, scheme="nearest") -> np.ndarray:
    """Level-to-level transition kernel over one interval, without alarms or repair."""
    q = increment_buckets(spec, s, h, step, v_max, k_max=k_max, scheme=scheme)
    kernel = _kernel_from_increments(q)
    if scheme == "nearest" and s > 0.0 and q.size > 1:
        # Level 0 is "exactly on target": any positive shift leaves it.
        stay = math.exp(-s * h)
        row = kernel[0].copy()
        row[1] += row[0] - stay
        row[0] = stay
        kernel[0] = row
    return kernel


def _kernel_from_increments(q):
    L = q.size - 1
    kernel = np.zeros((L + 1, L + 1))
    for i in range(L + 1):
        width = L - i
        kernel[i, i:L] = q[:width]
        kernel[i, L] = 1.0 - kernel[i, i:L].sum()
    return kernel


def alarm_probability(levels, params: ChartParams, process: ProcessSpec):
    """P(observation > K) when the mean sits ``levels`` above target."""
    return norm.sf((params.K - process.mu0 - np.asarray(levels, dtype=float)) / process.sigma)


def repair_level_index(i, alpha, scheme="nearest"):
    """Grid index of the post-repair level ``alpha * v`` for level index ``i``.

    ``"floor"`` rounds the residual distance up (``ceil(alpha v / step)``),
    ``"nearest"`` to the closest grid level.
    """
    x = alpha * np.asarray(i, dtype=float)
    if scheme == "nearest":
        return np.floor(x + 0.5).astype(int).clip(min=0)
    _bucket_offset(scheme)
    return np.ceil(x - 1e-9).astype(int).clip(min=0)


def off_target_fraction(start_level, s, h):
    """Expected fraction of the interval spent away from target.

    From target this is ``1 - (1 - exp(-s h)) / (s h)``; any positive start is 1.
    """
    if start_level > 0.0:
        return 1.0
    x = s * h
    if x == 0.0:
        return 0.0
    if x < 1e-8:
        return 0.5 * x
    return 1.0 + math.expm1(-x) / x


def out_of_control_cost(start_level, h, s, spec: MixtureShiftSpec, costs: CostSpec) -> float:
    """Expected out-of-control cost per unit time for an interval starting at ``start_level``."""
    area = c2_mixture(IntervalCostInput(h=h, j=start_level, s=s, shift=spec)).integral
    return costs.c_os * off_target_fraction(start_level, s, h) + costs.c_ob * area / h


def build_model(params: ChartParams, process: ProcessSpec, spec: MixtureShiftSpec, costs: CostSpec,
                step, v_max, k_max=None, kernel=None, tol=1e-12, scheme="nearest") -> ChartModel:
    """Assemble transition matrix, per-state costs and stationary distribution.

    ``kernel`` may be passed in to reuse a discretisation across values of K.
    """
    h, s = params.h, process.s
    if kernel is None:
        kernel = discretize(spec, s, h, step, v_max, k_max=k_max, scheme=scheme)
    L = kernel.shape[0] - 1
    if L != _grid_size(step, v_max):
        raise ParameterError("kernel does not match the grid")
    idx = np.arange(L + 1)
    levels = idx * step
    p_alarm = alarm_probability(levels, params, process)

    repaired = repair_level_index(idx, process.repair_residual, scheme)
    start_idx = np.concatenate([idx, repaired])
    rows = kernel[start_idx]
    T = np.hstack([rows * (1.0 - p_alarm)[None, :], rows * p_alarm[None, :]])

    ooc = np.array([out_of_control_cost(v, h, s, spec, costs) for v in levels])
    alarm_fee = np.where(idx == 0, costs.c_f, costs.c_rb + costs.c_rs * levels)
    cost = np.concatenate([costs.c_s / h + ooc, (costs.c_s + alarm_fee) / h + ooc[repaired]])

    pi, residual = stationary_distribution(T, tol=tol, return_residual=True)
    return ChartModel(grid_levels=levels, transition_matrix=T, stationary=pi, cost_vector=cost, residual=residual)


def _direct_guess(T):
    n = T.shape[0]
    A = T.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        return np.full(n, 1.0 / n)
    x = np.clip(x, 0.0, None)
    total = x.sum()
    if not np.isfinite(total) or total <= 0.0:
        return np.full(n, 1.0 / n)
    return x / total


def stationary_distribution(T, tol=1e-12, max_iter=100_000, warm_start=True, return_residual=False):
    """Left fixed vector of a row-stochastic matrix by power iteration.

    Iterates ``p <- p T`` until ``max|p T - p| < tol``.  With ``warm_start``
    the iteration begins from a direct linear solve, which usually leaves
    only a few polishing steps.
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    if T.ndim != 2 or T.shape[1] != n:
        raise ParameterError("transition matrix must be square")
    p = _direct_guess(T) if warm_start else np.full(n, 1.0 / n)
    residual = math.inf
    for _ in range(max_iter):
        nxt = p @ T
        nxt /= nxt.sum()
        residual = float(np.max(np.abs(nxt - p)))
        p = nxt
        if residual < tol:
            break
    else:
        raise ConvergenceError(f"power iteration stopped at residual {residual:.3e} after {max_iter} steps",
                               residual=residual)
    if return_residual:
        return p, float(np.max(np.abs(p @ T - p)))
    return p


def expected_cost(model: ChartModel) -> float:
    """Long-run cost per unit time, the cost vector weighted by the stationary law."""
    return float(np.dot(model.cost_vector, model.stationary))
