"""Grid search over the sampling interval h and the critical value K."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chart import ChartParams, CostSpec, ProcessSpec, build_model, discretize
from .distributions import MixtureShiftSpec
from .errors import MixChartError, ParameterError

__all__ = ["SearchSpace", "SurfacePoint", "Optimum", "grid_search", "axis_values"]


def axis_values(lo, hi, count=None, step=None):
    """Evenly spaced axis from ``lo`` to ``hi`` given either a point count or a step."""
    if (count is None) == (step is None):
        raise ParameterError("give exactly one of count or step")
    if hi < lo:
        raise ParameterError(f"empty range [{lo}, {hi}]")
    if count is not None:
        if count < 1:
            raise ParameterError("count must be at least 1")
        if count == 1:
            return (float(lo),)
        return tuple(float(v) for v in np.linspace(lo, hi, int(count)))
    if not step > 0.0:
        raise ParameterError("step must be positive")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return tuple(float(lo + i * step) for i in range(n))


@dataclass(frozen=True)
class SearchSpace:
    h_values: tuple
    K_values: tuple

    def __post_init__(self):
        if not self.h_values or not self.K_values:
            raise ParameterError("search ranges must be nonempty")
        if min(self.h_values) <= 0.0:
            raise ParameterError("all h values must be positive")

    @classmethod
    def from_ranges(cls, h_range, K_range):
        """Build from ``(lo, hi, count)`` tuples or dicts with ``min``/``max`` and ``count`` or ``step``."""
        return cls(h_values=_axis(h_range), K_values=_axis(K_range))

    @property
    def size(self) -> int:
        return len(self.h_values) * len(self.K_values)


def _axis(spec):
    if isinstance(spec, dict):
        return axis_values(spec["min"], spec["max"], spec.get("count"), spec.get("step"))
    lo, hi, count = spec
    return axis_values(lo, hi, count=count)


@dataclass(frozen=True)
class SurfacePoint:
    h: float
    K: float
    cost: float
    error: str | None = None


@dataclass
class Optimum:
    best_params: ChartParams | None
    best_cost: float
    cost_surface: list = field(repr=False)

    @property
    def failures(self):
        return [p for p in self.cost_surface if p.error is not None]


def _sweep_h(args):
    h, K_values, process, spec, costs, step, v_max, k_max, scheme = args
    try:
        kernel = discretize(spec, process.s, h, step, v_max, k_max=k_max, scheme=scheme)
    except MixChartError as exc:
        return [SurfacePoint(h, K, math.nan, f"{type(exc).__name__}: {exc}") for K in K_values]
    out = []
    for K in K_values:
        try:
            model = build_model(ChartParams(h=h, K=K), process, spec, costs, step, v_max,
                                k_max=k_max, kernel=kernel, scheme=scheme)
            out.append(SurfacePoint(h, K, model.expected_cost))
        except MixChartError as exc:
            out.append(SurfacePoint(h, K, math.nan, f"{type(exc).__name__}: {exc}"))
    return out


def grid_search(space: SearchSpace, process: ProcessSpec, spec: MixtureShiftSpec, costs: CostSpec,
                step, v_max, k_max=None, scheme="nearest", workers=None) -> Optimum:
    """Evaluate the expected cost at every (h, K) and return the minimiser.

    The kernel depends only on h, so it is built once per h.  Points that
    fail are kept in the surface with ``cost=nan`` and an error message.
    Ties go to the smaller h, then the smaller K.
    """
    tasks = [(h, space.K_values, process, spec, costs, step, v_max, k_max, scheme) for h in space.h_values]
    if workers and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_h, tasks))
    else:
        rows = [_sweep_h(t) for t in tasks]
    surface = [p for row in rows for p in row]
    ok = [p for p in surface if p.error is None and not math.isnan(p.cost)]
    if not ok:
        return Optimum(best_params=None, best_cost=math.nan, cost_surface=surface)
    best = min(ok, key=lambda p: (p.cost, p.h, p.K))
    return Optimum(best_params=ChartParams(h=best.h, K=best.K), best_cost=best.cost, cost_surface=surface)
