"""Monte Carlo ground truth for the shift process and the chart.

Random streams
--------------
Every batch of work draws from its own ``numpy.random.Generator`` backed by
PCG64 and seeded with ``SeedSequence(entropy=seed, spawn_key=(batch,))``.
Results therefore depend only on ``(seed, batch layout)``, never on how
batches are scheduled across workers.

Draw order inside a batch is fixed: shift times come from exponential
inter-arrival gaps with mean ``1/s``; each shift size uses one uniform for
the component choice, one uniform for the geometric inverse CDF
``ceil(log(U) / log(1 - xi))`` and one standard exponential scaled by
``delta``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import MixtureShiftSpec
from .errors import ParameterError

__all__ = [
    "Trajectory",
    "McEstimate",
    "ChartRun",
    "make_rng",
    "sample_shift",
    "simulate_trajectory",
    "pathwise_square_integral",
    "simulate_interval_batch",
    "estimate_c2",
    "simulate_chart",
    "simulate_chart_run",
]

DEFAULT_BATCH = 10_000


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-constant path H(t) = start_level + sum of jumps up to t on [0, horizon]."""

    start_level: float
    jump_times: tuple
    jump_sizes: tuple
    horizon: float

    def __post_init__(self):
        if len(self.jump_times) != len(self.jump_sizes):
            raise ParameterError("jump_times and jump_sizes differ in length")
        if any(b <= a for a, b in zip(self.jump_times, self.jump_times[1:])):
            raise ParameterError("jump_times must be strictly increasing")
        if any(not 0.0 < t < self.horizon for t in self.jump_times):
            raise ParameterError("jump_times must lie inside (0, horizon)")

    def level_at(self, t: float) -> float:
        return self.start_level + sum(r for tau, r in zip(self.jump_times, self.jump_sizes) if tau <= t)

    @property
    def end_level(self) -> float:
        return self.start_level + sum(self.jump_sizes)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int
    seed: int

    def brackets(self, value: float, n_se: float = 4.0) -> bool:
        return abs(self.mean - value) <= n_se * self.std_error

    def z_score(self, value: float) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.mean == value else math.inf
        return (self.mean - value) / self.std_error


def make_rng(seed: int, batch: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(batch,))))


def sample_shift(spec: MixtureShiftSpec, rng: np.random.Generator, size=None):
    """Draw shift sizes from the mixture; scalar when ``size`` is None."""
    pick = rng.random(size)
    u = 1.0 - rng.random(size)  # (0, 1]
    expo = rng.standard_exponential(size) * spec.delta
    if spec.xi == 1.0:
        geo = np.ones_like(u)
    else:
        geo = np.maximum(np.ceil(np.log(u) / math.log1p(-spec.xi)), 1.0)
    out = np.where(pick < spec.zeta, spec.jump_scale * geo, expo)
    return float(out) if size is None else out


def simulate_trajectory(j, h, s, spec: MixtureShiftSpec, rng: np.random.Generator) -> Trajectory:
    """One path over ``[0, h]`` from level ``j`` with Poisson(rate ``s``) shift times."""
    times = []
    if s > 0.0:
        t = rng.exponential(1.0 / s)
        while t < h:
            times.append(float(t))
            t += rng.exponential(1.0 / s)
    sizes = tuple(sample_shift(spec, rng) for _ in times)
    return Trajectory(start_level=float(j), jump_times=tuple(times), jump_sizes=sizes, horizon=float(h))


def pathwise_square_integral(traj: Trajectory) -> float:
    """Exact integral of H(t)^2 over the horizon; H is constant between jumps."""
    total = 0.0
    level = traj.start_level
    last = 0.0
    for tau, rho in zip(traj.jump_times, traj.jump_sizes):
        total += level * level * (tau - last)
        level += rho
        last = tau
    total += level * level * (traj.horizon - last)
    return total


def simulate_interval_batch(start, h, s, spec: MixtureShiftSpec, rng: np.random.Generator):
    """Vectorised ``simulate_trajectory`` + ``pathwise_square_integral`` for many paths.

    Returns ``(end_level, square_integral, time_off_target)`` arrays, where
    the last is the time within the interval spent with H > 0.
    """
    level = np.array(start, dtype=float, copy=True)
    n = level.size
    area = np.zeros(n)
    off = np.zeros(n)
    if s <= 0.0:
        area += level * level * h
        off += np.where(level > 0.0, h, 0.0)
        return level, area, off
    now = np.zeros(n)
    live = np.arange(n)
    while live.size:
        gap = rng.exponential(1.0 / s, live.size)
        nxt = now[live] + gap
        done = nxt >= h
        dur = np.where(done, h - now[live], gap)
        lv = level[live]
        area[live] += lv * lv * dur
        off[live] += np.where(lv > 0.0, dur, 0.0)
        jumping = live[~done]
        now[jumping] = nxt[~done]
        level[jumping] += sample_shift(spec, rng, jumping.size)
        live = jumping
    return level, area, off


def _c2_batch(args):
    j, h, s, spec, n, seed, batch = args
    rng = make_rng(seed, batch)
    _, area, _ = simulate_interval_batch(np.full(n, float(j)), h, s, spec, rng)
    return area


def _batch_sizes(total, batch):
    sizes = [batch] * (total // batch)
    if total % batch:
        sizes.append(total % batch)
    return sizes


def _run_batches(fn, tasks, workers):
    if workers and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def estimate_c2(j, h, s, spec: MixtureShiftSpec, n_paths=100_000, seed=0, batch_size=DEFAULT_BATCH,
                workers=None, return_samples=False):
    """Monte Carlo mean of the pathwise squared-distance integral over one interval."""
    if n_paths < 1000:
        raise ParameterError(f"n_paths must be at least 1000, got {n_paths}")
    tasks = [(j, h, s, spec, n, seed, b) for b, n in enumerate(_batch_sizes(n_paths, batch_size))]
    samples = np.concatenate(_run_batches(_c2_batch, tasks, workers))
    est = McEstimate(
        mean=float(np.mean(samples)),
        std_error=float(np.std(samples, ddof=1) / math.sqrt(n_paths)),
        n_paths=int(n_paths),
        seed=int(seed),
    )
    if return_samples:
        return est, samples
    return est


@dataclass
class ChartRun:
    """Output of a simulated chart: the cost estimate plus observed sampling states."""

    estimate: McEstimate
    levels: np.ndarray = field(repr=False)
    alarms: np.ndarray = field(repr=False)


def _chart_batch(args):
    (h, K, mu0, sigma, s, alpha, spec, costs, n_chains, steps, burn_in, seed, batch, record) = args
    rng = make_rng(seed, batch)
    start = np.zeros(n_chains)
    total = np.zeros(n_chains)
    levels = []
    alarms = []
    for step in range(burn_in + steps):
        end, area, off = simulate_interval_batch(start, h, s, spec, rng)
        noise = rng.standard_normal(n_chains) * sigma
        alarm = mu0 + end + noise > K
        in_control = end <= 0.0
        cost = (
            costs.c_s
            + costs.c_os * off
            + costs.c_ob * area
            + np.where(alarm & in_control, costs.c_f, 0.0)
            + np.where(alarm & ~in_control, costs.c_rb + costs.c_rs * end, 0.0)
        )
        if step >= burn_in:
            total += cost
            if record:
                levels.append(end)
                alarms.append(alarm)
        start = np.where(alarm, alpha * end, end)
    per_time = total / (steps * h)
    if record:
        return per_time, np.concatenate(levels), np.concatenate(alarms)
    return per_time, None, None


def simulate_chart_run(params, process, spec: MixtureShiftSpec, costs, n_intervals=100_000, seed=0,
                       n_chains=400, n_batches=8, burn_in=200, workers=None, record=False) -> ChartRun:
    """Simulate the sampled process under the chart and return the long-run cost per unit time.

    ``n_chains`` independent chains (split into ``n_batches`` random streams)
    start on target, run ``burn_in`` discarded intervals and then
    ``ceil(n_intervals / n_chains)`` recorded ones.  Each recorded interval
    charges the realised sampling, alarm, repair and out-of-control costs;
    the standard error comes from the spread of per-chain averages.
    """
    if n_intervals < 10_000:
        raise ParameterError(f"n_intervals must be at least 10000, got {n_intervals}")
    if n_chains < 2 * n_batches:
        raise ParameterError("need at least two chains per batch")
    steps = -(-n_intervals // n_chains)
    per_batch = _batch_sizes(n_chains, -(-n_chains // n_batches))
    tasks = [
        (params.h, params.K, process.mu0, process.sigma, process.s, process.repair_residual, spec, costs,
         n, steps, burn_in, seed, b, record)
        for b, n in enumerate(per_batch)
    ]
    results = _run_batches(_chart_batch, tasks, workers)
    chain_means = np.concatenate([r[0] for r in results])
    est = McEstimate(
        mean=float(np.mean(chain_means)),
        std_error=float(np.std(chain_means, ddof=1) / math.sqrt(chain_means.size)),
        n_paths=int(steps * chain_means.size),
        seed=int(seed),
    )
    if record:
        levels = np.concatenate([r[1] for r in results])
        alarms = np.concatenate([r[2] for r in results])
    else:
        levels = alarms = np.empty(0)
    return ChartRun(estimate=est, levels=levels, alarms=alarms)


def simulate_chart(params, process, spec: MixtureShiftSpec, costs, n_intervals=100_000, seed=0, **kwargs) -> McEstimate:
    return simulate_chart_run(params, process, spec, costs, n_intervals=n_intervals, seed=seed, **kwargs).estimate
