"""Second moments of stacked mixture shifts and their integrals over an interval.

``c2_mixture`` and ``c2_general`` return the area under ``t -> E(H(t)^2)``
on ``[0, h]`` for a process that starts at distance ``j`` from target.  The
per-k second moments have two independent evaluations each (closed form and
explicit binomial sum), and the interval integrals are checked against
``c2_series_oracle``, which integrates the Poisson-weighted series
numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from .distributions import GenericComponentMoments, MixtureShiftSpec, binomial_pmf, poisson_k_max
from .errors import ParameterError, ToleranceError, UnsupportedInputError

__all__ = [
    "IntervalCostInput",
    "IntervalCostResult",
    "expected_square_mixture",
    "binomial_sum_square",
    "expected_square_general",
    "binomial_sum_square_general",
    "c2_mixture",
    "c2_general",
    "c2",
    "c2_series_oracle",
]

ShiftLaw = Union[MixtureShiftSpec, GenericComponentMoments]


@dataclass(frozen=True)
class IntervalCostInput:
    h: float
    j: float
    s: float
    shift: ShiftLaw

    def __post_init__(self):
        if not self.h > 0.0:
            raise ParameterError(f"h must be positive, got {self.h}")
        if not self.j >= 0.0:
            raise ParameterError(f"j must be nonnegative, got {self.j}")
        if not self.s >= 0.0:
            raise ParameterError(f"s must be nonnegative, got {self.s}")


@dataclass(frozen=True)
class IntervalCostResult:
    """``integral`` is the area under E(H^2) on [0, h]; ``per_unit_time`` is it divided by h."""

    integral: float
    per_unit_time: float


def _check_k(k):
    if int(k) != k or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k}")


def expected_square_mixture(k, j, spec: MixtureShiftSpec):
    """E((X + J*Y + j)^2) given ``k`` shifts, summed over the geometric count.

    X is the Erlang sum of the exponential shifts and Y the negative binomial
    sum of the geometric ones.  ``k`` may be an integer array.
    """
    k = np.asarray(k, dtype=float)
    if np.any(k < 1) or np.any(k != np.floor(k)):
        raise ParameterError("k must be a positive integer")
    z, xi, d, J = spec.zeta, spec.xi, spec.delta, spec.jump_scale
    out = (
        k * d**2
        + (j - k * d * (z - 1.0)) ** 2
        + (2.0 * k * z * J * (j + d * (k + z - k * z - 1.0)) - xi * k * (d * z) ** 2) / xi
        + k * z * J**2 * (2.0 - xi + z * (k - 1.0)) / xi**2
    )
    return float(out) if out.ndim == 0 else out


def binomial_sum_square(k, j, spec: MixtureShiftSpec) -> float:
    """Explicit sum over r geometric shifts out of k, weighted by Binomial(k, zeta)."""
    _check_k(k)
    k = int(k)
    z, xi, d, J = spec.zeta, spec.xi, spec.delta, spec.jump_scale
    r = np.arange(k + 1, dtype=float)
    weights = binomial_pmf(r, k, z)
    e_x = (k - r) * d
    e_y = J * r / xi
    bracket = (
        ((k - r) / (1.0 / d)) ** 2
        + (k - r) / (1.0 / d**2)
        + (J * r / xi) ** 2
        + J**2 * r * (1.0 - xi) / xi**2
        + j**2
        + 2.0 * e_x * e_y
        + 2.0 * e_x * j
        + 2.0 * e_y * j
    )
    return float(math.fsum(weights * bracket))


def expected_square_general(k, gm: GenericComponentMoments):
    """E((X + Y)^2) for k shifts with per-variate moments (m_x, v_x), (m_y, v_y)."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 1) or np.any(k != np.floor(k)):
        raise ParameterError("k must be a positive integer")
    mx, vx, my, vy, z = gm.m_x, gm.v_x, gm.m_y, gm.v_y, gm.zeta
    out = k * (
        mx**2 * k
        + vx
        - z * vx
        + z * (vy - (mx - my) * (my + mx * (2.0 * k - 1.0)))
        + z**2 * (mx - my) ** 2 * (k - 1.0)
    )
    return float(out) if out.ndim == 0 else out


def binomial_sum_square_general(k, gm: GenericComponentMoments) -> float:
    _check_k(k)
    k = int(k)
    r = np.arange(k + 1, dtype=float)
    weights = binomial_pmf(r, k, gm.zeta)
    bracket = (
        ((k - r) * gm.m_x) ** 2
        + (k - r) * gm.v_x
        + (r * gm.m_y) ** 2
        + r * gm.v_y
        + 2.0 * (k - r) * gm.m_x * r * gm.m_y
    )
    return float(math.fsum(weights * bracket))


def c2_mixture(inp: IntervalCostInput) -> IntervalCostResult:
    """Closed-form area under E(H^2) for the exponential/geometric mixture.

    Term-wise integral of
    ``j^2 + 2 j s t m1 + s t (2 d^2 (1 - z) + z (2 - xi) J^2 / xi^2) + (s t m1)^2``
    where ``m1 = (d (xi - xi z) + z J) / xi`` is the single-shift mean.
    """
    spec = inp.shift
    if not isinstance(spec, MixtureShiftSpec):
        raise UnsupportedInputError("c2_mixture needs a MixtureShiftSpec")
    h, j, s = inp.h, inp.j, inp.s
    z, xi, d, J = spec.zeta, spec.xi, spec.delta, spec.jump_scale
    lin = d * (xi - xi * z) + z * J
    integral = (
        h * j**2
        + j * s * h**2 * lin / xi
        + s * h**2 * (-2.0 * d**2 * xi**2 * (z - 1.0) + z * (2.0 - xi) * J**2) / (2.0 * xi**2)
        + s**2 * h**3 * lin**2 / (3.0 * xi**2)
    )
    return IntervalCostResult(integral=integral, per_unit_time=integral / h)


def c2_general(inp: IntervalCostInput) -> IntervalCostResult:
    """Closed-form area under E(H^2) from target for a generic two-component mixture."""
    gm = inp.shift
    if isinstance(gm, MixtureShiftSpec):
        gm = gm.as_generic()
    if inp.j != 0.0:
        raise UnsupportedInputError("the generic closed form only covers a start at target (j = 0)")
    h, s = inp.h, inp.s
    mx, vx, my, vy, z = gm.m_x, gm.v_x, gm.m_y, gm.v_y, gm.zeta
    integral = (
        h**2 * s * (3.0 * (mx**2 + vx + z * (my**2 + vy - mx**2 - vx)) + 2.0 * h * (mx - z * (mx - my)) ** 2 * s) / 6.0
    )
    return IntervalCostResult(integral=integral, per_unit_time=integral / h)


def c2(h, j, s, shift: ShiftLaw) -> IntervalCostResult:
    """Dispatch to the closed form matching the shift description."""
    inp = IntervalCostInput(h=h, j=j, s=s, shift=shift)
    if isinstance(shift, MixtureShiftSpec):
        return c2_mixture(inp)
    return c2_general(inp)


def _per_k_square(k, j, shift):
    if isinstance(shift, MixtureShiftSpec):
        return expected_square_mixture(k, j, shift)
    if j != 0.0:
        raise UnsupportedInputError("generic component moments only cover j = 0")
    return expected_square_general(k, shift)


def _series_integrand(t, j, s, shift, k_max):
    """e^{-ts} j^2 + sum_{k=1}^{k_max} Poisson(k; ts) * E(square | k), for an array of t."""
    t = np.asarray(t, dtype=float)
    ks = np.arange(1, k_max + 1, dtype=float)
    moments = _per_k_square(ks, j, shift)
    mean = np.maximum(t * s, 1e-300)[:, None]
    log_nu = ks[None, :] * np.log(mean) - t[:, None] * s - special.gammaln(ks + 1.0)[None, :]
    nu = np.where(t[:, None] * s > 0.0, np.exp(log_nu), 0.0)
    return np.exp(-t * s) * j**2 + nu @ moments


def _composite_gauss_legendre(f, h, panels, order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, h, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    t = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return float(math.fsum(w * f(t)))


def c2_series_oracle(
    inp: IntervalCostInput,
    k_max: int | None = None,
    n_quad: int = 64,
    order: int = 8,
    rtol: float | None = None,
    return_error: bool = False,
):
    """Numerically integrate the Poisson-weighted second-moment series over [0, h].

    Uses composite Gauss-Legendre with ``n_quad`` panels of ``order`` nodes.
    The truncation error is bounded with the Poisson weights at ``t = h``
    (each omitted weight increases on [0, h] once k exceeds s*h), and the
    quadrature error is estimated against a half-resolution rule.  With
    ``rtol`` set, a combined relative error above it raises
    :class:`ToleranceError`.  ``return_error=True`` returns
    ``(value, truncation_error, quadrature_error)``.
    """
    if n_quad < 2:
        raise ParameterError("n_quad must be at least 2")
    h, j, s, shift = inp.h, inp.j, inp.s, inp.shift
    mean_h = s * h
    if k_max is None:
        k_max = max(poisson_k_max(mean_h, 1e-18), 1)
    if k_max < mean_h:
        raise ParameterError(f"k_max={k_max} is below the Poisson mean {mean_h}")

    def f(t):
        return _series_integrand(t, j, s, shift, k_max)

    value = _composite_gauss_legendre(f, h, n_quad, order)
    coarse = _composite_gauss_legendre(f, h, max(n_quad // 2, 1), order)
    quad_err = abs(value - coarse)

    tail_k = np.arange(k_max + 1, k_max + 400, dtype=float)
    if mean_h > 0.0:
        tail_nu = np.exp(tail_k * math.log(mean_h) - mean_h - special.gammaln(tail_k + 1.0))
    else:
        tail_nu = np.zeros_like(tail_k)
    trunc_err = h * float(np.sum(tail_nu * _per_k_square(tail_k, j, shift)))

    if rtol is not None:
        scale = abs(value) if value != 0.0 else 1.0
        if (trunc_err + quad_err) / scale > rtol:
            raise ToleranceError(
                f"series oracle error {(trunc_err + quad_err) / scale:.2e} exceeds rtol {rtol:.1e}"
            )
    if return_error:
        return value, trunc_err, quad_err
    return value
