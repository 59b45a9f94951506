"""Exact distribution functions for compound-Poisson mixture shifts.

A single shift is, with probability ``zeta``, ``J`` times a geometric variate
on {1, 2, ...} and otherwise an exponential variate with mean ``delta``.
Shifts arrive as a homogeneous Poisson process and stack additively, so the
distance from target after time ``t`` has an atom at zero plus a mixture of
n-fold convolutions.

All CDF functions accept scalars or numpy arrays for ``x``; scalars in give
floats out.  Every CDF is right-continuous.  Functions that feed bucket
probabilities also accept ``left=True`` to return the left limit F(x-),
which matters on the geometric lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ParameterError, TruncationError

__all__ = [
    "MixtureShiftSpec",
    "GenericComponentMoments",
    "ShiftCountLaw",
    "POISSON_TAIL_TOL",
    "geom_cdf",
    "negbin_pmf",
    "erlang_cdf",
    "mixture_cdf",
    "sum_cdf_given_n_r",
    "sum_cdf_given_n",
    "process_cdf",
    "binomial_pmf",
    "poisson_pmf",
    "poisson_k_max",
]

POISSON_TAIL_TOL = 1e-12

# Relative slack when deciding whether x sits on a lattice point l*J.
_LATTICE_EPS = 1e-9


@dataclass(frozen=True)
class MixtureShiftSpec:
    """Single-shift law ``zeta * J * Geom(xi) + (1 - zeta) * Exp(mean=delta)``."""

    zeta: float
    xi: float
    delta: float
    jump_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.zeta <= 1.0:
            raise ParameterError(f"zeta must lie in [0, 1], got {self.zeta}")
        _check_xi(self.xi)
        if not self.delta > 0.0:
            raise ParameterError(f"delta must be positive, got {self.delta}")
        if not self.jump_scale > 0.0:
            raise ParameterError(f"jump_scale must be positive, got {self.jump_scale}")

    @property
    def mean(self) -> float:
        """Mean of a single shift."""
        return (1.0 - self.zeta) * self.delta + self.zeta * self.jump_scale / self.xi

    @property
    def second_moment(self) -> float:
        """E(rho^2) of a single shift."""
        geo = self.jump_scale**2 * (2.0 - self.xi) / self.xi**2
        return (1.0 - self.zeta) * 2.0 * self.delta**2 + self.zeta * geo

    def as_generic(self) -> GenericComponentMoments:
        """Per-variate component moments (exponential as X, scaled geometric as Y)."""
        return GenericComponentMoments(
            m_x=self.delta,
            v_x=self.delta**2,
            m_y=self.jump_scale / self.xi,
            v_y=self.jump_scale**2 * (1.0 - self.xi) / self.xi**2,
            zeta=self.zeta,
        )


@dataclass(frozen=True)
class GenericComponentMoments:
    """Per-variate means and variances of the two mixture components.

    ``zeta`` is the probability that a shift is drawn from the Y component.
    """

    m_x: float
    v_x: float
    m_y: float
    v_y: float
    zeta: float

    def __post_init__(self):
        if not 0.0 <= self.zeta <= 1.0:
            raise ParameterError(f"zeta must lie in [0, 1], got {self.zeta}")
        for name in ("m_x", "v_x", "m_y", "v_y"):
            if not getattr(self, name) >= 0.0:
                raise ParameterError(f"{name} must be nonnegative, got {getattr(self, name)}")


@dataclass(frozen=True)
class ShiftCountLaw:
    """Poisson law of the number of shifts in ``[0, time]`` at ``rate`` per unit time."""

    rate: float
    time: float

    def __post_init__(self):
        if not self.rate >= 0.0:
            raise ParameterError(f"shift rate must be nonnegative, got {self.rate}")
        if not self.time >= 0.0:
            raise ParameterError(f"time must be nonnegative, got {self.time}")

    @property
    def mean(self) -> float:
        return self.rate * self.time

    def pmf(self, k):
        return poisson_pmf(k, self.mean)

    def k_max(self, tol: float = POISSON_TAIL_TOL) -> int:
        return poisson_k_max(self.mean, tol)


def _check_xi(xi):
    if not 0.0 < xi <= 1.0:
        raise ParameterError(f"xi must lie in (0, 1], got {xi}")


def _scalar_or_array(x, out):
    if np.ndim(x) == 0:
        return float(out)
    return out


def _lattice_index(x, left=False):
    """Largest integer l with l <= x (or l < x when ``left``), tolerant to rounding."""
    x = np.asarray(x, dtype=float)
    slack = _LATTICE_EPS * np.maximum(1.0, np.abs(x))
    if left:
        return np.ceil(x - slack) - 1.0
    return np.floor(x + slack)


def geom_cdf(x, xi, left=False):
    """CDF of the geometric law on {1, 2, ...}: ``1 - (1 - xi)**floor(x)``."""
    _check_xi(xi)
    n = np.maximum(_lattice_index(x, left), 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        # xi == 1 gives 0 * -inf for n == 0
        out = np.where(n > 0, -np.expm1(n * np.log1p(-xi)), 0.0)
    return _scalar_or_array(x, out)


def _log_negbin(x, r, xi):
    x = np.asarray(x, dtype=float)
    log_coef = special.gammaln(x) - special.gammaln(x - r + 1.0) - special.gammaln(r)
    return log_coef + r * math.log(xi) + special.xlog1py(x - r, -xi)


def negbin_pmf(x, r, xi):
    """P(sum of ``r`` geometric variates equals ``x``); support x in {r, r+1, ...}.

    Evaluated in log space so that large ``x`` and ``r`` do not overflow.
    """
    if int(r) != r or r < 1:
        raise ParameterError(f"r must be a positive integer, got {r}")
    _check_xi(xi)
    xa = np.asarray(x, dtype=float)
    inside = (xa >= r) & (xa == np.floor(xa))
    safe = np.where(inside, xa, float(r))
    with np.errstate(divide="ignore"):
        out = np.where(inside, np.exp(_log_negbin(safe, r, xi)), 0.0)
    return _scalar_or_array(x, out)


def erlang_cdf(x, n, delta, left=False):
    """CDF of the sum of ``n`` exponentials with mean ``delta``.

    ``n == 0`` is the law degenerate at zero, so the CDF jumps to 1 at x = 0.
    """
    if int(n) != n or n < 0:
        raise ParameterError(f"n must be a nonnegative integer, got {n}")
    if not delta > 0.0:
        raise ParameterError(f"delta must be positive, got {delta}")
    xa = np.asarray(x, dtype=float)
    if n == 0:
        out = (xa > 0.0) if left else (xa >= 0.0)
        return _scalar_or_array(x, out.astype(float))
    out = special.gammainc(n, np.maximum(xa, 0.0) / delta)
    return _scalar_or_array(x, out)


def mixture_cdf(x, spec: MixtureShiftSpec, left=False):
    """CDF of a single shift: ``zeta * F_geom(x / J) + (1 - zeta) * F_exp(x)``."""
    xa = np.asarray(x, dtype=float)
    geo = geom_cdf(xa / spec.jump_scale, spec.xi, left=left)
    exp_part = -np.expm1(-np.maximum(xa, 0.0) / spec.delta)
    out = spec.zeta * geo + (1.0 - spec.zeta) * exp_part
    return _scalar_or_array(x, out)


def sum_cdf_given_n_r(x, n, r, spec: MixtureShiftSpec, left=False):
    """CDF of the sum of ``n`` shifts of which exactly ``r`` are geometric.

    For ``r > 0`` this convolves the Erlang(n - r) CDF with the negative
    binomial lattice ``{r J, (r + 1) J, ...}``.
    """
    if int(n) != n or n < 0:
        raise ParameterError(f"n must be a nonnegative integer, got {n}")
    if int(r) != r or not 0 <= r <= n:
        raise ParameterError(f"r must satisfy 0 <= r <= n, got r={r}, n={n}")
    n = int(n)
    r = int(r)
    if r == 0:
        return erlang_cdf(x, n, spec.delta, left=left)

    xa = np.atleast_1d(np.asarray(x, dtype=float))
    J = spec.jump_scale
    exp_count = n - r
    # Continuous Erlang part: the term at l*J == x contributes F_E(0) = 0, so
    # only the degenerate (all-geometric) case needs a strict inequality.
    l_top = _lattice_index(xa / J, left=left and exp_count == 0)
    l_hi = int(np.max(l_top, initial=r - 1))
    out = np.zeros_like(xa)
    if l_hi >= r:
        lattice = np.arange(r, l_hi + 1, dtype=float)
        weights = negbin_pmf(lattice, r, spec.xi)
        active = lattice[None, :] <= l_top[:, None]
        if exp_count == 0:
            inner = active.astype(float)
        else:
            resid = xa[:, None] - lattice[None, :] * J
            inner = np.where(active, erlang_cdf(np.maximum(resid, 0.0), exp_count, spec.delta), 0.0)
        out = inner @ weights
    out = np.clip(out, 0.0, 1.0)
    if np.ndim(x) == 0:
        return float(out[0])
    return out.reshape(np.shape(x))


def binomial_pmf(r, n, p):
    """Binomial PMF evaluated in log space."""
    r = np.asarray(r, dtype=float)
    log_coef = special.gammaln(n + 1.0) - special.gammaln(r + 1.0) - special.gammaln(n - r + 1.0)
    with np.errstate(divide="ignore"):
        out = np.exp(log_coef + special.xlogy(r, p) + special.xlog1py(n - r, -p))
    return out


def sum_cdf_given_n(x, n, spec: MixtureShiftSpec, left=False):
    """CDF of the sum of ``n`` i.i.d. mixture shifts (``Psi_n``)."""
    if int(n) != n or n < 0:
        raise ParameterError(f"n must be a nonnegative integer, got {n}")
    n = int(n)
    weights = binomial_pmf(np.arange(n + 1), n, spec.zeta)
    out = np.zeros(np.shape(x), dtype=float)
    for r, w in enumerate(weights):
        if w == 0.0:
            continue
        out = out + w * np.asarray(sum_cdf_given_n_r(x, n, r, spec, left=left))
    out = np.clip(out, 0.0, 1.0)
    return _scalar_or_array(x, out)


def poisson_pmf(k, mean):
    k = np.asarray(k, dtype=float)
    if mean == 0.0:
        return (k == 0).astype(float)
    return np.exp(k * math.log(mean) - mean - special.gammaln(k + 1.0))


def poisson_k_max(mean: float, tol: float = POISSON_TAIL_TOL) -> int:
    """Smallest k whose Poisson upper tail P(N > k) is below ``tol``.

    Found by summing the PMF directly.
    """
    if mean < 0.0:
        raise ParameterError(f"Poisson mean must be nonnegative, got {mean}")
    if mean == 0.0:
        return 0
    if mean > 700.0:
        raise ParameterError(f"Poisson mean {mean} too large for direct summation")
    term = math.exp(-mean)
    cum = term
    k = 0
    while 1.0 - cum >= tol:
        k += 1
        term *= mean / k
        cum += term
        if term == 0.0 and k > mean:
            break
    return k


def process_cdf(x, t, s, spec: MixtureShiftSpec, k_max=None, tol=POISSON_TAIL_TOL, left=False):
    """CDF of the accumulated shift H(t) starting from target (``Z_t``).

    ``k_max`` caps the number of shifts summed; by default it is the smallest
    count leaving Poisson tail mass below ``tol``.  A supplied ``k_max`` that
    leaves more tail than ``tol`` raises :class:`TruncationError`.
    """
    law = ShiftCountLaw(rate=s, time=t)
    needed = law.k_max(tol)
    if k_max is None:
        k_max = needed
    elif k_max < needed:
        tail = 1.0 - float(np.sum(law.pmf(np.arange(k_max + 1))))
        raise TruncationError(
            f"k_max={k_max} leaves Poisson tail {tail:.3e} > {tol:.1e}; need k_max >= {needed}"
        )
    xa = np.asarray(x, dtype=float)
    nu = law.pmf(np.arange(k_max + 1))
    at_zero = (xa > 0.0) if left else (xa >= 0.0)
    out = nu[0] * at_zero.astype(float)
    for k in range(1, k_max + 1):
        if nu[k] == 0.0:
            continue
        out = out + nu[k] * np.asarray(sum_cdf_given_n(xa, k, spec, left=left))
    out = np.where(xa < 0.0, 0.0, np.clip(out, 0.0, 1.0))
    return _scalar_or_array(x, out)
