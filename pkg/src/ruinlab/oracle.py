"""Exact finite-size answers from the absorbing chain on the hypercube.

The walk killed outside the L-infinity ball of radius r is a substochastic
chain on the (2r+1)^N interior grid whose transition operator is the
2N-point nearest-neighbour stencil with weight 1/(2N).  Everything here is
matrix-free: expected exit times solve (I - Q) h = 1 by conjugate
gradients on the stencil (the operator is a symmetric M-matrix, so I - Q
is positive definite), and survival probabilities P(T > t) come from
iterating the stencil on the point mass at the origin.

Survival tables are truncated once P(T > t) < tol and carry a certified
geometric tail bound from the even-step contraction ratio; parity matters
because exit can only happen on steps of one parity, so ratios are taken
two steps apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

STATE_GUARD = 10_000_000


class StateSpaceError(ValueError):
    """Requested grid exceeds the (2r+1)^N <= 1e7 feasibility guard."""


class SolverConvergenceError(RuntimeError):
    """Linear solve or survival iteration failed to reach its target."""


@dataclass(frozen=True)
class AbsorbingChainSpec:
    """Dimension/radius pair with its derived interior state count."""

    dim: int
    radius: int

    def __post_init__(self):
        if self.dim < 1 or self.radius < 0:
            raise ValueError("need dim >= 1 and radius >= 0")
        if self.state_count > STATE_GUARD:
            raise StateSpaceError(
                f"(2r+1)^N = {self.state_count} exceeds guard {STATE_GUARD}"
            )

    @property
    def state_count(self) -> int:
        return (2 * self.radius + 1) ** self.dim


@dataclass(frozen=True)
class SurvivalTable:
    """Per-step survival probabilities P(T > t) for t = 0..truncated_at.

    ``tail_bound`` dominates sum_{t > truncated_at} P(T > t) via the
    even-step ratio: with rho = probs[-1]/probs[-3], the remaining terms
    are bounded by probs[-1] * (1 + rho) / (1 - rho) (the extra 1/(1-rho)
    relative to the pure even-step sum covers odd steps).
    """

    probs: np.ndarray
    truncated_at: int
    tail_bound: float
    even_step_ratio: float


@dataclass(frozen=True)
class ExactMoment:
    value: float
    error_bound: float


def _stencil(p: np.ndarray, dim: int) -> np.ndarray:
    """One substochastic step: average of zero-filled shifts along each axis."""
    out = np.zeros_like(p)
    for ax in range(dim):
        lead = tuple(slice(None) if a != ax else slice(None, -1) for a in range(dim))
        lag = tuple(slice(None) if a != ax else slice(1, None) for a in range(dim))
        out[lead] += p[lag]
        out[lag] += p[lead]
    out *= 1.0 / (2 * dim)
    return out


def exit_survival(
    dim: int,
    radius: int,
    tol: float = 1e-12,
    *,
    min_steps: int = 0,
    max_steps: int = 1 << 21,
) -> SurvivalTable:
    """Survival table of the exit time from the radius-``radius`` ball.

    Iterates the stencil on the indicator of the origin, stepping in pairs
    so the parity of the exit time does not distort the contraction
    estimate, and stops once P(T > t) < tol (and t >= min_steps).
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    AbsorbingChainSpec(dim, radius)  # size guard
    p = np.zeros((2 * radius + 1,) * dim)
    p[(radius,) * dim] = 1.0
    probs = [1.0]
    while True:
        for _ in range(2):
            p = _stencil(p, dim)
            probs.append(float(p.sum()))
        t = len(probs) - 1
        if probs[-1] == 0.0 or (probs[-1] < tol and t >= min_steps):
            break
        if t >= max_steps:
            raise SolverConvergenceError(
                f"survival iteration did not reach tol={tol:g} within {max_steps} steps"
            )
    if probs[-1] == 0.0 or probs[-3] == 0.0:
        ratio, tail = 0.0, 0.0
    else:
        ratio = probs[-1] / probs[-3]
        if ratio >= 1.0:
            raise SolverConvergenceError("survival ratio estimate stalled (rho >= 1)")
        tail = probs[-1] * (1.0 + ratio) / (1.0 - ratio)
    arr = np.asarray(probs)
    return SurvivalTable(probs=arr, truncated_at=len(arr) - 1,
                         tail_bound=tail, even_step_ratio=ratio)


def expected_exit_exact(dim: int, radius: int, residual_tol: float = 1e-12) -> float:
    """Expected exit time from the origin: solve (I - Q) h = 1, return h(0).

    Conjugate gradients on the matrix-free stencil with a final iterative
    refinement sweep; converged when the residual max-norm is below
    ``residual_tol``.  The stencil preserves the cube symmetries exactly,
    so the iterates stay symmetric to the bit.
    """
    spec = AbsorbingChainSpec(dim, radius)

    def apply_a(v):
        return v - _stencil(v, dim)

    b = np.ones((2 * radius + 1,) * dim)
    x = np.zeros_like(b)
    for _ in range(4):  # CG passes with explicit refinement between them
        r = b - apply_a(x)
        if float(np.abs(r).max()) <= residual_tol:
            break
        d = r.copy()
        rs = float((r * r).sum())
        for _ in range(8 * spec.state_count + 64):
            ad = apply_a(d)
            alpha = rs / float((d * ad).sum())
            x += alpha * d
            r -= alpha * ad
            rs_new = float((r * r).sum())
            if float(np.abs(r).max()) <= 0.1 * residual_tol:
                break
            d = r + (rs_new / rs) * d
            rs = rs_new
    resid = float(np.abs(b - apply_a(x)).max())
    if resid > residual_tol:
        raise SolverConvergenceError(
            f"linear solve residual {resid:.3e} above target {residual_tol:g}"
        )
    return float(x[(radius,) * dim])


def exit_moment_exact(dim: int, radius: int, p: int, tol: float = 1e-13) -> ExactMoment:
    """E[T^p] over the survival table with a certified geometric tail bound.

    Uses E[T^p] = sum_t ((t+1)^p - t^p) * P(T > t).  Beyond the table the
    survivors are dominated pairwise by the even-step ratio, so the
    discarded mass is summed against that geometric majorant.
    """
    if p < 1:
        raise ValueError("moment order p must be >= 1")
    table = exit_survival(dim, radius, tol)
    t = np.arange(table.probs.size, dtype=float)
    value = float(np.dot((t + 1.0) ** p - t ** p, table.probs))
    # tail majorant: steps T*+2k-1, T*+2k both have survival <= rho^(k-1)*probs[-1]
    tstar = float(table.truncated_at)
    rho = table.even_step_ratio
    last = float(table.probs[-1])
    bound = 0.0
    if last > 0.0 and rho > 0.0:
        k, factor = 1, last
        while k < 100_000:
            inc = ((tstar + 2 * k + 1.0) ** p - (tstar + 2 * k - 1.0) ** p) * factor
            bound += inc
            if inc < 1e-18 * max(value, 1.0):
                break
            factor *= rho
            k += 1
    return ExactMoment(value=value, error_bound=bound)


def max_cdf_exact(dim: int, horizon: int, m: int, tol: float = 1e-13) -> float:
    """P(running max over t <= horizon is <= m), via exit-time duality.

    The running maximum stays at or below m exactly when the walk has not
    left the radius-m ball, so this reads P(T > horizon) from the survival
    table.  For m >= horizon the walk cannot have travelled further than
    horizon steps and the answer is exactly 1.
    """
    if horizon < 1 or m < 0:
        raise ValueError("need horizon >= 1 and m >= 0")
    if m >= horizon:
        return 1.0
    table = exit_survival(dim, m, tol, min_steps=min(horizon, 1 << 20))
    if horizon <= table.truncated_at:
        return float(table.probs[horizon])
    # beyond the table: geometric extrapolation along even steps (an upper
    # bound within the asymptotic regime, and below tol in any case)
    extra = horizon - table.truncated_at
    rho = table.even_step_ratio
    return float(table.probs[-1] * rho ** math.ceil(extra / 2.0))


def tau_distribution_1d(b: int, tol: float = 1e-13) -> np.ndarray:
    """PMF of the first time the 1-D walk reaches |S| >= b.

    Reaching level b means leaving the radius-(b-1) ball, so the masses
    are consecutive differences of that survival table; they sum to
    1 - tail_bound at worst.
    """
    if b < 1:
        raise ValueError("level b must be >= 1")
    table = exit_survival(1, b - 1, tol)
    pmf = np.empty(table.probs.size)
    pmf[0] = 0.0
    pmf[1:] = table.probs[:-1] - table.probs[1:]
    return pmf


def max_moment_work(dim: int, horizon: int) -> float:
    """Rough operation count for :func:`max_moment_exact` feasibility checks."""
    m_cap = min(horizon, int(6.0 * math.sqrt(horizon / dim)) + 8)
    return float(horizon) * sum((2 * m + 1) ** dim for m in range(1, m_cap + 1))


def max_moment_exact(dim: int, horizon: int, p: int, tol: float = 1e-12) -> float:
    """E[(running max at ``horizon``)^p] from survival tables over radii.

    E[M^p] = sum_m ((m+1)^p - m^p) * P(M > m) with P(M > m) obtained by
    duality; the radius loop stops once the exceedance probability falls
    below ``tol``.
    """
    if p < 1:
        raise ValueError("moment order p must be >= 1")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    total = 0.0
    for m in range(0, horizon + 1):
        exceed = 1.0 - max_cdf_exact(dim, horizon, m)
        total += ((m + 1) ** p - m ** p) * exceed
        if exceed < tol:
            break
    return total
