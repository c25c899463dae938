"""Offline estimators over a stored trajectory.

Quasi Newton preconditions the proxy-loss gradient with the inverse
empirical Gram matrix; GLMtron takes plain full-batch gradient steps.
Both share the same stationary points.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import AggregationError, ConfigError
from .link import LinkFunction
from .loss import _link_of, as_pairs, empirical_gram
from .report import FitReport, Recorder, Status, diverged
from .sim import Trajectory


def theory_iters(zeta: float, a0, a_star, horizon: int, rho: float, sigma_sq: float,
                 c_rho: float = 1.0, c_eta: float = 1.0, delta: float = 0.1) -> int:
    """Iteration count sufficient for the Quasi Newton error bound at step 1/4.

    ``m = ceil((10/zeta) log(||a0 - A*||_F^2 T R / (sigma^2 d^2)))`` with
    ``R = C_rho^2 C_eta d sigma^2 (sum_{t=1}^{T-1} rho^t)^2 log(4Td/delta)``.
    """
    a_star = np.asarray(a_star, dtype=float)
    d = a_star.shape[0]
    if rho == 1.0:
        geo = horizon - 1.0
    else:
        geo = rho * (1.0 - rho ** (horizon - 1)) / (1.0 - rho)
    r_star = c_rho ** 2 * c_eta * d * sigma_sq * geo ** 2 * math.log(4 * horizon * d / delta)
    dist = float(np.sum((np.asarray(a0, dtype=float) - a_star) ** 2))
    arg = dist * horizon * r_star / (sigma_sq * d * d)
    if arg <= 1.0:
        return 1
    return max(1, math.ceil(10.0 / zeta * math.log(arg)))


def _setup(data, link, a0):
    link = _link_of(data, link)
    x, y = as_pairs(data)
    d = x.shape[1]
    a = np.zeros((d, d)) if a0 is None else np.array(a0, dtype=float).reshape(d, d)
    return link, x, y, a


def _grad(link: LinkFunction, a, x, y):
    return (link.apply(x @ a.T) - y).T @ x / x.shape[0]


def quasi_newton(data, gamma: float = 0.25, m: int = 100, a0=None, *, a_star=None,
                 link: LinkFunction | None = None, record_every: int = 1,
                 keep_iterates: bool = False) -> FitReport:
    """``A <- A - 2 gamma grad(A) G^{-1}`` for ``m`` iterations.

    Returns the zero matrix with status ``gram_singular_returned_zero``
    when the empirical Gram is numerically singular.  A non-finite
    iterate ends the fit with status ``diverged``.
    """
    if not 0.0 < gamma <= 0.5:
        raise ConfigError("quasi_newton step size must lie in (0, 1/2]")
    if m < 1:
        raise ConfigError("quasi_newton needs m >= 1")
    link, x, y, a = _setup(data, link, a0)
    link.require_expansive("quasi_newton")
    gram = empirical_gram((x, y))
    d = a.shape[0]
    rec = Recorder(a_star)
    if gram.singular:
        rec.record(0, np.zeros((d, d)))
        return rec.report(np.zeros((d, d)), Status.GRAM_SINGULAR, 0)
    factor = cho_factor(gram.g_hat)
    iterates = [a.copy()] if keep_iterates else None
    rec.record(0, a)
    status = Status.OK
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, m + 1):
            g = _grad(link, a, x, y)
            # G symmetric: grad @ G^{-1} == (G^{-1} grad^T)^T
            a = a - 2.0 * gamma * cho_solve(factor, g.T).T
            if keep_iterates:
                iterates.append(a.copy())
            if diverged(a):
                status = Status.DIVERGED
                rec.record(step, a)
                break
            if step % record_every == 0 or step == m:
                rec.record(step, a)
    return rec.report(a, status, step, iterates=iterates)


def glmtron(data, gamma: float = 0.017, m: int = 1000, a0=None, *, a_star=None,
            link: LinkFunction | None = None, record_every: int = 1) -> FitReport:
    """Full-batch gradient steps ``A <- A - gamma grad(A)`` on the proxy loss."""
    if not gamma > 0.0:
        raise ConfigError("glmtron step size must be positive")
    if m < 1:
        raise ConfigError("glmtron needs m >= 1")
    link, x, y, a = _setup(data, link, a0)
    link.require_expansive("glmtron")
    rec = Recorder(a_star)
    rec.record(0, a)
    status = Status.OK
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, m + 1):
            a = a - gamma * _grad(link, a, x, y)
            if diverged(a):
                status = Status.DIVERGED
                rec.record(step, a)
                break
            if step % record_every == 0 or step == m:
                rec.record(step, a)
    return rec.report(a, status, step)


def metric_median(estimates: list[np.ndarray]) -> int:
    """Index of the estimate with the smallest median Frobenius distance
    to the others (ties go to the lowest index)."""
    k = len(estimates)
    if k == 0:
        raise AggregationError("no estimates to aggregate")
    if k == 1:
        return 0
    flat = np.stack([np.asarray(e, dtype=float).ravel() for e in estimates])
    dist = np.linalg.norm(flat[:, None, :] - flat[None, :, :], axis=2)
    scores = [np.median(np.delete(dist[i], i)) for i in range(k)]
    return int(np.argmin(scores))


def segment_bounds(horizon: int, k_segments: int, gap: int) -> list[tuple[int, int]]:
    """State index ranges ``[lo, hi]`` of ``k`` contiguous segments separated by ``gap``."""
    if k_segments < 1:
        raise ConfigError("need at least one segment")
    if gap < 0:
        raise ConfigError("gap must be >= 0")
    length = horizon // k_segments - gap
    if length < 1:
        raise ConfigError(f"horizon {horizon} too short for {k_segments} segments with gap {gap}")
    return [(k * (length + gap), k * (length + gap) + length) for k in range(k_segments)]


def median_of_means_fit(data, k_segments: int, gap: int = 0, gamma: float = 0.25, m: int = 100,
                        a0=None, *, link: LinkFunction | None = None,
                        return_estimates: bool = False):
    """Quasi Newton on ``k`` separated segments, aggregated by :func:`metric_median`.

    Segment fits whose status is not ``ok`` are dropped; if all are
    dropped an :class:`AggregationError` is raised.
    """
    link = _link_of(data, link)
    states = data.states if isinstance(data, Trajectory) else np.asarray(data, dtype=float)
    horizon = states.shape[0] - 1
    estimates = []
    for lo, hi in segment_bounds(horizon, k_segments, gap):
        fit = quasi_newton(states[lo: hi + 1], gamma, m, a0, link=link)
        if fit.ok:
            estimates.append(fit.a_hat)
    if not estimates:
        raise AggregationError("every segment fit failed")
    best = estimates[metric_median(estimates)]
    return (best, estimates) if return_estimates else best
