"""One-pass streaming estimators.

All of them read the stream exactly once.  SGD-RER keeps at most one
block of ``S + 1`` samples in memory; the other methods keep one or two.
The row update shared by every variant is

    A <- A - 2 gamma (phi(A x) - y) x^T

on an (input, target) pair ``(x, y)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from scipy.special import expit

from .errors import ConfigError
from .layout import BufferLayout
from .link import LinkFunction
from .report import FitReport, Recorder, Status, diverged
from .sim import Trajectory


def log_step_size(horizon: int) -> float:
    """``5 log T / T``."""
    return 5.0 * math.log(horizon) / horizon


def default_gap(rho: float, alpha: float, horizon: int) -> int:
    """``ceil(2 alpha log T / log(1/rho))``: gap making consecutive buffers nearly independent."""
    if rho >= 1.0:
        raise ConfigError("no finite mixing gap for rho >= 1")
    if rho < 0.0:
        raise ConfigError("rho must be non-negative")
    if horizon < 2:
        raise ConfigError("horizon must be >= 2")
    if rho == 0.0:
        return 1
    return max(1, math.ceil(2.0 * alpha * math.log(horizon) / math.log(1.0 / rho)))


def default_truncation(d: int, sigma_sq: float, rho: float, horizon: int, alpha: float = 100.0,
                       c_eta: float = 1.0) -> float:
    """``16 (alpha + 2) d C_eta sigma^2 log T / (1 - rho)``."""
    if rho >= 1.0:
        return math.inf
    return 16.0 * (alpha + 2.0) * d * c_eta * sigma_sq * math.log(horizon) / (1.0 - rho)


@dataclass(frozen=True)
class StreamConfig:
    """SGD-RER settings.  ``t0=None`` means half-tail averaging (``N // 2``);
    ``t0=0`` is full averaging."""

    gamma: float
    r_trunc: float = math.inf
    t0: int | None = None
    alpha_log: float = 100.0

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ConfigError("step size must be positive")
        if not self.r_trunc > 0.0:
            raise ConfigError("truncation bound must be positive")
        if self.t0 is not None and self.t0 < 0:
            raise ConfigError("tail start must be >= 0")

    def tail_start(self, n_buffers: int) -> int:
        t0 = n_buffers // 2 if self.t0 is None else self.t0
        if not 0 <= t0 < n_buffers:
            raise ConfigError(f"tail start {t0} outside [0, {n_buffers})")
        return t0


class _Reader:
    """Pulls samples from a one-shot iterator and counts them."""

    def __init__(self, stream: Iterable):
        self._it: Iterator = iter(stream)
        self.consumed = 0

    def take(self, n: int) -> np.ndarray:
        rows = []
        for _ in range(n):
            try:
                rows.append(np.asarray(next(self._it), dtype=float))
            except StopIteration:
                raise ConfigError(f"stream ended after {self.consumed + len(rows)} samples") from None
        self.consumed += n
        return np.stack(rows) if rows else np.empty((0, 0))

    def one(self) -> np.ndarray:
        return self.take(1)[0]


def _horizon_of(stream, horizon):
    if horizon is not None:
        return int(horizon)
    if isinstance(stream, Trajectory):
        return stream.horizon
    if hasattr(stream, "__len__"):
        return len(stream) - 1
    raise ConfigError("horizon must be given for streams of unknown length")


def _link_of(stream, link):
    if link is not None:
        return link
    if isinstance(stream, Trajectory) and stream.spec is not None:
        return stream.spec.link
    raise ConfigError("link not given and not recoverable from the stream")


def _init(d, a0):
    return np.zeros((d, d)) if a0 is None else np.array(a0, dtype=float).reshape(d, d)


def _replay(stream, layout: BufferLayout, cfg: StreamConfig, order, *, a0, a_star, link,
            keep_iterates, trace_pairs) -> FitReport:
    link = _link_of(stream, link)
    horizon = _horizon_of(stream, None) if hasattr(stream, "__len__") else None
    if horizon is not None:
        layout.check_horizon(horizon)
    s, n_buf = layout.block, layout.n_buffers
    t0 = cfg.tail_start(n_buf)
    two_gamma = 2.0 * cfg.gamma
    phi = link.apply
    reader = _Reader(stream)
    nxt = reader.one()
    a = _init(nxt.shape[0], a0)
    tail_sum = np.zeros_like(a)
    estimate = a
    rec = Recorder(a_star)
    rec.record(0, a)
    iterates = [] if keep_iterates else None
    pairs = [] if trace_pairs else None
    updates = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(n_buf):
            buf = np.empty((s + 1, nxt.shape[0]))
            buf[0] = nxt
            buf[1:] = reader.take(s)
            nxt = buf[s]
            if np.einsum("ij,ij->i", buf[:s], buf[:s]).max() > cfg.r_trunc:
                zero = np.zeros_like(a)
                rec.record(updates, zero)
                return rec.report(zero, Status.TRUNCATED, updates, iterates=iterates, pairs=pairs)
            for j in order(t):
                x = buf[j]
                a -= two_gamma * np.outer(phi(a @ x) - buf[j + 1], x)
                if trace_pairs:
                    pairs.append((t * s + j, t * s + j + 1))
            updates += layout.buffer_size
            if diverged(a):
                rec.record(updates, a)
                return rec.report(a.copy(), Status.DIVERGED, updates, iterates=iterates, pairs=pairs)
            if keep_iterates:
                iterates.append(a.copy())
            if t + 1 > t0:
                tail_sum += a
                estimate = tail_sum / (t + 1 - t0)
            else:
                estimate = a
            rec.record(updates, estimate)
    return rec.report(estimate.copy(), Status.OK, updates, iterates=iterates, pairs=pairs)


def sgd_rer(stream, layout: BufferLayout, cfg: StreamConfig | float, *, a0=None, a_star=None,
            link: LinkFunction | None = None, keep_iterates: bool = False,
            trace_pairs: bool = False) -> FitReport:
    """SGD with reverse experience replay.

    Block ``t`` covers ``X[tS] .. X[tS + S - 1]``; its pairs
    ``(X[tS + j], X[tS + j + 1])`` are processed for ``j = S-1`` down to
    ``u`` (the newest pair targets the first sample of the next block).
    The returned estimate is the mean of the buffer-end iterates after
    buffer ``t0``.  A sample with squared norm above ``cfg.r_trunc``
    returns the zero matrix with status ``truncated_returned_zero``.
    """
    if not isinstance(cfg, StreamConfig):
        cfg = StreamConfig(float(cfg))
    _link_of(stream, link).require_expansive("sgd_rer")
    s, u = layout.block, layout.gap
    rev = range(s - 1, u - 1, -1)
    return _replay(stream, layout, cfg, lambda t: rev, a0=a0, a_star=a_star, link=link,
                   keep_iterates=keep_iterates, trace_pairs=trace_pairs)


def sgd_er(stream, layout: BufferLayout, cfg: StreamConfig | float, seed: int = 0, *, a0=None,
           a_star=None, link: LinkFunction | None = None, keep_iterates: bool = False,
           trace_pairs: bool = False) -> FitReport:
    """Experience replay with each buffer's pairs in a fresh random order."""
    if not isinstance(cfg, StreamConfig):
        cfg = StreamConfig(float(cfg))
    rng = np.random.default_rng(seed)
    s, u = layout.block, layout.gap
    base = np.arange(u, s)
    return _replay(stream, layout, cfg, lambda t: rng.permutation(base).tolist(), a0=a0,
                   a_star=a_star, link=link, keep_iterates=keep_iterates, trace_pairs=trace_pairs)


def _project_rows_l2(a: np.ndarray, radius: float) -> None:
    norms = np.linalg.norm(a, axis=1)
    over = norms > radius
    if over.any():
        a[over] *= (radius / norms[over])[:, None]


def _strided_sgd(stream, gamma, stride, horizon, tail_fraction, proj_radius, *, a0, a_star, link,
                 record_every, trace_pairs):
    link = _link_of(stream, link)
    phi = link.apply
    n_updates = horizon // stride
    if n_updates < 1:
        raise ConfigError(f"horizon {horizon} too short for gap {stride}")
    if not 0.0 < tail_fraction <= 1.0:
        raise ConfigError("tail fraction must lie in (0, 1]")
    tail_from = n_updates - max(1, int(round(tail_fraction * n_updates)))
    two_gamma = 2.0 * gamma
    reader = _Reader(stream)
    x = reader.one()
    a = _init(x.shape[0], a0)
    tail_sum = np.zeros_like(a)
    estimate = a
    rec = Recorder(a_star)
    rec.record(0, a)
    pairs = [] if trace_pairs else None
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_updates):
            y = reader.one()
            a -= two_gamma * np.outer(phi(a @ x) - y, x)
            if proj_radius < math.inf:
                _project_rows_l2(a, proj_radius)
            if trace_pairs:
                pairs.append((k * stride, k * stride + 1))
            if k + 1 > tail_from:
                tail_sum += a
                estimate = tail_sum / (k + 1 - tail_from)
            else:
                estimate = a
            done = k + 1
            if done % record_every == 0 or done == n_updates:
                if diverged(a):
                    rec.record(done, a)
                    return rec.report(a.copy(), Status.DIVERGED, done, pairs=pairs)
                rec.record(done, estimate)
            if k + 1 < n_updates:
                # skip to the next retained input X[(k+1) * stride]
                if stride > 1:
                    reader.take(stride - 2)
                    x = reader.one()
                else:
                    x = y
    return rec.report(estimate.copy(), Status.OK, n_updates, pairs=pairs)


def forward_sgd(stream, gamma: float, *, horizon: int | None = None, tail_fraction: float = 0.5,
                a0=None, a_star=None, link: LinkFunction | None = None, record_every: int = 250,
                trace_pairs: bool = False) -> FitReport:
    """Plain SGD over ``(X[t], X[t+1])`` in arrival order.

    Returns the average of the iterates over the last ``tail_fraction``
    of the updates.
    """
    if not gamma > 0.0:
        raise ConfigError("step size must be positive")
    return _strided_sgd(stream, gamma, 1, _horizon_of(stream, horizon), tail_fraction, math.inf,
                        a0=a0, a_star=a_star, link=link, record_every=record_every,
                        trace_pairs=trace_pairs)


def sgd_dd(stream, gap_u: int, gamma: float, proj_radius: float = math.inf, *,
           horizon: int | None = None, tail_fraction: float = 0.5, a0=None, a_star=None,
           link: LinkFunction | None = None, record_every: int = 250,
           trace_pairs: bool = False) -> FitReport:
    """SGD with data dropping: only pairs ``(X[tu], X[tu+1])`` are used, and
    each row is projected onto the Euclidean ball of radius ``proj_radius``."""
    if gap_u < 1:
        raise ConfigError("gap must be >= 1")
    if not gamma > 0.0:
        raise ConfigError("step size must be positive")
    if not proj_radius > 0.0:
        raise ConfigError("projection radius must be positive")
    return _strided_sgd(stream, gamma, gap_u, _horizon_of(stream, horizon), tail_fraction,
                        proj_radius, a0=a0, a_star=a_star, link=link, record_every=record_every,
                        trace_pairs=trace_pairs)


def l1_project(v, radius: float) -> np.ndarray:
    """Euclidean projection onto ``{x : ||x||_1 <= radius}`` (sort-based soft threshold)."""
    if radius < 0:
        raise ConfigError("radius must be >= 0")
    v = np.asarray(v, dtype=float)
    return l1_project_rows(v[None, :], radius)[0]


def l1_project_rows(m: np.ndarray, radius: float) -> np.ndarray:
    """Apply :func:`l1_project` to every row of ``m``."""
    m = np.asarray(m, dtype=float)
    if radius == 0.0:
        return np.zeros_like(m)
    absm = np.abs(m)
    out = m.copy()
    inside = absm.sum(axis=1) <= radius
    if inside.all():
        return out
    rows = absm[~inside]
    srt = -np.sort(-rows, axis=1)
    cums = np.cumsum(srt, axis=1)
    k = np.arange(1, rows.shape[1] + 1)
    cond = srt - (cums - radius) / k > 0
    last = rows.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = (cums[np.arange(rows.shape[0]), last] - radius) / (last + 1)
    out[~inside] = np.sign(m[~inside]) * np.maximum(rows - theta[:, None], 0.0)
    return out


def bernoulli_constants(nu_max: float, radius: float) -> float:
    """``zeta = c0 = exp(-nu_max - radius) / 4`` for the logistic Bernoulli model."""
    return 0.25 * math.exp(-nu_max - radius)


def projected_sgd_glm(stream, nu, radius: float, zeta: float | None = None, c0: float | None = None, *,
                      a0=None, a_star=None, record_every: int = 250) -> FitReport:
    """Row-wise projected SGD for ``X[t+1] = sigmoid(nu + A X[t]) + noise``.

    Step ``t`` uses the pair ``(X[2t], X[2t+1])`` with step size
    ``1 / (2 c0 zeta (t + 1))`` and projects every row onto the l1 ball of
    radius ``radius``.  Returns the final iterate.
    """
    nu = np.asarray(nu, dtype=float).reshape(-1)
    if not radius > 0.0:
        raise ConfigError("radius must be positive")
    base = bernoulli_constants(float(np.max(np.abs(nu))), radius)
    zeta = base if zeta is None else zeta
    c0 = base if c0 is None else c0
    reader = _Reader(stream)
    a = _init(nu.shape[0], a0)
    rec = Recorder(a_star)
    rec.record(0, a)
    scale = 1.0 / (2.0 * c0 * zeta)
    t = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while True:
            try:
                x = reader.one()
                y = reader.one()
            except ConfigError:
                break
            alpha = scale / (t + 1)
            a = l1_project_rows(a - alpha * np.outer(expit(nu + a @ x) - y, x), radius)
            t += 1
            if t % record_every == 0:
                if diverged(a):
                    rec.record(t, a)
                    return rec.report(a, Status.DIVERGED, t)
                rec.record(t, a)
    if t == 0:
        raise ConfigError("stream too short for a single pair")
    if not rec.walls or rec.walls[-1][0] != t:
        rec.record(t, a)
    return rec.report(a, Status.OK, t)
