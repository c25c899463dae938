"""Proxy loss, squared loss, Gram matrices and error metrics.

Every function works on explicit ``(inputs, targets)`` arrays so that
streaming code can evaluate them on reordered samples; passing a
:class:`~nldsid.sim.Trajectory` (or a raw ``(T+1, d)`` state array)
uses the consecutive pairs ``(X[t], X[t+1])``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .link import LinkFunction
from .sim import Trajectory

SINGULAR_RTOL = 1e-12


def as_pairs(data) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(data, Trajectory):
        x = data.states
    elif isinstance(data, tuple):
        inputs, targets = (np.asarray(v, dtype=float) for v in data)
        if inputs.shape != targets.shape:
            raise ValueError("inputs and targets must have equal shapes")
        return inputs, targets
    else:
        x = np.asarray(data, dtype=float)
    return x[:-1], x[1:]


def _link_of(data, link):
    if link is not None:
        return link
    if isinstance(data, Trajectory) and data.spec is not None:
        return data.spec.link
    raise ValueError("link not given and not recoverable from data")


def proxy_loss(a: np.ndarray, data, link: LinkFunction | None = None) -> float:
    """``mean_t sum_i [Phi(<a_i, x_t>) - y_t[i] <a_i, x_t>]`` with ``Phi`` the
    link antiderivative.  Convex in ``a``."""
    link = _link_of(data, link)
    x, y = as_pairs(data)
    z = x @ np.asarray(a).T
    return float(np.mean(np.sum(link.antideriv(z) - y * z, axis=1)))


def proxy_grad(a: np.ndarray, data, link: LinkFunction | None = None) -> np.ndarray:
    """``mean_t (phi(a x_t) - y_t) x_t^T``."""
    link = _link_of(data, link)
    x, y = as_pairs(data)
    resid = link.apply(x @ np.asarray(a).T) - y
    return resid.T @ x / x.shape[0]


def squared_loss(a: np.ndarray, data, link: LinkFunction | None = None) -> float:
    link = _link_of(data, link)
    x, y = as_pairs(data)
    resid = link.apply(x @ np.asarray(a).T) - y
    return float(np.mean(np.sum(resid * resid, axis=1)))


@dataclass(frozen=True, eq=False)
class GramMatrix:
    g_hat: np.ndarray
    t_used: int

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.g_hat)

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def singular(self) -> bool:
        ev = self.eigenvalues
        return bool(ev[0] < SINGULAR_RTOL * ev[-1]) or not ev[-1] > 0.0


def empirical_gram(data, t_range=None) -> GramMatrix:
    """``(1/n) sum_{t in t_range} X_t X_t^T`` over input indices.

    ``t_range`` defaults to ``0 .. T-1``; any slice or index sequence works.
    """
    x, _ = as_pairs(data)
    if t_range is not None:
        x = x[t_range]
    if x.shape[0] == 0:
        raise ValueError("empty t_range")
    g = x.T @ x / x.shape[0]
    g = 0.5 * (g + g.T)
    g.setflags(write=False)
    return GramMatrix(g, x.shape[0])


def cross_moment(data, t_range=None) -> np.ndarray:
    """``(1/n) sum X_{t+1} X_t^T``; with the Gram this gives the OLS fit."""
    x, y = as_pairs(data)
    if t_range is not None:
        x, y = x[t_range], y[t_range]
    return y.T @ x / x.shape[0]


def difference_quotients(link: LinkFunction, z: np.ndarray, z_ref: np.ndarray) -> np.ndarray:
    """``(phi(z) - phi(z_ref)) / (z - z_ref)``, falling back to ``phi'`` on ties."""
    dz = z - z_ref
    tie = np.abs(dz) <= 1e-14 * np.maximum(1.0, np.abs(z))
    safe = np.where(tie, 1.0, dz)
    q = (link.apply(z) - link.apply(z_ref)) / safe
    return np.where(tie, link.deriv(z), q)


def quotient_gram(a_row: np.ndarray, ref_row: np.ndarray, data, link: LinkFunction) -> np.ndarray:
    """Gram matrix with each ``x_t x_t^T`` weighted by the link's difference
    quotient between ``<a_row, x_t>`` and ``<ref_row, x_t>``.  Sits between
    ``zeta * G`` and ``G``."""
    x, _ = as_pairs(data)
    q = difference_quotients(link, x @ a_row, x @ ref_row)
    return (x * q[:, None]).T @ x / x.shape[0]


def frob_sq_error(a_hat: np.ndarray, a_star: np.ndarray) -> float:
    diff = np.asarray(a_hat, dtype=float) - np.asarray(a_star, dtype=float)
    return float(np.sum(diff * diff))
