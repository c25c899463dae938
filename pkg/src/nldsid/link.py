"""Scalar link functions applied coordinate-wise to ``A @ x``.

Every link carries the metadata the solvers rely on: the expansivity
floor ``zeta`` (lower bound on difference quotients), the Lipschitz
constant, and whether ``phi(0) == 0``.  Links are selected from config
strings such as ``"leaky_relu:0.5"``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConfigError, NonExpansiveLinkError

KINDS = ("identity", "leaky_relu", "relu", "logistic")


@dataclass(frozen=True)
class LinkFunction:
    """A monotone, 1-Lipschitz scalar map with derivative and antiderivative.

    Parameters
    ----------
    kind : str
        One of ``identity``, ``leaky_relu``, ``relu``, ``logistic``.
    slope : float
        Negative-branch slope for ``leaky_relu``; ignored otherwise.
    bound : float
        Half-width of the domain on which ``logistic`` expansivity is
        declared.  ``inf`` for the piecewise-linear links.
    """

    kind: str
    slope: float = 1.0
    bound: float = math.inf

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown link kind {self.kind!r}")
        if self.kind == "leaky_relu" and not 0.0 < self.slope <= 1.0:
            raise ConfigError("leaky_relu slope must lie in (0, 1]")
        if self.kind == "logistic" and not (self.bound >= 0 and math.isfinite(self.bound)):
            raise ConfigError("logistic link needs a finite domain bound")

    @property
    def zeta(self) -> float:
        if self.kind == "identity":
            return 1.0
        if self.kind == "leaky_relu":
            return float(self.slope)
        if self.kind == "relu":
            return 0.0
        s = float(expit(self.bound))
        return s * (1.0 - s)

    @property
    def lipschitz(self) -> float:
        return 0.25 if self.kind == "logistic" else 1.0

    @property
    def zero_at_origin(self) -> bool:
        return self.kind != "logistic"

    @property
    def domain(self) -> tuple[float, float]:
        return (-self.bound, self.bound)

    @property
    def name(self) -> str:
        if self.kind == "leaky_relu":
            return f"leaky_relu:{self.slope!r}"
        if self.kind == "logistic":
            return f"logistic:{self.bound!r}"
        return self.kind

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return x.copy() if x.ndim else float(x)
        if self.kind == "leaky_relu":
            out = np.where(x < 0, self.slope * x, x)
        elif self.kind == "relu":
            out = np.maximum(x, 0.0)
        else:
            out = expit(x)
        return out if out.ndim else float(out)

    def apply(self, z: np.ndarray) -> np.ndarray:
        """Array-only fast path used inside solver loops."""
        if self.kind == "identity":
            return z
        if self.kind == "leaky_relu":
            return np.maximum(z, self.slope * z)
        if self.kind == "relu":
            return np.maximum(z, 0.0)
        return expit(z)

    def deriv(self, x):
        """Weak derivative; the kink at 0 takes the right derivative (1)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            out = np.ones_like(x)
        elif self.kind == "leaky_relu":
            out = np.where(x < 0, self.slope, 1.0)
        elif self.kind == "relu":
            out = np.where(x < 0, 0.0, 1.0)
        else:
            s = expit(x)
            out = s * (1.0 - s)
        return out if out.ndim else float(out)

    def antideriv(self, x):
        """Antiderivative normalised so that ``antideriv(0) == 0``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            out = 0.5 * x * x
        elif self.kind == "leaky_relu":
            out = np.where(x < 0, 0.5 * self.slope * x * x, 0.5 * x * x)
        elif self.kind == "relu":
            out = np.where(x < 0, 0.0, 0.5 * x * x)
        else:
            out = np.logaddexp(0.0, x) - math.log(2.0)
        return out if out.ndim else float(out)

    def require_expansive(self, who: str = "solver") -> None:
        if self.zeta <= 0.0:
            raise NonExpansiveLinkError(f"{who} requires an expansive link (zeta > 0), got {self.name}")


def identity() -> LinkFunction:
    return LinkFunction("identity")


def leaky_relu(slope: float = 0.5) -> LinkFunction:
    return LinkFunction("leaky_relu", slope=float(slope))


def relu() -> LinkFunction:
    return LinkFunction("relu")


def logistic(bound: float) -> LinkFunction:
    """Logistic link whose expansivity is declared on ``[-bound, bound]``.

    Only meaningful for the Bernoulli autoregressive estimator, where
    ``bound = nu_max + radius``.
    """
    return LinkFunction("logistic", bound=float(bound))


def parse_link(text: str) -> LinkFunction:
    """Parse ``"kind"`` or ``"kind:param"`` (e.g. ``"leaky_relu:0.5"``)."""
    kind, _, param = text.strip().partition(":")
    kind = kind.strip()
    if kind == "leaky_relu":
        return leaky_relu(float(param) if param else 0.5)
    if kind == "logistic":
        if not param:
            raise ConfigError("logistic link needs a domain bound, e.g. 'logistic:1.0'")
        return logistic(float(param))
    if param:
        raise ConfigError(f"link {kind!r} takes no parameter")
    return LinkFunction(kind)
