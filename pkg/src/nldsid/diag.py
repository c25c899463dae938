"""Empirical checks of the probabilistic claims behind the estimators.

Each check returns a :class:`DiagReport`; ``passed`` is true exactly when
the observed statistic satisfies the stated relation to ``bound``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, MissingNoiseError
from .layout import BufferLayout
from .link import relu
from .loss import empirical_gram, quotient_gram
from .sim import NoiseModel, SystemSpec, Trajectory, coupled_trajectory, relu_lb_matrix, simulate

# absolute slack (relative to the state scale) for the pathwise coupling bound;
# two chains that have merged keep ulp-level differences forever
COUPLING_ATOL = 1e-12


@dataclass
class DiagReport:
    name: str
    observed: float | list[float]
    bound: float | list[float] | None
    passed: bool
    n_samples: int
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), allow_nan=True)

    @classmethod
    def from_json(cls, text: str) -> "DiagReport":
        return cls(**json.loads(text))


def check_gram_floor(traj: Trajectory, sigma_sq: float) -> DiagReport:
    """Smallest eigenvalue of the empirical Gram against ``sigma^2 / 2``."""
    gram = empirical_gram(traj)
    lam = gram.lambda_min
    bound = sigma_sq / 2.0
    return DiagReport("gram_floor", lam, bound, bool(lam >= bound and sigma_sq > 0), gram.t_used,
                      {"lambda_max": gram.lambda_max})


def check_coupling(traj: Trajectory, layout: BufferLayout, seed: int,
                   burn_in: int | None = None) -> DiagReport:
    """Pathwise check of ``||X^t_i - Xc^t_i|| <= rho^i ||X^t_0 - Xc^t_0||`` for
    every buffer ``t`` and offset ``i < S``, with ``rho = ||A*||``."""
    if traj.noise is None:
        raise MissingNoiseError("check_coupling needs a trajectory with stored noise")
    spec = traj.spec
    spec.require_stable()
    coupled = coupled_trajectory(traj, layout, seed, burn_in)
    s, n_buf = layout.block, layout.n_buffers
    x = traj.states[: n_buf * s].reshape(n_buf, s, -1)
    xc = coupled.states[: n_buf * s].reshape(n_buf, s, -1)
    dist = np.linalg.norm(x - xc, axis=2)
    scale = np.maximum(np.linalg.norm(x, axis=2), np.linalg.norm(xc, axis=2))
    bound = dist[:, :1] * spec.rho ** np.arange(s)[None, :]
    excess = dist - bound - COUPLING_ATOL * (1.0 + scale)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, dist / bound, np.where(dist > 0, np.inf, 0.0))
    return DiagReport("coupling", float(ratio[:, 1:].max()) if s > 1 else 0.0, 1.0,
                      bool((excess <= 0).all()), int(dist.size),
                      {"max_excess": float(excess.max()), "rho": spec.rho})


def relu_lb_spec(d: int, epsilon: float) -> SystemSpec:
    return SystemSpec(relu_lb_matrix(d, epsilon), relu(), NoiseModel("gaussian", 1.0))


def relu_sign_fraction(d: int, epsilon: float, horizon: int, seed: int) -> DiagReport:
    """Fraction of ``t in [2, T]`` with ``<a_d(eps), X_t> > 0`` (the last
    coordinate sees signal only on those steps).  Starts from ``X_0 = 0``."""
    if d < 2:
        raise ConfigError("d must be >= 2")
    if horizon < 2:
        raise ConfigError("horizon must be >= 2")
    spec = relu_lb_spec(d, epsilon)
    traj = simulate(spec, horizon, seed, burn_in=0)
    score = traj.states[2:] @ spec.a_star[d - 1]
    frac = float(np.mean(score > 0))
    # no inequality to check per run; the decay across d is checked by relu_decay
    return DiagReport("relu_sign_fraction", frac, None, True, horizon - 1,
                      {"d": d, "epsilon": epsilon, "seed": seed})


def relu_decay(ds, epsilon: float, horizon: int, seeds, slope_max: float = -0.05) -> DiagReport:
    """Seed-averaged sign fractions across ``ds``; passes when they strictly
    decrease and the least-squares slope of ``log(fraction)`` against ``d``
    is below ``slope_max``."""
    ds = list(ds)
    per_seed = [[relu_sign_fraction(d, epsilon, horizon, s).observed for s in seeds] for d in ds]
    means = [float(np.mean(v)) for v in per_seed]
    decreasing = all(b < a for a, b in zip(means, means[1:]))
    if all(m > 0 for m in means) and len(ds) > 1:
        slope = float(np.polyfit(ds, np.log(means), 1)[0])
    else:
        slope = math.nan
    passed = decreasing and slope < slope_max
    return DiagReport("relu_decay", means, slope_max, bool(passed), len(ds) * len(list(seeds)),
                      {"ds": ds, "slope": slope, "strictly_decreasing": decreasing,
                       "per_seed": per_seed})


def norm_bound(spec: SystemSpec) -> float:
    """``8 d C_eta sigma^2 / (1 - rho)``."""
    spec.require_stable()
    c_eta = spec.noise.c_eta
    if c_eta is None:
        raise ConfigError("norm concentration bound needs sub-gaussian noise")
    return 8.0 * spec.d * c_eta * spec.noise.sigma_sq / (1.0 - spec.rho)


def check_norm_concentration(traj: Trajectory) -> DiagReport:
    """Mean of ``||X_t||^2`` against ``8 d C_eta sigma^2 / (1 - rho)``."""
    bound = norm_bound(traj.spec)
    sq = np.einsum("ij,ij->i", traj.states, traj.states)
    obs = float(sq.mean())
    return DiagReport("norm_concentration", obs, bound, bool(obs <= bound), len(sq))


def mixing_proxy(rho: float, c_rho: float = 1.0) -> float:
    """``(1 + log C_rho) / log(1/rho)``."""
    if not 0.0 < rho < 1.0:
        raise ConfigError("mixing proxy needs 0 < rho < 1")
    return (1.0 + math.log(c_rho)) / math.log(1.0 / rho)


def noise_projection(traj: Trajectory) -> np.ndarray:
    """Rows ``N_i = (1/T) sum_t eta_t[i] X_t``."""
    if traj.noise is None:
        raise MissingNoiseError("needs stored noise")
    x = traj.states[:-1]
    return traj.noise.T @ x / x.shape[0]


def contraction_certificate(traj: Trajectory, iterates, gamma: float, slack: float = 1e-8) -> DiagReport:
    """Checks, for every row ``i`` and Quasi Newton iteration ``l``,

        ||G^{1/2}(a_i(l+1) - a*_i)|| <= (1 - 2 gamma zeta) ||G^{1/2}(a_i(l) - a*_i)||
                                        + 2 gamma ||G^{-1/2} N_i||

    on a trajectory with stored noise.  ``observed`` is the largest
    violation (left minus right side).
    """
    spec = traj.spec
    if spec is None:
        raise ConfigError("certificate needs the generating spec")
    zeta = spec.link.zeta
    g = empirical_gram(traj).g_hat
    w, v = np.linalg.eigh(g)
    g_half = (v * np.sqrt(w)) @ v.T
    g_mhalf = (v / np.sqrt(w)) @ v.T
    noise_term = np.linalg.norm(noise_projection(traj) @ g_mhalf, axis=1)
    a_star = spec.a_star
    lyap = [np.linalg.norm((np.asarray(a) - a_star) @ g_half, axis=1) for a in iterates]
    worst = -math.inf
    for prev, nxt in zip(lyap, lyap[1:]):
        gap = nxt - (1.0 - 2.0 * gamma * zeta) * prev - 2.0 * gamma * noise_term
        worst = max(worst, float(gap.max()))
    checks = (len(lyap) - 1) * spec.d
    return DiagReport("contraction_certificate", worst, slack, bool(worst <= slack), checks)


def check_quotient_ordering(traj: Trajectory, a: np.ndarray, n_probe: int = 64, seed: int = 0,
                            rtol: float = 1e-10) -> DiagReport:
    """Rayleigh-quotient probe of ``zeta G <= K_i <= G`` where ``K_i`` is the
    difference-quotient-weighted Gram between row ``i`` of ``a`` and of ``A*``."""
    spec = traj.spec
    zeta = spec.link.zeta
    g = empirical_gram(traj).g_hat
    rng = np.random.default_rng(seed)
    probes = rng.standard_normal((n_probe, spec.d))
    g_q = np.einsum("ij,jk,ik->i", probes, g, probes)
    worst = 0.0
    for i in range(spec.d):
        k = quotient_gram(np.asarray(a)[i], spec.a_star[i], traj, spec.link)
        k_q = np.einsum("ij,jk,ik->i", probes, k, probes)
        worst = max(worst, float(np.max(k_q - g_q) / np.max(g_q)),
                    float(np.max(zeta * g_q - k_q) / np.max(g_q)))
    return DiagReport("quotient_ordering", worst, rtol, bool(worst <= rtol), n_probe * spec.d)
