"""System matrices, noise and trajectory simulation.

Noise for the trajectory proper and for any burn-in prefix come from
independent child streams of the trajectory seed, so the recorded noise
sequence does not depend on the burn-in length and can be regenerated
from ``(spec, horizon, seed)`` alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy.special import expit

from .errors import ConfigError, DivergenceError, MissingNoiseError
from .layout import BufferLayout
from .link import LinkFunction, logistic, parse_link


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean noise with per-coordinate variance ``sigma_sq``.

    ``kind`` is ``gaussian``, ``student_t`` (rescaled to variance
    ``sigma_sq``), ``none``, or ``bernoulli`` (state dependent, only
    produced by :func:`bernoulli_ar_simulate`).
    """

    kind: str = "gaussian"
    sigma_sq: float = 1.0
    dof: float | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "student_t", "none", "bernoulli"):
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if self.sigma_sq < 0:
            raise ConfigError("sigma_sq must be non-negative")
        if self.kind == "student_t" and (self.dof is None or self.dof <= 4):
            raise ConfigError("student_t noise needs dof > 4 for a finite fourth moment")

    @property
    def c_eta(self) -> float | None:
        # variance proxy of a standard gaussian coordinate equals its variance
        if self.kind == "gaussian":
            return 1.0
        return None

    def m4(self, d: int) -> float:
        """E||eta||^4 for a d-dimensional noise vector."""
        s4 = self.sigma_sq ** 2
        if self.kind == "none":
            return 0.0
        if self.kind == "gaussian":
            per_coord = 3.0 * s4
        elif self.kind == "student_t":
            nu = self.dof
            per_coord = 3.0 * s4 * (nu - 2.0) / (nu - 4.0)
        else:
            raise ConfigError("fourth moment of bernoulli noise is state dependent")
        return d * per_coord + d * (d - 1) * s4

    def sample(self, rng: np.random.Generator, n: int, d: int) -> np.ndarray:
        """``(n, d)`` draws, time-major."""
        if self.kind == "none" or self.sigma_sq == 0.0:
            return np.zeros((n, d))
        sigma = math.sqrt(self.sigma_sq)
        if self.kind == "gaussian":
            return sigma * rng.standard_normal((n, d))
        if self.kind == "student_t":
            scale = sigma * math.sqrt((self.dof - 2.0) / self.dof)
            return scale * rng.standard_t(self.dof, size=(n, d))
        raise ConfigError("bernoulli noise cannot be sampled without the state")

    @property
    def name(self) -> str:
        if self.kind == "student_t":
            return f"student_t:{self.dof!r}"
        return self.kind


def parse_noise(text: str, sigma_sq: float = 1.0) -> NoiseModel:
    kind, _, param = text.strip().partition(":")
    if kind == "student_t":
        return NoiseModel("student_t", sigma_sq, float(param) if param else 4.1)
    return NoiseModel(kind, sigma_sq)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """``X[t+1] = link(a_star @ X[t] + offset) + eta[t]``.

    ``offset`` is zero except for the Bernoulli autoregressive model.
    """

    a_star: np.ndarray
    link: LinkFunction
    noise: NoiseModel = field(default_factory=NoiseModel)
    offset: np.ndarray | None = None

    def __post_init__(self):
        a = np.array(self.a_star, dtype=float, ndmin=2)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigError(f"a_star must be square, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "a_star", a)
        if self.offset is not None:
            nu = np.array(self.offset, dtype=float).reshape(-1)
            if nu.shape != (a.shape[0],):
                raise ConfigError("offset length must equal d")
            nu.setflags(write=False)
            object.__setattr__(self, "offset", nu)

    @property
    def d(self) -> int:
        return self.a_star.shape[0]

    @property
    def rho(self) -> float:
        return float(np.linalg.norm(self.a_star, 2))

    def require_stable(self) -> None:
        if not self.rho < 1.0:
            raise ConfigError(f"operation needs ||A*|| < 1, got {self.rho:.6g}")

    def step(self, x: np.ndarray, eta: np.ndarray) -> np.ndarray:
        z = self.a_star @ x
        if self.offset is not None:
            z = z + self.offset
        return self.link.apply(z) + eta


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Immutable ``(T+1, d)`` state sequence with provenance.

    ``noise[t]`` (when stored) is the innovation producing ``states[t+1]``.
    """

    states: np.ndarray
    spec: SystemSpec | None = None
    seed: int | None = None
    burn_in: int = 0
    noise: np.ndarray | None = None

    def __post_init__(self):
        x = np.array(self.states, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 2:
            raise ConfigError("trajectory needs at least two states")
        x.setflags(write=False)
        object.__setattr__(self, "states", x)
        if self.noise is not None:
            eta = np.array(self.noise, dtype=float)
            if eta.shape != (x.shape[0] - 1, x.shape[1]):
                raise ConfigError("noise must have shape (T, d)")
            eta.setflags(write=False)
            object.__setattr__(self, "noise", eta)

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    @property
    def d(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return self.states.shape[0]

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.states)

    def head(self, horizon: int) -> "Trajectory":
        """The prefix ``X_0..X_horizon``."""
        if not 1 <= horizon <= self.horizon:
            raise ConfigError(f"prefix horizon {horizon} outside [1, {self.horizon}]")
        noise = None if self.noise is None else self.noise[:horizon]
        return Trajectory(self.states[: horizon + 1], self.spec, self.seed, self.burn_in, noise)


def default_burn_in(rho: float, horizon: int) -> int:
    """``ceil(10 log T / log(1/rho))`` for stable systems, 0 otherwise."""
    if rho <= 0.0 or rho >= 1.0 or horizon < 2:
        return 0
    return math.ceil(10.0 * math.log(horizon) / math.log(1.0 / rho))


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    burn_ss, traj_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(burn_ss), np.random.default_rng(traj_ss)


def trajectory_noise(spec: SystemSpec, horizon: int, seed: int) -> np.ndarray:
    """Regenerate the innovations ``simulate`` uses for ``(spec, horizon, seed)``."""
    return spec.noise.sample(_streams(seed)[1], horizon, spec.d)


def _run(spec: SystemSpec, x0: np.ndarray, eta: np.ndarray, offset_index: int = 0) -> np.ndarray:
    n, d = eta.shape
    out = np.empty((n + 1, d))
    out[0] = x0
    a = spec.a_star
    phi = spec.link.apply
    nu = spec.offset
    x = out[0]
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(n):
            z = a @ x
            if nu is not None:
                z += nu
            x = phi(z) + eta[t]
            out[t + 1] = x
    bad = ~np.isfinite(out).all(axis=1)
    if bad.any():
        raise DivergenceError(offset_index + int(np.argmax(bad)))
    return out


def simulate(spec: SystemSpec, horizon: int, seed: int, x0=None, burn_in: int | None = None,
             store_noise: bool = False) -> Trajectory:
    """Simulate ``horizon`` steps of the system.

    ``burn_in`` warm-up steps are run from ``x0`` and discarded; the
    default is :func:`default_burn_in` of the system's operator norm.
    Raises :class:`DivergenceError` on a non-finite state.
    """
    if horizon < 1:
        raise ConfigError("horizon must be >= 1")
    if spec.noise.kind == "bernoulli":
        raise ConfigError("use bernoulli_ar_simulate for the Bernoulli model")
    d = spec.d
    x = np.zeros(d) if x0 is None else np.array(x0, dtype=float).reshape(d)
    if not np.isfinite(x).all():
        raise ConfigError("x0 must be finite")
    if burn_in is None:
        burn_in = default_burn_in(spec.rho, horizon)
    burn_rng, traj_rng = _streams(seed)
    if burn_in > 0:
        x = _run(spec, x, spec.noise.sample(burn_rng, burn_in, d), -burn_in)[-1]
    eta = spec.noise.sample(traj_rng, horizon, d)
    states = _run(spec, x, eta)
    return Trajectory(states, spec, seed, burn_in, eta if store_noise else None)


def haar_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix via sign-corrected QR."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def rand_bimod(d: int, rho: float, seed) -> np.ndarray:
    """Symmetric ``U diag(rho,..,rho, rho/3,..) U^T`` with ``ceil(d/2)`` eigenvalues at ``rho``."""
    if d < 1:
        raise ConfigError("d must be >= 1")
    if not 0.0 < rho < 1.0:
        raise ConfigError("rand_bimod needs 0 < rho < 1")
    u = haar_orthogonal(d, np.random.default_rng(seed))
    lam = np.full(d, rho / 3.0)
    lam[: math.ceil(d / 2)] = rho
    a = (u * lam) @ u.T
    return 0.5 * (a + a.T)


def relu_lb_matrix(d: int, epsilon: float) -> np.ndarray:
    """Two-point ReLU hardness instance: ``diag(1/4, .., 1/4, 0)`` whose last
    row is ``-epsilon/sqrt(d-1)`` off the diagonal."""
    if d < 2:
        raise ConfigError("relu_lb_matrix needs d >= 2")
    if epsilon < 0:
        raise ConfigError("epsilon must be >= 0")
    a = np.zeros((d, d))
    idx = np.arange(d - 1)
    a[idx, idx] = 0.25
    a[d - 1, : d - 1] = -epsilon / math.sqrt(d - 1)
    return a


def coupled_trajectory(traj: Trajectory, layout: BufferLayout, seed: int,
                       burn_in: int | None = None) -> Trajectory:
    """Restart every buffer from an independent near-stationary state and
    replay the recorded noise.

    Each buffer start comes from its own burn-in chain (seeded from
    ``seed``, started at zero).  Buffer ``t`` fills indices
    ``t*S .. t*S + S - 1``; the last buffer runs to the end of the
    trajectory.
    """
    if traj.noise is None:
        raise MissingNoiseError("coupled_trajectory needs a trajectory with stored noise")
    if traj.spec is None:
        raise ConfigError("coupled_trajectory needs the generating spec")
    layout.check_horizon(traj.horizon)
    spec = traj.spec
    s, n_buf, T = layout.block, layout.n_buffers, traj.horizon
    if burn_in is None:
        burn_in = traj.burn_in or default_burn_in(spec.rho, T)
    children = np.random.SeedSequence(seed).spawn(n_buf)
    out = np.empty_like(traj.states)
    for t in range(n_buf):
        start = np.zeros(spec.d)
        if burn_in > 0:
            rng = np.random.default_rng(children[t])
            start = _run(spec, start, spec.noise.sample(rng, burn_in, spec.d))[-1]
        lo = t * s
        hi = T if t == n_buf - 1 else lo + s - 1
        out[lo: hi + 1] = _run(spec, start, traj.noise[lo:hi], lo)
    return Trajectory(out, spec, seed, burn_in, traj.noise)


def bernoulli_ar_simulate(nu, a_star, horizon: int, seed: int, x0=None,
                          store_noise: bool = False) -> Trajectory:
    """Binary process with ``P(X[t+1, i] = 1 | X[t]) = sigmoid(nu_i + <a_i, X[t]>)``."""
    a = np.array(a_star, dtype=float, ndmin=2)
    d = a.shape[0]
    nu = np.array(nu, dtype=float).reshape(d)
    bound = float(np.max(np.abs(nu)) + np.max(np.abs(a).sum(axis=1)))
    spec = SystemSpec(a, logistic(bound), NoiseModel("bernoulli", 0.0), offset=nu)
    rng = np.random.default_rng(seed)
    uniforms = rng.random((horizon, d))
    states = np.empty((horizon + 1, d))
    states[0] = 0.0 if x0 is None else np.array(x0, dtype=float).reshape(d)
    if not np.isin(states[0], (0.0, 1.0)).all():
        raise ConfigError("Bernoulli states must lie in {0, 1}")
    means = np.empty((horizon, d))
    for t in range(horizon):
        p = expit(nu + a @ states[t])
        means[t] = p
        states[t + 1] = uniforms[t] < p
    noise = states[1:] - means if store_noise else None
    return Trajectory(states, spec, seed, 0, noise)


def build_spec(a_star, link: str | LinkFunction = "leaky_relu:0.5", noise: str | NoiseModel = "gaussian",
               sigma_sq: float = 1.0) -> SystemSpec:
    if isinstance(link, str):
        link = parse_link(link)
    if isinstance(noise, str):
        noise = parse_noise(noise, sigma_sq)
    return SystemSpec(a_star, link, noise)


# --- trajectory files -------------------------------------------------------

def write_trajectory(traj: Trajectory, path) -> None:
    """Header ``d,T,seed,link,rho,sigma_sq`` then ``T+1`` rows of ``d`` reals."""
    spec = traj.spec
    link = spec.link.name if spec is not None else "unknown"
    rho = repr(spec.rho) if spec is not None else "nan"
    sigma_sq = repr(float(spec.noise.sigma_sq)) if spec is not None else "nan"
    seed = "" if traj.seed is None else str(int(traj.seed))
    with open(path, "w") as fh:
        fh.write(f"{traj.d},{traj.horizon},{seed},{link},{rho},{sigma_sq}\n")
        np.savetxt(fh, traj.states, delimiter=",", fmt="%.17g")


@dataclass(frozen=True)
class TrajectoryHeader:
    d: int
    horizon: int
    seed: int | None
    link: str
    rho: float
    sigma_sq: float


def read_trajectory(path) -> tuple[TrajectoryHeader, np.ndarray]:
    with open(path) as fh:
        fields = fh.readline().strip().split(",")
        if len(fields) != 6:
            raise ConfigError(f"{path}: malformed trajectory header")
        d, T, seed, link, rho, sigma_sq = fields
        header = TrajectoryHeader(int(d), int(T), int(seed) if seed else None, link,
                                  float(rho), float(sigma_sq))
        states = np.loadtxt(fh, delimiter=",", ndmin=2)
    if states.shape != (header.horizon + 1, header.d):
        raise ConfigError(f"{path}: expected {(header.horizon + 1, header.d)} states, got {states.shape}")
    return header, states


def load_trajectory(path) -> Trajectory:
    """Read a trajectory file; the attached system carries the link only (A* unknown)."""
    header, states = read_trajectory(path)
    return Trajectory(states, None, header.seed, 0)
