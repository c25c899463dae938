"""Experiment harness: flat dotted-key configs, per-(algo, seed) cells, CSV rows.

Config example::

    system.kind = rand_bimod
    system.d = 5
    system.rho = 0.98
    system.link = leaky_relu:0.5
    system.noise = gaussian
    system.sigma_sq = 1
    horizon = 100000
    seeds = 1, 2, 3, 4, 5
    output = ordering.csv
    algo.sgd-rer.buffer = 240
    algo.sgd-rer.gap = 10
    algo.sgd-rer.tail_start = 0
    algo.quasi-newton.gamma = 0.2

Every ``algo.<name>.*`` key enables that algorithm; ``algorithms = a, b``
may list algorithms explicitly (and fixes their order).
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .diag import mixing_proxy
from .errors import ConfigError, NLDSError
from .layout import BufferLayout
from .link import parse_link
from .loss import frob_sq_error
from .offline import glmtron, median_of_means_fit, quasi_newton, theory_iters
from .report import FitReport, Status
from .sim import (SystemSpec, Trajectory, bernoulli_ar_simulate, default_burn_in, parse_noise,
                  rand_bimod, relu_lb_matrix, simulate)
from .stream import (StreamConfig, default_gap, default_truncation, forward_sgd, log_step_size,
                     projected_sgd_glm, sgd_dd, sgd_er, sgd_rer)

log = logging.getLogger(__name__)

CSV_HEADER = ["algo", "seed", "t", "updates", "wall_ns", "frob_sq_err"]
SWEEP_HEADER = CSV_HEADER + ["axis", "axis_value"]

ALGOS = ("quasi-newton", "glmtron", "mom", "sgd-rer", "sgd", "sgd-er", "sgd-dd", "glm-proj")

# per-algorithm parameters and their defaults; "auto" resolves against the run
ALGO_PARAMS: dict[str, dict[str, str]] = {
    "quasi-newton": {"gamma": "0.25", "iters": "auto"},
    "glmtron": {"gamma": "0.017", "iters": "2000"},
    "mom": {"k": "5", "gap": "auto", "gamma": "0.25", "iters": "auto"},
    "sgd-rer": {"buffer": "240", "gap": "10", "gamma": "auto", "trunc": "inf", "tail_start": "auto"},
    "sgd-er": {"buffer": "240", "gap": "10", "gamma": "auto", "trunc": "inf", "tail_start": "auto"},
    "sgd": {"gamma": "auto", "tail_fraction": "0.5"},
    "sgd-dd": {"gap": "10", "gamma": "auto", "radius": "auto", "tail_fraction": "0.5"},
    "glm-proj": {"radius": "1.0"},
}

SYSTEM_DEFAULTS = {
    "kind": "rand_bimod", "d": "5", "rho": "0.98", "epsilon": "0.1", "link": "leaky_relu:0.5",
    "noise": "gaussian", "sigma_sq": "1.0", "burn_in": "auto", "matrix": "", "matrix_seed": "",
    "nu": "0.0", "row_l1": "0.5",
}


@dataclass(frozen=True)
class ResultRow:
    algo: str
    seed: int
    t: int
    updates: int
    wall_ns: int
    frob_sq_err: float
    axis: str | None = None
    axis_value: str | None = None

    def as_list(self) -> list[str]:
        out = [self.algo, str(self.seed), str(self.t), str(self.updates), str(self.wall_ns),
               repr(float(self.frob_sq_err))]
        if self.axis is not None:
            out += [self.axis, str(self.axis_value)]
        return out


@dataclass
class ExperimentConfig:
    system: dict[str, str]
    horizon: int
    algorithms: list[tuple[str, dict[str, str]]]
    seeds: list[int]
    output_path: str | None = None
    record_stride: int = 1
    workers: int = 1
    raw: dict[str, str] = field(default_factory=dict)

    def algo_names(self) -> list[str]:
        return [name for name, _ in self.algorithms]


# --- parsing ----------------------------------------------------------------

def parse_kv(text: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; later keys override."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        out[key.strip()] = value.strip().strip('"').strip("'")
    return out


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.replace(";", ",").split(",") if v.strip()]


def config_from_dict(kv: dict[str, str]) -> ExperimentConfig:
    system = dict(SYSTEM_DEFAULTS)
    algos: dict[str, dict[str, str]] = {}
    order: list[str] = []
    for key, value in kv.items():
        if key.startswith("system."):
            name = key[len("system."):]
            if name not in SYSTEM_DEFAULTS:
                raise ConfigError(f"unknown system key {key!r}")
            system[name] = value
        elif key.startswith("algo."):
            parts = key.split(".")
            if len(parts) != 3:
                raise ConfigError(f"algorithm keys look like algo.<name>.<param>, got {key!r}")
            _, name, param = parts
            if name not in ALGO_PARAMS:
                raise ConfigError(f"unknown algorithm {name!r}")
            if param not in ALGO_PARAMS[name]:
                raise ConfigError(f"unknown parameter {param!r} for {name}")
            if name not in algos:
                algos[name] = {}
                order.append(name)
            algos[name][param] = value
        elif key not in ("horizon", "seeds", "output", "record_stride", "workers", "algorithms"):
            raise ConfigError(f"unknown config key {key!r}")
    if "algorithms" in kv:
        order = [a.strip() for a in kv["algorithms"].split(",") if a.strip()]
        for name in order:
            if name not in ALGO_PARAMS:
                raise ConfigError(f"unknown algorithm {name!r}")
            algos.setdefault(name, {})
    algorithms = [(name, {**ALGO_PARAMS[name], **algos[name]}) for name in order]
    cfg = ExperimentConfig(
        system=system,
        horizon=int(float(kv.get("horizon", "100000"))),
        algorithms=algorithms,
        seeds=_int_list(kv.get("seeds", "0")),
        output_path=kv.get("output") or None,
        record_stride=int(kv.get("record_stride", "1")),
        workers=int(kv.get("workers", "1")),
        raw=dict(kv),
    )
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    return config_from_dict(parse_kv(Path(path).read_text()))


# --- system construction ------------------------------------------------------

def _matrix_from_text(text: str) -> np.ndarray:
    rows = [r for r in text.split(";") if r.strip()]
    return np.array([[float(v) for v in r.split(",")] for r in rows])


def _bernoulli_matrix(d: int, row_l1: float, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d))
    return row_l1 * a / np.abs(a).sum(axis=1, keepdims=True)


def system_matrix(system: dict[str, str], seed: int) -> np.ndarray:
    kind = system["kind"]
    d = int(system["d"])
    mseed = int(system["matrix_seed"]) if system["matrix_seed"] else seed
    # matrix and trajectory draw from distinct seed streams
    mrng = np.random.SeedSequence([mseed, 1])
    if kind == "rand_bimod":
        return rand_bimod(d, float(system["rho"]), mrng)
    if kind == "relu_lb":
        return relu_lb_matrix(d, float(system["epsilon"]))
    if kind == "explicit":
        a = _matrix_from_text(system["matrix"])
        if a.shape != (d, d):
            raise ConfigError(f"system.matrix has shape {a.shape}, expected {(d, d)}")
        return a
    if kind == "bernoulli":
        return _bernoulli_matrix(d, float(system["row_l1"]), mrng)
    raise ConfigError(f"unknown system kind {kind!r}")


def system_spec(system: dict[str, str], seed: int) -> SystemSpec:
    a = system_matrix(system, seed)
    if system["kind"] == "bernoulli":
        raise ConfigError("bernoulli systems have no gaussian-noise spec")
    return SystemSpec(a, parse_link(system["link"]), parse_noise(system["noise"], float(system["sigma_sq"])))


def _nu(system: dict[str, str]) -> np.ndarray:
    d = int(system["d"])
    vals = [float(v) for v in system["nu"].split(",")]
    return np.full(d, vals[0]) if len(vals) == 1 else np.array(vals)


def make_trajectory(system: dict[str, str], horizon: int, seed: int) -> tuple[Trajectory, np.ndarray]:
    if system["kind"] == "bernoulli":
        a = system_matrix(system, seed)
        return bernoulli_ar_simulate(_nu(system), a, horizon, seed), a
    spec = system_spec(system, seed)
    burn = None if system["burn_in"] == "auto" else int(system["burn_in"])
    return simulate(spec, horizon, seed, burn_in=burn), spec.a_star


# --- validation -----------------------------------------------------------------

def _num(params: dict[str, str], key: str, auto=None) -> float | None:
    v = params[key]
    if v == "auto":
        return auto
    if v in ("inf", "infinity"):
        return math.inf
    try:
        return float(v)
    except ValueError:
        raise ConfigError(f"{key} = {v!r} is not a number") from None


def resolve_params(name: str, params: dict[str, str], horizon: int, spec_info: dict) -> dict:
    """Turn string parameters into numbers, filling ``auto`` values."""
    rho = spec_info.get("rho")
    p: dict = {}
    if name in ("sgd-rer", "sgd-er", "sgd", "sgd-dd"):
        p["gamma"] = _num(params, "gamma", log_step_size(horizon))
    if name in ("sgd-rer", "sgd-er"):
        p["buffer"] = int(_num(params, "buffer"))
        gap = _num(params, "gap")
        if gap is None:
            if rho is None:
                raise ConfigError(f"{name}: gap=auto needs a known operator norm")
            gap = default_gap(rho, 1.0, horizon)
        p["gap"] = int(gap)
        trunc = _num(params, "trunc")
        if trunc is None:
            trunc = default_truncation(spec_info["d"], spec_info["sigma_sq"], rho, horizon)
        p["trunc"] = trunc
        t0 = _num(params, "tail_start")
        p["tail_start"] = None if t0 is None else int(t0)
    if name in ("sgd", "sgd-dd"):
        p["tail_fraction"] = _num(params, "tail_fraction")
    if name == "sgd-dd":
        p["gap"] = int(_num(params, "gap"))
        p["radius"] = _num(params, "radius")  # None -> 10 ||A*||_F at run time
    if name in ("quasi-newton", "glmtron", "mom"):
        p["gamma"] = _num(params, "gamma")
        iters = _num(params, "iters")
        p["iters"] = None if iters is None else int(iters)
    if name == "mom":
        p["k"] = int(_num(params, "k"))
        gap = _num(params, "gap")
        if gap is None:
            if rho is None or rho >= 1:
                raise ConfigError("mom: gap=auto needs a stable system")
            gap = math.ceil(mixing_proxy(rho) * math.log(horizon)) if rho > 0 else 0
        p["gap"] = int(gap)
    if name == "glm-proj":
        p["radius"] = _num(params, "radius")
    return p


def _spec_info(system: dict[str, str]) -> dict:
    kind = system["kind"]
    info = {"d": int(system["d"]), "sigma_sq": float(system["sigma_sq"]), "rho": None}
    if kind == "rand_bimod":
        info["rho"] = float(system["rho"])
    elif kind == "relu_lb":
        info["rho"] = math.sqrt(1 / 16 + float(system["epsilon"]) ** 2)
    elif kind == "explicit" and system["matrix"]:
        info["rho"] = float(np.linalg.norm(_matrix_from_text(system["matrix"]), 2))
    return info


def validate(cfg: ExperimentConfig) -> None:
    """Check every hyperparameter against its solver's preconditions."""
    if not cfg.algorithms:
        raise ConfigError("config enables no algorithm")
    if not cfg.seeds:
        raise ConfigError("config lists no seed")
    if cfg.horizon < 2:
        raise ConfigError("horizon must be >= 2")
    if cfg.record_stride < 1 or cfg.workers < 1:
        raise ConfigError("record_stride and workers must be >= 1")
    system = cfg.system
    kind = system["kind"]
    if kind not in ("rand_bimod", "relu_lb", "explicit", "bernoulli"):
        raise ConfigError(f"unknown system kind {kind!r}")
    if int(system["d"]) < 1:
        raise ConfigError("system.d must be >= 1")
    if kind == "rand_bimod" and not 0 < float(system["rho"]) < 1:
        raise ConfigError("rand_bimod needs 0 < rho < 1")
    if kind == "relu_lb" and int(system["d"]) < 2:
        raise ConfigError("relu_lb needs d >= 2")
    if kind == "explicit":
        a = _matrix_from_text(system["matrix"]) if system["matrix"] else None
        if a is None or a.shape != (int(system["d"]),) * 2:
            raise ConfigError("explicit system needs system.matrix of shape (d, d)")
    link = parse_link(system["link"])
    if kind != "bernoulli":
        parse_noise(system["noise"], float(system["sigma_sq"]))
    info = _spec_info(system)
    for name, params in cfg.algorithms:
        p = resolve_params(name, params, cfg.horizon, info)
        if (name == "glm-proj") != (kind == "bernoulli"):
            raise ConfigError(f"{name} does not apply to a {kind} system")
        if name in ("quasi-newton", "glmtron", "mom", "sgd-rer") and kind != "bernoulli" and link.zeta <= 0:
            raise ConfigError(f"{name} requires an expansive link, got {link.name}")
        if name in ("quasi-newton", "mom") and not 0 < p["gamma"] <= 0.5:
            raise ConfigError(f"{name}: gamma must lie in (0, 1/2]")
        if name == "glmtron" and not p["gamma"] > 0:
            raise ConfigError("glmtron: gamma must be positive")
        if name in ("quasi-newton", "glmtron", "mom") and p["iters"] is not None and p["iters"] < 1:
            raise ConfigError(f"{name}: iters must be >= 1")
        if name == "mom":
            from .offline import segment_bounds
            segment_bounds(cfg.horizon, p["k"], p["gap"])
        if name in ("sgd-rer", "sgd-er"):
            layout = BufferLayout.for_horizon(cfg.horizon, p["buffer"], p["gap"])
            StreamConfig(p["gamma"], p["trunc"], p["tail_start"]).tail_start(layout.n_buffers)
        if name in ("sgd", "sgd-dd", "sgd-rer", "sgd-er") and not p["gamma"] > 0:
            raise ConfigError(f"{name}: gamma must be positive")
        if name in ("sgd", "sgd-dd") and not 0 < p["tail_fraction"] <= 1:
            raise ConfigError(f"{name}: tail_fraction must lie in (0, 1]")
        if name == "sgd-dd" and (p["gap"] < 1 or cfg.horizon // p["gap"] < 1):
            raise ConfigError("sgd-dd: gap must be in [1, T]")
        if name == "glm-proj" and not p["radius"] > 0:
            raise ConfigError("glm-proj: radius must be positive")


# --- running ---------------------------------------------------------------------

def run_algorithm(name: str, params: dict, traj: Trajectory, a_star: np.ndarray, seed: int,
                  system: dict[str, str]) -> tuple[FitReport, int]:
    """Fit one algorithm; returns the report and the stream stride per update
    (0 for offline methods, whose ``t`` column is the iteration)."""
    T = traj.horizon
    spec = traj.spec
    if name in ("quasi-newton", "mom"):
        iters = params["iters"]
        if iters is None:
            iters = theory_iters(spec.link.zeta, np.zeros_like(a_star), a_star, T, spec.rho,
                                 spec.noise.sigma_sq)
        if name == "quasi-newton":
            return quasi_newton(traj, params["gamma"], iters, a_star=a_star), 0
        a = median_of_means_fit(traj, params["k"], params["gap"], params["gamma"], iters)
        fit = FitReport(a, Status.OK, iters, [(iters, frob_sq_error(a, a_star))], [(iters, 0)])
        return fit, 0
    if name == "glmtron":
        return glmtron(traj, params["gamma"], params["iters"], a_star=a_star), 0
    if name in ("sgd-rer", "sgd-er"):
        layout = BufferLayout.for_horizon(T, params["buffer"], params["gap"])
        cfg = StreamConfig(params["gamma"], params["trunc"], params["tail_start"])
        if name == "sgd-rer":
            return sgd_rer(traj, layout, cfg, a_star=a_star), -1
        return sgd_er(traj, layout, cfg, seed=seed, a_star=a_star), -1
    if name == "sgd":
        return forward_sgd(traj, params["gamma"], tail_fraction=params["tail_fraction"], a_star=a_star), 1
    if name == "sgd-dd":
        radius = params["radius"]
        if radius is None:
            radius = 10.0 * float(np.linalg.norm(a_star))
        return sgd_dd(traj, params["gap"], params["gamma"], radius,
                      tail_fraction=params["tail_fraction"], a_star=a_star), params["gap"]
    if name == "glm-proj":
        return projected_sgd_glm(traj, _nu(system), params["radius"], a_star=a_star), 2
    raise ConfigError(f"unknown algorithm {name!r}")


def _stream_index(name: str, params: dict, updates: int, stride: int) -> int:
    if stride == 0:
        return updates
    if stride == -1:
        block = params["buffer"] + params["gap"]
        return (updates // params["buffer"]) * block
    return updates * stride


def _thin(trace: list[tuple[int, float]], stride: int) -> list[int]:
    """Indices kept: the first entry at or past each multiple of ``stride``, plus the ends."""
    keep, mark = [], 0
    for k, (upd, _) in enumerate(trace):
        if k == 0 or k == len(trace) - 1 or upd >= mark:
            keep.append(k)
            mark = (upd // stride + 1) * stride
    return keep


def report_rows(name: str, seed: int, fit: FitReport, params: dict, stride_kind: int,
                record_stride: int, axis=None, axis_value=None) -> list[ResultRow]:
    walls = dict(fit.wall_trace)
    rows = []
    for k in _thin(fit.error_trace, record_stride):
        upd, err = fit.error_trace[k]
        rows.append(ResultRow(name, seed, _stream_index(name, params, upd, stride_kind), upd,
                              int(walls.get(upd, 0)), err, axis, axis_value))
    return rows


@dataclass
class CellResult:
    rows: list[ResultRow]
    statuses: list[tuple[str, int, str]]


def _run_seed(args) -> CellResult:
    system, horizon, algorithms, seed, record_stride, axis, axis_value = args
    rows: list[ResultRow] = []
    statuses = []
    try:
        traj, a_star = make_trajectory(system, horizon, seed)
    except NLDSError as exc:
        log.warning("seed %s: simulation failed: %s", seed, exc)
        for name, _ in algorithms:
            rows.append(ResultRow(name, seed, -1, -1, 0, math.nan, axis, axis_value))
            statuses.append((name, seed, f"failed: {exc}"))
        return CellResult(rows, statuses)
    info = _spec_info(system)
    if info["rho"] is None:
        info["rho"] = float(np.linalg.norm(a_star, 2))
    for name, raw in algorithms:
        try:
            params = resolve_params(name, raw, horizon, info)
            fit, stride_kind = run_algorithm(name, params, traj, a_star, seed, system)
            rows.extend(report_rows(name, seed, fit, params, stride_kind, record_stride, axis, axis_value))
            statuses.append((name, seed, fit.status.value))
        except Exception as exc:  # a failing cell never aborts the sweep
            log.warning("%s seed %s failed: %s", name, seed, exc)
            rows.append(ResultRow(name, seed, -1, -1, 0, math.nan, axis, axis_value))
            statuses.append((name, seed, f"failed: {exc}"))
    return CellResult(rows, statuses)


def _cells(cfg: ExperimentConfig, axis=None, axis_value=None):
    return [(cfg.system, cfg.horizon, cfg.algorithms, seed, cfg.record_stride, axis, axis_value)
            for seed in cfg.seeds]


def _execute(cells, workers: int) -> Iterator[CellResult]:
    if workers <= 1 or len(cells) <= 1:
        for c in cells:
            yield _run_seed(c)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, giving one ordered writer
        yield from pool.map(_run_seed, cells)


class RunLog:
    """Collects statuses alongside the row stream."""

    def __init__(self):
        self.statuses: list[tuple[str, int, str]] = []

    @property
    def all_completed(self) -> bool:
        return not any(s.startswith("failed") for _, _, s in self.statuses)


def run_experiment(cfg: ExperimentConfig, workers: int | None = None,
                   run_log: RunLog | None = None) -> Iterator[ResultRow]:
    """Yield result rows for every (algo, seed) cell, grouped by seed."""
    validate(cfg)
    for res in _execute(_cells(cfg), workers or cfg.workers):
        if run_log is not None:
            run_log.statuses.extend(res.statuses)
        yield from res.rows


def with_override(cfg: ExperimentConfig, axis: str, value: str) -> ExperimentConfig:
    kv = dict(cfg.raw)
    kv[axis] = value
    if axis.startswith("algo."):
        name = axis.split(".")[1]
        listed = [a.strip() for a in kv.get("algorithms", "").split(",") if a.strip()]
        if "algorithms" in kv and name not in listed:
            raise ConfigError(f"sweep axis {axis!r} targets a disabled algorithm")
    new = config_from_dict(kv)
    return replace(new, workers=cfg.workers, output_path=cfg.output_path)


def sweep(cfg: ExperimentConfig, axis: str, values: Iterable[str], workers: int | None = None,
          run_log: RunLog | None = None) -> Iterator[ResultRow]:
    """Run ``cfg`` once per axis value, tagging rows with ``axis, axis_value``."""
    values = [str(v).strip() for v in values]
    if not values:
        raise ConfigError("sweep needs at least one value")
    if axis.startswith("algo."):
        parts = axis.split(".")
        if len(parts) != 3 or parts[1] not in ALGO_PARAMS or parts[2] not in ALGO_PARAMS[parts[1]]:
            raise ConfigError(f"invalid sweep axis {axis!r}")
    elif axis.startswith("system."):
        if axis[len("system."):] not in SYSTEM_DEFAULTS:
            raise ConfigError(f"invalid sweep axis {axis!r}")
    elif axis not in ("horizon", "seeds"):
        raise ConfigError(f"invalid sweep axis {axis!r}")
    configs = [(v, with_override(cfg, axis, v)) for v in values]  # validates all before running
    cells = [c for v, vc in configs for c in _cells(vc, axis, v)]
    for res in _execute(cells, workers or cfg.workers):
        if run_log is not None:
            run_log.statuses.extend(res.statuses)
        yield from res.rows


# --- CSV and summaries ----------------------------------------------------------------

def write_rows(rows: Iterable[ResultRow], path, sweep_columns: bool = False) -> int:
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_HEADER if sweep_columns else CSV_HEADER)
        for row in rows:
            w.writerow(row.as_list())
            n += 1
    return n


def read_rows(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header not in (CSV_HEADER, SWEEP_HEADER):
            raise ConfigError(f"{path}: unexpected CSV header {header}")
        out = []
        for rec in rd:
            axis = rec[6] if len(rec) > 6 else None
            axis_value = rec[7] if len(rec) > 7 else None
            out.append(ResultRow(rec[0], int(rec[1]), int(rec[2]), int(rec[3]), int(rec[4]),
                                 float(rec[5]), axis, axis_value))
    return out


@dataclass(frozen=True)
class SummaryRow:
    algo: str
    axis_value: str | None
    n_seeds: int
    median: float
    q25: float
    q75: float
    total_updates: int
    total_wall_ns: int


def final_errors(rows: Iterable[ResultRow]) -> dict[tuple[str, str | None], dict[int, ResultRow]]:
    """Last row of every (algo, axis_value, seed)."""
    last: dict[tuple[str, str | None], dict[int, ResultRow]] = {}
    for r in rows:
        last.setdefault((r.algo, r.axis_value), {})[r.seed] = r
    return last


def summarize(rows: Iterable[ResultRow]) -> list[SummaryRow]:
    """Median and quartiles of the final squared error over seeds, per algorithm."""
    rows = list(rows)
    if not rows:
        raise ConfigError("nothing to summarize")
    out = []
    for (algo, axis_value), per_seed in final_errors(rows).items():
        errs = np.array([r.frob_sq_err for r in per_seed.values()])
        q25, med, q75 = np.quantile(errs, [0.25, 0.5, 0.75])
        out.append(SummaryRow(algo, axis_value, len(errs), float(med), float(q25), float(q75),
                              sum(max(r.updates, 0) for r in per_seed.values()),
                              sum(r.wall_ns for r in per_seed.values())))
    return out


def format_summary(summary: list[SummaryRow], statuses=None) -> str:
    lines = [f"{'algo':<14}{'axis':>10}{'seeds':>7}{'median':>14}{'q25':>14}{'q75':>14}"
             f"{'updates':>12}{'wall_s':>10}"]
    for s in summary:
        lines.append(f"{s.algo:<14}{(s.axis_value or '-'):>10}{s.n_seeds:>7}{s.median:>14.6g}"
                     f"{s.q25:>14.6g}{s.q75:>14.6g}{s.total_updates:>12}{s.total_wall_ns / 1e9:>10.3f}")
    if statuses:
        odd = [f"  {a} seed {sd}: {st}" for a, sd, st in statuses if st != Status.OK.value]
        if odd:
            lines.append("non-ok cells:")
            lines.extend(odd)
    return "\n".join(lines)
