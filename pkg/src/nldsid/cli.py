"""Command line entry point: ``nldsid {simulate,fit,bench,sweep,lb-demo}``."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import bench
from .diag import relu_sign_fraction
from .errors import NLDSError
from .layout import BufferLayout
from .link import parse_link
from .offline import glmtron, median_of_means_fit, quasi_newton
from .report import FitReport, Status
from .sim import (SystemSpec, Trajectory, bernoulli_ar_simulate, parse_noise, rand_bimod, read_trajectory,
                  relu_lb_matrix, simulate, write_trajectory)
from .stream import StreamConfig, forward_sgd, log_step_size, projected_sgd_glm, sgd_dd, sgd_er, sgd_rer


def _float(text: str) -> float:
    return math.inf if text.strip().lower() in ("inf", "infinity") else float(text)


def _build_spec(args) -> SystemSpec:
    if args.system == "rand_bimod":
        a = rand_bimod(args.d, args.rho, np.random.SeedSequence([args.seed, 1]))
    elif args.system == "relu_lb":
        a = relu_lb_matrix(args.d, args.epsilon)
    else:
        a = np.loadtxt(args.matrix, delimiter=",", ndmin=2)
    return SystemSpec(a, parse_link(args.link or "leaky_relu:0.5"), parse_noise(args.noise, args.sigma_sq))


def _generate(args) -> Trajectory:
    if args.system == "bernoulli":
        a = bench._bernoulli_matrix(args.d, args.row_l1, np.random.SeedSequence([args.seed, 1]))
        return bernoulli_ar_simulate(np.full(args.d, args.nu), a, args.horizon, args.seed)
    return simulate(_build_spec(args), args.horizon, args.seed, burn_in=args.burn_in)


def _add_system_args(p):
    p.add_argument("--system", choices=["rand_bimod", "relu_lb", "file", "bernoulli"], default="rand_bimod")
    p.add_argument("--matrix", help="CSV file with A* (for --system file)")
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--rho", type=float, default=0.98)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--link", default="leaky_relu:0.5")
    p.add_argument("--noise", default="gaussian", help="gaussian | student_t:DOF | none")
    p.add_argument("--sigma-sq", type=float, default=1.0)
    p.add_argument("--horizon", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--nu", type=float, default=0.0, help="bias of every coordinate (bernoulli)")
    p.add_argument("--row-l1", type=float, default=0.5, help="row l1 norm of A* (bernoulli)")


def cmd_simulate(args) -> int:
    traj = _generate(args)
    write_trajectory(traj, args.out)
    if args.matrix_out:
        np.savetxt(args.matrix_out, traj.spec.a_star, delimiter=",", fmt="%.17g")
    return 0


def _fit(args, traj: Trajectory, a_star, link):
    T = traj.horizon
    gamma = args.gamma
    algo = args.algo
    if algo == "quasi-newton":
        return quasi_newton(traj, gamma or 0.25, args.iters or 100, a_star=a_star, link=link), 0
    if algo == "glmtron":
        return glmtron(traj, gamma or 0.017, args.iters or 2000, a_star=a_star, link=link), 0
    if algo == "mom":
        a = median_of_means_fit(traj, args.segments, args.gap if args.gap is not None else 0,
                                gamma or 0.25, args.iters or 100, link=link)
        err = [] if a_star is None else [(args.iters or 100, float(np.sum((a - a_star) ** 2)))]
        return FitReport(a, Status.OK, args.iters or 100, err, [(args.iters or 100, 0)]), 0
    gamma = gamma or log_step_size(T)
    if algo in ("sgd-rer", "sgd-er"):
        gap = 10 if args.gap is None else args.gap
        layout = BufferLayout.for_horizon(T, args.buffer, gap)
        cfg = StreamConfig(gamma, args.trunc, args.tail_start)
        fn = sgd_rer if algo == "sgd-rer" else sgd_er
        kw = {} if algo == "sgd-rer" else {"seed": args.seed}
        return fn(traj, layout, cfg, a_star=a_star, link=link, **kw), -1
    if algo == "sgd":
        return forward_sgd(traj, gamma, a_star=a_star, link=link), 1
    if algo == "sgd-dd":
        gap = 10 if args.gap is None else args.gap
        return sgd_dd(traj, gap, gamma, args.radius, a_star=a_star, link=link), gap
    if algo == "glm-proj":
        nu = np.full(traj.d, args.nu)
        return projected_sgd_glm(traj, nu, args.radius if math.isfinite(args.radius) else 1.0,
                                 a_star=a_star), 2
    raise NLDSError(f"unknown algorithm {algo}")


def cmd_fit(args) -> int:
    if args.input:
        header, states = read_trajectory(args.input)
        link = parse_link(args.link or header.link)
        traj = Trajectory(states, None, header.seed)
        a_star = np.loadtxt(args.truth, delimiter=",", ndmin=2) if args.truth else None
        seed = header.seed or 0
    else:
        traj = _generate(args)
        link, a_star, seed = traj.spec.link, traj.spec.a_star, args.seed
    fit, stride = _fit(args, traj, a_star, link)
    params = {"buffer": args.buffer, "gap": 10 if args.gap is None else args.gap}
    if fit.error_trace:
        rows = bench.report_rows(args.algo, seed, fit, params, stride, args.record_stride)
    else:
        walls = fit.wall_trace
        rows = [bench.ResultRow(args.algo, seed, bench._stream_index(args.algo, params, u, stride), u, w, math.nan)
                for u, w in walls]
    if args.out:
        bench.write_rows(rows, args.out)
    else:
        w = csv.writer(sys.stdout)
        w.writerow(bench.CSV_HEADER)
        for r in rows:
            w.writerow(r.as_list())
    if args.matrix_out:
        np.savetxt(args.matrix_out, fit.a_hat, delimiter=",", fmt="%.17g")
    print(f"status: {fit.status.value}", file=sys.stderr)
    return 0


def _emit(rows, cfg, sweep_columns, run_log):
    rows = list(rows)
    path = cfg.output_path
    if path:
        bench.write_rows(rows, path, sweep_columns)
    else:
        w = csv.writer(sys.stdout)
        w.writerow(bench.SWEEP_HEADER if sweep_columns else bench.CSV_HEADER)
        for r in rows:
            w.writerow(r.as_list())
    text = bench.format_summary(bench.summarize(rows), run_log.statuses)
    if path:
        Path(str(path) + ".summary.txt").write_text(text + "\n")
    print(text, file=sys.stderr)
    return 0 if run_log.all_completed else 1


def cmd_bench(args) -> int:
    cfg = bench.load_config(args.config)
    if args.output:
        cfg.output_path = args.output
    run_log = bench.RunLog()
    return _emit(bench.run_experiment(cfg, args.workers, run_log), cfg, False, run_log)


def cmd_sweep(args) -> int:
    cfg = bench.load_config(args.config)
    if args.output:
        cfg.output_path = args.output
    run_log = bench.RunLog()
    values = args.values.split(",")
    return _emit(bench.sweep(cfg, args.axis, values, args.workers, run_log), cfg, True, run_log)


def cmd_lb_demo(args) -> int:
    ds = [int(v) for v in args.ds.split(",")]
    seeds = [int(v) for v in args.seeds.split(",")]
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["d", "epsilon", "fraction", "seed"])
        for d in ds:
            for s in seeds:
                rep = relu_sign_fraction(d, args.epsilon, args.horizon, s)
                w.writerow([d, repr(args.epsilon), repr(rep.observed), s])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nldsid", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a trajectory to a file")
    _add_system_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--matrix-out", help="also write A* as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit one algorithm to a trajectory file or a generated system")
    _add_system_args(p)
    p.add_argument("--algo", required=True,
                   choices=["quasi-newton", "glmtron", "mom", "sgd-rer", "sgd", "sgd-er", "sgd-dd", "glm-proj"])
    p.add_argument("--input", help="trajectory file written by 'simulate'")
    p.add_argument("--truth", help="CSV file with A* for error traces")
    p.add_argument("--gamma", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--segments", type=int, default=5)
    p.add_argument("--buffer", type=int, default=240)
    p.add_argument("--gap", type=int)
    p.add_argument("--trunc", type=_float, default=math.inf)
    p.add_argument("--tail-start", type=int)
    p.add_argument("--radius", type=_float, default=math.inf)
    p.add_argument("--record-stride", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--matrix-out")
    p.set_defaults(func=cmd_fit, link=None)

    p = sub.add_parser("bench", help="run an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="run a config across values of one parameter")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("lb-demo", help="ReLU hardness: sign fractions across dimensions")
    p.add_argument("--ds", default="4,8,16,32")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--horizon", type=int, default=100000)
    p.add_argument("--seeds", default="0,1,2,3,4,5,6,7,8,9")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lb_demo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NLDSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
