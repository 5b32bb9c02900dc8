"""Command-line interface.

Commands: simulate | estimate | order | bandwidth | benchmark | evaluate.
Every command writes its outputs under --out together with a config.json
sidecar carrying the resolved options, the seed and the package version, so
any output directory can be regenerated from its sidecar.

Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bandwidth import default_grid, rot_bandwidth, select_bandwidth
from .benchmark import (
    DEFAULT_B,
    DEFAULT_H,
    DEFAULT_REPS,
    default_jobs,
    default_w_grid,
    resolve_bandwidth,
    run_benchmark,
)
from .candidates import METHODS, candidate_matrix, extract_subspace
from .data import Dataset, default_columns, load_dataset, make_slices, save_dataset
from .errors import EstimationError
from .kernels import EPANECHNIKOV, GAUSSIAN, KernelSpec
from .ladle import default_replicates, ladle_profile
from .metrics import distance_correlation
from .report import (
    bandwidth_figure,
    benchmark_figures,
    benchmark_markdown,
    ladle_figure,
    profile_rows,
    write_csv,
    write_json,
)
from .simulate import MODELS, ModelSpec, gen_model

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

KERNELS = {"gaussian": GAUSSIAN, "epan": EPANECHNIKOV, "epanechnikov": EPANECHNIKOV}


class _Parser(argparse.ArgumentParser):
    """argparse that exits with the documented usage code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_data_args(sp):
    sp.add_argument("--data", required=True, help="input CSV with a header row")
    sp.add_argument("--y-col", default="y", help="response column name")
    sp.add_argument("--x-cols", required=True,
                    help="comma-separated reducible predictor columns")
    sp.add_argument("--w-cols", required=True,
                    help="comma-separated shielded predictor columns")


def _add_kernel_args(sp, rules=("rot", "cv"), default_rule="rot"):
    sp.add_argument("--H", type=int, default=DEFAULT_H, help="number of slices")
    sp.add_argument("--kernel", choices=sorted(KERNELS), default="gaussian")
    sp.add_argument("--h", type=float, default=None, help="fixed bandwidth override")
    sp.add_argument("--h-rule", choices=rules, default=default_rule,
                    help="bandwidth rule when --h is not given")
    sp.add_argument("--h-grid", default=None, metavar="MIN:MAX:COUNT",
                    help="candidate grid for cross-validation")


def _add_w_args(sp):
    sp.add_argument("--w", action="append", default=None, metavar="W1[,W2]",
                    help="query point; repeat for several points")
    sp.add_argument("--w-grid", default=None, metavar="MIN:MAX:COUNT",
                    help="evenly spaced query grid per coordinate")


def _parse_colon_triple(text, name):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"{name} must look like MIN:MAX:COUNT, got {text!r}")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1 or hi <= lo:
        raise ValueError(f"invalid {name} {text!r}")
    return lo, hi, count


def _resolve_queries(args, q: int) -> list[np.ndarray]:
    if args.w:
        ws = []
        for token in args.w:
            w = np.array([float(v) for v in token.split(",")])
            if w.size != q:
                raise ValueError(f"query {token!r} has {w.size} coordinates, data has q={q}")
            ws.append(w)
        return ws
    if args.w_grid:
        lo, hi, count = _parse_colon_triple(args.w_grid, "--w-grid")
        axis = np.linspace(lo, hi, count)
        if q == 1:
            return [np.array([v]) for v in axis]
        if q == 2:
            return [np.array([a, b]) for a in axis for b in axis]
        raise ValueError("--w-grid supports q <= 2; pass explicit --w points")
    if q <= 2:
        return default_w_grid(q)
    raise ValueError("no query points given; use --w")


def _load(args) -> Dataset:
    return load_dataset(
        args.data,
        y_col=args.y_col,
        x_cols=[c for c in args.x_cols.split(",") if c],
        w_cols=[c for c in args.w_cols.split(",") if c],
    )


def _methods(args) -> list[str]:
    return list(METHODS) if args.method == "all" else [args.method]


def _bandwidth(args, data, partition, method) -> float:
    if args.h is not None:
        if args.h <= 0:
            raise ValueError("--h must be positive")
        return args.h
    if args.h_rule == "rot":
        return rot_bandwidth(data)
    grid = None
    if args.h_grid:
        lo, hi, count = _parse_colon_triple(args.h_grid, "--h-grid")
        grid = np.geomspace(lo, hi, count)
    return select_bandwidth(
        data, partition, method, grid=grid, family=KERNELS[args.kernel]
    ).h_opt


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_config(out: Path, args, extra=None) -> None:
    payload = {
        k: v for k, v in vars(args).items() if k not in ("func",) and v is not None
    }
    payload["version"] = __version__
    if extra:
        payload.update(extra)
    write_json(out / "config.json", payload)


def cmd_simulate(args) -> int:
    spec = ModelSpec(args.model, n=args.n, p=args.p)
    data = gen_model(spec, args.seed)
    out = _outdir(args)
    save_dataset(data, out / "dataset.csv")
    y_col, x_cols, w_cols = default_columns(data.p, data.q)
    _write_config(out, args, {
        "columns": {"y": y_col, "x": x_cols, "w": w_cols},
        "noise": spec.noise,
    })
    print(f"wrote {out / 'dataset.csv'} ({data.n} rows, p={data.p}, q={data.q})")
    return EXIT_OK


def cmd_estimate(args) -> int:
    data = _load(args)
    partition = make_slices(data.y, args.H)
    ws = _resolve_queries(args, data.q)
    out = _outdir(args)
    n_boot = args.B if args.B else default_replicates(data.n)
    summary, directions, profiles = [], [], []
    figures = []
    for method in _methods(args):
        try:
            h = _bandwidth(args, data, partition, method)
        except EstimationError as exc:
            summary.append({"method": method, "w": "", "h": "", "d": "",
                            "spectrum": "", "error": str(exc)})
            continue
        kspec = KernelSpec(h=h, family=KERNELS[args.kernel])
        for iw, w in enumerate(ws):
            label = " ".join(f"{v:g}" for v in w)
            row = {"method": method, "w": label, "h": h, "d": "",
                   "spectrum": "", "error": ""}
            try:
                cand = candidate_matrix(data, partition, w, kspec, method)
                if args.d is not None:
                    d_hat = args.d
                else:
                    prof = ladle_profile(
                        data, partition, w, kspec, method, n_replicates=n_boot,
                        rng=np.random.SeedSequence(entropy=(args.seed, iw,
                                                            METHODS.index(method))),
                    )
                    d_hat = prof.d_hat
                    profiles += [
                        {"method": method, "w": label, **r} for r in profile_rows(prof)
                    ]
                    if not args.no_figures:
                        fig = out / f"ladle_{method}_w{iw}.png"
                        figures.append(ladle_figure(prof, fig))
                est = extract_subspace(cand, d_hat)
                row["d"] = d_hat
                row["spectrum"] = " ".join(f"{v:.6g}" for v in est.values)
                for j in range(d_hat):
                    directions.append({
                        "method": method, "w": label, "direction": j + 1,
                        **{f"b{i + 1}": est.basis[i, j] for i in range(data.p)},
                    })
            except EstimationError as exc:
                row["error"] = str(exc)
            summary.append(row)
    write_csv(out / "estimates.csv", summary,
              ["method", "w", "h", "d", "spectrum", "error"])
    if directions:
        write_csv(out / "directions.csv", directions)
    if profiles:
        write_csv(out / "ladle_profiles.csv", profiles)
    _write_config(out, args)
    print(f"wrote {out / 'estimates.csv'} ({len(summary)} rows, "
          f"{len(figures)} figures)")
    return EXIT_OK


def cmd_order(args) -> int:
    data = _load(args)
    partition = make_slices(data.y, args.H)
    ws = _resolve_queries(args, data.q)
    out = _outdir(args)
    n_boot = args.B if args.B else default_replicates(data.n)
    rows, profiles, figures = [], [], []
    for method in _methods(args):
        try:
            h = _bandwidth(args, data, partition, method)
        except EstimationError as exc:
            rows.append({"method": method, "w": "", "h": "", "d_hat": "",
                         "n_effective": "", "error": str(exc)})
            continue
        kspec = KernelSpec(h=h, family=KERNELS[args.kernel])
        for iw, w in enumerate(ws):
            label = " ".join(f"{v:g}" for v in w)
            try:
                prof = ladle_profile(
                    data, partition, w, kspec, method, n_replicates=n_boot,
                    rng=np.random.SeedSequence(entropy=(args.seed, iw,
                                                        METHODS.index(method))),
                )
                rows.append({"method": method, "w": label, "h": h,
                             "d_hat": prof.d_hat, "n_effective": prof.n_effective,
                             "error": ""})
                profiles += [
                    {"method": method, "w": label, **r} for r in profile_rows(prof)
                ]
                if not args.no_figures:
                    figures.append(
                        ladle_figure(prof, out / f"ladle_{method}_w{iw}.png")
                    )
            except EstimationError as exc:
                rows.append({"method": method, "w": label, "h": h, "d_hat": "",
                             "n_effective": "", "error": str(exc)})
    write_csv(out / "order.csv", rows,
              ["method", "w", "h", "d_hat", "n_effective", "error"])
    if profiles:
        write_csv(out / "ladle_profiles.csv", profiles)
    _write_config(out, args)
    print(f"wrote {out / 'order.csv'} ({len(rows)} rows, {len(figures)} figures)")
    return EXIT_OK


def cmd_bandwidth(args) -> int:
    data = _load(args)
    partition = make_slices(data.y, args.H)
    out = _outdir(args)
    grid = None
    if args.h_grid:
        lo, hi, count = _parse_colon_triple(args.h_grid, "--h-grid")
        grid = np.geomspace(lo, hi, count)
    rows = []
    for method in _methods(args):
        search = select_bandwidth(
            data, partition, method, grid=grid, family=KERNELS[args.kernel]
        )
        for l in range(search.cv_scores.shape[0]):
            for gi, h in enumerate(search.grid):
                rows.append({
                    "method": method, "slice": l + 1, "h": h,
                    "cv": search.cv_scores[l, gi],
                })
        if not args.no_figures:
            bandwidth_figure(search, out / f"bandwidth_{method}.png")
        write_json(out / f"selected_{method}.json", {
            "method": method,
            "h_opt": search.h_opt,
            "h_rot": rot_bandwidth(data),
            "h_slice_star": [None if np.isnan(v) else float(v)
                             for v in search.h_slice_star],
            "candidates": [float(v) for v in search.candidates],
            "logliks": [float(v) for v in search.logliks],
        })
        print(f"{method}: h_opt = {search.h_opt:.6g}")
    write_csv(out / "cv_scores.csv", rows, ["method", "slice", "h", "cv"])
    _write_config(out, args)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    out = _outdir(args)
    models = [m for m in args.model.split(",") if m]
    for model in models:
        if model not in MODELS:
            raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    h_rule = args.h if args.h is not None else args.h_rule
    all_rows = []
    markdown = []
    for model in models:
        spec = ModelSpec(model, n=args.n, p=args.p)
        ws = _resolve_queries(args, spec.q) if (args.w or args.w_grid) else None
        report = run_benchmark(
            model, args.n, args.p, ws=ws, methods=_methods(args),
            reps=args.reps, n_boot=args.B, n_slices=args.H,
            family=KERNELS[args.kernel], h_rule=h_rule, seed=args.seed,
            jobs=args.jobs,
        )
        all_rows += report.rows()
        markdown.append(benchmark_markdown(report))
        if not args.no_figures:
            benchmark_figures(report, out)
        print(f"model {model}: {len(report.cells)} cells in "
              f"{report.wall_clock:.1f}s")
    write_csv(out / "benchmark.csv", all_rows)
    (out / "benchmark.md").write_text("\n".join(markdown))
    _write_config(out, args, {"models": models})
    return EXIT_OK


def cmd_evaluate(args) -> int:
    data = _load(args)
    partition = make_slices(data.y, args.H)
    ws = _resolve_queries(args, data.q)
    out = _outdir(args)
    n_boot = args.B if args.B else default_replicates(data.n)
    rows = []
    aggregate = {}
    for method in _methods(args):
        h = _bandwidth(args, data, partition, method)
        kspec = KernelSpec(h=h, family=KERNELS[args.kernel])
        bases = {}
        for iw, w in enumerate(ws):
            label = " ".join(f"{v:g}" for v in w)
            try:
                cand = candidate_matrix(data, partition, w, kspec, method)
                if args.d is not None:
                    d_hat = args.d
                else:
                    d_hat = ladle_profile(
                        data, partition, w, kspec, method, n_replicates=n_boot,
                        rng=np.random.SeedSequence(entropy=(args.seed, iw,
                                                            METHODS.index(method))),
                    ).d_hat
                if d_hat < 1:
                    rows.append({"method": method, "w": label, "d": d_hat,
                                 "dcor": "", "error": "estimated dimension 0"})
                    continue
                basis = extract_subspace(cand, d_hat).basis
                bases[iw] = basis
                score = distance_correlation(data.y, data.x @ basis)
                rows.append({"method": method, "w": label, "d": d_hat,
                             "dcor": score, "error": ""})
            except EstimationError as exc:
                rows.append({"method": method, "w": label, "d": "", "dcor": "",
                             "error": str(exc)})
        if bases:
            # dynamic projection: each observation through the basis of its
            # nearest query point
            grid = np.stack([ws[iw] for iw in sorted(bases)])
            keys = sorted(bases)
            dists = np.linalg.norm(data.w[:, None, :] - grid[None, :, :], axis=2)
            nearest = np.argmin(dists, axis=1)
            dmax = max(bases[k].shape[1] for k in keys)
            proj = np.zeros((data.n, dmax))
            for j, key in enumerate(keys):
                mask = nearest == j
                z = data.x[mask] @ bases[key]
                proj[mask, : z.shape[1]] = z
            aggregate[method] = distance_correlation(data.y, proj)
    write_csv(out / "dcor.csv", rows, ["method", "w", "d", "dcor", "error"])
    header = [m.upper() for m in aggregate]
    body = [[f"{aggregate[m]:.4f}" for m in aggregate]]
    (out / "dcor.md").write_text(
        "Distance correlation between y and the locally projected x:\n\n"
        + "| " + " | ".join(header) + " |\n"
        + "| " + " | ".join("---" for _ in header) + " |\n"
        + "| " + " | ".join(body[0]) + " |\n"
    )
    write_json(out / "dcor.json", {"aggregate": aggregate})
    _write_config(out, args)
    for method, value in aggregate.items():
        print(f"{method}: dcor = {value:.4f}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="dpsdr", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="generate a benchmark-model dataset")
    sp.add_argument("--model", required=True, choices=MODELS)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("estimate", help="estimate local bases and dimensions")
    _add_data_args(sp)
    _add_kernel_args(sp)
    _add_w_args(sp)
    sp.add_argument("--method", choices=(*METHODS, "all"), default="all")
    sp.add_argument("--d", type=int, default=None, help="fix the dimension")
    sp.add_argument("--B", type=int, default=None, help="bootstrap replicates")
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--no-figures", action="store_true")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("order", help="ladle dimension estimate over a grid")
    _add_data_args(sp)
    _add_kernel_args(sp)
    _add_w_args(sp)
    sp.add_argument("--method", choices=(*METHODS, "all"), default="sir")
    sp.add_argument("--B", type=int, default=None)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--no-figures", action="store_true")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_order)

    sp = sub.add_parser("bandwidth", help="leave-one-out bandwidth selection")
    _add_data_args(sp)
    _add_kernel_args(sp)
    sp.add_argument("--method", choices=(*METHODS, "all"), default="all")
    sp.add_argument("--no-figures", action="store_true")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_bandwidth)

    sp = sub.add_parser("benchmark", help="Monte Carlo table reproduction")
    sp.add_argument("--model", required=True,
                    help="model id or comma list, e.g. I or I,III,V")
    sp.add_argument("--n", type=int, default=150)
    sp.add_argument("--p", type=int, default=5)
    _add_kernel_args(sp, rules=("bench", "rot", "cv"), default_rule="bench")
    _add_w_args(sp)
    sp.add_argument("--method", choices=(*METHODS, "all"), default="all")
    sp.add_argument("--reps", type=int, default=DEFAULT_REPS)
    sp.add_argument("--B", type=int, default=DEFAULT_B)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--jobs", type=int, default=default_jobs())
    sp.add_argument("--no-figures", action="store_true")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser("evaluate", help="distance-correlation report")
    _add_data_args(sp)
    _add_kernel_args(sp)
    _add_w_args(sp)
    sp.add_argument("--method", choices=(*METHODS, "all"), default="all")
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--B", type=int, default=None)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--no-figures", action="store_true")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EstimationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
