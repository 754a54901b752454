"""Command-line entry point.

Exit codes: 0 success, 2 configuration or input error, 3 numerical or
training failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import curvefit, dataset
from .config import PRESETS, ConfigError, RunConfig, load_config
from .kan import KanModel, StratificationError, cross_validate, features, fit_kan, per_group_r2
from .curvefit import r_squared

log = logging.getLogger("entropy_transport")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    pass


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_dataset(path) -> dataset.TrajectoryDataset:
    if path is None:
        raise InputError("a --dataset path is required")
    if not Path(path).is_file():
        raise InputError(f"dataset file {path} does not exist")
    try:
        return dataset.load(path)
    except dataset.DatasetFormatError as exc:
        raise InputError(str(exc)) from None


def cmd_simulate(cfg: RunConfig, args) -> int:
    spec = cfg.system_spec()
    traj = dataset.run_trajectory(spec)
    ds = dataset.TrajectoryDataset.from_trajectories(
        [traj],
        {
            "J": repr(spec.J),
            "barrier": f"{spec.barrier[0]!r},{spec.barrier[1]!r}",
            "initial_placement": dataset.format_placement(spec.initial_placement),
            "n_samples": str(spec.n_samples),
            "t_max": repr(spec.t_max),
        },
    )
    path = _out_dir(cfg) / "trajectory.csv"
    dataset.save(ds, path, {"config_sha256": cfg.sha256()})
    print(f"wrote {path} ({len(ds)} rows)")
    print(f"max n_A = {traj.n_A.max():.6g}")
    print(f"max S_A = {traj.S_A.max():.6g}")
    print(f"norm drift = {traj.norm_drift:.3g}, energy drift = {traj.energy_drift:.3g}")
    spline = None
    try:
        spline = curvefit.fit_bspline(traj.n_A, traj.S_A, n_knots=cfg.n_knots)
        print(f"cubic B-spline R2 = {r_squared(traj.S_A, spline(traj.n_A)):.6f}")
    except ValueError as exc:
        print(f"cubic B-spline fit unavailable: {exc}")
    if cfg.plots:
        from .plots import plot_entropy_density

        plot_entropy_density(
            traj.n_A, traj.S_A, path.with_suffix(".svg"), spline, f"L={spec.L}, U={spec.U:g}, h={spec.h:g}"
        )
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    U_grid, h_grid = cfg.grids()
    template = cfg.system_spec(U=min(U_grid), barrier=(cfg.barrier_ratio * max(h_grid), max(h_grid)))
    ds = dataset.sweep(
        U_grid,
        h_grid,
        cfg.L,
        template=template,
        barrier_ratio=cfg.barrier_ratio,
        tunneling_only=cfg.tunneling_only,
        workers=cfg.workers,
    )
    path = _out_dir(cfg) / "dataset.csv"
    dataset.save(ds, path, {"config_sha256": cfg.sha256()})
    print(f"wrote {path}: {len(ds.group_keys())} groups, {len(ds)} rows, {len(ds.skipped)} skipped")
    return EXIT_OK


def cmd_fit(cfg: RunConfig, args) -> int:
    ds = _load_dataset(args.dataset)
    if not ds.group_keys():
        raise InputError(f"dataset {args.dataset} has no groups")
    cells = curvefit.r2_heatmap(ds)
    out = _out_dir(cfg)
    curvefit.write_fit_report(cells, out / "fit_report.csv")
    curvefit.write_heatmap(cells, out / "heatmap.csv")
    ok = [c for c in cells if c.fit is not None]
    for c in cells:
        status = f"R2={c.r2:.5f} c1={c.fit.c1:.5g} c2={c.fit.c2:.5g}" if c.fit else f"FAILED: {c.error}"
        print(f"U={c.U:g} h={c.h:g} L={c.L}: {status}")
    if ok:
        worst = min(ok, key=lambda c: c.r2)
        print(f"min R2 = {worst.r2:.5f} at U={worst.U:g} h={worst.h:g}")
    if cfg.plots:
        from .plots import plot_heatmap

        plot_heatmap(cells, out / "heatmap.svg")
    if not ok:
        print("no group could be fitted", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_kan(cfg: RunConfig, args) -> int:
    ds = _load_dataset(args.dataset)
    if len(ds) == 0:
        raise InputError(f"dataset {args.dataset} is empty")
    kcfg = cfg.kan_config()
    out = _out_dir(cfg)
    X, y = features(ds)

    if args.action == "train":
        model, report = fit_kan(X, y, kcfg)
        ckpt = Path(args.checkpoint) if args.checkpoint else out / "kan_checkpoint.json"
        model.save(ckpt)
        summary = {
            "config_sha256": cfg.sha256(),
            "final_loss": report.final_loss,
            "initial_loss": report.initial_loss,
            "iterations": report.iterations,
            "evaluations": report.evaluations,
            "line_search_failures": report.line_search_failures,
            "loss_history": report.loss_history,
            "train_r2": r_squared(y, model(X)),
        }
        with open(out / "kan_train_report.json", "w") as fh:
            json.dump(summary, fh, indent=1, sort_keys=True)
            fh.write("\n")
        print(f"wrote {ckpt}")
        print(f"final training MSE = {report.final_loss:.3e}, train R2 = {summary['train_r2']:.6f}")
        return EXIT_OK

    if args.action == "cv":
        res = cross_validate(ds, kcfg, n_folds=cfg.kan_folds, workers=cfg.workers)
        _write_rows(
            out / "kan_cv_report.csv",
            ["fold", "n_train", "n_test", "R2", "train_loss"],
            [[f.fold + 1, f.n_train, f.n_test, f"{f.test_r2:.17g}", f"{f.train_loss:.17g}"] for f in res.folds],
        )
        _write_rows(
            out / "kan_cv_per_u.csv",
            ["fold", "U", "R2"],
            [[f.fold + 1, f"{U:.17g}", f"{r2:.17g}"] for f in res.folds for U, r2 in f.per_group],
        )
        print(res.table())
        return EXIT_OK

    # eval
    if not args.checkpoint or not Path(args.checkpoint).is_file():
        raise InputError("kan eval needs an existing --checkpoint")
    try:
        model = KanModel.load(args.checkpoint)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read checkpoint {args.checkpoint}: {exc}") from None
    pred, clamped = model.forward(X, return_clamped=True)
    groups = per_group_r2(model, X, y)
    _write_rows(out / "kan_eval_per_u.csv", ["U", "R2"], [[f"{U:.17g}", f"{r2:.17g}"] for U, r2 in groups])
    for U, r2 in groups:
        print(f"U={U:g}: R2={r2:.6f}")
    print(f"overall R2 = {r_squared(y, pred):.6f}, MSE = {np.mean((pred - y) ** 2):.3e}")
    if clamped:
        print(f"{clamped} input values clamped to grid boundaries")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--preset", choices=sorted(PRESETS), help="start from a shipped preset")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="worker processes for sweeps and folds")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--plot", action="store_true", help="also write SVG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="entropy-transport", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="one trajectory to trajectory.csv")
    sub.add_parser("sweep", parents=[common], help="(U, h) sweep to dataset.csv")
    p = sub.add_parser("fit", parents=[common], help="binary-entropy fits and R2 heatmap")
    p.add_argument("--dataset", help="dataset CSV")
    p = sub.add_parser("kan", parents=[common], help="train, cross-validate or evaluate the KAN")
    p.add_argument("action", choices=["train", "cv", "eval"])
    p.add_argument("--dataset", help="dataset CSV")
    p.add_argument("--checkpoint", help="checkpoint path (written by train, read by eval)")
    return parser


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "fit": cmd_fit, "kan": cmd_kan}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(
            args.config,
            args.preset,
            {"out": args.out, "workers": args.workers, "seed": args.seed, "plots": True if args.plot else None},
        )
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StratificationError, RuntimeError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
