"""Command-line pipeline: simulate, analyze, curves, cost, snapshot.

Every artifact is a line-oriented text file with a header carrying the tool
version, seed, and config hash, so whole runs can be diffed. Exit codes:
0 success, 1 usage or config error, 2 runtime failure, 3 completed with
fit-quality warnings.
"""

from __future__ import annotations

import argparse
import os
import sys
from collections import defaultdict

import numpy as np

from . import __version__, analysis, costmodel, fitting, io
from .config import CampaignConfig, ConfigError, load_config
from .engine import run_campaign, snapshot_largest_cluster
from .lattice import BarrierModel, LatticeGeometry, pd_for_target_qb
from .streams import campaign_rng

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_WARNINGS = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _hist_path(out: str, model: str, L: int, pname: str, value: float) -> str:
    return os.path.join(out, f"hist_{model}_L{L:03d}_{pname}{value!r}.txt")


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, workers=args.workers, seed=args.seed, out=args.out)
    os.makedirs(cfg.out, exist_ok=True)
    meta = {"config_hash": cfg.hash()}
    for value in cfg.values:
        for L in cfg.sizes:
            path = _hist_path(cfg.out, cfg.model.value, L, cfg.param_name, value)
            if os.path.exists(path) and not args.force:
                print(f"skip {path} (exists; use --force to redo)")
                continue
            hist = run_campaign(
                LatticeGeometry(L), cfg.model, value, cfg.replicas, cfg.seed,
                workers=cfg.workers, chunk_size=cfg.chunk_size, spanning=cfg.spanning,
            )
            io.atomic_write(path, lambda p: io.save_histogram(p, hist, meta))
            print(f"wrote {path} ({cfg.replicas} replicas, "
                  f"{hist.nonspanning} nonspanning)")
    return EXIT_OK


def _scan_histograms(directory: str):
    """Histograms grouped by (model, param value), sizes sorted ascending.

    Also returns the audit fields (seed, config hash) shared by the inputs,
    so every derived artifact can carry them forward.
    """
    groups = defaultdict(list)
    audit = {}
    for name in sorted(os.listdir(directory)):
        if not (name.startswith("hist_") and name.endswith(".txt")):
            continue
        path = os.path.join(directory, name)
        hist = io.load_histogram(path)
        groups[(hist.model, hist.param)].append(hist)
        header = io.read_header(path)
        for key in ("seed", "config_hash"):
            if key in header:
                audit.setdefault(key, set()).add(header[key])
    for key in groups:
        groups[key].sort(key=lambda h: h.L)
    audit = {k: v.pop() if len(v) == 1 else "mixed" for k, v in audit.items()}
    return dict(groups), audit


def cmd_analyze(args) -> int:
    out = args.out or args.histdir
    os.makedirs(out, exist_ok=True)
    groups, audit = _scan_histograms(args.histdir)
    if not groups:
        print(f"no histogram files under {args.histdir}", file=sys.stderr)
        return EXIT_RUNTIME
    warnings = 0
    fss_rows = defaultdict(list)
    qb_rows = defaultdict(list)
    for (model, value), hists in sorted(groups.items()):
        pname = hists[0].param_name
        meta = dict(audit, model=model, **{pname: value})
        estimates = []
        for hist in hists:
            F = analysis.cumulative(hist)
            coarse = np.linspace(args.coarse_lo, args.coarse_hi, args.coarse_points)
            curve = analysis.percolation_probability(F, coarse, L=hist.L)
            io.atomic_write(
                os.path.join(out, f"curve_{model}_L{hist.L:03d}_{pname}{value!r}.txt"),
                lambda p: io.save_curve(p, curve, dict(meta, replicas=hist.replicas)),
            )
            qb, qb_se = analysis.effective_barrier_fraction(hist)
            qb_rows[model].append((value, hist.L, qb, qb_se))
            try:
                est = fitting.estimate_threshold(
                    lambda grid: analysis.percolation_probability(F, grid).P,
                    coarse_lo=args.coarse_lo, coarse_hi=args.coarse_hi,
                    coarse_points=args.coarse_points,
                    window_points=args.window_points, epsilon=args.epsilon,
                )
            except fitting.ThresholdNotReachedError:
                estimates.append((hist.L, None))
                warnings += 1
                continue
            estimates.append((hist.L, est))
        rows = [
            (L, est.chi_cL, est.Delta_L, est.logit.chi_cL_se, est.logit.Delta_L_se, "ok")
            if est is not None else (L, "nan", "nan", "nan", "nan", "THRESHOLD_NOT_REACHED")
            for L, est in estimates
        ]
        io.atomic_write(
            os.path.join(out, f"thresholds_{model}_{pname}{value!r}.txt"),
            lambda p: io.save_table(
                p, "thresholds",
                ["L", "chi_cL", "Delta_L", "chi_cL_se", "Delta_L_se", "flag"],
                rows, meta),
        )
        good = [(L, est) for L, est in estimates if est is not None]
        if len(good) >= 4:
            sizes = [L for L, _ in good]
            fss = fitting.fit_threshold_scaling(sizes, [e.chi_cL for _, e in good])
            width = fitting.fit_width_scaling(sizes, [e.Delta_L for _, e in good])
            flag = "poor_scaling" if fss.poor_scaling else "ok"
            if fss.poor_scaling:
                warnings += 1
            fss_rows[model].append(
                (value, fss.chi_c, fss.chi_c_se, fss.alpha, fss.r_squared,
                 width.nu, width.nu_se, flag)
            )
        else:
            fss_rows[model].append(
                (value, "nan", "nan", "nan", "nan", "nan", "nan", "insufficient_sizes")
            )
            warnings += 1
    for model, rows in fss_rows.items():
        io.atomic_write(
            os.path.join(out, f"fss_{model}.txt"),
            lambda p: io.save_table(
                p, "fss",
                ["value", "chi_c", "chi_c_se", "alpha", "r_squared", "nu", "nu_se", "flag"],
                rows, dict(audit, model=model)),
        )
    for model, rows in qb_rows.items():
        io.atomic_write(
            os.path.join(out, f"qb_{model}.txt"),
            lambda p: io.save_table(
                p, "barrier-fractions", ["value", "L", "q_b", "q_b_se"],
                rows, dict(audit, model=model)),
        )
    print(f"analyzed {len(groups)} campaign cells into {out}"
          + (f" ({warnings} warnings)" if warnings else ""))
    return EXIT_WARNINGS if warnings else EXIT_OK


def cmd_curves(args) -> int:
    out = args.out or args.analysisdir
    os.makedirs(out, exist_ok=True)
    warnings = 0
    wrote_any = False
    for name in sorted(os.listdir(args.analysisdir)):
        if not (name.startswith("fss_") and name.endswith(".txt")):
            continue
        model = name[len("fss_"):-len(".txt")]
        if model == BarrierModel.JOINT_SITE_BOND.value:
            # joint thresholds are baseline data, not a p_d curve to fit
            print("joint: measured (q_b, chi_c) points stay in fss_joint.txt")
            continue
        columns, rows, fss_meta = io.load_table(os.path.join(args.analysisdir, name))
        audit = {k: fss_meta[k] for k in ("seed", "config_hash") if k in fss_meta}
        flag_col = columns.index("flag")
        good = [row for row in rows if row[flag_col] == "ok"]
        if len(good) < len(rows):
            warnings += 1
        values = io.table_column(good, columns, "value")
        chi_c = io.table_column(good, columns, "chi_c")
        if values.size < 4:
            print(f"{model}: only {values.size} usable thresholds, skipping fits",
                  file=sys.stderr)
            warnings += 1
            continue
        qexp = fitting.fit_qexp_curve(values, chi_c)

        qb_path = os.path.join(args.analysisdir, f"qb_{model}.txt")
        records = [{
            "fit": "qexp",
            "model": model,
            "params": [("lambda", qexp.lam, qexp.lam_se), ("q", qexp.q, qexp.q_se)],
            "diagnostics": [("p_cs", qexp.p_cs), ("n_points", qexp.n_points),
                            ("residual_norm", qexp.residual_norm)],
        }]
        power = None
        if os.path.exists(qb_path) and model != BarrierModel.JOINT_SITE_BOND.value:
            qcols, qrows, _ = io.load_table(qb_path)
            vi, li, qi = (qcols.index(c) for c in ("value", "L", "q_b"))
            # one q_b per value: the largest simulated size carries least noise
            per_value = {}
            for row in qrows:
                v, L = row[vi], row[li]
                if v not in per_value or L > per_value[v][0]:
                    per_value[v] = (L, row[qi])
            pv = np.array(sorted(per_value))
            qb = np.array([per_value[v][1] for v in pv])
            power = fitting.fit_power_law(pv, qb)
            records.append({
                "fit": "powerlaw",
                "model": model,
                "params": [("sigma", power.sigma, power.sigma_se),
                           ("tau", power.tau, power.tau_se)],
                "diagnostics": [("n_points", power.n_points),
                                ("residual_norm", power.residual_norm)],
            })
        io.atomic_write(
            os.path.join(out, f"fits_{model}.txt"),
            lambda p: io.save_fit_records(p, records, dict(audit, model=model)),
        )
        fit_grid = np.linspace(0.0, float(values.max()), 101)
        io.atomic_write(
            os.path.join(out, f"critical_curve_{model}.txt"),
            lambda p: io.save_table(
                p, "critical-curve", ["p_d", "chi_c_fit"],
                zip(fit_grid, qexp.chi_c(fit_grid)), dict(audit, model=model)),
        )
        if power is not None:
            io.atomic_write(
                os.path.join(out, f"barrier_curve_{model}.txt"),
                lambda p: io.save_table(
                    p, "barrier-curve", ["p_d", "q_b_fit"],
                    zip(fit_grid, power.q_b(fit_grid)), dict(audit, model=model)),
            )
            joint = costmodel.JointCurve()
            chi_grid = qexp.chi_c(fit_grid[fit_grid > 0])
            io.atomic_write(
                os.path.join(out, f"chi_vs_qb_{model}.txt"),
                lambda p: io.save_table(
                    p, "chi-vs-qb", ["q_b", "chi_c", "q_b_joint_same_chi"],
                    [(float(power.q_b(v)), float(c), float(joint.barrier_fraction(c)))
                     for v, c in zip(fit_grid[fit_grid > 0], chi_grid)],
                    dict(audit, model=model)),
            )
            rows = [(r.chi_c, r.q_b_model, r.eta)
                    for r in costmodel.cost_table(qexp, power)]
            io.atomic_write(
                os.path.join(out, f"cost_{model}.txt"),
                lambda p: io.save_table(
                    p, "cost", ["chi_c", "q_b", "eta"], rows, dict(audit, model=model)),
            )
        wrote_any = True
        print(f"{model}: lambda={qexp.lam:.4f} q={qexp.q:.4f}"
              + (f" sigma={power.sigma:.4f} tau={power.tau:.4f}" if power else ""))
    if not wrote_any:
        print(f"no fss_*.txt inputs under {args.analysisdir}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_WARNINGS if warnings else EXIT_OK


def cmd_cost(args) -> int:
    if args.fits:
        records = {r["fit"]: r for r in io.load_fit_records(args.fits)}
        if "qexp" not in records or "powerlaw" not in records:
            print("fits file must contain qexp and powerlaw records", file=sys.stderr)
            return EXIT_RUNTIME
        qp = dict((n, v) for n, v, _ in records["qexp"]["params"])
        pp = dict((n, v) for n, v, _ in records["powerlaw"]["params"])
        lam, q, sigma, tau = qp["lambda"], qp["q"], pp["sigma"], pp["tau"]
        model = records["qexp"]["model"]
    else:
        if None in (args.lam, args.q, args.sigma, args.tau):
            print("provide --fits or all of --lambda --q --sigma --tau",
                  file=sys.stderr)
            return EXIT_USAGE
        lam, q, sigma, tau = args.lam, args.q, args.sigma, args.tau
        model = args.model or "custom"
    qexp = fitting.QExpFit(lam=lam, q=q, lam_se=0.0, q_se=0.0,
                           p_cs=fitting.SITE_PERCOLATION_THRESHOLD,
                           n_points=0, residual_norm=0.0)
    power = fitting.PowerLawFit(sigma=sigma, tau=tau, sigma_se=0.0, tau_se=0.0,
                                n_points=0, residual_norm=0.0)
    table = costmodel.cost_table(qexp, power, lo=args.lo, hi=args.hi,
                                 points=args.points)
    path = args.out or f"cost_{model}.txt"
    io.atomic_write(path, lambda p: io.save_table(
        p, "cost", ["chi_c", "q_b", "eta"],
        [(r.chi_c, r.q_b_model, r.eta) for r in table], {"model": model}))
    print(f"wrote {path} ({len(table)} rows, eta in "
          f"[{min(r.eta for r in table):.2f}, {max(r.eta for r in table):.2f}]%)")
    return EXIT_OK


def cmd_snapshot(args) -> int:
    model = BarrierModel(args.model)
    geometry = LatticeGeometry(args.L)
    if (args.pd is None) == (args.qb is None):
        print("provide exactly one of --pd or --qb", file=sys.stderr)
        return EXIT_USAGE
    if args.qb is not None and model is not BarrierModel.JOINT_SITE_BOND:
        # express a barrier model on the closed-fraction axis by inverting the
        # measured mean closed fraction
        rng = campaign_rng(args.seed, model.value + ":qb-inversion", args.L, args.qb)
        param = pd_for_target_qb(geometry, model, args.qb, rng)
        print(f"target q_b={args.qb} -> p_d={param:.4f} for {model.value}")
    elif args.qb is not None:
        param = args.qb
    else:
        if model is BarrierModel.JOINT_SITE_BOND:
            print("the joint model takes --qb, not --pd", file=sys.stderr)
            return EXIT_USAGE
        param = args.pd
    snap = snapshot_largest_cluster(geometry, model, param, args.chi, args.seed)
    path = args.out or (
        f"snapshot_{model.value}_L{args.L:03d}_chi{args.chi!r}_"
        f"{model.param_name}{param!r}.txt"
    )
    io.atomic_write(path, lambda p: io.save_snapshot(
        p, snap, {"model": model.value, "chi": args.chi,
                  model.param_name: param, "seed": args.seed}))
    print(f"wrote {path} (largest cluster {snap.largest_size}/{geometry.N} sites, "
          f"spanning={snap.spanning})")
    return EXIT_OK


def cmd_validate_config(args) -> int:
    cfg = load_config(args.config)
    import json

    print(json.dumps(cfg.normalized(), indent=2, sort_keys=True))
    print(f"config_hash: {cfg.hash()}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="barrierperc",
                     description="Barrier-allocation percolation pipeline")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run campaigns and write histograms")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--force", action="store_true",
                   help="recompute cells whose histogram file already exists")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="curves, thresholds, and scaling fits")
    p.add_argument("histdir")
    p.add_argument("--out", default=None)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--coarse-lo", type=float, default=0.1)
    p.add_argument("--coarse-hi", type=float, default=1.0)
    p.add_argument("--coarse-points", type=int, default=91)
    p.add_argument("--window-points", type=int, default=201)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("curves", help="critical-curve and power-law fits, cost tables")
    p.add_argument("analysisdir")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("cost", help="cost table from fitted parameters")
    p.add_argument("--fits", default=None, help="fit-records file from `curves`")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--lo", type=float, default=None)
    p.add_argument("--hi", type=float, default=1.0)
    p.add_argument("--points", type=int, default=71)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("snapshot", help="classify one static occupancy draw")
    p.add_argument("--model", required=True,
                   choices=[m.value for m in BarrierModel])
    p.add_argument("--chi", type=float, required=True)
    p.add_argument("--pd", type=float, default=None)
    p.add_argument("--qb", type=float, default=None)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_snapshot)

    p = sub.add_parser("validate-config", help="parse, validate, and echo a config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
