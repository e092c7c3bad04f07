"""Command-line entry point.

Exit codes: 0 success, 2 malformed spec or arguments, 3 IO failure,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analytics as an
from .domainwall import AnnealedConfig, annealed_run
from .harness import recipes
from .harness.collapse import Dataset, FitError, algebraic_decay_pc, crossing_point, fit_collapse
from .harness.sweep import SpecError, SweepSpec, run_sweep
from .protocols import ConfigError, ProtocolConfig, mean_sem, run_protocol
from .rng import env_seed

EXIT_SPEC, EXIT_IO, EXIT_NUM = 2, 3, 4


def _threads(ns) -> int:
    return ns.threads if ns.threads else (os.cpu_count() or 1)


def cmd_clifford_run(ns) -> int:
    cfg = ProtocolConfig(
        L=ns.L, T=ns.T, p=ns.p, schedule=ns.schedule, period=ns.period, channel=ns.channel,
        p_U=ns.p_U, prescramble=ns.prescramble, prescramble_k=ns.prescramble_k,
        encoding=ns.encoding, x0=ns.x0, C=ns.C, seed=env_seed(ns.seed), n_samples=ns.samples,
        layer_order=ns.layer_order,
    )
    recs = run_protocol(cfg, workers=_threads(ns))
    m, e = mean_sem([r.final for r in recs])
    print(f"I={m!r} sem={e!r} n={len(recs)} config={cfg.config_hash()}")
    return 0


def cmd_annealed_run(ns) -> int:
    cfg = AnnealedConfig(
        q=ns.q, L=ns.L, T=ns.T, p=ns.p, prescramble_depth=ns.prescramble_depth,
        right_boundary=ns.right_boundary, encoding=ns.encoding, x0=ns.x0, C=ns.C,
        noise=ns.noise, n_realizations=ns.realizations, seed=env_seed(ns.seed),
    )
    print(f"I={annealed_run(cfg)!r}")
    return 0


def cmd_sweep(ns) -> int:
    spec = SweepSpec.from_json(ns.spec)
    if ns.out:
        spec.out = str(Path(ns.out) / spec.name)
    res = run_sweep(spec, workers=_threads(ns))
    print(f"wrote {res.csv_path} ({len(res.rows)} rows)")
    return 0


def cmd_analytic(ns) -> int:
    m = an.AnalyticModel(ns.q)
    if ns.quantity == "pc":
        pc = m.critical_p()
        print(f"p_c={pc!r} 1-p_c={m.critical_u()!r} residual={float(m.criticality(pc))!r} q={ns.q!r}")
    elif ns.quantity == "f":
        print(f"f={m.free_energy(_need(ns.p, 'p'))!r}")
    elif ns.quantity == "lperp":
        print(f"l_perp={m.excursion_length(_need(ns.p, 'p'))!r}")
    elif ns.quantity == "tc":
        print(f"t_c={an.thermalization_time(_need(ns.p, 'p'), ns.q, _need(ns.L, 'L'))!r}")
    elif ns.quantity == "thresholds":
        th = an.finite_rate_thresholds(ns.q, ns.C, _need(ns.L, 'L'), _need(ns.T, 'T'))
        print(f"p_th1={th.p_th1!r} p_th2={th.p_th2!r} ({th.label})")
    return 0


def _need(v, name):
    if v is None:
        raise SpecError(f"--{name} is required for this quantity")
    return v


def _final_rows(path, where=None):
    """Drop intermediate Clifford checkpoints, keeping the largest T of each (L, p).

    Annealed rows are one per (L, T) already and pass through unchanged.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.DictReader(fh)
                if not where or all(str(r.get(k)) == str(v) for k, v in where.items())]
    best = {}
    for i, r in enumerate(rows):
        key = (r["L"], r["p"]) if r.get("engine", "clifford") == "clifford" else i
        if key not in best or int(r["T"]) > int(best[key]["T"]):
            best[key] = r
    return list(best.values()), rows


def _dataset(rows, size_col, floor=1e-3):
    d = Dataset.from_rows([(float(r["p"]), float(r[size_col]), float(r["mean_I"]), float(r["sem_I"]))
                           for r in rows])
    return d.with_floor(rel=floor, abs_=1e-6)


def fit_csv(path, model, size_col=None, fixed=None, n_boot=0, where=None) -> dict:
    final, allrows = _final_rows(path, where)
    size_col = size_col or ("T" if model == "power_law" else "L")
    data = _dataset(final, size_col)
    fit = fit_collapse(data, model, fixed=fixed, n_boot=n_boot)
    return {"model": fit.model, "params": fit.params, "Q": fit.Q, "errors": fit.errors,
            "n_points": fit.n_points}


def decay_fit(rows, T_min=16, method="curvature") -> dict:
    """Algebraic-decay estimate on the checkpoint series of the largest L."""
    L = max(int(r["L"]) for r in rows)
    rows = [r for r in rows if int(r["L"]) == L]
    est = algebraic_decay_pc([float(r["p"]) for r in rows], [float(r["T"]) for r in rows],
                             [float(r["mean_I"]) for r in rows], [float(r["sem_I"]) for r in rows],
                             T_min=T_min, method=method)
    return {"p_c": est.p_c, "beta_over_nu": est.beta_over_nu, "L": L, "method": est.method,
            "slopes": est.slopes, "curvatures": est.curvatures, "p_values": est.p_values}


def cmd_fit(ns) -> int:
    fixed = {}
    for item in ns.fix or []:
        k, _, v = item.partition("=")
        fixed[k] = float(v)
    where = dict(item.split("=", 1) for item in ns.where or [])
    if ns.model == "decay":
        _, rows = _final_rows(ns.csv, where)
        out = decay_fit(rows, ns.T_min, ns.decay_method)
    elif ns.model == "crossing":
        final, _ = _final_rows(ns.csv, where)
        med, spread, xs = crossing_point(_dataset(final, ns.size_col or "L"))
        out = {"crossing": med, "spread": spread, "pairs": xs}
    else:
        out = fit_csv(ns.csv, ns.model, ns.size_col, fixed, ns.bootstrap, where)
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _post_fit(fig, specs) -> dict:
    out = {}
    if fig == "fig2":
        out["analytic_p_c"] = an.critical_p(2)
        out["collapse"] = fit_csv(specs[0].out + "/results.csv", "power_law")
    elif fig == "fig4":
        _, rows = _final_rows(specs[0].out + "/results.csv")
        out["decay"] = decay_fit(rows, 16)
        out["collapse_nu2"] = fit_csv(specs[0].out + "/results.csv", "power_law", fixed={"nu": 2.0})
    elif fig == "fig6":
        final, _ = _final_rows(specs[1].out + "/results.csv")
        med, spread, _ = crossing_point(_dataset(final, "L"))
        out["crossing"] = {"p": med, "spread": spread}
    elif fig == "fig8":
        out["step_fit"] = fit_csv(specs[1].out + "/results.csv", "step")
    elif fig == "fig9":
        th = an.finite_rate_thresholds(2, 0.5, 64, 7 * 64)
        out["thresholds_estimate"] = {"p_th1": th.p_th1, "p_th2": th.p_th2}
    return out


def cmd_repro(ns) -> int:
    specs = recipes.recipe(ns.figure, ns.scale, ns.out, env_seed(ns.seed), ns.samples)
    for spec in specs:
        Path(spec.out).mkdir(parents=True, exist_ok=True)
        (Path(spec.out) / "spec.json").write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True))
        res = run_sweep(spec, workers=_threads(ns))
        print(f"wrote {res.csv_path}")
    fits = _post_fit(ns.figure, specs)
    if fits:
        path = Path(ns.out) / ns.figure / "fit.json"
        path.write_text(json.dumps(fits, indent=2, sort_keys=True))
        print(json.dumps(fits, indent=2, sort_keys=True))
    return 0


def _float_or_none(s):
    return None if s.lower() in ("none", "full") else float(s)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dcl", description="Dissipative-boundary coding transition workbench.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
        p.add_argument("--seed", type=int, default=0, help="master seed; DCL_SEED overrides (default 0)")

    c = sub.add_parser("clifford-run", help="run Clifford trajectories and print the mean I_{A,R} (bits)")
    c.add_argument("--L", type=int, required=True, help="system size, even")
    c.add_argument("--T", type=int, required=True, help="dissipative timesteps")
    c.add_argument("--p", type=float, default=0.0, help="dissipation probability (default 0)")
    c.add_argument("--samples", type=int, default=1, help="trajectories (default 1)")
    c.add_argument("--channel", choices=["erasure", "cnot_ancilla"], default="erasure")
    c.add_argument("--schedule", choices=["random", "periodic"], default="random")
    c.add_argument("--period", type=int, default=1, help="period for the periodic schedule (default 1)")
    c.add_argument("--p-U", dest="p_U", type=_float_or_none, default=None,
                   help="gate probability for sparse scrambling (default: full)")
    c.add_argument("--prescramble", choices=["none", "log", "linear"], default="none")
    c.add_argument("--prescramble-k", type=float, default=1.0,
                   help="k in round(k log2 L) or the multiple of L (default 1)")
    c.add_argument("--encoding", choices=["single_pair", "finite_rate"], default="single_pair")
    c.add_argument("--x0", type=int, default=1, help="1-indexed Bell site (default 1)")
    c.add_argument("--C", type=float, default=0.5, help="code rate for finite_rate (default 0.5)")
    c.add_argument("--layer-order", choices=["odd_first", "even_first"], default="odd_first")
    common(c)
    c.set_defaults(func=cmd_clifford_run)

    a = sub.add_parser("annealed-run", help="annealed mutual information (log base q) from the domain-wall DP")
    a.add_argument("--q", type=float, default=2, help="on-site dimension (default 2)")
    a.add_argument("--L", type=int, default=None, help="system size; omit for semi-infinite")
    a.add_argument("--T", type=int, required=True, help="dissipative timesteps")
    a.add_argument("--p", type=float, required=True, help="dissipation strength")
    a.add_argument("--x0", type=int, default=1)
    a.add_argument("--prescramble-depth", type=int, default=0, help="clean timesteps (default 0)")
    a.add_argument("--right-boundary", choices=["absorbing", "semi_infinite"], default="semi_infinite")
    a.add_argument("--encoding", choices=["single_pair", "finite_rate"], default="single_pair")
    a.add_argument("--C", type=float, default=0.5)
    a.add_argument("--noise", choices=["deterministic", "random_time"], default="deterministic")
    a.add_argument("--realizations", type=int, default=1, help="noise realizations in random_time mode")
    common(a)
    a.set_defaults(func=cmd_annealed_run)

    s = sub.add_parser("sweep", help="run a JSON sweep spec")
    s.add_argument("--spec", required=True, help="path to the sweep spec JSON")
    s.add_argument("--out", default=None, help="output root (default: the spec's own out)")
    s.add_argument("--threads", type=int, default=None)
    s.set_defaults(func=cmd_sweep)

    n = sub.add_parser("analytic", help="closed-form quantities (natural logs unless stated)")
    n.add_argument("quantity", choices=["pc", "f", "lperp", "tc", "thresholds"])
    n.add_argument("--q", type=float, default=2)
    n.add_argument("--p", type=float, default=None)
    n.add_argument("--L", type=int, default=None)
    n.add_argument("--T", type=int, default=None)
    n.add_argument("--C", type=float, default=0.5)
    n.set_defaults(func=cmd_analytic)

    f = sub.add_parser("fit", help="collapse, crossing or decay fits on a sweep CSV")
    f.add_argument("--csv", required=True)
    f.add_argument("--model", choices=["power_law", "step", "crossing", "decay"], default="power_law")
    f.add_argument("--size-col", default=None, help="CSV column used as the size (default T or L)")
    f.add_argument("--fix", action="append", help="pin a parameter, e.g. --fix nu=2")
    f.add_argument("--where", action="append", help="row filter, e.g. --where engine=clifford")
    f.add_argument("--bootstrap", type=int, default=0, help="bootstrap resamples (default 0)")
    f.add_argument("--T-min", dest="T_min", type=float, default=16, help="decay fit lower T (default 16)")
    f.add_argument("--decay-method", choices=["curvature", "chi2"], default="curvature",
                   help="straight-line criterion for the decay model (default curvature)")
    f.set_defaults(func=cmd_fit)

    r = sub.add_parser("repro-figure", help="run a figure recipe and write CSV, plot script and fits")
    r.add_argument("figure", choices=list(recipes.FIGURES))
    r.add_argument("--scale", choices=["desk", "paper"], default="desk")
    r.add_argument("--out", default="figures", help="output root (default ./figures)")
    r.add_argument("--samples", type=int, default=None, help="override trajectories per point")
    common(r)
    r.set_defaults(func=cmd_repro)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return ns.func(ns)
    except (FitError, an.ModelError, FloatingPointError, ArithmeticError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUM
    except (SpecError, ConfigError, ValueError, KeyError) as exc:
        print(f"error: invalid spec: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except OSError as exc:
        print(f"error: IO failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
