"""Command-line entry point.

Subcommands mirror the library modules: ``sim`` (finite-eps integration),
``hj`` (event-driven limit), ``dp`` (dynamic-programming cross-check),
``eq`` (per-subset equilibria), ``mc`` (weighted-path estimation), ``pde``
(continuous-trait run), ``study`` (convergence study).  Every subcommand
reads a YAML config, writes CSV files (and figures, unless --no-plots) into
--out-dir, prints a short verdict, and exits 0 on success, 1 on check or
hypothesis failures, 2 on input/schema errors, 3 on numerical failures.
"""

import argparse
import os
import sys
from itertools import combinations

import numpy as np

from ..core import ModelBounds
from ..equilibria import SubsetEquilibria
from ..errors import HypothesisHError, NumericalError, TraitlabError
from ..finite_ode import check_mass_bounds, simulate_finite
from ..hj import check_structure, evolve_hj
from ..montecarlo import fk_estimate
from ..pde1d import SpatialModel, check_prop21, simulate_pde, wkb_extract
from ..variational import dp_solve, optimal_path
from . import report as rep
from .config import parse_config
from .study import run_study

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


def _load(args):
    scenario, run = parse_config(args.config)
    eps_list = tuple(args.eps) if args.eps else run.eps_list
    t_max = args.t_max if args.t_max is not None else run.t_max
    dt_out = args.dt_out if args.dt_out is not None else run.dt_out
    seed = args.seed if args.seed is not None else run.seed
    os.makedirs(args.out_dir, exist_ok=True)
    return scenario, eps_list, t_max, dt_out, seed


def _verdict(name: str, passed: bool, detail: str = "") -> bool:
    print(f"[{'PASS' if passed else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
    return passed


def cmd_sim(args) -> int:
    s, eps_list, t_max, dt_out, _ = _load(args)
    ok = True
    for eps in eps_list:
        traj = simulate_finite(s, eps, t_max, dt_out=dt_out)
        path = os.path.join(args.out_dir, f"sim_eps{eps:g}.csv")
        rep.write_trajectory_csv(path, traj, s)
        bounds_report = check_mass_bounds(traj, s)
        ok &= _verdict(
            f"mass window eps={eps:g}",
            bounds_report.passed,
            f"min margin {bounds_report.min_margin:.3e}; wrote {path}",
        )
    return EXIT_OK if ok else EXIT_CHECK


def cmd_hj(args) -> int:
    s, _, t_max, dt_out, _ = _load(args)
    vf, events = evolve_hj(s, t_max)
    rep.write_events_csv(os.path.join(args.out_dir, "hj_events.csv"), events, s)
    rep.write_values_csv(os.path.join(args.out_dir, "hj_values.csv"), vf, s, dt_out)
    if not args.no_plots:
        rep.render_value_figure(args.out_dir, vf, events, s)
    structure = check_structure(vf, s)
    ok = True
    for c in structure.checks:
        ok &= _verdict(c.name, c.passed, c.detail)
    print(f"{len(events)} events, {len(vf.slopes)} segments")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_dp(args) -> int:
    s, _, t_max, _, _ = _load(args)
    grid = dp_solve(s, t_max, args.dt)
    rep.write_dp_csv(os.path.join(args.out_dir, "dp_values.csv"), grid, s)
    final = grid.values[-1]
    print("final values:", ", ".join(f"{lab}: {v:.6f}" for lab, v in zip(s.traits.labels, final)))
    if args.trait is not None:
        trait = s.traits.index(args.trait)
        path_obj = optimal_path(grid, t_max, trait)
        rep.write_path_csv(os.path.join(args.out_dir, "dp_path.csv"), path_obj, s)
        print(
            f"optimal path to {args.trait}: start {s.traits.labels[path_obj.start]}, "
            f"{len(path_obj.jumps)} jumps"
        )
    return EXIT_OK


def cmd_eq(args) -> int:
    s, *_ = _load(args)
    cache = SubsetEquilibria(s)
    if args.subset:
        wanted = [tuple(sorted(s.traits.index(x) for x in part.split("+")))
                  for part in args.subset.split(",")]
    else:
        wanted = [
            sub
            for size in range(1, s.n + 1)
            for sub in combinations(range(s.n), size)
        ]
    ok = True
    tables = {}
    for sub in wanted:
        label = "{" + "|".join(s.traits.labels[i] for i in sub) + "}"
        try:
            stability, f_vec = cache.get(sub)
        except HypothesisHError as exc:
            ok &= _verdict(f"subset {label}", False, f"{type(exc).__name__}: {exc}")
            continue
        tables[sub] = (stability, f_vec)
        _verdict(
            f"subset {label}",
            True,
            "F = [" + ", ".join(f"{x:.8g}" for x in f_vec) + "], support "
            + "{" + "|".join(s.traits.labels[i] for i in stability.admissible_equilibria[0].support) + "}",
        )
    if tables:
        rep.write_equilibria_csv(os.path.join(args.out_dir, "equilibria.csv"), tables, s)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_mc(args) -> int:
    s, eps_list, t_max, dt_out, seed = _load(args)
    eps = args.eps[0] if args.eps else eps_list[0]
    t = args.t if args.t is not None else min(1.0, t_max)
    traj = simulate_finite(s, eps, max(t, dt_out), dt_out=dt_out)
    rows = []
    ok = True
    traits = [s.traits.index(args.trait)] if args.trait else range(s.n)
    for i in traits:
        est, se = fk_estimate(s, traj, eps, t, i, args.n, seed)
        k = int(np.argmin(np.abs(traj.times - t)))
        ref = float(traj.u[k, i])
        if se > 0:
            dev = abs(est - ref) / se
        else:
            dev = 0.0 if est == ref else float("inf")
        within = bool(abs(est - ref) <= 3 * se) or est == ref
        ok &= _verdict(
            f"trait {s.traits.labels[i]}",
            within,
            f"estimate {est:.6g} +- {se:.2g}, reference {ref:.6g} ({dev:.2f} SE)",
        )
        rows.append(
            {
                "trait": s.traits.labels[i],
                "eps": eps,
                "t": t,
                "n": args.n,
                "estimate": f"{est:.12g}",
                "se": f"{se:.6g}",
                "reference": f"{ref:.12g}",
            }
        )
    rep.write_mc_csv(os.path.join(args.out_dir, "mc_estimates.csv"), rows)
    return EXIT_OK if ok else EXIT_CHECK


def _pde_setup(args):
    """Build the grid functions of the pde section (compact quadratic family)."""
    import yaml

    with open(args.config) as fh:
        full = yaml.safe_load(fh)
    node = (full or {}).get("pde")
    if node is None:
        raise TraitlabError("config has no 'pde' section")
    eps = float(node.get("eps", 0.1))
    t_max = float(node.get("t_max", 3.0))
    L = float(node.get("L", 4.0))
    dx = float(node.get("dx", 0.02))
    dt = float(node.get("dt", eps * dx))
    nx = int(round(2 * L / dx)) + 1
    x = -L + dx * np.arange(nx)

    h_node = node.get("h", {"kind": "quadratic", "scale": 1.0, "offset": 0.0})
    if h_node["kind"] == "quadratic":
        h = float(h_node.get("scale", 1.0)) * (x - float(h_node.get("center", 0.0))) ** 2 + float(
            h_node.get("offset", 0.0)
        )
    elif h_node["kind"] == "constant":
        h = np.full(nx, float(h_node["value"]))
    else:
        raise TraitlabError(f"pde.h.kind: unknown kind {h_node['kind']!r}")

    psi_consts = node.get("psi", [1.0])
    psi = np.array([[float(c)] * nx for c in psi_consts])

    rate_node = node.get("rate", {"kind": "logistic", "growth": 1.0})
    growth = float(rate_node.get("growth", 1.0))
    if rate_node["kind"] == "logistic":
        def rate(x_arr, v):
            return growth * (1.0 - v[0]) * np.ones_like(x_arr)
    elif rate_node["kind"] == "quadratic":
        curvature = float(rate_node.get("curvature", 1.0))

        def rate(x_arr, v):
            return growth - v[0] - curvature * x_arr**2
    else:
        raise TraitlabError(f"pde.rate.kind: unknown kind {rate_node['kind']!r}")

    b = node.get("bounds", {"A": 1.0, "M": 2.0, "v_min": 0.9, "v_max": 1.1})
    bounds = ModelBounds(A=float(b["A"]), M=float(b["M"]), v_min=float(b["v_min"]), v_max=float(b["v_max"]))
    model = SpatialModel(rate=rate, bounds=bounds)
    return model, psi, h, eps, t_max, L, dx, dt


def cmd_pde(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    model, psi, h, eps, t_max, L, dx, dt = _pde_setup(args)
    field = simulate_pde(model, psi, h, eps, t_max, L, dx, dt)
    rep.write_pde_snapshots_csv(os.path.join(args.out_dir, "pde_snapshots.csv"), field)
    rep.write_pde_diagnostics_csv(os.path.join(args.out_dir, "pde_diagnostics.csv"), field)
    if not args.no_plots:
        rep.render_pde_figure(args.out_dir, field)
    prop = check_prop21(field, model.bounds, t_from=min(1.0, t_max / 2))
    ok = True
    for c in prop.checks:
        ok &= _verdict(c.name, c.passed, c.detail)
    wkb = wkb_extract(field)
    print(
        f"final max_x w = {wkb.max_w[-1]:.4g} at x = {wkb.argmax_x[-1]:.4g}; "
        f"Lipschitz (x, t) = ({wkb.lipschitz_x:.3g}, {wkb.lipschitz_t:.3g})"
    )
    return EXIT_OK if ok else EXIT_CHECK


def cmd_study(args) -> int:
    s, eps_list, t_max, dt_out, _ = _load(args)
    result = run_study(s, eps_list, t_max, dt_out=dt_out, label=args.label)
    rep.write_study_csv(os.path.join(args.out_dir, f"{args.label}_study.csv"), result)
    rep.write_events_csv(os.path.join(args.out_dir, f"{args.label}_events.csv"), result.events, s)
    rep.write_values_csv(
        os.path.join(args.out_dir, f"{args.label}_values.csv"), result.value_function, s, dt_out
    )
    if not args.no_plots:
        rep.render_study_figures(args.out_dir, result, s)
    ok = True
    for c in result.checks:
        ok &= _verdict(c.name, c.passed, c.detail)
    return EXIT_OK if ok else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="traitlab",
        description="Exponential-scale analysis of mutation-selection dynamics on finite trait spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="YAML scenario config")
        p.add_argument("--out-dir", default="out", help="directory for CSV/figure output")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")
        p.add_argument("--eps", type=float, nargs="+", default=None, help="override run.eps_list")
        p.add_argument("--t-max", type=float, default=None, help="override run.t_max")
        p.add_argument("--dt-out", type=float, default=None, help="override run.dt_out")
        p.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    p = sub.add_parser("sim", help="finite-eps integration, one CSV per eps")
    common(p)
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("hj", help="event-driven limit value function")
    common(p)
    p.set_defaults(func=cmd_hj)

    p = sub.add_parser("dp", help="dynamic-programming value grid and optimal path")
    common(p)
    p.add_argument("--dt", type=float, default=1e-3, help="grid step (<= 1e-2)")
    p.add_argument("--trait", default=None, help="backtrack the optimal path to this trait label")
    p.set_defaults(func=cmd_dp)

    p = sub.add_parser("eq", help="per-subset equilibria and resource values")
    common(p)
    p.add_argument(
        "--subset",
        default=None,
        help="comma-separated subsets, traits joined by '+', e.g. '1,2,1+2'",
    )
    p.set_defaults(func=cmd_eq)

    p = sub.add_parser("mc", help="weighted-path estimate vs the integrated reference")
    common(p)
    p.add_argument("--t", type=float, default=None, help="estimation horizon (default min(1, t_max))")
    p.add_argument("--trait", default=None, help="single trait label (default: all)")
    p.add_argument("--n", type=int, default=100_000, help="path count")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("pde", help="continuous-trait simulation from the config's pde section")
    common(p)
    p.set_defaults(func=cmd_pde)

    p = sub.add_parser("study", help="convergence study over run.eps_list")
    common(p)
    p.add_argument("--label", default="scenario", help="name prefix for output files")
    p.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HypothesisHError as exc:
        print(f"hypothesis failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except TraitlabError as exc:
        print(f"input error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
