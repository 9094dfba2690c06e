"""Command-line front end: run scenarios, verify the equivalence, plot, crosscheck.

Commands
--------
``windfarm-rom simulate CONFIG --mode single|farm|aggregate --out DIR``
    Integrate one scenario and write ``trajectory.csv`` plus a manifest.

``windfarm-rom verify CONFIG --n 2,3,8 --out DIR``
    For each fleet size: brute-force farm run, aggregate run, equivalence
    report JSON and a timing line.  Exit 0 only if every report passes.

``windfarm-rom plot CSV [CSV ...] --vars omega_r,i_g_d --out plot.svg``
    Overlay named columns from one or more trajectory CSVs.

``windfarm-rom crosscheck CONFIG --samples K --out FILE.csv``
    Componentwise comparison of the componentwise model against the
    literally transcribed table assembly (informational; always exit 0).

Exit codes: 0 success, 1 configuration error, 2 integration failure,
3 equivalence failure.  ``WINDFARM_ROM_SEED`` overrides the config seed.
All randomness flows from that single seed, and every command writes a
manifest sufficient to reproduce its outputs bit for bit.  Files appear
under their final names only when complete (a ``.partial`` suffix marks
in-flight writes).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys

import numpy as np

from . import __version__
from .aggregation import scale_params
from .integrator import IntegrationError
from .model import ModelError, discrepancy_table
from .params import ConfigError, ParamError, derive, load_config, params_to_dict
from .simulation import (
    ScenarioConfig,
    SteadyStateError,
    build_inputs,
    find_steady_state,
    report_to_json_dict,
    simulate_aggregate,
    simulate_farm,
    simulate_single,
    trajectory_to_csv,
    verify_equivalence,
)
from .svg import render_lines

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INTEGRATION = 2
EXIT_EQUIVALENCE = 3


def _load(config_path):
    params, scenario = load_config(config_path)
    env_seed = os.environ.get("WINDFARM_ROM_SEED")
    if env_seed is not None:
        try:
            scenario = dataclasses.replace(scenario, seed=int(env_seed))
        except ValueError:
            raise ConfigError(f"WINDFARM_ROM_SEED must be an integer, got {env_seed!r}")
    return params, scenario


def _write_json_atomic(path, obj):
    tmp = str(path) + ".partial"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def _manifest(params, scenario, command, outputs, extra=None):
    man = {
        "tool": "windfarm-rom",
        "version": __version__,
        "command": command,
        "seed": scenario.seed,
        "resolved_config": {"params": params_to_dict(params), "scenario": scenario.to_dict()},
        "derived_metadata": _derived_meta(params),
        "outputs": outputs,
    }
    if extra:
        man.update(extra)
    return man


def _derived_meta(params):
    from .model import cp_lambda_opt
    from .params import rated_wind_speed

    d = derive(params)
    return {
        "v_rated_m_per_s": rated_wind_speed(params.P_rated, params.rho, params.R_blade, params.Cp_max),
        "lambda_opt": cp_lambda_opt(),
        "omega_t_base_rad_per_s": params.omega_t_base,
        "T_m_base_N_m": params.T_m_base,
        "K_mrr": d.K_mrr,
        "L_s_prime": d.L_s_prime,
        "R_1": d.R_1,
        "R_2": d.R_2,
        "T_r": d.T_r,
        "X_m": d.X_m,
    }


def cmd_simulate(args) -> int:
    try:
        params, scenario = _load(args.config)
    except (ConfigError, ParamError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    os.makedirs(args.out, exist_ok=True)
    try:
        if args.mode == "single":
            traj = simulate_single(params, scenario)
        elif args.mode == "farm":
            traj = simulate_farm(params, scenario)
        else:
            traj = simulate_aggregate(params, scenario)
    except (IntegrationError, SteadyStateError, ModelError) as e:
        print(f"error: integration failed: {e}", file=sys.stderr)
        return EXIT_INTEGRATION

    csv_path = os.path.join(args.out, f"trajectory_{args.mode}.csv")
    trajectory_to_csv(traj, csv_path, farm=(args.mode == "farm"))
    man_path = os.path.join(args.out, f"manifest_{args.mode}.json")
    _write_json_atomic(
        man_path,
        _manifest(
            params,
            scenario,
            command=f"simulate --mode {args.mode}",
            outputs={"trajectory_csv": csv_path},
            extra={
                "integrator_stats": {
                    k: traj.meta[k] for k in ("steps", "rejected", "rhs_evals", "wall_ns")
                },
            },
        ),
    )
    print(f"wrote {csv_path}")
    print(f"wrote {man_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        params, scenario = _load(args.config)
        n_list = [int(s) for s in args.n.split(",") if s.strip()]
        if not n_list or any(n < 1 for n in n_list):
            raise ConfigError(f"--n must list positive integers, got {args.n!r}")
        skip = tuple(s for s in (args.unscale or "").split(",") if s.strip())
    except (ConfigError, ParamError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    os.makedirs(args.out, exist_ok=True)
    derived = derive(params)
    all_pass = True
    reports = []
    try:
        for n in n_list:
            scen_n = dataclasses.replace(scenario, n_turbines=n)
            u, _ = build_inputs(scen_n, params)
            x_eq = find_steady_state(params, derived, u.frozen_at(0.0))
            farm = simulate_farm(params, scen_n, x_eq=x_eq)
            if skip:
                agg = _simulate_aggregate_corrupted(params, scen_n, x_eq, skip)
            else:
                agg = simulate_aggregate(params, scen_n, x_eq=x_eq)
            rep = verify_equivalence(farm, agg, n, threshold=args.threshold)
            reports.append((n, rep))
            path = os.path.join(args.out, f"equivalence_n{n}.json")
            _write_json_atomic(path, report_to_json_dict(rep))
            status = "PASS" if rep.passed else "FAIL"
            print(
                f"n={n}: {status}  max rel err {rep.global_max_rel_error:.3e} "
                f"(threshold {args.threshold:g})  farm {rep.farm_wall_ns / 1e9:.2f} s  "
                f"aggregate {rep.aggregate_wall_ns / 1e9:.2f} s  speedup {rep.speedup:.2f}x"
            )
            all_pass = all_pass and rep.passed
    except (IntegrationError, SteadyStateError, ModelError) as e:
        print(f"error: integration failed: {e}", file=sys.stderr)
        return EXIT_INTEGRATION

    man_path = os.path.join(args.out, "manifest_verify.json")
    _write_json_atomic(
        man_path,
        _manifest(
            params,
            scenario,
            command=f"verify --n {args.n}" + (f" --unscale {args.unscale}" if skip else ""),
            outputs={f"equivalence_n{n}": os.path.join(args.out, f"equivalence_n{n}.json") for n, _ in reports},
            extra={"threshold": args.threshold, "unscaled_fields": list(skip)},
        ),
    )
    return EXIT_OK if all_pass else EXIT_EQUIVALENCE


def _simulate_aggregate_corrupted(params, scenario, x_eq, skip):
    # negative control: run the aggregate with one or more Eq.-(27) scalings
    # deliberately suppressed
    from .aggregation import lift_state, scale_inputs
    from .model import make_rhs
    from .simulation import _attach_outputs, _segmented_integrate, build_inputs

    derived = derive(params)
    u, breakpoints = build_inputs(scenario, params)
    p_agg, d_agg = scale_params(params, derived, scenario.n_turbines, skip=skip)
    u_agg = scale_inputs(u, scenario.n_turbines)
    f = make_rhs(p_agg, d_agg, u_agg)
    traj = _segmented_integrate(f, lift_state(x_eq, scenario.n_turbines).vec, scenario, breakpoints)
    _attach_outputs(traj, p_agg, d_agg, u_agg)
    return traj


def _read_csv_columns(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader]
    cols = {name: i for i, name in enumerate(header)}
    # farm CSVs repeat each time for every replica; keep replica 0
    if "replica" in cols:
        rows = [r for r in rows if r[cols["replica"]] == "0"]
    t = np.array([float(r[cols["t"]]) for r in rows])
    return header, cols, rows, t


def cmd_plot(args) -> int:
    names = [v for v in args.vars.split(",") if v.strip()]
    if not names:
        print("error: --vars must name at least one column", file=sys.stderr)
        return EXIT_CONFIG
    series = []
    base_t = None
    for path in args.csv:
        try:
            header, cols, rows, t = _read_csv_columns(path)
        except (OSError, StopIteration) as e:
            print(f"error: cannot read {path}: {e}", file=sys.stderr)
            return EXIT_CONFIG
        if base_t is None:
            base_t = t
        label_base = os.path.splitext(os.path.basename(path))[0]
        for name in names:
            if name not in cols:
                available = ", ".join(h for h in header if h not in ("t", "replica"))
                print(f"error: column {name!r} not in {path}; available: {available}", file=sys.stderr)
                return EXIT_CONFIG
            y = np.array([float(r[cols[name]]) if r[cols[name]] else np.nan for r in rows])
            if len(t) != len(base_t) or not np.allclose(t, base_t, rtol=0, atol=1e-12):
                y = np.interp(base_t, t, y)
            series.append((f"{label_base}:{name}", base_t.tolist(), y.tolist()))
    svg_text = render_lines(series, title=", ".join(names))
    tmp = args.out + ".partial"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(svg_text)
    os.replace(tmp, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_crosscheck(args) -> int:
    try:
        params, scenario = _load(args.config)
        if args.samples < 0:
            raise ConfigError("--samples must be nonnegative")
    except (ConfigError, ParamError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    derived = derive(params)
    u, _ = build_inputs(scenario, params)
    rows = (
        discrepancy_table(params, derived, u, k=args.samples, seed=scenario.seed)
        if args.samples > 0
        else []
    )
    tmp = args.out + ".partial"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["state_index", "description", "max_abs_diff", "sample_state_id", "note"])
        for idx, name, diff, sid, note in rows:
            w.writerow([idx, name, repr(diff), sid, note])
    os.replace(tmp, args.out)
    man_path = os.path.splitext(args.out)[0] + "_manifest.json"
    _write_json_atomic(
        man_path,
        _manifest(
            params,
            scenario,
            command=f"crosscheck --samples {args.samples}",
            outputs={"discrepancy_csv": args.out},
            extra={"samples": args.samples},
        ),
    )
    print(f"wrote {args.out} ({len(rows)} rows)")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage mistakes are configuration errors; keep exit 2 for integration failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(
        prog="windfarm-rom",
        description="Type-3 wind farm simulation and aggregate-equivalent verification",
    )
    ap.add_argument("--version", action="version", version=f"windfarm-rom {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one scenario and export the trajectory")
    s.add_argument("config", help="JSON config file (params + scenario)")
    s.add_argument("--mode", choices=("single", "farm", "aggregate"), default="single")
    s.add_argument("--out", default=".", help="output directory")
    s.set_defaults(fn=cmd_simulate)

    v = sub.add_parser("verify", help="farm vs aggregate equivalence and timing")
    v.add_argument("config")
    v.add_argument("--n", default="8", help="comma-separated fleet sizes")
    v.add_argument("--out", default=".")
    v.add_argument("--threshold", type=float, default=1e-5, help="max allowed relative error")
    v.add_argument(
        "--unscale",
        default="",
        help="negative control: comma-separated parameter names to leave unscaled in the aggregate",
    )
    v.set_defaults(fn=cmd_verify)

    p = sub.add_parser("plot", help="overlay trajectory columns as an SVG chart")
    p.add_argument("csv", nargs="+", help="trajectory CSV files")
    p.add_argument("--vars", required=True, help="comma-separated column names")
    p.add_argument("--out", required=True, help="output SVG path")
    p.set_defaults(fn=cmd_plot)

    c = sub.add_parser("crosscheck", help="componentwise model vs literal table assembly")
    c.add_argument("config")
    c.add_argument("--samples", type=int, default=100)
    c.add_argument("--out", default="crosscheck.csv")
    c.set_defaults(fn=cmd_crosscheck)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    code = args.fn(args)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
