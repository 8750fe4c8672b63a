"""Command-line entry point ``ward-ident``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .dynamics.events import read_events
from .errors import NumericalError, ValidationError
from .grid import read_network
from .objectives import simulate_event
from .pipeline import default_monitors
from .pmu import write_records
from .powerflow import branch_flows, solve_power_flow
from .runner import DEFAULT_T_END, load_run_config, run_dynamic, run_steady, write_report
from .shortcircuit import short_circuit
from .signals import channel_id

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _cmd_simulate(args) -> int:
    net = read_network(args.grid)
    events = read_events(args.events)
    monitors = args.monitor or default_monitors(net, net.boundary_buses) or [
        channel_id(b.id, q) for b in net.buses for q in ("vmag_pu", "freq_hz")
    ]
    out = Path(args.out)
    for ev in events:
        t_end = args.t_end or DEFAULT_T_END[ev.category]
        rec = simulate_event(net, ev, t_end, args.dt, monitors)
        path = write_records(rec, out / f"{ev.label}.csv")
        print(f"{ev.label}: {rec.t.size} samples -> {path}")
    return EXIT_OK


def _cmd_pf(args) -> int:
    net = read_network(args.grid)
    sol = solve_power_flow(net, tol=args.tol, max_iter=args.max_iter)
    status = "converged" if sol.converged else "NOT converged"
    print(f"# power flow {status} in {sol.iterations} iterations, max mismatch {sol.max_mismatch:.3e} pu")
    print("bus, v_pu, theta_rad")
    for b, v, th in zip(sol.bus_ids, sol.v, sol.theta):
        print(f"{b}, {v:.6f}, {th:.6f}")
    if not sol.converged:
        return EXIT_NUMERICAL
    print("branch, p_from_mw, q_from_mvar, p_to_mw, q_to_mvar")
    for f in branch_flows(sol, net):
        print(f"{f.element}, {f.p_from:.3f}, {f.q_from:.3f}, {f.p_to:.3f}, {f.q_to:.3f}")
    return EXIT_OK


def _cmd_scc(args) -> int:
    net = read_network(args.grid)
    buses = args.bus or net.boundary_buses
    sol = solve_power_flow(net)
    print("bus, skss_mva, ikss_ka")
    for b in buses:
        r = short_circuit(net, b, c_factor=args.c_factor, prefault=sol)
        print(f"{b}, {r.skss:.3f}, {r.ikss:.4f}")
    return EXIT_OK


def _print_summary(stage: str, s: dict) -> None:
    parts = ", ".join(f"{k}={v:.4g}" for k, v in s["components"].items())
    print(f"{stage}: best={s['best_objective']:.4g} ({parts}), {s['evaluations']} evaluations, stop={s['stop_reason']}")


def _cmd_ident_ss(args) -> int:
    cfg = load_run_config(args.config)
    _print_summary("stage 1", run_steady(cfg))
    print(f"run directory: {cfg.run_dir}")
    return EXIT_OK


def _cmd_ident_dyn(args) -> int:
    cfg = load_run_config(args.config)
    _print_summary("stage 2", run_dynamic(cfg))
    print(f"run directory: {cfg.run_dir}")
    return EXIT_OK


def _cmd_report(args) -> int:
    run = Path(args.run)
    cfg = load_run_config(args.config or run / "config.json")
    cfg.run_dir = run
    out = write_report(cfg)
    print(f"report written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ward-ident", description="Identify generalized-Ward dynamic equivalents.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate events and write PMU records")
    s.add_argument("--grid", required=True)
    s.add_argument("--events", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--t-end", type=float, default=None, help="seconds (default 20 frequency / 10 voltage)")
    s.add_argument("--dt", type=float, default=0.01)
    s.add_argument("--monitor", action="append", help="channel id, repeatable")
    s.set_defaults(func=_cmd_simulate)

    s = sub.add_parser("pf", help="solve the AC power flow")
    s.add_argument("--grid", required=True)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--max-iter", type=int, default=50)
    s.set_defaults(func=_cmd_pf)

    s = sub.add_parser("scc", help="three-phase short-circuit level")
    s.add_argument("--grid", required=True)
    s.add_argument("--bus", action="append", help="fault bus, repeatable (default: boundary buses)")
    s.add_argument("--c-factor", type=float, default=1.0)
    s.set_defaults(func=_cmd_scc)

    s = sub.add_parser("ident-ss", help="stage 1: steady-state identification")
    s.add_argument("--config", required=True)
    s.set_defaults(func=_cmd_ident_ss)

    s = sub.add_parser("ident-dyn", help="stage 2: dynamic identification")
    s.add_argument("--config", required=True)
    s.set_defaults(func=_cmd_ident_dyn)

    s = sub.add_parser("report", help="rebuild report tables and overlays of a run")
    s.add_argument("--run", required=True)
    s.add_argument("--config", default=None, help="run config when the run directory holds none")
    s.set_defaults(func=_cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
