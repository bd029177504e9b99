"""Command-line interface.

Subcommands:
  run <config>        run a scenario in the configured execution mode
  measure <config>    measure per-kernel times on both lanes, write the CSV
  optimize <csv>      compute the optimal lane assignment from a timing table
  bench <config>      measure, optimize, and compare single-lane vs two-lane
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import executor as ex
from .config import parse_config_file
from .errors import SwdgError
from .scenarios import build_simulation, write_snapshot


def _p_pair(cfg) -> str:
    return f"p{cfg.base_order}-{cfg.order}"


def _distribution(cfg) -> str:
    if cfg.scenario == "dam_break_static" and cfg.fraction > 1:
        return f"static_1_{cfg.fraction}"
    if cfg.scenario == "dam_break_dynamic":
        return "dynamic"
    return "uniform"


def _graph(cfg) -> ex.KernelGraph:
    return ex.build_kernel_graph(separated=cfg.separated,
                                 dynamic=cfg.scenario == "dam_break_dynamic")


def _measure_both_lanes(cfg):
    rows = []
    for lane in ex.LANES:
        sim = build_simulation(cfg)
        rows.extend(ex.measure_kernels(
            sim, lane, cfg.warmup_substeps, cfg.measured_substeps,
            p_pair=_p_pair(cfg), distribution=_distribution(cfg)))
    return rows


def _write_schedule(schedule: ex.Schedule, out_dir: Path, stem: str) -> None:
    with open(out_dir / f"{stem}.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["kernel", "lane"])
        for kernel, lane in schedule.assignment.items():
            w.writerow([kernel, lane])
        w.writerow(["predicted_makespan_ms", f"{schedule.makespan_ms:.6g}"])
    lines = [f"{kernel} -> lane {lane}"
             for kernel, lane in schedule.assignment.items()]
    lines.append(f"predicted makespan: {schedule.makespan_ms:.6g} ms")
    (out_dir / f"{stem}.txt").write_text("\n".join(lines) + "\n",
                                         encoding="utf-8")


def _finish_run(cfg, sim, report, out_dir: Path) -> None:
    write_snapshot(sim.state, sim.mesh, sim.tables, sim.orders,
                   out_dir / "snapshot.csv")
    summary = [
        f"scenario: {cfg.scenario}",
        f"mode: {cfg.mode}",
        f"steps: {sim.step_count}",
        f"total mass: {sim.total_mass():.12g}",
        f"min-depth clamps (last step): {sim.clamp_count}",
        f"median substep time: {report.measured_substep_ms:.6g} ms",
    ]
    if report.predicted_makespan_ms:
        summary.append(
            f"predicted makespan: {report.predicted_makespan_ms:.6g} ms")
    for warning in report.warnings:
        summary.append(f"warning: {warning}")
    (out_dir / "summary.txt").write_text("\n".join(summary) + "\n",
                                         encoding="utf-8")
    print("\n".join(summary))
    if cfg.figures:
        from .report import render_field_figure
        render_field_figure(sim.mesh, sim.tables, sim.state,
                            out_dir / "field.png",
                            title=f"{cfg.scenario} after {sim.step_count} steps")


def cmd_run(args) -> int:
    cfg = parse_config_file(args.config)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    graph = _graph(cfg)
    if cfg.mode in ("lane_A", "lane_B"):
        lane = cfg.mode[-1]
        schedule = ex.single_lane_schedule(graph, lane)
    else:
        rows = _measure_both_lanes(cfg)
        table = ex.timing_table(rows, p_pair=_p_pair(cfg))
        schedule = ex.optimize_assignment(graph, table)
        if cfg.mode == "measure_then_optimize":
            ex.write_timings(rows, out_dir / "timings.csv")
            _write_schedule(schedule, out_dir, "schedule")
    sim = build_simulation(cfg)
    with ex.LanePair() as lanes:
        report = ex.execute_schedule(sim, graph, schedule, lanes, cfg.steps)
    _finish_run(cfg, sim, report, out_dir)
    return 0


def cmd_measure(args) -> int:
    cfg = parse_config_file(args.config)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = _measure_both_lanes(cfg)
    path = out_dir / "timings.csv"
    ex.write_timings(rows, path)
    warning = ex.timer_resolution_warning(rows)
    if warning:
        print(f"warning: {warning}")
    print(f"wrote {path}")
    if cfg.figures:
        from .report import render_timing_figure
        render_timing_figure(rows, out_dir / "timings.png")
    return 0


def cmd_optimize(args) -> int:
    rows = ex.read_timings(args.timings)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    pairs = sorted({r.p_pair for r in rows})
    separated = any(r.kernel == "edge_base" for r in rows)
    dynamic = any(r.kernel == "indicator" for r in rows)
    graph = ex.build_kernel_graph(separated=separated, dynamic=dynamic)
    for pair in pairs:
        table = ex.timing_table(rows, p_pair=pair, distribution="homogeneous")
        if not table:
            table = ex.timing_table(rows, p_pair=pair)
        schedule = ex.optimize_assignment(graph, table)
        print(f"{pair}:")
        for kernel in graph.nodes:
            print(f"  {kernel} -> lane {schedule.assignment[kernel]}")
        print(f"  predicted makespan: {schedule.makespan_ms:.6g} ms")
        _write_schedule(schedule, out_dir, f"schedule_{pair}")
    return 0


def cmd_bench(args) -> int:
    cfg = parse_config_file(args.config)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = _measure_both_lanes(cfg)
    ex.write_timings(rows, out_dir / "timings.csv")
    graph = _graph(cfg)
    table = ex.timing_table(rows, p_pair=_p_pair(cfg))
    schedule = ex.optimize_assignment(graph, table)
    _write_schedule(schedule, out_dir, "schedule")

    results = {}
    for label, sched in (("lane_A", ex.single_lane_schedule(graph, "A")),
                         ("lane_B", ex.single_lane_schedule(graph, "B")),
                         ("heterogeneous", schedule)):
        sim = build_simulation(cfg)
        with ex.LanePair() as lanes:
            report = ex.execute_schedule(sim, graph, sched, lanes, cfg.steps)
        results[label] = report.measured_substep_ms
    lines = ["execution,median_substep_ms"]
    lines += [f"{label},{ms:.6g}" for label, ms in results.items()]
    (out_dir / "comparison.csv").write_text("\n".join(lines) + "\n",
                                            encoding="utf-8")
    print("\n".join(lines))
    if cfg.figures:
        from .report import render_timing_figure
        render_timing_figure(rows, out_dir / "timings.png")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="swdg",
        description="p-adaptive quadrature-free shallow-water solver with "
                    "two-lane kernel scheduling")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario")
    p_run.add_argument("config")
    p_run.set_defaults(fn=cmd_run)

    p_meas = sub.add_parser("measure", help="measure per-kernel times")
    p_meas.add_argument("config")
    p_meas.set_defaults(fn=cmd_measure)

    p_opt = sub.add_parser("optimize", help="optimal lane assignment from CSV")
    p_opt.add_argument("timings")
    p_opt.add_argument("--out", default="out")
    p_opt.set_defaults(fn=cmd_optimize)

    p_bench = sub.add_parser("bench", help="measure, optimize, and compare")
    p_bench.add_argument("config")
    p_bench.set_defaults(fn=cmd_bench)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (SwdgError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
