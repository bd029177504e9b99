"""Kernel graph, two-lane execution, per-kernel timing, and makespan-optimal
lane assignment.

Lanes A and B are persistent host worker threads standing in for the two
processors of a heterogeneous system-on-chip.  The substep pipeline is a
sequence of phases separated by barriers; kernels inside the single parallel
phase (the four flux kernels of a separated run) may execute concurrently on
different lanes, kernels on the same lane serialize.  The makespan of an
assignment is the sum over phases of the slowest lane in each phase, which an
exhaustive search minimizes exactly.
"""

from __future__ import annotations

import csv
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

from .errors import ConfigError

LANES = ("A", "B")

#: The base and correction halves of each split kernel act on the same data
#: and are scheduled as a unit, mirroring the placement of the separated
#: computation as one base block and one correction block.
DEFAULT_GROUPS = (("edge_base", "elem_rhs_base"),
                  ("edge_correction", "elem_rhs_correction"))


@dataclass
class KernelGraph:
    """Substep pipeline as barrier-separated phases of named kernels."""

    separated: bool
    dynamic: bool
    phases: list

    @property
    def nodes(self) -> list:
        return [k for phase in self.phases for k in phase]

    @property
    def parallel_groups(self) -> tuple:
        """Kernel groups scheduled as indivisible units."""
        groups = []
        grouped = set()
        if self.separated:
            for g in DEFAULT_GROUPS:
                groups.append(g)
                grouped.update(g)
        for k in self.nodes:
            if k not in grouped:
                groups.append((k,))
        return tuple(groups)


def build_kernel_graph(separated: bool, dynamic: bool) -> KernelGraph:
    if separated:
        flux = ["edge_base", "edge_correction", "elem_rhs_base",
                "elem_rhs_correction"]
    else:
        flux = ["edge_flux", "elem_rhs"]
    phases = [flux, ["rk_substep_additions"], ["min_depth"], ["solve_uH"],
              ["bc_computation"]]
    if dynamic:
        phases.append(["indicator"])
    return KernelGraph(separated=separated, dynamic=dynamic, phases=phases)


# ---------------------------------------------------------------------------
# timing tables

@dataclass
class TimingRow:
    kernel: str
    p_pair: str          # e.g. "p0-1"
    distribution: str    # e.g. "static_1_32", "measured"
    lane: str
    mean_ms: float
    stddev_ms: float
    samples: int


CSV_HEADER = ["kernel", "p_pair", "distribution", "lane", "mean_ms",
              "stddev_ms", "samples"]


def write_timings(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([r.kernel, r.p_pair, r.distribution, r.lane,
                        f"{r.mean_ms:.6g}", f"{r.stddev_ms:.6g}", r.samples])


def read_timings(path) -> list:
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = set(CSV_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ConfigError(f"timing CSV missing columns {sorted(missing)}")
        for rec in reader:
            rows.append(TimingRow(
                kernel=rec["kernel"], p_pair=rec["p_pair"],
                distribution=rec["distribution"], lane=rec["lane"],
                mean_ms=float(rec["mean_ms"]),
                stddev_ms=float(rec["stddev_ms"]),
                samples=int(rec["samples"])))
    return rows


def timing_table(rows, p_pair=None, distribution=None) -> dict:
    """(kernel, lane) -> mean_ms, filtered to one scenario slice."""
    table = {}
    for r in rows:
        if p_pair is not None and r.p_pair != p_pair:
            continue
        if distribution is not None and r.distribution != distribution:
            continue
        table[(r.kernel, r.lane)] = r.mean_ms
    return table


# ---------------------------------------------------------------------------
# makespan model and optimizer

@dataclass
class Schedule:
    assignment: dict          # kernel -> lane
    makespan_ms: float

    def lane_of(self, kernel: str) -> str:
        return self.assignment[kernel]


def predict_makespan(graph: KernelGraph, assignment: dict, times: dict) -> float:
    """Sum over phases of the slower lane; same-lane kernels serialize."""
    total = 0.0
    for phase in graph.phases:
        per_lane = dict.fromkeys(LANES, 0.0)
        for k in phase:
            per_lane[assignment[k]] += times[(k, assignment[k])]
        total += max(per_lane.values())
    return total


def optimize_assignment(graph: KernelGraph, times: dict,
                        groups=None) -> Schedule:
    """Exhaustive makespan minimization over per-group lane assignments.

    ``times`` maps (kernel, lane) to mean milliseconds and must cover every
    graph node on both lanes.  Ties are broken toward lane B, then
    lexicographically for determinism.
    """
    nodes = graph.nodes
    for k in nodes:
        for lane in LANES:
            if (k, lane) not in times:
                raise ConfigError(f"missing timing for kernel {k!r} on lane {lane}")
    if groups is None:
        groups = [g for g in graph.parallel_groups
                  if all(k in nodes for k in g)]
    best = None
    for lanes in product(LANES, repeat=len(groups)):
        assignment = {}
        for grp, lane in zip(groups, lanes):
            for k in grp:
                assignment[k] = lane
        ms = predict_makespan(graph, assignment, times)
        count_a = sum(1 for v in lanes if v == "A")
        key = (ms, count_a, lanes)
        if best is None or key < best[0]:
            best = (key, assignment, ms)
    return Schedule(assignment=best[1], makespan_ms=best[2])


# ---------------------------------------------------------------------------
# lanes and dispatch

class LanePair:
    """Two persistent single-worker lanes."""

    def __init__(self):
        self._pools = {lane: ThreadPoolExecutor(max_workers=1,
                                                thread_name_prefix=f"lane{lane}")
                       for lane in LANES}

    def submit(self, lane: str, fn):
        return self._pools[lane].submit(fn)

    def shutdown(self):
        for pool in self._pools.values():
            pool.shutdown(wait=True)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()
        return False


def _run_phase(sim, phase, schedule, lanes):
    futures = [lanes.submit(schedule.lane_of(k), sim.kernels[k]) for k in phase]
    for k, fut in zip(phase, futures):
        try:
            fut.result()
        except Exception as err:
            raise RuntimeError(f"kernel {k!r} failed: {err}") from err


def single_lane_schedule(graph: KernelGraph, lane: str = "A") -> Schedule:
    return Schedule(assignment={k: lane for k in graph.nodes}, makespan_ms=0.0)


@dataclass
class TimingReport:
    rows: list = field(default_factory=list)
    predicted_makespan_ms: float = 0.0
    measured_substep_ms: float = 0.0
    substep_samples: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


def execute_schedule(sim, graph: KernelGraph, schedule: Schedule, lanes,
                     steps: int) -> TimingReport:
    """Runs the time loop dispatching each kernel to its assigned lane and
    records wall time per substep."""
    report = TimingReport(predicted_makespan_ms=schedule.makespan_ms)
    sim.prepare()
    for _ in range(steps):
        for stage in (1, 2):
            t0 = time.perf_counter()
            sim.begin_substep(stage)
            _run_phase(sim, sim.flux_phase, schedule, lanes)
            for name in sim.sequential_phase:
                lanes.submit(schedule.lane_of(name), sim.kernels[name]).result()
            report.substep_samples.append((time.perf_counter() - t0) * 1e3)
        sim.end_step()
    if report.substep_samples:
        report.measured_substep_ms = statistics.median(report.substep_samples)
    return report


# ---------------------------------------------------------------------------
# measurement

def measure_kernels(sim, lane: str, warmup_substeps: int,
                    measured_substeps: int, p_pair: str,
                    distribution: str) -> list:
    """Per-kernel wall times with a barrier after every kernel (no overlap);
    returns one TimingRow per kernel for the given lane label."""
    sim.prepare()
    names = sim.substep_names()
    timed = names + (["indicator"] if sim.dynamic else [])
    samples = {k: [] for k in timed}
    total = warmup_substeps + measured_substeps
    substep = 0
    while substep < total:
        for stage in (1, 2):
            if substep >= total:
                break
            sim.begin_substep(stage)
            for name in names:
                t0 = time.perf_counter()
                sim.kernels[name]()
                dt_ms = (time.perf_counter() - t0) * 1e3
                if substep >= warmup_substeps:
                    samples[name].append(dt_ms)
            substep += 1
            if stage == 2:
                sim.step_count += 1
                if sim.dynamic:
                    t0 = time.perf_counter()
                    sim.kernels["indicator"]()
                    dt_ms = (time.perf_counter() - t0) * 1e3
                    if substep > warmup_substeps:
                        samples["indicator"].append(dt_ms)
    rows = []
    for name in timed:
        vals = samples[name]
        mean = statistics.fmean(vals)
        std = statistics.pstdev(vals) if len(vals) > 1 else 0.0
        rows.append(TimingRow(kernel=name, p_pair=p_pair,
                              distribution=distribution, lane=lane,
                              mean_ms=mean, stddev_ms=std, samples=len(vals)))
    return rows


def timer_resolution_warning(rows) -> str | None:
    res_ms = time.get_clock_info("perf_counter").resolution * 1e3
    smallest = min((r.mean_ms for r in rows if r.mean_ms > 0.0), default=None)
    if smallest is not None and res_ms > 0.01 * smallest:
        return (f"timer resolution {res_ms:.3g} ms exceeds 1% of the smallest "
                f"kernel mean {smallest:.3g} ms")
    return None
