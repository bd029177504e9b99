"""Quadrature-free p-adaptive discontinuous Galerkin shallow-water solver
with a measuring, makespan-optimizing two-lane kernel executor."""

from .adaptivity import OrderField, base_ranges, correction_ranges
from .basis import build_reference_basis, build_tensors, k_of_p, project
from .config import RunConfig, emit_config, parse_config, parse_config_file
from .errors import (ConfigError, DepthError, DomainError, InvariantError,
                     MeshError, SwdgError, UnsupportedOrderError)
from .executor import (KernelGraph, LanePair, Schedule, build_kernel_graph,
                       execute_schedule, measure_kernels, optimize_assignment,
                       read_timings, single_lane_schedule, write_timings)
from .kernels import IndexRange, PhysParams, State, total_mass
from .mesh import (Mesh, connect_edges, dump_mesh,
                   generate_perturbed_uniform_mesh, load_mesh)
from .scenarios import build_simulation, write_snapshot
from .timeloop import Simulation, TimeLoopConfig, rk_substep_update

__version__ = "0.1.0"

__all__ = [
    "OrderField", "base_ranges", "correction_ranges",
    "build_reference_basis", "build_tensors", "k_of_p", "project",
    "RunConfig", "emit_config", "parse_config", "parse_config_file",
    "SwdgError", "MeshError", "UnsupportedOrderError", "DomainError",
    "ConfigError", "DepthError", "InvariantError",
    "KernelGraph", "LanePair", "Schedule", "build_kernel_graph",
    "execute_schedule", "measure_kernels", "optimize_assignment",
    "read_timings", "single_lane_schedule", "write_timings",
    "IndexRange", "PhysParams", "State", "total_mass",
    "Mesh", "connect_edges", "dump_mesh", "generate_perturbed_uniform_mesh",
    "load_mesh",
    "build_simulation", "write_snapshot",
    "Simulation", "TimeLoopConfig", "rk_substep_update",
    "__version__",
]
