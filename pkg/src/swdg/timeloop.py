"""Two-stage SSP Runge-Kutta time stepping and the per-substep kernel
pipeline.

A :class:`Simulation` owns the state and exposes the substep pipeline as
named callables; the executor decides where each one runs.  The four flux
kernels of a separated run write to disjoint residual buffers that are merged
by the additions part of the RK update, so they may execute concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as kn
from .adaptivity import (OrderField, apply_order_change, base_ranges,
                         correction_ranges, full_ranges, indicator_kernel)
from .basis import BasisTables, k_of_p
from .errors import ConfigError, InvariantError
from .mesh import Mesh


@dataclass
class TimeLoopConfig:
    dt: float
    steps: int

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ConfigError("dt must be positive")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")


def rk_substep_update(stage: int, c_n: np.ndarray, c_stage: np.ndarray,
                      residual: np.ndarray, dt: float) -> np.ndarray:
    """SSP-RK2: stage 1 is a forward-Euler step from c_n; stage 2 is the
    convex combination (c_n + c1 + dt L(c1)) / 2."""
    if stage == 1:
        return c_n + dt * residual
    if stage == 2:
        return 0.5 * c_n + 0.5 * (c_stage + dt * residual)
    raise ConfigError(f"invalid RK stage {stage}")


class Simulation:
    """State, order field, and the named substep kernels of one run."""

    def __init__(self, mesh: Mesh, tables: BasisTables, params: kn.PhysParams,
                 orders: OrderField, dt: float, separated: bool = True,
                 dynamic: bool = False, xi_hat=None,
                 theta_refine: float = 5e-2, theta_coarsen: float = 1e-2,
                 depth_scale: float = 1.0):
        self.mesh = mesh
        self.tables = tables
        self.params = params
        self.orders = orders
        self.dt = float(dt)
        self.separated = separated
        self.dynamic = dynamic
        self.xi_hat = xi_hat
        self.theta_refine = theta_refine
        self.theta_coarsen = theta_coarsen
        self.depth_scale = depth_scale

        K = k_of_p(orders.p)
        self.state = kn.State.zeros(mesh, K)
        self.c_n = self.state.c.copy()
        self.stage = 1
        self.step_count = 0
        self.clamp_count = 0
        self.high_fraction_log: list[float] = []

        if separated:
            self._buffer_names = ("edge_base", "edge_correction",
                                  "elem_rhs_base", "elem_rhs_correction")
        else:
            self._buffer_names = ("edge_flux", "elem_rhs")
        self.buffers = {name: self.state.new_residual()
                        for name in self._buffer_names}
        self._refresh_order_caches()
        self.kernels = self._build_kernels()

    # -- order-dependent cached index sets ---------------------------------

    def _refresh_order_caches(self):
        self._active_K = self.orders.active_K()
        high = self.orders.high_mask
        self._high_elements = np.flatnonzero(high)
        eL = self.mesh.edge_elems[:, 0]
        eR = self.mesh.edge_elems[:, 1]
        touch = high[eL] | ((eR >= 0) & high[np.maximum(eR, 0)])
        self._high_edges = np.flatnonzero(touch)
        self._high_mask = high

    # -- named kernels ------------------------------------------------------

    def _build_kernels(self):
        mesh, tables, params = self.mesh, self.tables, self.params
        st = self.state
        b, p = self.orders.b, self.orders.p
        rng_base = base_ranges(b)
        rng_corr_a, rng_corr_b = correction_ranges(b, p)
        if self.separated:
            rng_full = full_ranges(p)
        else:
            uniq = np.unique(self.orders.active)
            if len(uniq) != 1:
                raise ConfigError("unseparated execution requires a uniform "
                                  "per-element order")
            rng_full = full_ranges(int(uniq[0]))

        def edge_base():
            out = self.buffers["edge_base"]
            out[:] = 0.0
            kn.edge_flux_kernel(st, mesh, tables, params, rng_base, out)

        def edge_correction():
            out = self.buffers["edge_correction"]
            out[:] = 0.0
            edges = self._high_edges
            if len(edges) == 0:
                return
            kn.edge_flux_kernel(st, mesh, tables, params, rng_corr_a, out,
                                edges=edges)
            kn.edge_flux_kernel(st, mesh, tables, params, rng_corr_b, out,
                                edges=edges, side_mask=self._high_mask)

        def elem_rhs_base():
            out = self.buffers["elem_rhs_base"]
            out[:] = 0.0
            kn.element_flux_kernel(st, mesh, tables, params, rng_base, out)
            kn.rhs_kernel(st, mesh, tables, params, rng_base, out)

        def elem_rhs_correction():
            out = self.buffers["elem_rhs_correction"]
            out[:] = 0.0
            el = self._high_elements
            if len(el) == 0:
                return
            for rng in (rng_corr_a, rng_corr_b):
                kn.element_flux_kernel(st, mesh, tables, params, rng, out,
                                       elements=el)
                kn.rhs_kernel(st, mesh, tables, params, rng, out, elements=el)

        def edge_flux():
            out = self.buffers["edge_flux"]
            out[:] = 0.0
            kn.edge_flux_kernel(st, mesh, tables, params, rng_full, out)

        def elem_rhs():
            out = self.buffers["elem_rhs"]
            out[:] = 0.0
            kn.element_flux_kernel(st, mesh, tables, params, rng_full, out)
            kn.rhs_kernel(st, mesh, tables, params, rng_full, out)

        def rk_substep_additions():
            residual = self.buffers[self._buffer_names[0]].copy()
            for name in self._buffer_names[1:]:
                residual += self.buffers[name]
            st.c[:] = rk_substep_update(self.stage, self.c_n, st.c,
                                        residual, self.dt)
            st.t = (self.step_count + (0.5 if self.stage == 1 else 1.0)) * self.dt
            if not np.all(np.isfinite(st.c)):
                bad = np.flatnonzero(~np.isfinite(st.c).all(axis=(1, 2)))
                raise InvariantError(
                    f"non-finite coefficients after RK stage {self.stage} of "
                    f"step {self.step_count} (elements {bad[:5].tolist()})")

        def min_depth():
            self.clamp_count += kn.min_depth_kernel(st, mesh, tables, params)

        def solve_uH():
            kn.solve_auxiliary_kernel(st, mesh, tables, self._active_K)

        def bc_computation():
            kn.bc_kernel(st, mesh, tables, self.xi_hat)

        def indicator():
            decisions = indicator_kernel(st, mesh, tables, self.theta_refine,
                                         self.theta_coarsen, self.depth_scale)
            apply_order_change(st, self.orders, decisions)
            self._refresh_order_caches()
            self.high_fraction_log.append(self.orders.high_fraction)

        table = {
            "rk_substep_additions": rk_substep_additions,
            "min_depth": min_depth,
            "solve_uH": solve_uH,
            "bc_computation": bc_computation,
            "indicator": indicator,
        }
        if self.separated:
            table.update(edge_base=edge_base, edge_correction=edge_correction,
                         elem_rhs_base=elem_rhs_base,
                         elem_rhs_correction=elem_rhs_correction)
        else:
            table.update(edge_flux=edge_flux, elem_rhs=elem_rhs)
        return table

    # -- stepping -----------------------------------------------------------

    @property
    def flux_phase(self) -> list[str]:
        return list(self._buffer_names)

    @property
    def sequential_phase(self) -> list[str]:
        return ["rk_substep_additions", "min_depth", "solve_uH",
                "bc_computation"]

    def prepare(self) -> None:
        """Derives u and ghost traces from the initial coefficients."""
        self.kernels["solve_uH"]()
        self.kernels["bc_computation"]()

    def begin_substep(self, stage: int) -> None:
        self.stage = stage
        if stage == 1:
            np.copyto(self.c_n, self.state.c)
            self.clamp_count = 0

    def substep_names(self) -> list[str]:
        return self.flux_phase + self.sequential_phase

    def run_substep_inline(self, stage: int) -> None:
        self.begin_substep(stage)
        for name in self.substep_names():
            self.kernels[name]()

    def end_step(self) -> None:
        self.step_count += 1
        if self.dynamic:
            self.kernels["indicator"]()

    def advance_step(self) -> None:
        """One full SSP-RK2 step with inline (single-thread) execution."""
        self.run_substep_inline(1)
        self.run_substep_inline(2)
        self.end_step()

    def run(self, steps: int) -> None:
        self.prepare()
        for _ in range(steps):
            self.advance_step()

    def total_mass(self) -> float:
        return kn.total_mass(self.state, self.tables)
