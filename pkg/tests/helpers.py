"""Shared fixtures-in-code for the test suite."""

from __future__ import annotations

import numpy as np

from swdg.basis import build_reference_basis, build_tensors, k_of_p
from swdg.kernels import PhysParams, State, bc_kernel, solve_auxiliary_kernel
from swdg.mesh import generate_perturbed_uniform_mesh

BATHYMETRY = 0.5


def make_setup(nx, p, seed=0, perturbation=0.2, hb=BATHYMETRY):
    mesh = generate_perturbed_uniform_mesh(nx, perturbation=perturbation,
                                           seed=seed)
    tables = build_tensors(build_reference_basis(p), mesh)
    mesh.h_b = np.zeros((mesh.num_elements, tables.K))
    mesh.h_b[:, 0] = tables.const_coeff(hb)
    return mesh, tables


def random_state(mesh, tables, seed, params=None, amp=0.1):
    """Bounded random state with consistent velocities and ghost traces."""
    params = params or PhysParams()
    rng = np.random.default_rng(seed)
    K = tables.K
    st = State.zeros(mesh, K)
    st.c[:, 0, :] = rng.uniform(-amp, amp, (mesh.num_elements, K))
    st.c[:, 0, 0] += tables.const_coeff(1.0)
    st.c[:, 1:, :] = rng.uniform(-2 * amp, 2 * amp, (mesh.num_elements, 2, K))
    solve_auxiliary_kernel(st, mesh, tables, np.full(mesh.num_elements, K))
    bc_kernel(st, mesh, tables)
    return st


def k_of(p):
    return k_of_p(p)
