"""Kernel correctness against direct quadrature and hand-computed cases."""

import numpy as np
import pytest

import oracles as oc
from helpers import make_setup, random_state
from swdg.adaptivity import correction_ranges, full_ranges
from swdg.errors import ConfigError, DepthError, InvariantError
from swdg.kernels import (IndexRange, PhysParams, State, bc_kernel,
                          boundary_ghost, compute_lambda, edge_flux_kernel,
                          element_flux_kernel, min_depth_kernel, rhs_kernel,
                          solve_auxiliary_kernel, total_mass)


def test_index_range_validation():
    with pytest.raises(ValueError):
        IndexRange(0, 3, 1, 3)
    with pytest.raises(ValueError):
        IndexRange(1, 11, 1, 3)
    rng = IndexRange(2, 6, 1, 3)
    assert rng.test_slice == slice(1, 6)
    assert np.array_equal(rng.trial_mask(6), [1, 1, 1, 0, 0, 0])


def test_phys_params_validation():
    with pytest.raises(ConfigError):
        PhysParams(g=-1.0)
    with pytest.raises(ConfigError):
        PhysParams(h_min=0.0)
    with pytest.raises(ConfigError):
        PhysParams(friction_law="cubic")


def test_element_flux_zero_state():
    mesh, tables = make_setup(2, 1)
    st = State.zeros(mesh, 3)
    out = st.new_residual()
    element_flux_kernel(st, mesh, tables, PhysParams(), full_ranges(1), out)
    assert np.abs(out).max() == 0.0


def test_element_flux_constant_test_row():
    mesh, tables = make_setup(2, 1, seed=4)
    st = random_state(mesh, tables, 7)
    out = st.new_residual()
    element_flux_kernel(st, mesh, tables, PhysParams(),
                        IndexRange(1, 1, 1, 3), out)
    # gradient of the constant test function vanishes
    assert np.abs(out[:, :, 0]).max() < 1e-14


@pytest.mark.parametrize("p", [1, 2])
def test_element_flux_matches_oracle(p):
    mesh, tables = make_setup(2, p, seed=1)
    params = PhysParams(g=1.0)
    st = random_state(mesh, tables, 5)
    for rng in (full_ranges(p),) + correction_ranges(p - 1, p):
        out = st.new_residual()
        element_flux_kernel(st, mesh, tables, params, rng, out)
        for e in range(mesh.num_elements):
            o = oc.oracle_element_flux(e, st, mesh, tables, params, rng)
            scale = max(1.0, np.abs(o).max())
            assert np.abs(out[e][:, rng.test_slice] - o).max() < 1e-11 * scale


def test_rhs_trivial_zero():
    mesh, tables = make_setup(2, 1)
    st = random_state(mesh, tables, 2)
    out = st.new_residual()
    rhs_kernel(st, mesh, tables, PhysParams(), full_ranges(1), out)
    assert np.abs(out).max() == 0.0


def test_rhs_linear_friction_constant_case():
    # order 0, u = (1, 0), H = 1, k = 1e-4: friction adds -1e-4 * u to the
    # U-row mean.
    mesh, tables = make_setup(2, 0, hb=0.5)
    st = State.zeros(mesh, 1)
    st.c[:, 0, 0] = tables.const_coeff(0.5)  # xi = 0.5, H = 1
    st.u[:, 0, 0] = tables.const_coeff(1.0)  # u = 1
    st.c[:, 1, 0] = tables.const_coeff(1.0)
    params = PhysParams(friction_law="linear", friction_coeff=1e-4)
    out = st.new_residual()
    rhs_kernel(st, mesh, tables, params, full_ranges(0), out)
    u_mean_rate = out[:, 1, 0] * tables.phi1
    assert np.abs(u_mean_rate + 1e-4).max() < 1e-15
    assert np.abs(out[:, 2, 0]).max() == 0.0


@pytest.mark.parametrize("law", ["linear", "quadratic"])
def test_rhs_matches_oracle(law):
    mesh, tables = make_setup(2, 1, seed=2)
    params = PhysParams(f_c=1e-5, friction_law=law,
                        friction_coeff=0.009 if law == "quadratic" else 1e-4,
                        body_force=(0.2, -0.1))
    st = random_state(mesh, tables, 9)
    for rng in (full_ranges(1),) + correction_ranges(0, 1):
        out = st.new_residual()
        rhs_kernel(st, mesh, tables, params, rng, out)
        for e in range(mesh.num_elements):
            o = oc.oracle_rhs(e, st, mesh, tables, params, rng)
            assert np.abs(out[e][:, rng.test_slice] - o).max() < 1e-12


def test_lambda_still_water():
    mesh, tables = make_setup(2, 0, hb=0.5)
    st = State.zeros(mesh, 1)
    st.c[:, 0, 0] = tables.const_coeff(0.5)  # H = 1
    bc_kernel(st, mesh, tables)
    lam = compute_lambda(st, mesh, tables, PhysParams(g=1.0))
    assert np.abs(lam - 1.0).max() < 1e-13


def test_lambda_componentwise_maxima():
    # u=(2,0), H=4 on one side; u=0, H=1 on the other; n=(1,0) -> 2 + 2.
    verts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    from swdg.mesh import connect_edges
    mesh = connect_edges([[0, 1, 2], [0, 2, 3]], verts)
    from swdg.basis import build_reference_basis, build_tensors
    tables = build_tensors(build_reference_basis(0), mesh)
    mesh.h_b = np.zeros((2, 1))
    st = State.zeros(mesh, 1)
    edge = mesh.interior_edges[0]
    eL, eR = mesh.edge_elems[edge]
    n = mesh.edge_normal[edge]
    # give the left element velocity 2n and depth 4; right still at depth 1
    st.c[eL, 0, 0] = tables.const_coeff(4.0)[eL]
    st.u[eL, 0, 0] = (2.0 * n[0]) * np.sqrt(mesh.areas[eL])
    st.u[eL, 1, 0] = (2.0 * n[1]) * np.sqrt(mesh.areas[eL])
    st.c[eR, 0, 0] = tables.const_coeff(1.0)[eR]
    bc_kernel(st, mesh, tables)
    lam = compute_lambda(st, mesh, tables, PhysParams(g=1.0),
                         edges=np.array([edge]))
    assert abs(lam[0] - 4.0) < 1e-13


def test_lambda_matches_oracle_random():
    mesh, tables = make_setup(3, 2, seed=3)
    params = PhysParams(g=1.0)
    st = random_state(mesh, tables, 21)
    lam = compute_lambda(st, mesh, tables, params)
    for ed in range(mesh.num_edges):
        ghost = None
        if mesh.edge_elems[ed, 1] < 0:
            slot = st.bnd_slot[ed]
            ghost = (st.ghost_c[slot], st.ghost_u[slot])
        ref = oc.oracle_lambda(ed, st, mesh, tables, params, ghost)
        assert abs(lam[ed] - ref) < 1e-14 * max(1.0, ref)


def test_lambda_requires_positive_depth():
    mesh, tables = make_setup(2, 0, hb=0.5)
    st = State.zeros(mesh, 1)
    st.c[:, 0, 0] = tables.const_coeff(-0.5)  # H = 0
    bc_kernel(st, mesh, tables)
    with pytest.raises(InvariantError):
        compute_lambda(st, mesh, tables, PhysParams())


def test_edge_flux_identical_states_consistency():
    # With the same constant state on both sides the penalty vanishes and
    # the mass-row flux reduces to q . n = 0 for still water.
    mesh, tables = make_setup(2, 1, hb=0.5)
    st = State.zeros(mesh, 3)
    st.c[:, 0, 0] = tables.const_coeff(1.0)
    bc_kernel(st, mesh, tables)
    out = st.new_residual()
    edge_flux_kernel(st, mesh, tables, PhysParams(), full_ranges(1), out)
    assert np.abs(out[:, 0, :]).max() < 1e-13


@pytest.mark.parametrize("p", [1, 2])
def test_edge_flux_matches_oracle(p):
    mesh, tables = make_setup(2, p, seed=8)
    params = PhysParams(g=1.0)
    st = random_state(mesh, tables, 13)
    for rng in (full_ranges(p),) + correction_ranges(p - 1, p):
        out = st.new_residual()
        edge_flux_kernel(st, mesh, tables, params, rng, out)
        acc = st.new_residual()
        qs = rng.test_slice
        for ed in range(mesh.num_edges):
            eL, eR = mesh.edge_elems[ed]
            ghost = None
            if eR < 0:
                slot = st.bnd_slot[ed]
                ghost = (st.ghost_c[slot], st.ghost_u[slot])
            acc[eL][:, qs] += oc.oracle_edge_flux(ed, st, mesh, tables,
                                                  params, rng, 0, ghost)
            if eR >= 0:
                acc[eR][:, qs] += oc.oracle_edge_flux(ed, st, mesh, tables,
                                                      params, rng, 1)
        scale = max(1.0, np.abs(acc).max())
        assert np.abs(out - acc).max() < 1e-11 * scale


def test_edge_flux_side_mask_restricts_test_rows():
    mesh, tables = make_setup(2, 1, seed=8)
    st = random_state(mesh, tables, 14)
    params = PhysParams()
    rng = IndexRange(2, 3, 1, 3)
    mask = np.zeros(mesh.num_elements, dtype=bool)
    mask[::2] = True
    out = st.new_residual()
    edge_flux_kernel(st, mesh, tables, params, rng, out, side_mask=mask)
    assert np.abs(out[~mask]).max() == 0.0
    assert np.abs(out[mask]).max() > 0.0


def test_land_ghost_reflects_normal_momentum():
    mesh, tables = make_setup(2, 0, hb=0.5)
    st = State.zeros(mesh, 1)
    st.c[:, 0, 0] = tables.const_coeff(1.0)
    edge = mesh.boundary_edges[0]
    eL = mesh.edge_elems[edge, 0]
    n = mesh.edge_normal[edge]
    # q = 3 n: reflection gives q+ = -3 n, so (q + q+) . n = 0
    st.c[eL, 1, 0] = 3.0 * n[0] * np.sqrt(mesh.areas[eL])
    st.c[eL, 2, 0] = 3.0 * n[1] * np.sqrt(mesh.areas[eL])
    gc, gu = boundary_ghost(edge, st, mesh, tables)
    q_plus = np.array([gc[1, 0], gc[2, 0]]) / np.sqrt(mesh.areas[eL])
    assert np.allclose(q_plus, -3.0 * n, atol=1e-13)
    assert abs(gc[0, 0] - st.c[eL, 0, 0]) < 1e-15


def test_land_ghost_keeps_tangential_momentum():
    mesh, tables = make_setup(2, 0, hb=0.5)
    st = State.zeros(mesh, 1)
    st.c[:, 0, 0] = tables.const_coeff(1.0)
    edge = mesh.boundary_edges[1]
    eL = mesh.edge_elems[edge, 0]
    n = mesh.edge_normal[edge]
    t = np.array([-n[1], n[0]])
    st.c[eL, 1, 0] = 2.0 * t[0]
    st.c[eL, 2, 0] = 2.0 * t[1]
    gc, _ = boundary_ghost(edge, st, mesh, tables)
    assert abs(gc[1, 0] - st.c[eL, 1, 0]) < 1e-14
    assert abs(gc[2, 0] - st.c[eL, 2, 0]) < 1e-14


def test_open_sea_ghost():
    mesh, tables = make_setup(
        2, 0, hb=0.5)
    # retag one boundary edge as open sea
    edge = mesh.boundary_edges[0]
    mesh.edge_tag[edge] = 2
    st = State.zeros(mesh, 1)
    st.c[:, 0, 0] = tables.const_coeff(1.0)
    eL = mesh.edge_elems[edge, 0]
    st.c[eL, 1, 0] = 0.7
    gc, gu = boundary_ghost(edge, st, mesh, tables, xi_hat=lambda t: 2.0)
    xi_plus = gc[0, 0] * tables.phi1[eL]
    assert abs(xi_plus - 2.0) < 1e-13
    assert abs(gc[1, 0] - 0.7) < 1e-15


def test_open_sea_requires_forcing():
    mesh, tables = make_setup(2, 0)
    mesh.edge_tag[mesh.boundary_edges[0]] = 2
    st = State.zeros(mesh, 1)
    with pytest.raises(ConfigError):
        bc_kernel(st, mesh, tables)


def test_solve_auxiliary_constant_case():
    # xi = 0, h_b = 2 constant, q = (2, 0) constant -> u = (1, 0).
    mesh, tables = make_setup(2, 1, hb=2.0)
    st = State.zeros(mesh, 3)
    st.c[:, 1, 0] = tables.const_coeff(2.0)
    solve_auxiliary_kernel(st, mesh, tables, np.full(mesh.num_elements, 3))
    u_mean = st.u[:, 0, 0] * tables.phi1
    assert np.abs(u_mean - 1.0).max() < 1e-13
    assert np.abs(st.u[:, :, 1:]).max() < 1e-13


def test_solve_auxiliary_p0_scalar():
    mesh, tables = make_setup(2, 0, hb=0.5)
    st = State.zeros(mesh, 1)
    st.c[:, 0, 0] = tables.const_coeff(0.5)   # H = 1
    st.c[:, 1, 0] = tables.const_coeff(3.0)
    solve_auxiliary_kernel(st, mesh, tables, np.full(mesh.num_elements, 1))
    u_mean = st.u[:, 0, 0] * tables.phi1
    assert np.abs(u_mean - 3.0).max() < 1e-13


def test_solve_auxiliary_residual_and_truncation():
    mesh, tables = make_setup(2, 2, seed=5)
    rng = np.random.default_rng(17)
    K = 6
    st = State.zeros(mesh, K)
    st.c[:, 0, :] = rng.uniform(-0.05, 0.05, (mesh.num_elements, K))
    st.c[:, 0, 0] += tables.const_coeff(1.0)
    st.c[:, 1:, :] = rng.uniform(-0.1, 0.1, (mesh.num_elements, 2, K))
    solve_auxiliary_kernel(st, mesh, tables, np.full(mesh.num_elements, K))

    # residual check: rebuild H matrix independently and verify H u = q
    from swdg.kernels import _truncation_mask
    mask = _truncation_mask(K) * tables.mass3[:K, :K, :K]
    for e in range(0, mesh.num_elements, 3):
        hmat = tables.scale[e] * (
            np.einsum("n,nij->ij", st.c[e, 0], mask)
            + np.einsum("n,nij->ij", mesh.h_b[e], tables.mass3[:K, :K, :K]))
        for comp in (0, 1):
            rhs = st.c[e, comp + 1]
            res = np.linalg.norm(hmat @ st.u[e, comp] - rhs)
            assert res <= 1e-12 * max(np.linalg.norm(rhs), 1e-30)

    # first K(1) equations do not involve xi modes above K(1): zeroing them
    # leaves the low-order block of the matrix unchanged
    st2 = State.zeros(mesh, K)
    st2.c[:] = st.c
    st2.c[:, 0, 3:] = 0.0
    e = 0
    h_full = np.einsum("n,nij->ij", st.c[e, 0], mask)
    h_trunc = np.einsum("n,nij->ij", st2.c[e, 0], mask)
    assert np.abs(h_full[:3, :3] - h_trunc[:3, :3]).max() == 0.0


def test_solve_auxiliary_depth_error():
    mesh, tables = make_setup(2, 0, hb=0.5)
    st = State.zeros(mesh, 1)
    st.c[:, 0, 0] = tables.const_coeff(-1.0)  # H = -0.5
    with pytest.raises(DepthError):
        solve_auxiliary_kernel(st, mesh, tables, np.full(mesh.num_elements, 1))


def test_min_depth_no_clamp():
    mesh, tables = make_setup(2, 1, hb=0.5)
    st = State.zeros(mesh, 3)
    params = PhysParams(h_min=0.01)
    before = st.c.copy()
    assert min_depth_kernel(st, mesh, tables, params) == 0
    assert np.array_equal(st.c, before)


def test_min_depth_forced_clamp():
    mesh, tables = make_setup(2, 1, hb=0.5)
    st = State.zeros(mesh, 3)
    st.c[0, 0, 0] = tables.const_coeff(-0.6)[0]   # H = -0.1 in element 0
    st.c[0, 1, 1] = 0.3
    params = PhysParams(h_min=1e-3)
    assert min_depth_kernel(st, mesh, tables, params) == 1
    H_mean = (st.c[0, 0, 0] + mesh.h_b[0, 0]) * tables.phi1[0]
    assert abs(H_mean - 1e-3) < 1e-15
    assert np.abs(st.c[0, :, 1:]).max() == 0.0
    # other elements untouched
    assert np.abs(st.c[1:, :, 1:]).max() == 0.0


def test_total_mass():
    mesh, tables = make_setup(3, 1, hb=0.5)
    st = State.zeros(mesh, 3)
    assert total_mass(st, tables) == 0.0
    st.c[:, 0, 0] = tables.const_coeff(1.0)
    assert abs(total_mass(st, tables) - 25.0) < 1e-12


def test_state_finite_check():
    mesh, tables = make_setup(2, 0)
    st = State.zeros(mesh, 1)
    st.c[0, 0, 0] = np.nan
    with pytest.raises(InvariantError):
        st.check_finite("in test")
