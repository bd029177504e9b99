"""Runge-Kutta update, separation identity, and time-loop invariants."""

import numpy as np
import pytest

from helpers import make_setup
from swdg.adaptivity import OrderField
from swdg.basis import project
from swdg.errors import ConfigError, InvariantError
from swdg.kernels import PhysParams
from swdg.timeloop import Simulation, TimeLoopConfig, rk_substep_update


def test_time_loop_config_validation():
    with pytest.raises(ConfigError):
        TimeLoopConfig(dt=0.0, steps=10)
    with pytest.raises(ConfigError):
        TimeLoopConfig(dt=1e-3, steps=0)


def test_rk_scalar_decay_step():
    # dc/dt = -c, dt = 0.1, c0 = 1: the two-stage scheme reproduces the
    # two-term Taylor expansion of exp(-0.1): 1 - 0.1 + 0.005 = 0.905.
    c0 = np.array([1.0])
    c1 = rk_substep_update(1, c0, c0, -c0, 0.1)
    assert c1[0] == pytest.approx(0.9, abs=1e-15)
    c_new = rk_substep_update(2, c0, c1, -c1, 0.1)
    assert c_new[0] == pytest.approx(0.905, abs=1e-15)


def test_rk_stage1_is_forward_euler():
    rng = np.random.default_rng(0)
    c0 = rng.normal(size=(4, 3, 6))
    r = rng.normal(size=c0.shape)
    assert np.array_equal(rk_substep_update(1, c0, c0, r, 0.01), c0 + 0.01 * r)


def test_rk_invalid_stage():
    c = np.zeros(1)
    with pytest.raises(ConfigError):
        rk_substep_update(3, c, c, c, 0.1)


def _smooth_initial(mesh, tables, K_active=None):
    c = np.zeros((mesh.num_elements, 3, tables.K))
    c[:, 0] = project(tables, mesh,
                      lambda x, y: 1.0 + 0.05 * np.sin(0.9 * x) * np.cos(0.7 * y))
    c[:, 1] = project(tables, mesh, lambda x, y: 0.02 * np.cos(0.5 * x))
    c[:, 2] = project(tables, mesh, lambda x, y: -0.01 * np.sin(0.4 * y))
    return c


def _make_sim(mesh, tables, b, p, active, separated, dynamic=False, dt=1e-4):
    orders = OrderField(b=b, p=p, active=active.copy())
    params = PhysParams(g=1.0, f_c=1e-5, friction_law="linear",
                        friction_coeff=1e-4)
    return Simulation(mesh, tables, params, orders, dt=dt,
                      separated=separated, dynamic=dynamic)


@pytest.mark.parametrize("b,p", [(0, 1), (1, 2)])
def test_separation_identity_all_high(b, p):
    """With every element at the full order, base + correction reproduces the
    unseparated order-p update to rounding error."""
    mesh, tables = make_setup(4, p, seed=2)
    active = np.full(mesh.num_elements, p, dtype=np.int64)
    c0 = _smooth_initial(mesh, tables)

    sims = [_make_sim(mesh, tables, b, p, active, separated)
            for separated in (True, False)]
    for sim in sims:
        sim.state.c[:] = c0
        sim.prepare()
        for _ in range(3):
            sim.advance_step()
    scale = np.abs(sims[0].state.c).max()
    diff = np.abs(sims[0].state.c - sims[1].state.c).max()
    assert diff < 1e-13 * scale


def test_separated_partial_orders_run_and_conserve_mass():
    mesh, tables = make_setup(4, 2, seed=3)
    active = np.full(mesh.num_elements, 1, dtype=np.int64)
    active[::4] = 2
    sim = _make_sim(mesh, tables, 1, 2, active, separated=True)
    sim.state.c[:] = _smooth_initial(mesh, tables)
    # low-order elements must not carry high modes
    sim.state.c[active == 1, :, 3:] = 0.0
    m0 = None
    sim.prepare()
    m0 = sim.total_mass()
    for _ in range(5):
        sim.advance_step()
    assert abs(sim.total_mass() - m0) < 1e-12 * abs(m0)
    assert sim.clamp_count == 0
    # order invariant: low elements still have zero high modes
    assert np.abs(sim.state.c[active == 1][:, :, 3:]).max() == 0.0


def test_still_water_is_steady():
    mesh, tables = make_setup(3, 1, seed=1)
    active = np.full(mesh.num_elements, 1, dtype=np.int64)
    sim = _make_sim(mesh, tables, 0, 1, active, separated=True, dt=1e-3)
    sim.state.c[:, 0, 0] = tables.const_coeff(1.0)
    c0 = sim.state.c.copy()
    sim.run(20)
    assert np.abs(sim.state.c - c0).max() < 1e-14
    assert sim.step_count == 20
    assert sim.state.t == pytest.approx(0.02)


def test_deterministic_reruns():
    mesh, tables = make_setup(3, 2, seed=4)
    active = np.full(mesh.num_elements, 1, dtype=np.int64)
    active[::3] = 2
    results = []
    for _ in range(2):
        sim = _make_sim(mesh, tables, 1, 2, active, separated=True)
        sim.state.c[:] = _smooth_initial(mesh, tables)
        sim.state.c[active == 1, :, 3:] = 0.0
        sim.run(4)
        results.append(sim.state.c.copy())
    assert np.array_equal(results[0], results[1])


def test_unseparated_rejects_mixed_orders():
    mesh, tables = make_setup(2, 2)
    active = np.full(mesh.num_elements, 1, dtype=np.int64)
    active[0] = 2
    with pytest.raises(ConfigError):
        _make_sim(mesh, tables, 1, 2, active, separated=False)


def test_dynamic_runs_indicator_once_per_step():
    mesh, tables = make_setup(3, 1, seed=5)
    active = np.zeros(mesh.num_elements, dtype=np.int64)
    sim = _make_sim(mesh, tables, 0, 1, active, separated=True, dynamic=True)
    sim.state.c[:, 0, 0] = tables.const_coeff(1.0)
    sim.state.c[4, 0, 0] = tables.const_coeff(1.8)[4]
    sim.run(3)
    assert len(sim.high_fraction_log) == 3
    assert sim.high_fraction_log[0] > 0.0   # the jump triggers refinement


def test_nonfinite_residual_detected():
    mesh, tables = make_setup(2, 1)
    active = np.full(mesh.num_elements, 1, dtype=np.int64)
    sim = _make_sim(mesh, tables, 0, 1, active, separated=True)
    sim.state.c[:, 0, 0] = tables.const_coeff(1.0)
    sim.prepare()
    sim.buffers["edge_base"][0, 0, 0] = np.nan

    sim.begin_substep(1)
    with pytest.raises(InvariantError):
        sim.kernels["rk_substep_additions"]()
