"""Computational kernels of the semi-discrete shallow-water scheme.

Every kernel is parametrized by 1-based test/trial index ranges so the same
code serves the unseparated scheme, the all-element base computation, and the
higher-order correction applied to flagged elements only.  For product
nonlinearities (Uu, g xi (H + h_b)/2, ...) the trial index is the first
coefficient factor of the product; the remaining factor is always expanded
over the full allocated range.  Base and correction contributions therefore
tile the full computation as a pure index partition.

Sign convention: residual buffers accumulate L(c) with dc/dt = L(c), i.e.
element terms enter with +, edge flux terms with -, right-hand-side terms
with +.  The basis is orthonormal per element, so no mass-matrix solve is
needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisTables
from .errors import ConfigError, DepthError, InvariantError
from .mesh import LAND, OPEN_SEA, Mesh

MAX_K = 10


@dataclass(frozen=True)
class IndexRange:
    """1-based inclusive test range [q_lo, q_hi] and trial range [i_lo, i_hi]."""

    q_lo: int
    q_hi: int
    i_lo: int
    i_hi: int

    def __post_init__(self):
        for lo, hi in ((self.q_lo, self.q_hi), (self.i_lo, self.i_hi)):
            if not (1 <= lo <= hi <= MAX_K):
                raise ValueError(f"invalid index range [{lo}, {hi}]")

    @property
    def test_slice(self) -> slice:
        return slice(self.q_lo - 1, self.q_hi)

    def trial_slice(self, K: int) -> slice:
        return slice(self.i_lo - 1, min(self.i_hi, K))

    def trial_mask(self, K: int) -> np.ndarray:
        m = np.zeros(K)
        m[self.trial_slice(K)] = 1.0
        return m

    @property
    def includes_constant_trial(self) -> bool:
        return self.i_lo == 1


@dataclass
class PhysParams:
    """Physical constants and the bottom friction law.

    linear law:    friction term = -k * H * u_const
    quadratic law: friction term = -k * |u_const| * u
    where u_const is the piecewise-constant part of the velocity.
    """

    g: float = 1.0
    f_c: float = 0.0
    friction_law: str = "linear"
    friction_coeff: float = 0.0
    body_force: tuple[float, float] = (0.0, 0.0)
    h_min: float = 1e-3

    def __post_init__(self):
        if self.g <= 0.0:
            raise ConfigError("g must be positive")
        if self.h_min <= 0.0:
            raise ConfigError("h_min must be positive")
        if self.friction_law not in ("linear", "quadratic"):
            raise ConfigError(f"unknown friction law {self.friction_law!r}")


@dataclass
class State:
    """Modal coefficients for c = (xi, U, V) and u = (u, v), plus ghost
    traces on boundary edges.  Arrays are allocated at the run's K(p_max);
    coefficients above an element's active order are kept exactly zero."""

    c: np.ndarray          # (nelem, 3, K)
    u: np.ndarray          # (nelem, 2, K)
    t: float
    ghost_c: np.ndarray    # (nbnd, 3, K)
    ghost_u: np.ndarray    # (nbnd, 2, K)
    bnd_slot: np.ndarray   # (nedge,) edge id -> boundary slot or -1

    @classmethod
    def zeros(cls, mesh: Mesh, K: int) -> "State":
        nelem = mesh.num_elements
        bnd = mesh.boundary_edges
        slot = np.full(mesh.num_edges, -1, dtype=np.int64)
        slot[bnd] = np.arange(len(bnd))
        return cls(
            c=np.zeros((nelem, 3, K)), u=np.zeros((nelem, 2, K)), t=0.0,
            ghost_c=np.zeros((len(bnd), 3, K)), ghost_u=np.zeros((len(bnd), 2, K)),
            bnd_slot=slot,
        )

    @property
    def K(self) -> int:
        return self.c.shape[2]

    def new_residual(self) -> np.ndarray:
        return np.zeros_like(self.c)

    def check_finite(self, where: str = "") -> None:
        if not np.all(np.isfinite(self.c)) or not np.all(np.isfinite(self.u)):
            bad = np.flatnonzero(~np.isfinite(self.c).all(axis=(1, 2)))
            raise InvariantError(
                f"non-finite coefficients {where} (elements {bad[:5].tolist()})")


def _tri(P: np.ndarray, T: np.ndarray) -> np.ndarray:
    """einsum('eij,qij->eq') as a matmul; P (m, n1, n2), T (nq, n1, n2)."""
    m, n1, n2 = P.shape
    return P.reshape(m, n1 * n2) @ T.reshape(T.shape[0], n1 * n2).T


# ---------------------------------------------------------------------------
# element interior flux

def element_flux_kernel(state: State, mesh: Mesh, tables: BasisTables,
                        params: PhysParams, rng: IndexRange, out: np.ndarray,
                        elements: np.ndarray | None = None) -> None:
    """Adds (A(c, u), grad phi_q) over the element interiors."""
    el = np.arange(mesh.num_elements) if elements is None else np.asarray(elements)
    if len(el) == 0:
        return
    K = state.K
    qs = rng.test_slice
    ts = rng.trial_slice(K)

    cxi = state.c[el, 0]
    cU = state.c[el, 1]
    cV = state.c[el, 2]
    u1 = state.u[el, 0]
    u2 = state.u[el, 1]
    hb = mesh.h_b[el]
    cxi_t, cU_t, cV_t = cxi[:, ts], cU[:, ts], cV[:, ts]

    gx0 = tables.grad_x[el, 0][:, None]
    gx1 = tables.grad_x[el, 1][:, None]
    gy0 = tables.grad_y[el, 0][:, None]
    gy1 = tables.grad_y[el, 1][:, None]
    s = tables.scale[el][:, None]

    dx2, dy2 = tables.dx2[qs, ts], tables.dy2[qs, ts]
    sx3, sy3 = tables.sx3[qs, ts], tables.sy3[qs, ts]

    # Mass row: A = (U, V), bilinear in the momentum coefficients.
    r0 = (gx0 * (cU_t @ dx2.T) + gx1 * (cU_t @ dy2.T)
          + gy0 * (cV_t @ dx2.T) + gy1 * (cV_t @ dy2.T))

    # Momentum rows; pressure part g/2 * xi (xi + 2 h_b) = g xi (H + h_b)/2.
    press = (0.5 * params.g) * cxi_t[:, :, None] * (cxi + 2.0 * hb)[:, None, :]
    a11 = cU_t[:, :, None] * u1[:, None, :] + press
    a12 = cU_t[:, :, None] * u2[:, None, :]
    a21 = cV_t[:, :, None] * u1[:, None, :]
    a22 = cV_t[:, :, None] * u2[:, None, :] + press

    r1 = s * (gx0 * _tri(a11, sx3) + gx1 * _tri(a11, sy3)
              + gy0 * _tri(a12, sx3) + gy1 * _tri(a12, sy3))
    r2 = s * (gx0 * _tri(a21, sx3) + gx1 * _tri(a21, sy3)
              + gy0 * _tri(a22, sx3) + gy1 * _tri(a22, sy3))

    out[el, 0, qs] += r0
    out[el, 1, qs] += r1
    out[el, 2, qs] += r2


# ---------------------------------------------------------------------------
# right-hand side

def rhs_kernel(state: State, mesh: Mesh, tables: BasisTables,
               params: PhysParams, rng: IndexRange, out: np.ndarray,
               elements: np.ndarray | None = None) -> None:
    """Adds (r, phi_q): bottom friction (constant-part velocity rule),
    Coriolis coupling, bathymetry gradient source, and body force."""
    el = np.arange(mesh.num_elements) if elements is None else np.asarray(elements)
    if len(el) == 0:
        return
    K = state.K
    qs = rng.test_slice
    tm = rng.trial_mask(K)
    tm_q = tm[qs]

    cxi = state.c[el, 0]
    cU = state.c[el, 1]
    cV = state.c[el, 2]
    hb = mesh.h_b[el]
    u_const = state.u[el, :, 0] * tables.phi1[el][:, None]   # (m, 2)

    r1 = np.zeros((len(el), qs.stop - qs.start))
    r2 = np.zeros_like(r1)

    k = params.friction_coeff
    if k != 0.0:
        if params.friction_law == "linear":
            # -k * H * u_const; trial index on the H expansion.
            H = (cxi + hb)[:, qs] * tm_q
            r1 -= k * u_const[:, 0:1] * H
            r2 -= k * u_const[:, 1:2] * H
        else:
            # -k * |u_const| * u; trial index on the u expansion.
            umag = np.hypot(u_const[:, 0], u_const[:, 1])[:, None]
            r1 -= k * umag * state.u[el, 0][:, qs] * tm_q
            r2 -= k * umag * state.u[el, 1][:, qs] * tm_q

    if params.f_c != 0.0:
        r1 += params.f_c * cV[:, qs] * tm_q
        r2 -= params.f_c * cU[:, qs] * tm_q

    # Bathymetry gradient source g xi grad h_b (zero for flat bathymetry).
    if np.any(mesh.h_b[:, 1:] != 0.0):
        s = tables.scale[el][:, None]
        gx0 = tables.grad_x[el, 0][:, None]
        gx1 = tables.grad_x[el, 1][:, None]
        gy0 = tables.grad_y[el, 0][:, None]
        gy1 = tables.grad_y[el, 1][:, None]
        cxi_m = cxi * tm
        # int phi_q phi_i dphi_n/dx^hat = sx3[n, q, i]
        gbx = np.einsum("en,nqi->eqi", hb, tables.sx3[:, qs, :], optimize=True)
        gby = np.einsum("en,nqi->eqi", hb, tables.sy3[:, qs, :], optimize=True)
        px = gx0[:, :, None] * gbx + gx1[:, :, None] * gby
        py = gy0[:, :, None] * gbx + gy1[:, :, None] * gby
        r1 += params.g * s * np.einsum("eqi,ei->eq", px, cxi_m, optimize=True)
        r2 += params.g * s * np.einsum("eqi,ei->eq", py, cxi_m, optimize=True)

    # Constant body force, carried by the base part only.
    fx, fy = params.body_force
    if (fx != 0.0 or fy != 0.0) and rng.includes_constant_trial and rng.q_lo == 1:
        r1[:, 0] += fx * tables.sqrt_area[el]
        r2[:, 0] += fy * tables.sqrt_area[el]

    out[el, 1, qs] += r1
    out[el, 2, qs] += r2


# ---------------------------------------------------------------------------
# edge flux

def _const_fields(state: State, mesh: Mesh, tables: BasisTables):
    """Piecewise-constant velocity and depth per element and per ghost slot."""
    u_c = state.u[:, :, 0] * tables.phi1[:, None]
    h_c = (state.c[:, 0, 0] + mesh.h_b[:, 0]) * tables.phi1
    eL = mesh.edge_elems[mesh.boundary_edges, 0]
    gu_c = state.ghost_u[:, :, 0] * tables.phi1[eL][:, None]
    gh_c = (state.ghost_c[:, 0, 0] + mesh.h_b[eL, 0]) * tables.phi1[eL]
    return u_c, h_c, gu_c, gh_c


def compute_lambda(state: State, mesh: Mesh, tables: BasisTables,
                   params: PhysParams,
                   edges: np.ndarray | None = None) -> np.ndarray:
    """Lax-Friedrichs wave speed bound per edge, from constant solution parts
    only; at boundary edges the ghost state stands in for the neighbor."""
    ed = np.arange(mesh.num_edges) if edges is None else np.asarray(edges)
    u_c, h_c, gu_c, gh_c = _const_fields(state, mesh, tables)
    eL = mesh.edge_elems[ed, 0]
    eR = mesh.edge_elems[ed, 1]
    interior = eR >= 0
    uL = u_c[eL]
    hL = h_c[eL]
    uR = np.where(interior[:, None], u_c[np.maximum(eR, 0)], 0.0)
    hR = np.where(interior, h_c[np.maximum(eR, 0)], 1.0)
    slot = state.bnd_slot[ed]
    bsel = ~interior
    if np.any(bsel):
        uR[bsel] = gu_c[slot[bsel]]
        hR[bsel] = gh_c[slot[bsel]]
    if np.any(hL <= 0.0) or np.any(hR <= 0.0):
        bad = ed[(hL <= 0.0) | (hR <= 0.0)]
        raise InvariantError(f"non-positive depth at edges {bad[:5].tolist()}; "
                             "min-depth control must run first")
    n = mesh.edge_normal[ed]
    un_L = np.abs(uL[:, 0] * n[:, 0] + uL[:, 1] * n[:, 1])
    un_R = np.abs(uR[:, 0] * n[:, 0] + uR[:, 1] * n[:, 1])
    return (np.maximum(un_L, un_R)
            + np.maximum(np.sqrt(params.g * hL), np.sqrt(params.g * hR)))


def _edge_products(n_sign, nx, ny, g_half, cxi_t, cU_t, cV_t, cxi, hb, u1, u2):
    """Product tensors of A(c,u)·n for the momentum rows; first factors
    restricted to the trial range.  n_sign flips the normal for the
    right-side test functions."""
    press = g_half * cxi_t[:, :, None] * (cxi + 2.0 * hb)[:, None, :]
    nxs = (n_sign * nx)[:, None, None]
    nys = (n_sign * ny)[:, None, None]
    p1 = nxs * (cU_t[:, :, None] * u1[:, None, :] + press) \
        + nys * (cU_t[:, :, None] * u2[:, None, :])
    p2 = nxs * (cV_t[:, :, None] * u1[:, None, :]) \
        + nys * (cV_t[:, :, None] * u2[:, None, :] + press)
    return p1, p2


def _side_contribution(lam, length, s_test,
                       own, nbr, ts, g_half, nx, ny, n_sign,
                       t3_own, t2_own, t3_nbr, t2_nbr, s_own, s_nbr):
    """Flux moments < A_hat, phi_q > for one test side of an edge group.

    own/nbr are (cxi, cU, cV, u1, u2, hb) field tuples for the test side's
    element and its neighbor (or ghost); t*_own/t*_nbr the matching trace
    tensors, already sliced to the test rows and the trial range ``ts``.
    """
    (cxiO, cUO, cVO, u1O, u2O, hbO) = own
    (cxiN, cUN, cVN, u1N, u2N, hbN) = nbr
    cxiO_t, cUO_t, cVO_t = cxiO[:, ts], cUO[:, ts], cVO[:, ts]
    cxiN_t, cUN_t, cVN_t = cxiN[:, ts], cUN[:, ts], cVN[:, ts]

    sO = s_own[:, None]
    sN = s_nbr[:, None]

    # Mass row (linear in momentum coefficients).
    linO = (n_sign * nx)[:, None] * cUO_t + (n_sign * ny)[:, None] * cVO_t
    linN = (n_sign * nx)[:, None] * cUN_t + (n_sign * ny)[:, None] * cVN_t
    m0 = sO * (linO @ t2_own.T) + sN * (linN @ t2_nbr.T)

    # Momentum rows (product nonlinearities).
    p1O, p2O = _edge_products(n_sign, nx, ny, g_half, cxiO_t, cUO_t, cVO_t,
                              cxiO, hbO, u1O, u2O)
    p1N, p2N = _edge_products(n_sign, nx, ny, g_half, cxiN_t, cUN_t, cVN_t,
                              cxiN, hbN, u1N, u2N)
    m1 = sO ** 2 * _tri(p1O, t3_own) + sN ** 2 * _tri(p1N, t3_nbr)
    m2 = sO ** 2 * _tri(p2O, t3_own) + sN ** 2 * _tri(p2N, t3_nbr)

    # Penalty lambda (c - c+), trial-truncated like any linear term.
    lamc = lam[:, None]
    pen0 = lamc * (sO * (cxiO_t @ t2_own.T) - sN * (cxiN_t @ t2_nbr.T))
    pen1 = lamc * (sO * (cUO_t @ t2_own.T) - sN * (cUN_t @ t2_nbr.T))
    pen2 = lamc * (sO * (cVO_t @ t2_own.T) - sN * (cVN_t @ t2_nbr.T))

    fac = (0.5 * length * s_test)[:, None]
    return (fac * (m0 + pen0), fac * (m1 + pen1), fac * (m2 + pen2))


def edge_flux_kernel(state: State, mesh: Mesh, tables: BasisTables,
                     params: PhysParams, rng: IndexRange, out: np.ndarray,
                     edges: np.ndarray | None = None,
                     side_mask: np.ndarray | None = None) -> None:
    """Adds -< A_hat, phi_q > for both sides of each edge, where A_hat is the
    Lax-Friedrichs flux.  ``side_mask`` (bool per element) restricts which
    test sides receive contributions; trial truncation follows ``rng``.
    """
    K = state.K
    qs = rng.test_slice
    ts = rng.trial_slice(K)
    g_half = 0.5 * params.g

    in_subset = None
    if edges is not None:
        in_subset = np.zeros(mesh.num_edges, dtype=bool)
        in_subset[edges] = True

    u_c, h_c, gu_c, gh_c = _const_fields(state, mesh, tables)

    def fields(el):
        return (state.c[el, 0], state.c[el, 1], state.c[el, 2],
                state.u[el, 0], state.u[el, 1], mesh.h_b[el])

    for (la, lb), grp in tables.interior_groups.items():
        g_ids = grp if in_subset is None else grp[in_subset[grp]]
        if len(g_ids) == 0:
            continue
        eL = mesh.edge_elems[g_ids, 0]
        eR = mesh.edge_elems[g_ids, 1]
        nx, ny = mesh.edge_normal[g_ids, 0], mesh.edge_normal[g_ids, 1]
        length = mesh.edge_length[g_ids]
        sL, sR = tables.scale[eL], tables.scale[eR]

        uL, uR = u_c[eL], u_c[eR]
        hL, hR = h_c[eL], h_c[eR]
        if np.any(hL <= 0.0) or np.any(hR <= 0.0):
            raise InvariantError("non-positive depth at edge flux evaluation")
        un = np.maximum(np.abs(uL[:, 0] * nx + uL[:, 1] * ny),
                        np.abs(uR[:, 0] * nx + uR[:, 1] * ny))
        lam = un + np.maximum(np.sqrt(params.g * hL), np.sqrt(params.g * hR))

        fL, fR = fields(eL), fields(eR)

        left_on = None if side_mask is None else side_mask[eL]
        right_on = None if side_mask is None else side_mask[eR]

        if left_on is None or np.any(left_on):
            r0, r1, r2 = _side_contribution(
                lam, length, sL, fL, fR, ts, g_half, nx, ny, 1.0,
                tables.ee3[la][qs, ts], tables.ee2[la][qs, ts],
                tables.x3[la, lb][qs, ts], tables.x2[la, lb][qs, ts], sL, sR)
            if left_on is not None:
                r0, r1, r2 = r0 * left_on[:, None], r1 * left_on[:, None], r2 * left_on[:, None]
            out[eL, 0, qs] -= r0
            out[eL, 1, qs] -= r1
            out[eL, 2, qs] -= r2

        if right_on is None or np.any(right_on):
            r0, r1, r2 = _side_contribution(
                lam, length, sR, fR, fL, ts, g_half, nx, ny, -1.0,
                tables.ee3[lb][qs, ts], tables.ee2[lb][qs, ts],
                tables.x3[lb, la][qs, ts], tables.x2[lb, la][qs, ts], sR, sL)
            if right_on is not None:
                r0, r1, r2 = r0 * right_on[:, None], r1 * right_on[:, None], r2 * right_on[:, None]
            out[eR, 0, qs] -= r0
            out[eR, 1, qs] -= r1
            out[eR, 2, qs] -= r2

    for la, grp in tables.boundary_groups.items():
        g_ids = grp if in_subset is None else grp[in_subset[grp]]
        if len(g_ids) == 0:
            continue
        eL = mesh.edge_elems[g_ids, 0]
        slot = state.bnd_slot[g_ids]
        nx, ny = mesh.edge_normal[g_ids, 0], mesh.edge_normal[g_ids, 1]
        length = mesh.edge_length[g_ids]
        sL = tables.scale[eL]

        uL, uG = u_c[eL], gu_c[slot]
        hL, hG = h_c[eL], gh_c[slot]
        if np.any(hL <= 0.0) or np.any(hG <= 0.0):
            raise InvariantError("non-positive depth at boundary flux evaluation")
        un = np.maximum(np.abs(uL[:, 0] * nx + uL[:, 1] * ny),
                        np.abs(uG[:, 0] * nx + uG[:, 1] * ny))
        lam = un + np.maximum(np.sqrt(params.g * hL), np.sqrt(params.g * hG))

        fL = fields(eL)
        fG = (state.ghost_c[slot, 0], state.ghost_c[slot, 1],
              state.ghost_c[slot, 2], state.ghost_u[slot, 0],
              state.ghost_u[slot, 1], mesh.h_b[eL])

        left_on = None if side_mask is None else side_mask[eL]
        if left_on is not None and not np.any(left_on):
            continue
        # Ghost traces share the interior element's parametrization and scale.
        r0, r1, r2 = _side_contribution(
            lam, length, sL, fL, fG, ts, g_half, nx, ny, 1.0,
            tables.ee3[la][qs, ts], tables.ee2[la][qs, ts],
            tables.ee3[la][qs, ts], tables.ee2[la][qs, ts], sL, sL)
        if left_on is not None:
            r0, r1, r2 = r0 * left_on[:, None], r1 * left_on[:, None], r2 * left_on[:, None]
        out[eL, 0, qs] -= r0
        out[eL, 1, qs] -= r1
        out[eL, 2, qs] -= r2


# ---------------------------------------------------------------------------
# boundary ghosts

def bc_kernel(state: State, mesh: Mesh, tables: BasisTables,
              xi_hat=None) -> None:
    """Fills the ghost trace state for all boundary edges.

    land: reflect the normal momentum and velocity, copy the elevation;
    open sea: prescribe a constant elevation xi_hat(t), copy momentum."""
    bnd = mesh.boundary_edges
    if len(bnd) == 0:
        return
    eL = mesh.edge_elems[bnd, 0]
    slot = state.bnd_slot[bnd]
    n = mesh.edge_normal[bnd]
    tags = mesh.edge_tag[bnd]

    cU = state.c[eL, 1]
    cV = state.c[eL, 2]
    qn = n[:, 0:1] * cU + n[:, 1:2] * cV
    state.ghost_c[slot, 0] = state.c[eL, 0]
    state.ghost_c[slot, 1] = cU - 2.0 * n[:, 0:1] * qn
    state.ghost_c[slot, 2] = cV - 2.0 * n[:, 1:2] * qn
    un = n[:, 0:1] * state.u[eL, 0] + n[:, 1:2] * state.u[eL, 1]
    state.ghost_u[slot, 0] = state.u[eL, 0] - 2.0 * n[:, 0:1] * un
    state.ghost_u[slot, 1] = state.u[eL, 1] - 2.0 * n[:, 1:2] * un

    sea = tags == OPEN_SEA
    if np.any(sea):
        if xi_hat is None:
            raise ConfigError("open-sea boundary present but no prescribed "
                              "elevation was supplied")
        val = float(xi_hat(state.t))
        ssea = slot[sea]
        state.ghost_c[ssea, 0] = 0.0
        state.ghost_c[ssea, 0, 0] = val * tables.sqrt_area[eL[sea]]
        state.ghost_c[ssea, 1] = state.c[eL[sea], 1]
        state.ghost_c[ssea, 2] = state.c[eL[sea], 2]
        state.ghost_u[ssea] = state.u[eL[sea]]
    unknown = (tags != LAND) & (tags != OPEN_SEA)
    if np.any(unknown):
        raise ConfigError(f"boundary edge with unknown tag {tags[unknown][0]}")


def boundary_ghost(edge: int, state: State, mesh: Mesh, tables: BasisTables,
                   xi_hat=None):
    """Ghost coefficients (c+, u+) for a single boundary edge."""
    if mesh.edge_elems[edge, 1] >= 0:
        raise ConfigError(f"edge {edge} is not a boundary edge")
    bc_kernel(state, mesh, tables, xi_hat)
    slot = state.bnd_slot[edge]
    return state.ghost_c[slot], state.ghost_u[slot]


# ---------------------------------------------------------------------------
# auxiliary velocity solve uH = q

# Truncation tier for the depth matrix assembly: the xi expansion inside
# H_{i,j} is cut at the order block of the larger of (i, j); the (1,1) entry
# keeps only the constant mode.
def _truncation_mask(K: int) -> np.ndarray:
    def tier(idx):  # 1-based index -> number of retained modes
        if idx <= 1:
            return 1
        if idx <= 3:
            return 3
        if idx <= 6:
            return 6
        return 10
    mask = np.zeros((K, K, K))
    for i in range(1, K + 1):
        for j in range(1, K + 1):
            kij = 1 if (i == 1 and j == 1) else max(tier(i), tier(j))
            mask[:min(kij, K), i - 1, j - 1] = 1.0
    return mask


_TRUNC_CACHE: dict[int, np.ndarray] = {}


def solve_auxiliary_kernel(state: State, mesh: Mesh, tables: BasisTables,
                           active_K: np.ndarray) -> None:
    """Element-local LU solve of (H_{i,j}) u^l = q^l for both velocity
    components; elements solve only their active K x K block."""
    K = state.K
    mask = _TRUNC_CACHE.get(K)
    if mask is None:
        mask = _TRUNC_CACHE[K] = _truncation_mask(K) * tables.mass3[:K, :K, :K]

    h_mean = (state.c[:, 0, 0] + mesh.h_b[:, 0]) * tables.phi1
    if np.any(h_mean <= 0.0):
        bad = int(np.argmin(h_mean))
        raise DepthError(f"non-positive mean depth {h_mean[bad]:.3e} "
                         f"in element {bad}")

    for kact in np.unique(active_K):
        el = np.flatnonzero(active_K == kact)
        kact = int(kact)
        s = tables.scale[el][:, None, None]
        hmat = s * (
            np.einsum("en,nij->eij", state.c[el, 0, :kact],
                      mask[:kact, :kact, :kact], optimize=True)
            + np.einsum("en,nij->eij", mesh.h_b[el, :kact],
                        tables.mass3[:kact, :kact, :kact], optimize=True))
        # With orthonormal bases the projected momentum is the coefficient
        # vector itself.
        rhs = state.c[el, 1:3, :kact].transpose(0, 2, 1)
        try:
            sol = np.linalg.solve(hmat, rhs)
        except np.linalg.LinAlgError:
            dets = np.linalg.det(hmat)
            bad = el[int(np.argmin(np.abs(dets)))]
            raise DepthError(f"singular depth matrix in element {bad}") from None
        state.u[el, :, :kact] = sol.transpose(0, 2, 1)
        state.u[el, :, kact:] = 0.0


# ---------------------------------------------------------------------------
# minimum depth control and diagnostics

def min_depth_kernel(state: State, mesh: Mesh, tables: BasisTables,
                     params: PhysParams) -> int:
    """Clamps elements with mean depth below h_min: lifts the constant
    elevation mode to h_min and zeroes all higher xi, U, V modes.  Returns
    the number of clamped elements."""
    h_mean = (state.c[:, 0, 0] + mesh.h_b[:, 0]) * tables.phi1
    clamped = np.flatnonzero(h_mean < params.h_min)
    if len(clamped):
        state.c[clamped, 0, 0] = (params.h_min / tables.phi1[clamped]
                                  - mesh.h_b[clamped, 0])
        state.c[clamped, :, 1:] = 0.0
    return len(clamped)


def total_mass(state: State, tables: BasisTables) -> float:
    """Integral of the surface elevation over the domain (m^3 relative to
    the datum); only constant modes contribute by orthonormality."""
    return float(state.c[:, 0, 0] @ tables.sqrt_area)
