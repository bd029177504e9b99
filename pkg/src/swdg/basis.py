"""Hierarchical L2-orthonormal basis on the reference triangle and the
precomputed integral tensors that make the scheme quadrature-free.

The basis is obtained by a Cholesky-based Gram-Schmidt on monomials ordered
by total degree, so the first K(b) functions of any order-p basis are exactly
the order-b basis.  All element and edge integrals of basis products are
reduced at setup to dense tensors; the time loop only contracts them with
modal coefficient vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import DomainError, UnsupportedOrderError
from .mesh import Mesh

K_OF_P = {0: 1, 1: 3, 2: 6, 3: 10}
P_MAX_SUPPORTED = 3

# Monomial exponents x^a y^b in total-degree order.
MONOMIALS = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2),
             (3, 0), (2, 1), (1, 2), (0, 3)]

# Reference triangle (0,0)-(1,0)-(0,1); local edge l runs vertex l -> l+1.
REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
REF_AREA = 0.5

_N_EDGE_QUAD = 8  # Gauss-Legendre points per edge; exact through degree 15.


def k_of_p(p: int) -> int:
    if p not in K_OF_P:
        raise UnsupportedOrderError(f"order {p} not supported (0..3)")
    return K_OF_P[p]


def _moment(a: int, b: int) -> float:
    """Exact integral of x^a y^b over the reference triangle."""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def _moment_table(max_deg: int) -> np.ndarray:
    m = np.zeros((max_deg + 1, max_deg + 1))
    for a in range(max_deg + 1):
        for b in range(max_deg + 1 - a):
            m[a, b] = _moment(a, b)
    return m


@dataclass
class ReferenceBasis:
    """Monomial coefficients of the orthonormal basis and their derivatives."""

    p_max: int
    coeffs: np.ndarray      # (K, 10) rows = basis functions over MONOMIALS
    coeffs_dx: np.ndarray   # (K, 10) monomial coefficients of d/dx
    coeffs_dy: np.ndarray   # (K, 10)

    @property
    def K(self) -> int:
        return self.coeffs.shape[0]


def build_reference_basis(p_max: int) -> ReferenceBasis:
    """Orthonormal hierarchical basis of total degree <= p_max on the
    reference triangle; the constant mode comes first."""
    K = k_of_p(p_max)
    mom = _moment_table(6)
    # Always orthogonalize the full degree-3 monomial set and truncate, so
    # lower-order bases are bitwise prefixes of higher-order ones.
    gram = np.array([[mom[a0 + a1, b0 + b1] for (a1, b1) in MONOMIALS]
                     for (a0, b0) in MONOMIALS])
    L = np.linalg.cholesky(gram)
    coeffs10 = np.linalg.inv(L)[:K]

    # d/dx: x^a y^b -> a x^(a-1) y^b, likewise d/dy.
    dx = np.zeros((len(MONOMIALS), len(MONOMIALS)))
    dy = np.zeros_like(dx)
    index = {m: i for i, m in enumerate(MONOMIALS)}
    for i, (a, b) in enumerate(MONOMIALS):
        if a > 0:
            dx[i, index[(a - 1, b)]] = a
        if b > 0:
            dy[i, index[(a, b - 1)]] = b
    return ReferenceBasis(p_max=p_max, coeffs=coeffs10,
                          coeffs_dx=coeffs10 @ dx, coeffs_dy=coeffs10 @ dy)


def eval_monomials(points: np.ndarray) -> np.ndarray:
    """(npts, 10) monomial values."""
    pts = np.atleast_2d(points)
    x, y = pts[:, 0], pts[:, 1]
    return np.stack([x ** a * y ** b for a, b in MONOMIALS], axis=-1)


def eval_basis(basis: ReferenceBasis, p: int, point) -> np.ndarray:
    """Values of the first K(p) basis functions at a reference point."""
    K = k_of_p(p)
    if K > basis.K:
        raise UnsupportedOrderError(f"basis built for p_max={basis.p_max} < {p}")
    x, y = float(point[0]), float(point[1])
    tol = 1e-12
    if x < -tol or y < -tol or x + y > 1.0 + tol:
        raise DomainError(f"point ({x}, {y}) outside reference triangle")
    return (basis.coeffs[:K] @ eval_monomials(np.array([[x, y]]))[0])


def _edge_param(l: int, t: np.ndarray) -> np.ndarray:
    """Points on reference edge l at parameter t in [0, 1]."""
    a, b = REF_VERTS[l], REF_VERTS[(l + 1) % 3]
    return a[None, :] + t[:, None] * (b - a)[None, :]


def duffy_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed tensor-product Gauss rule on the reference triangle."""
    x, w = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    W = np.outer(wu, wu) * U
    pts = np.stack([(U * (1.0 - V)).ravel(), (U * V).ravel()], axis=-1)
    return pts, W.ravel()


@dataclass
class BasisTables:
    """Reference-tensor set plus the per-element geometric factors that map
    reference tensors to physical elements.

    Element tensors (reference triangle):
      mass2[q,i]       = int phi_q phi_i
      mass3[q,i,j]     = int phi_q phi_i phi_j
      dx2/dy2[q,i]     = int dphi_q/dx^ phi_i
      sx3/sy3[q,i,j]   = int dphi_q/dx^ phi_i phi_j

    Edge tensors, local edge l in {0,1,2}, unit-parametrized:
      ee2[l][q,i]      = int phi_q(g_l(t)) phi_i(g_l(t)) dt           (same side)
      ee3[l][q,i,j]                                                   (same side)
      x2[la,lb][q,i]   = int phi_q(g_la(t)) phi_i(g_lb(1-t)) dt       (neighbor)
      x3[la,lb][q,i,j] = ... phi_i phi_j both from the neighbor side

    Physical factors per element e: scale s_e = 1/sqrt(det J_e) maps the
    reference-orthonormal basis to an element-orthonormal one; gradients
    contract with the inverse-transposed Jacobian.
    """

    basis: ReferenceBasis
    K: int
    mass2: np.ndarray
    mass3: np.ndarray
    dx2: np.ndarray
    dy2: np.ndarray
    sx3: np.ndarray
    sy3: np.ndarray
    ee2: np.ndarray   # (3, K, K)
    ee3: np.ndarray   # (3, K, K, K)
    x2: np.ndarray    # (3, 3, K, K)
    x3: np.ndarray    # (3, 3, K, K, K)
    # per-element geometry
    scale: np.ndarray           # (nelem,) 1/sqrt(det J)
    grad_x: np.ndarray          # (nelem, 2) rows of J^-T for d/dx
    grad_y: np.ndarray          # (nelem, 2)
    sqrt_area: np.ndarray       # (nelem,)
    phi1: np.ndarray            # (nelem,) value of the constant physical mode
    # edge groups for vectorized kernels
    interior_groups: dict       # (l_left, l_right) -> edge id array
    boundary_groups: dict       # l_left -> edge id array

    def const_coeff(self, value, elements=None):
        """Modal coefficient of the constant function `value` per element."""
        sa = self.sqrt_area if elements is None else self.sqrt_area[elements]
        return np.asarray(value) * sa


def build_tensors(basis: ReferenceBasis, mesh: Mesh) -> BasisTables:
    K = basis.K
    # Reference tensors are assembled in extended precision by exact Gauss
    # quadrature with the basis evaluated pointwise first.  Contracting
    # analytic monomial moments instead would multiply three coefficient
    # vectors of magnitude ~1e3 before they cancel, losing ~1e-11 absolute
    # on p=3 entries; pointwise evaluation caps the cancellation at one
    # coefficient vector.
    C = basis.coeffs.astype(np.longdouble)
    Cdx = basis.coeffs_dx.astype(np.longdouble)
    Cdy = basis.coeffs_dy.astype(np.longdouble)

    f64 = np.float64
    tpts, tw = duffy_rule(8)    # exact through total degree 9 integrands
    tpts = tpts.astype(np.longdouble)
    tw = tw.astype(np.longdouble)
    phi = eval_monomials(tpts) @ C.T
    dphix = eval_monomials(tpts) @ Cdx.T
    dphiy = eval_monomials(tpts) @ Cdy.T
    mass2 = np.einsum("k,kq,ki->qi", tw, phi, phi).astype(f64)
    dx2 = np.einsum("k,kq,ki->qi", tw, dphix, phi).astype(f64)
    dy2 = np.einsum("k,kq,ki->qi", tw, dphiy, phi).astype(f64)
    mass3 = np.einsum("k,kq,ki,kj->qij", tw, phi, phi, phi).astype(f64)
    sx3 = np.einsum("k,kq,ki,kj->qij", tw, dphix, phi, phi).astype(f64)
    sy3 = np.einsum("k,kq,ki,kj->qij", tw, dphiy, phi, phi).astype(f64)

    # Edge trace tensors via Gauss-Legendre on [0, 1].
    xg, wg = np.polynomial.legendre.leggauss(_N_EDGE_QUAD)
    t = 0.5 * (xg + 1.0)
    w = (0.5 * wg).astype(np.longdouble)
    fwd = np.empty((3, len(t), K), dtype=np.longdouble)
    rev = np.empty_like(fwd)
    for l in range(3):
        fwd[l] = eval_monomials(_edge_param(l, t)) @ C.T
        rev[l] = eval_monomials(_edge_param(l, 1.0 - t)) @ C.T
    ee2 = np.einsum("k,lkq,lki->lqi", w, fwd, fwd).astype(f64)
    ee3 = np.einsum("k,lkq,lki,lkj->lqij", w, fwd, fwd, fwd).astype(f64)
    x2 = np.einsum("k,akq,bki->abqi", w, fwd, rev).astype(f64)
    x3 = np.einsum("k,akq,bki,bkj->abqij", w, fwd, rev, rev).astype(f64)

    scale = 1.0 / np.sqrt(mesh.det_jac)
    grad_x = mesh.jac_inv_t[:, 0, :].copy()
    grad_y = mesh.jac_inv_t[:, 1, :].copy()
    sqrt_area = np.sqrt(mesh.areas)
    phi1 = C[0, 0] * scale  # constant basis value on the physical element

    interior_groups: dict = {}
    boundary_groups: dict = {}
    interior = mesh.interior_edges
    key = mesh.edge_local[interior, 0] * 3 + mesh.edge_local[interior, 1]
    for la in range(3):
        for lb in range(3):
            sel = interior[key == la * 3 + lb]
            if len(sel):
                interior_groups[(la, lb)] = sel
    boundary = mesh.boundary_edges
    for la in range(3):
        sel = boundary[mesh.edge_local[boundary, 0] == la]
        if len(sel):
            boundary_groups[la] = sel

    return BasisTables(
        basis=basis, K=K, mass2=mass2, mass3=mass3, dx2=dx2, dy2=dy2,
        sx3=sx3, sy3=sy3, ee2=ee2, ee3=ee3, x2=x2, x3=x3,
        scale=scale, grad_x=grad_x, grad_y=grad_y, sqrt_area=sqrt_area,
        phi1=phi1, interior_groups=interior_groups,
        boundary_groups=boundary_groups,
    )


def project(tables: BasisTables, mesh: Mesh, fn, n_quad: int = 12) -> np.ndarray:
    """L2-project a function of (x, y) onto the per-element modal basis."""
    pts, w = duffy_rule(n_quad)
    phi_ref = eval_monomials(pts) @ tables.basis.coeffs.T      # (nq, K)
    v0 = mesh.vertices[mesh.elements[:, 0]]
    # physical points: (nelem, nq, 2)
    phys = v0[:, None, :] + np.einsum("eab,qb->eqa", mesh.jac, pts)
    vals = fn(phys[..., 0], phys[..., 1])
    vals = np.broadcast_to(np.asarray(vals, dtype=float), phys.shape[:2])
    # coeff_i = sqrt(det J) * int_ref f phihat_i
    raw = np.einsum("eq,q,qi->ei", vals, w, phi_ref)
    return raw * np.sqrt(mesh.det_jac)[:, None]
