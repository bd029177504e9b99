"""Per-element order management: base/correction index-range algebra, a
jump-based refinement indicator with hysteresis, and order-change application.

An adaptive run carries a base order b for all elements and a full order
p = b + 1 activated on a subset.  The order-p computation splits into the
order-b base applied everywhere plus two correction index blocks applied to
flagged elements (and edges touching them) only; the three blocks tile the
full test x trial index square exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import k_of_p
from .errors import ConfigError
from .kernels import IndexRange
from .mesh import Mesh


def base_ranges(b: int) -> IndexRange:
    """Test and trial ranges [1, K(b)] of the all-element base computation."""
    kb = k_of_p(b)
    return IndexRange(1, kb, 1, kb)


def correction_ranges(b: int, p: int) -> tuple[IndexRange, IndexRange]:
    """The two correction blocks for flagged elements.

    part 1: test [1, K(b)]       x trial [K(b)+1, K(p)]
    part 2: test [K(b)+1, K(p)]  x trial [1, K(p)]
    """
    if p != b + 1:
        raise ConfigError(f"full order must be base order + 1, got b={b}, p={p}")
    kb, kp = k_of_p(b), k_of_p(p)
    return (IndexRange(1, kb, kb + 1, kp), IndexRange(kb + 1, kp, 1, kp))


def full_ranges(p: int) -> IndexRange:
    kp = k_of_p(p)
    return IndexRange(1, kp, 1, kp)


@dataclass
class OrderField:
    """Active polynomial order per element, b or p = b + 1."""

    b: int
    p: int
    active: np.ndarray                       # (nelem,) order per element
    refined: list = field(default_factory=list)
    coarsened: list = field(default_factory=list)

    def __post_init__(self):
        if self.p != self.b + 1:
            raise ConfigError(f"full order must be base order + 1, "
                              f"got b={self.b}, p={self.p}")
        k_of_p(self.p)

    @classmethod
    def uniform(cls, b: int, p: int, nelem: int) -> "OrderField":
        return cls(b=b, p=p, active=np.full(nelem, b, dtype=np.int64))

    @classmethod
    def static_fraction(cls, b: int, p: int, nelem: int, k: int) -> "OrderField":
        """Every k-th element (index = 0 mod k) forced to the full order."""
        if k < 1:
            raise ConfigError("static fraction must be >= 1")
        active = np.full(nelem, b, dtype=np.int64)
        active[::k] = p
        return cls(b=b, p=p, active=active)

    @property
    def high_mask(self) -> np.ndarray:
        return self.active == self.p

    @property
    def high_fraction(self) -> float:
        return float(np.mean(self.high_mask))

    def active_K(self) -> np.ndarray:
        return np.where(self.high_mask, k_of_p(self.p), k_of_p(self.b))


def indicator_kernel(state, mesh: Mesh, tables, theta_refine: float,
                     theta_coarsen: float, depth_scale: float = 1.0) -> np.ndarray:
    """Per-element decision in {-1 lower, 0 keep, +1 raise}.

    The indicator is the maximum over an element's edges of the absolute
    inter-element jump of the mean surface elevation, normalized by a
    reference depth scale, with hysteresis: raise above theta_refine, lower
    below theta_coarsen.
    """
    if theta_coarsen >= theta_refine:
        raise ConfigError("theta_coarsen must be strictly below theta_refine")
    xi_mean = state.c[:, 0, 0] * tables.phi1
    jump = np.zeros(mesh.num_elements)
    interior = mesh.interior_edges
    eL = mesh.edge_elems[interior, 0]
    eR = mesh.edge_elems[interior, 1]
    j = np.abs(xi_mean[eL] - xi_mean[eR]) / depth_scale
    np.maximum.at(jump, eL, j)
    np.maximum.at(jump, eR, j)
    decisions = np.zeros(mesh.num_elements, dtype=np.int64)
    decisions[jump > theta_refine] = 1
    decisions[jump < theta_coarsen] = -1
    return decisions


def apply_order_change(state, orders: OrderField, decisions: np.ndarray) -> None:
    """Raises/lowers element orders in place; newly activated modes start at
    zero, deactivated modes are zeroed so the order invariant holds."""
    kb = k_of_p(orders.b)
    raise_sel = np.flatnonzero((decisions == 1) & ~orders.high_mask)
    lower_sel = np.flatnonzero((decisions == -1) & orders.high_mask)
    # Raising only activates storage that is already zero by invariant.
    orders.active[raise_sel] = orders.p
    orders.active[lower_sel] = orders.b
    state.c[lower_sel, :, kb:] = 0.0
    state.u[lower_sel, :, kb:] = 0.0
    orders.refined = raise_sel.tolist()
    orders.coarsened = lower_sel.tolist()
