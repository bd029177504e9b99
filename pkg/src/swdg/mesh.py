"""Triangulations with full edge connectivity and per-element affine geometry.

Meshes are randomly perturbed structured triangulations of a rectangle.  Each
square cell is split along the same diagonal; interior vertices are displaced
by a seeded PCG64 generator so meshes are bitwise reproducible.  The mesh is
immutable after construction and safe for concurrent read access.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError

# Boundary condition tags.
INTERIOR = 0
LAND = 1
OPEN_SEA = 2

_TAG_NAMES = {LAND: "land", OPEN_SEA: "open_sea"}
_TAG_IDS = {v: k for k, v in _TAG_NAMES.items()}


@dataclass
class Mesh:
    """Triangle mesh with edge table and per-element affine maps.

    Edge sides: column 0 of ``edge_elems``/``edge_local`` is the "left"
    element whose counterclockwise traversal defines the edge direction;
    ``edge_normal`` is the unit normal pointing out of the left element.
    Boundary edges have -1 in the right column.
    """

    vertices: np.ndarray          # (nvert, 2)
    elements: np.ndarray          # (nelem, 3) vertex ids, counterclockwise
    areas: np.ndarray             # (nelem,)
    jac: np.ndarray               # (nelem, 2, 2) affine Jacobian
    jac_inv_t: np.ndarray         # (nelem, 2, 2) inverse transpose
    det_jac: np.ndarray           # (nelem,)
    edge_elems: np.ndarray        # (nedge, 2) left/right element (-1 = boundary)
    edge_local: np.ndarray        # (nedge, 2) local edge index per side (-1)
    edge_normal: np.ndarray       # (nedge, 2) unit, outward from left side
    edge_length: np.ndarray       # (nedge,)
    edge_midpoint: np.ndarray     # (nedge, 2)
    edge_tag: np.ndarray          # (nedge,) INTERIOR / LAND / OPEN_SEA
    h_b: np.ndarray | None = field(default=None)  # (nelem, K) modal bathymetry

    @property
    def num_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edge_elems.shape[0]

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_elems[:, 1] >= 0)

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_elems[:, 1] < 0)

    def centroids(self) -> np.ndarray:
        return self.vertices[self.elements].mean(axis=1)

    def element_edges(self) -> np.ndarray:
        """(nelem, 3) edge id of each local edge."""
        tab = np.full((self.num_elements, 3), -1, dtype=np.int64)
        for side in (0, 1):
            sel = self.edge_elems[:, side] >= 0
            tab[self.edge_elems[sel, side], self.edge_local[sel, side]] = np.flatnonzero(sel)
        return tab


def connect_edges(triangles, vertices, boundary_tag=None) -> Mesh:
    """Build the full edge table for a consistently oriented triangle list.

    ``boundary_tag`` maps an edge midpoint (x, y) to "land" or "open_sea";
    all boundary edges default to land.
    """
    verts = np.asarray(vertices, dtype=float)
    tris = np.asarray(triangles, dtype=np.int64)
    if tris.size and (tris.min() < 0 or tris.max() >= len(verts)):
        raise MeshError("element references an invalid vertex id")

    v0, v1, v2 = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    det = (v1[:, 0] - v0[:, 0]) * (v2[:, 1] - v0[:, 1]) - (v2[:, 0] - v0[:, 0]) * (v1[:, 1] - v0[:, 1])
    if np.any(det <= 0.0):
        bad = int(np.argmin(det))
        raise MeshError(f"element {bad} is inverted or degenerate (det={det[bad]:.3e})")
    areas = 0.5 * det

    jac = np.empty((len(tris), 2, 2))
    jac[:, :, 0] = v1 - v0
    jac[:, :, 1] = v2 - v0
    inv = np.empty_like(jac)
    inv[:, 0, 0] = jac[:, 1, 1]
    inv[:, 0, 1] = -jac[:, 0, 1]
    inv[:, 1, 0] = -jac[:, 1, 0]
    inv[:, 1, 1] = jac[:, 0, 0]
    inv /= det[:, None, None]
    jac_inv_t = inv.transpose(0, 2, 1)

    # Directed local edges l: vertex l -> vertex (l+1)%3.
    sides: dict[tuple[int, int], list[tuple[int, int, bool]]] = {}
    for e in range(len(tris)):
        for l in range(3):
            a, b = int(tris[e, l]), int(tris[e, (l + 1) % 3])
            key = (a, b) if a < b else (b, a)
            sides.setdefault(key, []).append((e, l, a < b))

    n_edges = len(sides)
    edge_elems = np.full((n_edges, 2), -1, dtype=np.int64)
    edge_local = np.full((n_edges, 2), -1, dtype=np.int64)
    edge_normal = np.empty((n_edges, 2))
    edge_length = np.empty(n_edges)
    edge_midpoint = np.empty((n_edges, 2))
    edge_tag = np.zeros(n_edges, dtype=np.int64)

    for k, (key, incident) in enumerate(sorted(sides.items())):
        if len(incident) > 2:
            raise MeshError(f"non-manifold edge {key}: {len(incident)} incident elements")
        if len(incident) == 2 and incident[0][2] == incident[1][2]:
            raise MeshError(f"inconsistent orientation at edge {key}")
        e, l, _ = incident[0]
        a, b = int(tris[e, l]), int(tris[e, (l + 1) % 3])
        d = verts[b] - verts[a]
        length = float(np.hypot(d[0], d[1]))
        edge_elems[k, 0], edge_local[k, 0] = e, l
        if len(incident) == 2:
            edge_elems[k, 1], edge_local[k, 1] = incident[1][0], incident[1][1]
        edge_normal[k] = (d[1] / length, -d[0] / length)
        edge_length[k] = length
        edge_midpoint[k] = 0.5 * (verts[a] + verts[b])
        if len(incident) == 1:
            tag = "land" if boundary_tag is None else boundary_tag(edge_midpoint[k])
            if tag not in _TAG_IDS:
                raise MeshError(f"unknown boundary tag {tag!r}")
            edge_tag[k] = _TAG_IDS[tag]

    return Mesh(
        vertices=verts, elements=tris, areas=areas, jac=jac,
        jac_inv_t=jac_inv_t, det_jac=det, edge_elems=edge_elems,
        edge_local=edge_local, edge_normal=edge_normal,
        edge_length=edge_length, edge_midpoint=edge_midpoint, edge_tag=edge_tag,
    )


def generate_perturbed_uniform_mesh(nx, domain=((0.0, 0.0), (5.0, 5.0)),
                                    perturbation=0.2, seed=0,
                                    boundary_tag=None) -> Mesh:
    """Structured mesh of 2*nx^2 triangles with randomly displaced interior vertices.

    ``perturbation`` is the maximum displacement as a fraction of the cell
    size and must stay below 0.5 to rule out inverted elements.
    """
    if nx < 1:
        raise MeshError("nx must be >= 1")
    if not 0.0 <= perturbation < 0.5:
        raise MeshError("perturbation must lie in [0, 0.5)")
    (x0, y0), (x1, y1) = domain
    hx = (x1 - x0) / nx
    hy = (y1 - y0) / nx

    xs = x0 + hx * np.arange(nx + 1)
    ys = y0 + hy * np.arange(nx + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.stack([gx.ravel(), gy.ravel()], axis=-1)

    if perturbation > 0.0:
        rng = np.random.default_rng(seed)
        offsets = rng.uniform(-perturbation, perturbation, size=(nx + 1, nx + 1, 2))
        offsets[:, :, 0] *= hx
        offsets[:, :, 1] *= hy
        offsets[0, :, :] = 0.0
        offsets[-1, :, :] = 0.0
        offsets[:, 0, :] = 0.0
        offsets[:, -1, :] = 0.0
        verts = verts + offsets.reshape(-1, 2)

    def vid(i, j):
        return i * (nx + 1) + j

    tris = []
    for i in range(nx):
        for j in range(nx):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    return connect_edges(np.array(tris, dtype=np.int64), verts, boundary_tag)


def dump_mesh(mesh: Mesh, path) -> None:
    """Plain-text mesh dump: counts, vertices, elements, boundary tags."""
    bnd = mesh.boundary_edges
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{len(mesh.vertices)} {mesh.num_elements} {len(bnd)}\n")
        for x, y in mesh.vertices:
            f.write(f"{float(x)!r} {float(y)!r}\n")
        for a, b, c in mesh.elements:
            f.write(f"{a} {b} {c}\n")
        for k in bnd:
            f.write(f"{k} {_TAG_NAMES[int(mesh.edge_tag[k])]}\n")


def load_mesh(path) -> Mesh:
    with open(path, encoding="utf-8") as f:
        nv, ne, nb = (int(tok) for tok in f.readline().split())
        verts = np.array([[float(t) for t in f.readline().split()] for _ in range(nv)])
        tris = np.array([[int(t) for t in f.readline().split()] for _ in range(ne)], dtype=np.int64)
        tags = {}
        for _ in range(nb):
            tok = f.readline().split()
            tags[int(tok[0])] = tok[1]
    mesh = connect_edges(tris, verts)
    for k, name in tags.items():
        if name not in _TAG_IDS:
            raise MeshError(f"unknown boundary tag {name!r}")
        mesh.edge_tag[k] = _TAG_IDS[name]
    return mesh
