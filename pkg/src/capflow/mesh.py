"""Conforming simplicial meshes of the reference domain catalogue.

Provides the core mesh container, tensor-product box meshes (2D triangles,
3D Kuhn tetrahedra), fitted region tagging, local bisection refinement and
the plain-text exchange format.  Curved domains (disks, balls, annuli) are
built in :mod:`capflow.shells` on top of the same container.

Meshes are immutable after construction; every builder fixes cell
orientation so signed volumes are strictly positive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetError, MeshError, RegionError

GEOM_TOL = 1e-10      # tagging tolerance
VOLUME_TOL = 1e-12    # polygonal volume identities
CELL_BUDGET = 5_000_000


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SimplicialMesh:
    """Simplicial mesh with tagged boundary facets.

    vertices: (nv, dim) coordinates, cells: (nc, dim+1) vertex indices with
    positive signed volume, boundary_facets: (nb, dim) vertex indices, each
    the face of exactly one cell, facet_tags: per-facet label.
    """

    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    boundary_facets: np.ndarray
    facet_tags: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "vertices", _freeze(np.asarray(self.vertices, dtype=float)))
        object.__setattr__(self, "cells", _freeze(np.asarray(self.cells, dtype=np.int64)))
        object.__setattr__(self, "boundary_facets",
                           _freeze(np.asarray(self.boundary_facets, dtype=np.int64).reshape(-1, self.dim)))
        object.__setattr__(self, "facet_tags", tuple(self.facet_tags))

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def n_boundary_facets(self) -> int:
        return self.boundary_facets.shape[0]

    def cell_volumes(self) -> np.ndarray:
        return signed_volumes(self.vertices, self.cells)

    def cell_diameters(self) -> np.ndarray:
        diam = np.zeros(self.n_cells)
        for i, j in combinations(range(self.dim + 1), 2):
            e = self.vertices[self.cells[:, i]] - self.vertices[self.cells[:, j]]
            diam = np.maximum(diam, np.linalg.norm(e, axis=1))
        return diam

    def facets_with_tag(self, tag: str) -> np.ndarray:
        return np.flatnonzero(np.asarray([t == tag for t in self.facet_tags]))


@dataclass(frozen=True)
class DirichletRegion:
    """Discrete stand-in for the compact set K: constrained vertices plus
    the boundary facets they come from (empty facet list for vertex-only
    regions such as internal plates)."""

    name: str
    vertex_ids: np.ndarray
    facet_ids: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertex_ids",
                           _freeze(np.unique(np.asarray(self.vertex_ids, dtype=np.int64))))
        object.__setattr__(self, "facet_ids",
                           _freeze(np.unique(np.asarray(self.facet_ids, dtype=np.int64))))
        if self.facet_ids.size > 0 and self.vertex_ids.size == 0:
            raise RegionError("region with facets must have vertices")

    @property
    def is_empty(self) -> bool:
        return self.vertex_ids.size == 0

    @staticmethod
    def from_facets(mesh: SimplicialMesh, name: str, facet_ids: Iterable[int]) -> "DirichletRegion":
        facet_ids = np.asarray(sorted(set(int(i) for i in facet_ids)), dtype=np.int64)
        if facet_ids.size == 0:
            return DirichletRegion(name, np.empty(0, dtype=np.int64), facet_ids)
        verts = np.unique(mesh.boundary_facets[facet_ids].ravel())
        return DirichletRegion(name, verts, facet_ids)

    @staticmethod
    def from_vertices(name: str, vertex_ids: Iterable[int]) -> "DirichletRegion":
        return DirichletRegion(name, np.asarray(list(vertex_ids), dtype=np.int64),
                               np.empty(0, dtype=np.int64))


@dataclass(frozen=True)
class RefinementSpec:
    """Local refinement request: halve element diameters ``max_levels``
    times inside the ball, with a graded transition outside."""

    center: tuple[float, ...]
    inner_radius: float
    grading_ratio: float = 1.5
    max_levels: int = 1

    def __post_init__(self):
        if self.inner_radius <= 0:
            raise MeshError("inner_radius must be positive")
        if not (1.0 < self.grading_ratio <= 3.0):
            raise MeshError("grading_ratio must lie in (1, 3]")
        if not (0 <= self.max_levels <= 12):
            raise MeshError("max_levels must lie in [0, 12]")


# ---------------------------------------------------------------------------
# geometry helpers


def signed_volumes(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    d = vertices.shape[1]
    v0 = vertices[cells[:, 0]]
    edges = vertices[cells[:, 1:]] - v0[:, None, :]
    return np.linalg.det(edges) / math.factorial(d)


def _oriented(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    cells = np.array(cells, dtype=np.int64)
    vol = signed_volumes(vertices, cells)
    if np.any(vol == 0.0):
        bad = int(np.flatnonzero(vol == 0.0)[0])
        raise MeshError(f"degenerate cell {bad}: zero volume")
    flip = vol < 0
    cells[np.ix_(flip, [cells.shape[1] - 2, cells.shape[1] - 1])] = \
        cells[np.ix_(flip, [cells.shape[1] - 1, cells.shape[1] - 2])]
    return cells


def _cell_faces(cells: np.ndarray) -> np.ndarray:
    """All (dim)-vertex faces of each cell, shape (nc*(d+1), d)."""
    d1 = cells.shape[1]
    idx = [list(c) for c in combinations(range(d1), d1 - 1)]
    return cells[:, idx].reshape(-1, d1 - 1)


def boundary_faces(cells: np.ndarray) -> np.ndarray:
    """Faces belonging to exactly one cell, in sorted-vertex form."""
    faces = np.sort(_cell_faces(cells), axis=1)
    uniq, counts = np.unique(faces, axis=0, return_counts=True)
    if np.any(counts > 2):
        raise MeshError("non-conforming mesh: face shared by more than two cells")
    return uniq[counts == 1]


def validate_mesh(mesh: SimplicialMesh) -> None:
    """Check the container invariants; raises MeshError on violation."""
    if mesh.dim not in (2, 3):
        raise MeshError("dim must be 2 or 3")
    vol = mesh.cell_volumes()
    if np.any(vol <= 0):
        raise MeshError(f"cell {int(np.argmin(vol))} has non-positive volume")
    if len(mesh.facet_tags) != mesh.n_boundary_facets:
        raise MeshError("facet tag count mismatch")
    bdry = boundary_faces(mesh.cells)
    listed = np.sort(mesh.boundary_facets, axis=1)
    a = set(map(tuple, bdry.tolist()))
    b = set(map(tuple, listed.tolist()))
    if a != b:
        raise MeshError("boundary facet list does not match single-owner cell faces")
    if len(b) != mesh.n_boundary_facets:
        raise MeshError("duplicate boundary facets")


def mesh_from_cells(dim: int, vertices: np.ndarray, cells: np.ndarray,
                    tag_of_facet=None) -> SimplicialMesh:
    """Build a mesh from raw cells: orient, extract the boundary and tag it.

    ``tag_of_facet(points) -> str`` receives the (dim, dim) vertex
    coordinates of one boundary facet; default tags everything "outer".
    """
    vertices = np.asarray(vertices, dtype=float)
    cells = _oriented(vertices, np.asarray(cells, dtype=np.int64))
    if cells.shape[0] > CELL_BUDGET:
        raise BudgetError(f"cell budget exceeded: {cells.shape[0]} > {CELL_BUDGET}", "cells")
    facets = boundary_faces(cells)
    if tag_of_facet is None:
        tags = ("outer",) * facets.shape[0]
    else:
        tags = tuple(tag_of_facet(vertices[f]) for f in facets)
    return SimplicialMesh(dim, vertices, cells, facets, tags)


# ---------------------------------------------------------------------------
# box meshes

_KUHN_PERMS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]


def build_tensor_mesh(axes: Sequence[np.ndarray]) -> SimplicialMesh:
    """Box mesh from per-axis gridline arrays (2 triangles per quad in 2D,
    6 Kuhn tetrahedra per hexahedron in 3D). All facets tagged "outer"."""
    axes = [np.asarray(a, dtype=float) for a in axes]
    dim = len(axes)
    if dim not in (2, 3):
        raise MeshError("dim must be 2 or 3")
    for a in axes:
        if a.size < 2 or np.any(np.diff(a) <= 0):
            raise MeshError("gridlines must be strictly increasing, at least two per axis")
    shape = tuple(a.size for a in axes)
    grids = np.meshgrid(*axes, indexing="ij")
    vertices = np.stack([g.ravel() for g in grids], axis=1)

    def vid(*idx):
        out = idx[0]
        for k in range(1, dim):
            out = out * shape[k] + idx[k]
        return out

    ncell = tuple(s - 1 for s in shape)
    cells = []
    if dim == 2:
        for i in range(ncell[0]):
            for j in range(ncell[1]):
                v00, v10 = vid(i, j), vid(i + 1, j)
                v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
                cells.append((v00, v10, v11))
                cells.append((v00, v11, v01))
    else:
        for i in range(ncell[0]):
            for j in range(ncell[1]):
                for k in range(ncell[2]):
                    corner = (i, j, k)
                    for perm in _KUHN_PERMS:
                        tet = [vid(*corner)]
                        step = list(corner)
                        for ax in perm:
                            step[ax] += 1
                            tet.append(vid(*step))
                        cells.append(tuple(tet))
    return mesh_from_cells(dim, vertices, np.asarray(cells, dtype=np.int64))


def build_box_mesh(dim: int, divisions_per_side: int) -> SimplicialMesh:
    """Uniform mesh of the unit square/cube, ``divisions_per_side >= 2``."""
    if dim not in (2, 3):
        raise MeshError("dim must be 2 or 3")
    n = int(divisions_per_side)
    if n < 2:
        raise MeshError("divisions_per_side must be at least 2")
    lines = np.linspace(0.0, 1.0, n + 1)
    return build_tensor_mesh([lines] * dim)


def graded_line(x0: float, x1: float, h0: float, h1: float, growth: float = 1.5) -> np.ndarray:
    """Strictly increasing gridlines on [x0, x1] with spacing ~h0 at x0 and
    ~h1 at x1, growing geometrically from both ends toward the middle."""
    span = x1 - x0
    if span <= 0:
        raise MeshError("graded_line needs x1 > x0")
    if min(h0, h1) >= span:
        return np.array([x0, x1])
    left = [0.0]
    right = [span]
    hl, hr = h0, h1
    while right[-1] - left[-1] > 1.6 * max(hl, hr):
        if hl <= hr:
            left.append(left[-1] + hl)
            hl *= growth
        else:
            right.append(right[-1] - hr)
            hr *= growth
    pts = x0 + np.asarray(left + right[::-1])
    pts[0] = x0
    pts[-1] = x1
    if np.any(np.diff(pts) <= 0):
        raise MeshError("graded_line produced non-monotone lines")
    return pts


# ---------------------------------------------------------------------------
# region descriptors and tagging


@dataclass(frozen=True)
class EmptyRegion:
    """The empty set: yields a region with no constrained vertices."""


@dataclass(frozen=True)
class TaggedFacets:
    """All boundary facets currently carrying ``tag``."""
    tag: str


@dataclass(frozen=True)
class BoundarySegment:
    """Closed segment between two points (2D boundary intervals)."""
    p0: tuple[float, float]
    p1: tuple[float, float]

    def contains(self, pts: np.ndarray, tol: float) -> np.ndarray:
        p0 = np.asarray(self.p0, dtype=float)
        d = np.asarray(self.p1, dtype=float) - p0
        L = float(np.linalg.norm(d))
        t = (pts - p0) @ d / L**2
        foot = p0 + np.outer(t, d)
        off = np.linalg.norm(pts - foot, axis=1)
        return (off <= tol) & (t >= -tol / L) & (t <= 1 + tol / L)

    def strictly_contains(self, pts: np.ndarray, tol: float) -> np.ndarray:
        """Membership in the relative interior (endpoints excluded)."""
        p0 = np.asarray(self.p0, dtype=float)
        d = np.asarray(self.p1, dtype=float) - p0
        L = float(np.linalg.norm(d))
        t = (pts - p0) @ d / L**2
        foot = p0 + np.outer(t, d)
        off = np.linalg.norm(pts - foot, axis=1)
        return (off <= tol) & (t > tol / L) & (t < 1 - tol / L)


@dataclass(frozen=True)
class FacePatch:
    """Axis-aligned rectangle on the hyperplane ``x[axis] == level``.
    ``lower``/``upper`` bound the remaining coordinates in their natural
    order."""
    axis: int
    level: float
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def contains(self, pts: np.ndarray, tol: float) -> np.ndarray:
        ok = np.abs(pts[:, self.axis] - self.level) <= tol
        rest = [i for i in range(pts.shape[1]) if i != self.axis]
        for lo, hi, i in zip(self.lower, self.upper, rest):
            ok &= (pts[:, i] >= lo - tol) & (pts[:, i] <= hi + tol)
        return ok

    def strictly_contains(self, pts: np.ndarray, tol: float) -> np.ndarray:
        ok = np.abs(pts[:, self.axis] - self.level) <= tol
        rest = [i for i in range(pts.shape[1]) if i != self.axis]
        for lo, hi, i in zip(self.lower, self.upper, rest):
            ok &= (pts[:, i] > lo + tol) & (pts[:, i] < hi - tol)
        return ok


@dataclass(frozen=True)
class BoundaryBall:
    """Closed ball intersected with the boundary (the B_eps cap)."""
    center: tuple[float, ...]
    radius: float

    def contains(self, pts: np.ndarray, tol: float) -> np.ndarray:
        c = np.asarray(self.center, dtype=float)
        return np.linalg.norm(pts - c, axis=1) <= self.radius + tol

    def strictly_contains(self, pts: np.ndarray, tol: float) -> np.ndarray:
        c = np.asarray(self.center, dtype=float)
        return np.linalg.norm(pts - c, axis=1) < self.radius - tol


def tag_region(mesh: SimplicialMesh, name: str, descriptor) -> tuple[SimplicialMesh, DirichletRegion]:
    """Collect exactly the boundary facets whose closure lies in the
    descriptor set, retag them ``name`` and return the matching region.

    A descriptor whose boundary cuts through a facet is a hard error: the
    caller must have meshed compatibly (fitted meshing only).
    """
    if isinstance(descriptor, EmptyRegion):
        return mesh, DirichletRegion(name, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))
    if isinstance(descriptor, TaggedFacets):
        fac = mesh.facets_with_tag(descriptor.tag)
        region = DirichletRegion.from_facets(mesh, name, fac)
        return _retag(mesh, fac, name), region

    tol = GEOM_TOL
    verts_in = descriptor.contains(mesh.vertices, tol)
    verts_strict = descriptor.strictly_contains(mesh.vertices, tol)
    selected = []
    for fi in range(mesh.n_boundary_facets):
        fv = mesh.boundary_facets[fi]
        centroid = mesh.vertices[fv].mean(axis=0)
        if verts_in[fv].all() and bool(descriptor.contains(centroid[None, :], tol)[0]):
            selected.append(fi)
        elif verts_strict[fv].any() or bool(descriptor.strictly_contains(centroid[None, :], tol)[0]):
            raise RegionError(
                f"descriptor boundary cuts facet {fi}; region is not resolved by the mesh")
    if not selected:
        raise RegionError("descriptor selects no boundary facets")
    fac = np.asarray(selected, dtype=np.int64)
    region = DirichletRegion.from_facets(mesh, name, fac)
    return _retag(mesh, fac, name), region


def _retag(mesh: SimplicialMesh, facet_ids: np.ndarray, name: str) -> SimplicialMesh:
    tags = list(mesh.facet_tags)
    for fi in facet_ids:
        tags[int(fi)] = name
    return SimplicialMesh(mesh.dim, mesh.vertices, mesh.cells, mesh.boundary_facets, tuple(tags))


# ---------------------------------------------------------------------------
# local refinement by conforming edge bisection


def _edge_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def _split_pass(vertices: list[np.ndarray], cells: list[tuple[int, ...]],
                facets: list[tuple[tuple[int, ...], str]],
                split_edges: set[tuple[int, int]]):
    """Bisect every edge in ``split_edges`` inside every cell containing it.

    Cells split recursively on their highest-priority marked edge (length
    descending, ids ascending); the per-face split order is then a global
    function of the face, which keeps shared faces conforming.
    """
    midpoint: dict[tuple[int, int], int] = {}

    def edge_len(e):
        return float(np.linalg.norm(vertices[e[0]] - vertices[e[1]]))

    def mid(e):
        m = midpoint.get(e)
        if m is None:
            m = len(vertices)
            vertices.append(0.5 * (vertices[e[0]] + vertices[e[1]]))
            midpoint[e] = m
        return m

    def pick(simplex, active):
        hits = [e for e in combinations(sorted(simplex), 2)
                if _edge_key(*e) in active]
        if not hits:
            return None
        return min(hits, key=lambda e: (-edge_len(e), e))

    out_cells: list[tuple[int, ...]] = []

    def handle_cell(cell):
        e = pick(cell, split_edges)
        if e is None:
            out_cells.append(cell)
            return
        m = mid(e)
        a, b = e
        handle_cell(tuple(m if v == a else v for v in cell))
        handle_cell(tuple(m if v == b else v for v in cell))

    for cell in cells:
        handle_cell(cell)

    split_keys = set(midpoint.keys())
    out_facets: list[tuple[tuple[int, ...], str]] = []

    def handle_facet(fac, tag):
        e = pick(fac, split_keys)
        if e is None:
            out_facets.append((fac, tag))
            return
        m = midpoint[_edge_key(*e)]
        a, b = e
        handle_facet(tuple(m if v == a else v for v in fac), tag)
        handle_facet(tuple(m if v == b else v for v in fac), tag)

    for fac, tag in facets:
        handle_facet(fac, tag)
    return out_cells, out_facets


def refine_near(mesh: SimplicialMesh, spec: RefinementSpec) -> SimplicialMesh:
    """Conforming local refinement: after the call, every cell with a vertex
    inside the ball has diameter at most the pre-refinement local maximum
    divided by 2**max_levels, with a graded transition ring."""
    if spec.max_levels == 0:
        return mesh
    bbox = mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)
    if spec.inner_radius >= float(np.linalg.norm(bbox)):
        raise MeshError("inner_radius must be smaller than the domain diameter")

    center = np.asarray(spec.center, dtype=float)
    verts = [v.copy() for v in mesh.vertices]
    cells = [tuple(int(v) for v in c) for c in mesh.cells]
    facets = [(tuple(int(v) for v in f), t)
              for f, t in zip(mesh.boundary_facets, mesh.facet_tags)]

    def diam_and_dist(cell_list):
        arr = np.asarray(cell_list, dtype=np.int64)
        coords = np.asarray(verts)[arr]
        diam = np.zeros(arr.shape[0])
        for i, j in combinations(range(arr.shape[1]), 2):
            diam = np.maximum(diam, np.linalg.norm(coords[:, i] - coords[:, j], axis=1))
        dist = np.linalg.norm(coords - center, axis=2).min(axis=1)
        return diam, dist

    diam, dist = diam_and_dist(cells)
    near = dist <= spec.inner_radius
    if not near.any():
        return mesh
    target = float(diam[near].max()) / 2 ** spec.max_levels

    slope = spec.grading_ratio - 1.0
    max_passes = 12 + 6 * spec.max_levels
    for _ in range(max_passes):
        allowed = target + slope * np.maximum(0.0, dist - spec.inner_radius)
        marked = diam > allowed
        if not marked.any():
            break
        edges = set()
        for ci in np.flatnonzero(marked):
            cell = cells[ci]
            pairs = list(combinations(sorted(cell), 2))
            lengths = [np.linalg.norm(verts[a] - verts[b]) for a, b in pairs]
            edges.add(_edge_key(*pairs[int(np.argmax(lengths))]))
        cells, facets = _split_pass(verts, cells, facets, edges)
        if len(cells) > CELL_BUDGET:
            raise BudgetError(f"cell budget exceeded during refinement: {len(cells)}", "cells")
        diam, dist = diam_and_dist(cells)
    else:
        raise BudgetError("refinement did not settle within the pass cap", "refinement passes")

    vertices = np.asarray(verts)
    cell_arr = _oriented(vertices, np.asarray(cells, dtype=np.int64))
    facet_arr = np.asarray([f for f, _ in facets], dtype=np.int64)
    tags = tuple(t for _, t in facets)
    return SimplicialMesh(mesh.dim, vertices, cell_arr, facet_arr, tags)


# ---------------------------------------------------------------------------
# plain-text exchange format


def write_mesh(path, mesh: SimplicialMesh) -> None:
    """Text format: header "dim n_vertices n_cells n_bfacets", vertex lines,
    cell lines, facet lines "v1 ... vd tag"; 17 significant digits so the
    round-trip is bit exact."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.dim} {mesh.n_vertices} {mesh.n_cells} {mesh.n_boundary_facets}\n")
        for v in mesh.vertices:
            fh.write(" ".join(f"{x:.17g}" for x in v) + "\n")
        for c in mesh.cells:
            fh.write(" ".join(str(int(i)) for i in c) + "\n")
        for f, t in zip(mesh.boundary_facets, mesh.facet_tags):
            fh.write(" ".join(str(int(i)) for i in f) + f" {t}\n")


def read_mesh(path) -> SimplicialMesh:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 4:
            raise MeshError("bad mesh header")
        dim, nv, nc, nb = (int(x) for x in header)
        vertices = np.array([[float(x) for x in fh.readline().split()] for _ in range(nv)])
        cells = np.array([[int(x) for x in fh.readline().split()] for _ in range(nc)],
                         dtype=np.int64)
        facets = []
        tags = []
        for _ in range(nb):
            parts = fh.readline().split()
            facets.append([int(x) for x in parts[:dim]])
            tags.append(parts[dim])
    mesh = SimplicialMesh(dim, vertices, cells,
                          np.asarray(facets, dtype=np.int64), tuple(tags))
    validate_mesh(mesh)
    return mesh
